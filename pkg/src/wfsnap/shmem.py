"""Shared-register layer.

Algorithms never touch registers directly.  They are written as generator
step machines that yield one :class:`Read`, :class:`Write`, :class:`LL` or
:class:`SC` request per shared access and receive the primitive's result
back through ``send``.  A backend executes each request atomically:

* :class:`NativeMemory`     -- thread-safe, one lock per register word (the
  lock plays the part of a wide CAS on ``(payload, version)``).
* :class:`SimulatedMemory`  -- no locking; an external driver decides which
  process performs the next access, so one request is one scheduling step.
* :class:`InstrumentedMemory` -- wraps either and counts accesses per
  process and per operation.

``None`` is the bottom value (the empty component / NULL proposal) and is
never accepted as a user value by the snapshot objects.
"""

from __future__ import annotations

import enum
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Generator, NamedTuple

BOTTOM = None

_VERSION_LIMIT = 2**64


class UsageFault(Exception):
    """Programming error against the register or snapshot API."""


class Kind(enum.Enum):
    RW = "rw"
    LLSC = "llsc"
    LLSC_WRITE = "llsc_write"


class Read(NamedTuple):
    reg: int


class Write(NamedTuple):
    reg: int
    payload: Any


class LL(NamedTuple):
    reg: int


class SC(NamedTuple):
    reg: int
    payload: Any


Access = Read | Write | LL | SC
Steps = Generator[Access, Any, Any]

ACCESS_NAMES = {Read: "read", Write: "write", LL: "ll", SC: "sc"}


class RegisterWord(NamedTuple):
    payload: Any
    version: int


@dataclass
class _Register:
    kind: Kind
    label: str
    word: RegisterWord
    lock: threading.Lock | None = None


class Memory:
    """Common register storage and the primitive semantics.

    Subclasses only decide how a primitive is made atomic.
    """

    def __init__(self, n: int = 1) -> None:
        if n < 1:
            raise UsageFault("need at least one process")
        self.n = n
        self._regs: list[_Register] = []
        # one reservation table per process: register id -> observed version
        self._reservations: list[dict[int, int]] = [{} for _ in range(n)]

    # -- allocation -------------------------------------------------------

    def alloc(self, kind: Kind, initial: Any = BOTTOM, label: str = "") -> int:
        self._regs.append(_Register(kind, label, RegisterWord(initial, 0), self._new_lock()))
        return len(self._regs) - 1

    def _new_lock(self) -> threading.Lock | None:
        return None

    def kinds(self) -> Counter:
        return Counter(r.kind for r in self._regs)

    def register_count(self) -> int:
        return len(self._regs)

    def label(self, reg: int) -> str:
        return self._reg(reg).label

    def words(self) -> list[RegisterWord]:
        """Current ``(payload, version)`` of every register, by id."""
        return [r.word for r in self._regs]

    def word(self, reg: int) -> RegisterWord:
        return self._reg(reg).word

    def poke(self, reg: int, payload: Any) -> None:
        """Overwrite a register outside any process (test setup only).

        Bumps the version, so reservations taken earlier are invalidated.
        """
        r = self._reg(reg)
        r.word = RegisterWord(payload, _bump(r.word.version))

    def reservation(self, pid: int, reg: int) -> int | None:
        return self._reservations[self._pid(pid)].get(reg)

    # -- instrumentation hooks (no-ops unless instrumented) ----------------

    def begin_operation(self, pid: int, label: str) -> None:
        pass

    def end_operation(self, pid: int) -> None:
        pass

    # -- primitives -------------------------------------------------------

    def execute(self, pid: int, req: Access) -> Any:
        """Perform one shared access on behalf of ``pid``."""
        kind = type(req)
        if kind is Read:
            return self.read(req.reg)
        if kind is LL:
            return self.ll(req.reg, pid)
        if kind is SC:
            return self.sc(req.reg, pid, req.payload)
        if kind is Write:
            return self.write(req.reg, req.payload)
        raise UsageFault(f"not a register access: {req!r}")

    def read(self, reg: int) -> Any:
        return self._reg(reg).word.payload

    def write(self, reg: int, payload: Any) -> bool:
        r = self._reg(reg)
        if r.kind is Kind.LLSC:
            raise UsageFault(f"write to plain LL/SC register {reg} ({r.label})")
        with _maybe(r.lock):
            r.word = RegisterWord(payload, _bump(r.word.version))
        return True

    def ll(self, reg: int, pid: int) -> Any:
        r = self._reg(reg)
        if r.kind is Kind.RW:
            raise UsageFault(f"LL on RW register {reg} ({r.label})")
        with _maybe(r.lock):
            word = r.word
        self._reservations[self._pid(pid)][reg] = word.version
        return word.payload

    def sc(self, reg: int, pid: int, payload: Any) -> bool:
        r = self._reg(reg)
        if r.kind is Kind.RW:
            raise UsageFault(f"SC on RW register {reg} ({r.label})")
        observed = self._reservations[self._pid(pid)].pop(reg, None)
        if observed is None:
            raise UsageFault(f"process {pid} has no reservation on register {reg} ({r.label})")
        return self._cas_version(r, observed, payload)

    def _cas_version(self, r: _Register, observed: int, payload: Any) -> bool:
        with _maybe(r.lock):
            if r.word.version != observed:
                return False
            r.word = RegisterWord(payload, _bump(observed))
            return True

    # -- helpers ------------------------------------------------------------

    def _reg(self, reg: int) -> _Register:
        if not isinstance(reg, int) or not 0 <= reg < len(self._regs):
            raise UsageFault(f"unknown register {reg!r}")
        return self._regs[reg]

    def _pid(self, pid: int) -> int:
        if not isinstance(pid, int) or not 0 <= pid < self.n:
            raise UsageFault(f"unknown process {pid!r}")
        return pid


class SimulatedMemory(Memory):
    """Single-threaded backend; the caller is the scheduler."""


class NativeMemory(Memory):
    """Backend safe for concurrent use, one thread per process id."""

    def _new_lock(self) -> threading.Lock:
        return threading.Lock()


@dataclass
class OpCount:
    pid: int
    label: str | None
    read: int = 0
    write: int = 0
    ll: int = 0
    sc: int = 0

    @property
    def total(self) -> int:
        return self.read + self.write + self.ll + self.sc

    def as_dict(self) -> dict[str, int]:
        return {"read": self.read, "write": self.write, "ll": self.ll, "sc": self.sc}


@dataclass
class AccessCounter:
    """Frozen copy of the instrumented counts at one instant."""

    records: list[OpCount] = field(default_factory=list)

    def totals(self) -> dict[str, int]:
        out = {"read": 0, "write": 0, "ll": 0, "sc": 0}
        for rec in self.records:
            for k, v in rec.as_dict().items():
                out[k] += v
        return out

    @property
    def total(self) -> int:
        return sum(self.totals().values())

    def for_label(self, label: str) -> list[OpCount]:
        return [r for r in self.records if r.label == label]


class InstrumentedMemory(Memory):
    """Counts every access; delegates storage and atomicity to ``inner``."""

    def __init__(self, inner: Memory) -> None:
        # storage lives in ``inner``; this object only routes and counts
        self.inner = inner
        self.n = inner.n
        self._records: list[OpCount] = []
        self._current: list[OpCount | None] = [None] * inner.n
        self._lock = threading.Lock()

    def alloc(self, kind: Kind, initial: Any = BOTTOM, label: str = "") -> int:
        return self.inner.alloc(kind, initial, label)

    def __getattr__(self, name: str) -> Any:
        # storage inspection (words, kinds, poke, ...) goes to the wrapped backend
        return getattr(self.inner, name)

    def begin_operation(self, pid: int, label: str) -> None:
        rec = OpCount(pid, label)
        with self._lock:
            self._records.append(rec)
        self._current[pid] = rec

    def end_operation(self, pid: int) -> None:
        self._current[pid] = None

    def _count(self, pid: int, name: str) -> None:
        rec = self._current[self.inner._pid(pid)]
        if rec is None:
            rec = OpCount(pid, None)
            with self._lock:
                self._records.append(rec)
            self._current[pid] = rec
        setattr(rec, name, getattr(rec, name) + 1)

    def execute(self, pid: int, req: Access) -> Any:
        result = self.inner.execute(pid, req)
        self._count(pid, ACCESS_NAMES[type(req)])
        return result

    def read(self, reg: int, pid: int = 0) -> Any:
        return self.execute(pid, Read(reg))

    def write(self, reg: int, payload: Any, pid: int = 0) -> bool:
        return self.execute(pid, Write(reg, payload))

    def ll(self, reg: int, pid: int) -> Any:
        return self.execute(pid, LL(reg))

    def sc(self, reg: int, pid: int, payload: Any) -> bool:
        return self.execute(pid, SC(reg, payload))

    def snapshot_counters(self) -> AccessCounter:
        with self._lock:
            return AccessCounter([OpCount(**vars(r)) for r in self._records])

    def reset_counters(self) -> None:
        with self._lock:
            self._records = []
            self._current = [None] * self.n


def run_steps(mem: Memory, pid: int, steps: Steps) -> Any:
    """Drive a step machine to completion against ``mem``; return its result."""
    try:
        req = next(steps)
        while True:
            req = steps.send(mem.execute(pid, req))
    except StopIteration as stop:
        return stop.value


def _bump(version: int) -> int:
    version += 1
    assert version < _VERSION_LIMIT, "64-bit register version wrapped"
    return version


class _NullLock:
    def __enter__(self) -> None:
        return None

    def __exit__(self, *exc: object) -> None:
        return None


_NULL_LOCK = _NullLock()


def _maybe(lock: threading.Lock | None):
    return lock if lock is not None else _NULL_LOCK
