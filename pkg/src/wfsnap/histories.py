"""Concurrent histories: recording, the line-delimited file format, and the
linearizability checker.

A history is a list of :class:`HistoryEvent` in stamp order.  Stamps come
from one counter shared by every process, taken right after invocation and
right before the response, which is all the real-time order we need.

The checker is an exact Wing & Gong style search over linearization orders,
memoizing failed ``(linearized set, oracle state)`` pairs.  Pending
operations follow the usual completion rule: a pending update may be placed
anywhere after its invocation or left out, a pending scan is dropped.
"""

from __future__ import annotations

import itertools
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, TextIO

from . import oracle
from .shmem import UsageFault

OPS = ("update", "scan", "partial_scan")
KINDS = ("invoke", "response")


class HistoryFormatError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class HistoryEvent:
    stamp: int
    kind: str
    op: str
    process: int
    args: Any = None
    result: Any = None


@dataclass(frozen=True)
class Operation:
    id: int
    process: int
    op: str
    args: Any
    invoke: int
    response: float = math.inf
    result: Any = None

    @property
    def pending(self) -> bool:
        return self.response == math.inf


@dataclass
class Verdict:
    linearizable: bool
    witness: list[int] | None = None
    counterexample: list[HistoryEvent] | None = None

    def __bool__(self) -> bool:
        return self.linearizable


class History:
    """Thread-safe event sink.

    With ``limit`` set, only the first ``limit`` stamps are kept.  Because
    the cut falls at one point in stamp order, what remains is a prefix of
    the full history, and prefixes of linearizable histories linearize.
    """

    def __init__(self, limit: int | None = None) -> None:
        self.events: list[HistoryEvent] = []
        self.limit = limit
        self.full = limit == 0
        self._stamp = 0
        self._pending: dict[int, str] = {}
        self._lock = threading.Lock()

    def record(
        self, kind: str, op: str, process: int, args: Any = None, result: Any = None
    ) -> HistoryEvent | None:
        if kind not in KINDS or op not in OPS:
            raise UsageFault(f"bad event {kind}/{op}")
        with self._lock:
            if self.full:
                return None
            open_op = self._pending.get(process)
            if kind == "invoke":
                if open_op is not None:
                    raise UsageFault(f"process {process} already has a pending {open_op}")
                self._pending[process] = op
            else:
                if open_op != op:
                    raise UsageFault(f"response {op} by process {process} without matching invoke")
                del self._pending[process]
            self._stamp += 1
            ev = HistoryEvent(self._stamp, kind, op, process, args, result)
            self.events.append(ev)
            self.full = self._stamp == self.limit
        return ev

    def invoke(self, process: int, op: str, args: Any = None) -> HistoryEvent | None:
        return self.record("invoke", op, process, args=_canonical_args(op, args))

    def respond(self, process: int, op: str, result: Any = None) -> HistoryEvent | None:
        return self.record("response", op, process, result=_canonical_result(op, result))

    def pending(self) -> dict[int, str]:
        with self._lock:
            return dict(self._pending)


def _canonical_args(op: str, args: Any) -> Any:
    if op == "update":
        j, v = args
        return (j, v)
    if op == "partial_scan":
        return tuple(sorted(set(args)))
    return None


def _canonical_result(op: str, result: Any) -> Any:
    if op == "scan":
        return tuple(result)
    if op == "partial_scan":
        return dict(result)
    return None


# -- operations -------------------------------------------------------------


def operations(events: Iterable[HistoryEvent]) -> list[Operation]:
    """Pair invokes with responses; unmatched invokes become pending ops."""
    ops: list[Operation] = []
    open_by_proc: dict[int, int] = {}
    last = 0
    for ev in events:
        if ev.stamp <= last:
            raise UsageFault(f"stamps not strictly increasing at {ev.stamp}")
        last = ev.stamp
        if ev.kind == "invoke":
            if ev.process in open_by_proc:
                raise UsageFault(f"process {ev.process} invokes twice without responding")
            open_by_proc[ev.process] = len(ops)
            ops.append(Operation(len(ops), ev.process, ev.op, ev.args, ev.stamp))
        elif ev.kind == "response":
            idx = open_by_proc.pop(ev.process, None)
            if idx is None or ops[idx].op != ev.op:
                raise UsageFault(f"response at stamp {ev.stamp} has no matching invoke")
            o = ops[idx]
            ops[idx] = Operation(o.id, o.process, o.op, o.args, o.invoke, ev.stamp, ev.result)
        else:
            raise UsageFault(f"unknown event kind {ev.kind!r}")
    return ops


def infer_m(ops: list[Operation]) -> int:
    m = 0
    for o in ops:
        if o.op == "update":
            m = max(m, o.args[0] + 1)
        elif o.op == "scan" and not o.pending:
            m = max(m, len(o.result))
        elif o.op == "partial_scan" and o.args:
            m = max(m, max(o.args) + 1)
    return max(m, 1)


def _candidates(ops: list[Operation]) -> list[Operation]:
    return [o for o in ops if not (o.pending and o.op != "update")]


def _matches(o: Operation, state: oracle.OracleState) -> tuple[bool, oracle.OracleState]:
    new_state, expected = oracle.apply(state, o.op, o.args)
    return o.pending or expected == o.result, new_state


# -- the checker --------------------------------------------------------------


def check(events: list[HistoryEvent], m: int | None = None) -> Verdict:
    """Decide linearizability of a (possibly incomplete) history."""
    ops = operations(events)
    if m is None:
        m = infer_m(ops)
    witness = _search(ops, m)
    if witness is not None:
        assert replay(ops, witness, m), "checker produced a witness that does not replay"
        return Verdict(True, witness=witness)
    return Verdict(False, counterexample=minimal_failing_prefix(events, m))


def _search(ops: list[Operation], m: int) -> list[int] | None:
    cands = _candidates(ops)
    k = len(cands)
    if k == 0:
        return []
    inv = [o.invoke for o in cands]
    resp = [o.response for o in cands]
    required = 0
    for i, o in enumerate(cands):
        if not o.pending:
            required |= 1 << i
    failed: set[tuple[int, tuple]] = set()
    order: list[int] = []

    # explicit stack instead of recursion: histories from the bench sampler are long
    start = oracle.initial(m)
    stack: list[tuple[int, tuple, Iterable[int]]] = []

    def frontier(done: int) -> list[int]:
        horizon = min((resp[i] for i in range(k) if not done >> i & 1), default=math.inf)
        return [i for i in range(k) if not done >> i & 1 and inv[i] < horizon]

    stack.append((0, start, iter(frontier(0))))
    while stack:
        done, state, it = stack[-1]
        if done & required == required:
            return [cands[i].id for i in order]
        advanced = False
        for i in it:
            ok, nxt = _matches(cands[i], state)
            if not ok:
                continue
            nd = done | 1 << i
            if (nd, nxt) in failed:
                continue
            order.append(i)
            stack.append((nd, nxt, iter(frontier(nd))))
            advanced = True
            break
        if not advanced:
            failed.add((done, state))
            stack.pop()
            if order:
                order.pop()
    return None


def replay(ops: list[Operation], witness: list[int], m: int) -> bool:
    """Independently confirm that ``witness`` is a valid linearization."""
    by_id = {o.id: o for o in ops}
    if len(set(witness)) != len(witness) or any(i not in by_id for i in witness):
        return False
    chosen = set(witness)
    for o in ops:
        if not o.pending and o.id not in chosen:
            return False
        if o.id in chosen and o.pending and o.op != "update":
            return False
    pos = {i: p for p, i in enumerate(witness)}
    for a in witness:
        for b in witness:
            if by_id[a].response < by_id[b].invoke and pos[a] > pos[b]:
                return False
    state = oracle.initial(m)
    for i in witness:
        ok, state = _matches(by_id[i], state)
        if not ok:
            return False
    return True


def brute_force_check(events: list[HistoryEvent], m: int | None = None) -> bool:
    """All-permutations reference for small histories."""
    ops = operations(events)
    if m is None:
        m = infer_m(ops)
    complete = [o for o in ops if not o.pending]
    optional = [o for o in ops if o.pending and o.op == "update"]
    for r in range(len(optional) + 1):
        for extra in itertools.combinations(optional, r):
            chosen = complete + list(extra)
            for perm in itertools.permutations(chosen):
                if _respects_real_time(perm) and _replays(perm, m):
                    return True
    return False


def _respects_real_time(perm: tuple[Operation, ...]) -> bool:
    for i, a in enumerate(perm):
        for b in perm[i + 1 :]:
            if b.response < a.invoke:
                return False
    return True


def _replays(perm: tuple[Operation, ...], m: int) -> bool:
    state = oracle.initial(m)
    for o in perm:
        ok, state = _matches(o, state)
        if not ok:
            return False
    return True


def minimal_failing_prefix(events: list[HistoryEvent], m: int) -> list[HistoryEvent]:
    """Shortest non-linearizable prefix; linearizability is prefix-closed."""
    lo, hi = 1, len(events)
    while lo < hi:
        mid = (lo + hi) // 2
        if _search(operations(events[:mid]), m) is None:
            hi = mid
        else:
            lo = mid + 1
    return list(events[:lo])


# -- file format ----------------------------------------------------------------


def encode_event(ev: HistoryEvent) -> str:
    args: Any = ev.args
    result: Any = ev.result
    if ev.op == "update" and args is not None:
        args = list(args)
    elif ev.op == "partial_scan" and args is not None:
        args = list(args)
    if ev.op == "scan" and result is not None:
        result = list(result)
    elif ev.op == "partial_scan" and result is not None:
        result = [[j, v] for j, v in sorted(result.items())]
    doc = {
        "stamp": ev.stamp,
        "kind": ev.kind,
        "op": ev.op,
        "process": ev.process,
        "args": args,
        "result": result,
    }
    return json.dumps(doc, sort_keys=False, ensure_ascii=False, separators=(",", ":"))


def decode_event(line: str, lineno: int = 0) -> HistoryEvent:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise HistoryFormatError(lineno, f"not a JSON record ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise HistoryFormatError(lineno, "record must be an object")
    missing = {"stamp", "kind", "op", "process"} - doc.keys()
    if missing:
        raise HistoryFormatError(lineno, f"missing fields {sorted(missing)}")
    kind, op = doc["kind"], doc["op"]
    if kind not in KINDS:
        raise HistoryFormatError(lineno, f"bad kind {kind!r}")
    if op not in OPS:
        raise HistoryFormatError(lineno, f"bad op {op!r}")
    stamp, process = doc["stamp"], doc["process"]
    if not (isinstance(stamp, int) and isinstance(process, int)):
        raise HistoryFormatError(lineno, "stamp and process must be integers")
    args, result = doc.get("args"), doc.get("result")
    try:
        if kind == "invoke":
            result = None
            if op == "update":
                j, v = args
                args = (int(j), v)
            elif op == "partial_scan":
                args = tuple(int(j) for j in args)
            else:
                args = None
        else:
            args = None
            if op == "scan":
                result = tuple(result)
            elif op == "partial_scan":
                result = {int(j): v for j, v in result}
            else:
                result = None
    except (TypeError, ValueError):
        raise HistoryFormatError(lineno, f"malformed args/result for {kind} {op}") from None
    return HistoryEvent(stamp, kind, op, process, args, result)


def dump(events: Iterable[HistoryEvent], fh: TextIO) -> None:
    for ev in events:
        fh.write(encode_event(ev) + "\n")


def parse(fh: TextIO) -> list[HistoryEvent]:
    events: list[HistoryEvent] = []
    last = 0
    for lineno, line in enumerate(fh, 1):
        if not line.strip():
            continue
        ev = decode_event(line, lineno)
        if ev.stamp <= last:
            raise HistoryFormatError(lineno, "stamps must be strictly ascending")
        last = ev.stamp
        events.append(ev)
    return events


def save(events: Iterable[HistoryEvent], destination: str | Path) -> None:
    with open(destination, "w", encoding="utf-8") as fh:
        dump(events, fh)


def load(source: str | Path) -> list[HistoryEvent]:
    with open(source, encoding="utf-8") as fh:
        return parse(fh)
