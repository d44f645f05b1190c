"""Machinery common to the single-scanner and λ-scanner objects."""

from __future__ import annotations

from typing import Any, Iterable

from .cells import ComponentCell, check_index, check_value, normalize_indices
from .shmem import BOTTOM, LL, SC, Memory, Steps, UsageFault, run_steps

View = tuple


class SnapshotObject:
    """An m-component snapshot laid out in registers of ``mem``.

    Every public operation exists twice: ``*_steps`` returns a step machine
    (used by the schedule explorer) and the plain method runs that machine
    to completion on the object's memory.  The step machines validate their
    arguments eagerly, before the first shared access.
    """

    kind = "?"

    def __init__(self, mem: Memory, m: int) -> None:
        if m < 1:
            raise UsageFault("need at least one component")
        self.mem = mem
        self.m = m
        self.n = mem.n
        self.values: list[int] = []

    # -- step machines ------------------------------------------------------

    def update_steps(self, pid: int, j: int, v: Any) -> Steps:
        self._check_pid(pid)
        check_index(j, self.m)
        check_value(v)
        return self._update(pid, j, v)

    def apply_update_steps(self, pid: int, j: int) -> Steps:
        self._check_pid(pid)
        check_index(j, self.m)
        return self._apply_update(j)

    def scan_steps(self, pid: int) -> Steps:
        self._check_scanner(pid)
        return self._scan(pid)

    def partial_scan_steps(self, pid: int, indices: Iterable[int]) -> Steps:
        self._check_scanner(pid)
        return self._partial_scan(pid, normalize_indices(indices, self.m))

    def steps(self, pid: int, op: str, args: Any) -> Steps:
        """Step machine for a scripted call (``op`` as in history files)."""
        if op == "update":
            j, v = args
            return self.update_steps(pid, j, v)
        if op == "scan":
            return self.scan_steps(pid)
        if op == "partial_scan":
            return self.partial_scan_steps(pid, args)
        raise UsageFault(f"unknown operation {op!r}")

    # -- direct calls -------------------------------------------------------

    def update(self, pid: int, j: int, v: Any) -> None:
        self._run(pid, "update", self.update_steps(pid, j, v))

    def scan(self, pid: int) -> View:
        return self._run(pid, "scan", self.scan_steps(pid))

    def partial_scan(self, pid: int, indices: Iterable[int]) -> dict[int, Any]:
        return self._run(pid, "partial_scan", self.partial_scan_steps(pid, indices))

    def apply_update(self, pid: int, j: int) -> bool:
        return self._run(pid, "apply_update", self.apply_update_steps(pid, j))

    def _run(self, pid: int, label: str, steps: Steps) -> Any:
        self.mem.begin_operation(pid, label)
        try:
            result = run_steps(self.mem, pid, steps)
        finally:
            self.mem.end_operation(pid)
        return None if label == "update" else result

    # -- the announce loop, identical in both objects ----------------------

    def _update(self, pid: int, j: int, v: Any) -> Steps:
        # returns how many proposals this call's ApplyUpdates installed
        reg = self.values[j]
        applied = 0
        for _ in range(2):
            cur = yield LL(reg)
            if cur.proposed is BOTTOM:
                if (yield SC(reg, cur._replace(proposed=v))):
                    applied += yield from self._apply_update(j)
                    break
            applied += yield from self._apply_update(j)
        return applied

    @staticmethod
    def _applied(cur: ComponentCell, cur_seq: int) -> ComponentCell:
        return ComponentCell(cur.proposed, cur_seq, BOTTOM)

    # -- to be provided -------------------------------------------------------

    def _apply_update(self, j: int) -> Steps:
        raise NotImplementedError

    def _scan(self, pid: int) -> Steps:
        raise NotImplementedError

    def _partial_scan(self, pid: int, indices: tuple[int, ...]) -> Steps:
        raise NotImplementedError

    def is_scanner(self, pid: int) -> bool:
        raise NotImplementedError

    # -- checks ---------------------------------------------------------------

    def _check_pid(self, pid: int) -> None:
        if isinstance(pid, bool) or not isinstance(pid, int) or not 0 <= pid < self.n:
            raise UsageFault(f"unknown process {pid!r}")

    def _check_scanner(self, pid: int) -> None:
        self._check_pid(pid)
        if not self.is_scanner(pid):
            raise UsageFault(f"process {pid} is not a scanner of this {self.kind} object")
