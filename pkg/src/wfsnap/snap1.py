"""Single-scanner snapshot (1-Snap) and its partial-scan variant.

Layout: one RW register ``seq`` that only the scanner writes, and two rows
of m LL/SC registers, ``values`` (ComponentCell) and ``pre_values``
(PreValueCell).  Updates announce a proposal in ``values[j]`` and then
help it land; the scanner bumps ``seq`` and, per component, picks either
the live value or the saved previous one, whichever is older than its
sequence number.
"""

from __future__ import annotations

from dataclasses import dataclass

from .base import SnapshotObject, View
from .cells import EMPTY_CELL, EMPTY_PRE, PreValueCell
from .shmem import BOTTOM, LL, SC, Kind, Memory, Read, Steps, UsageFault, Write


@dataclass(frozen=True)
class SnapConfig:
    m: int
    n: int
    scanner_id: int = 0

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise UsageFault("m and n must be positive")
        if not 0 <= self.scanner_id < self.n:
            raise UsageFault(f"scanner {self.scanner_id} outside [0, {self.n})")


class OneSnap(SnapshotObject):
    kind = "snap1"

    def __init__(self, mem: Memory, m: int, scanner_id: int = 0) -> None:
        super().__init__(mem, m)
        self.config = SnapConfig(m, mem.n, scanner_id)
        self.scanner_id = scanner_id
        self.seq = mem.alloc(Kind.RW, 0, "seq")
        self.values = [mem.alloc(Kind.LLSC, EMPTY_CELL, f"values[{j}]") for j in range(m)]
        self.pre_values = [mem.alloc(Kind.LLSC, EMPTY_PRE, f"pre_values[{j}]") for j in range(m)]
        self.view: list = [BOTTOM] * m

    @staticmethod
    def expected_registers(m: int) -> int:
        return 2 * m + 1

    def is_scanner(self, pid: int) -> bool:
        return pid == self.scanner_id

    def _apply_update(self, j: int) -> Steps:
        values, pre = self.values[j], self.pre_values[j]
        cur = yield LL(values)
        cur_seq = yield Read(self.seq)
        for _ in range(2):
            yield LL(pre)
            cur = yield Read(values)
            if cur.seq < (yield Read(self.seq)):
                yield SC(pre, PreValueCell(cur.value, cur.seq))
        # ``cur`` is the last plain read; the SC below still hinges on the first LL
        if cur.proposed is not BOTTOM:
            return (yield SC(values, self._applied(cur, cur_seq)))
        return False

    def _bump_seq(self) -> Steps:
        seq = (yield Read(self.seq)) + 1
        yield Write(self.seq, seq)
        return seq

    def _read(self, j: int, seq: int) -> Steps:
        v1 = yield Read(self.values[j])
        v2 = yield Read(self.pre_values[j])
        self.view[j] = v1.value if v1.seq < seq else v2.value
        return self.view[j]

    def _scan(self, pid: int) -> Steps:
        seq = yield from self._bump_seq()
        for j in range(self.m):
            yield from self._apply_update(j)
            yield from self._read(j, seq)
        return View(self.view)

    def _partial_scan(self, pid: int, indices: tuple[int, ...]) -> Steps:
        seq = yield from self._bump_seq()
        out = {}
        for j in indices:
            yield from self._apply_update(j)
            out[j] = yield from self._read(j, seq)
        return out


def apply_update_bound() -> int:
    """Worst-case accesses of one ApplyUpdate, counted off the code above."""
    # LL values, read seq, 2 x (LL pre, read values, read seq, SC pre), SC values
    return 2 + 2 * 4 + 1


def update_bound() -> int:
    # 2 x (LL, SC, ApplyUpdate)
    return 2 * (2 + apply_update_bound())


def scan_bound(m: int) -> int:
    # read+write seq, then m x (ApplyUpdate + 2 reads)
    return 2 + m * (apply_update_bound() + 2)


def partial_scan_bound(r: int) -> int:
    return scan_bound(r)
