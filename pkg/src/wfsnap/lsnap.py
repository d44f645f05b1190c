"""λ-scanner snapshot (λ-Snap) and its partial-scan variant.

Up to λ predefined processes may scan at the same time.  Each scanner rank
owns an announce cell in ``s_table`` and a row of ``pre_values``.  A scan
announces itself, then runs three rounds of the sequence-number agreement:
every round helps each announced scanner to a target sequence number two
above the current ``seq`` and tries to push ``seq`` up by one.  Updates are
the same announce/apply loop as the single-scanner object, except that the
copy step saves the old value once per scanner row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .base import SnapshotObject, View
from .cells import EMPTY_ANNOUNCE, EMPTY_CELL, EMPTY_PRE, PreValueCell, ScanAnnounce
from .shmem import BOTTOM, LL, SC, Kind, Memory, Read, Steps, UsageFault, Write

ROUNDS = 3


@dataclass(frozen=True)
class LSnapConfig:
    m: int
    n: int
    scanner_ids: tuple[int, ...]
    ranks: dict[int, int] = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.m < 1:
            raise UsageFault("need at least one component")
        if not self.scanner_ids:
            raise UsageFault("λ must be at least 1")
        if len(set(self.scanner_ids)) != len(self.scanner_ids):
            raise UsageFault(f"duplicate scanner ids {self.scanner_ids}")
        for pid in self.scanner_ids:
            if not 0 <= pid < self.n:
                raise UsageFault(f"scanner {pid} outside [0, {self.n})")
        object.__setattr__(self, "ranks", {pid: r for r, pid in enumerate(self.scanner_ids)})

    @property
    def lam(self) -> int:
        return len(self.scanner_ids)


class LambdaSnap(SnapshotObject):
    kind = "lsnap"

    def __init__(self, mem: Memory, m: int, scanner_ids: Sequence[int] = (0,)) -> None:
        super().__init__(mem, m)
        self.config = LSnapConfig(m, mem.n, tuple(scanner_ids))
        self.scanner_ids = self.config.scanner_ids
        self.lam = self.config.lam
        self.seq = mem.alloc(Kind.LLSC, 0, "seq")
        self.values = [mem.alloc(Kind.LLSC, EMPTY_CELL, f"values[{j}]") for j in range(m)]
        self.pre_values = [
            [mem.alloc(Kind.LLSC, EMPTY_PRE, f"pre_values[{i}][{j}]") for j in range(m)]
            for i in range(self.lam)
        ]
        self.s_table = [
            mem.alloc(Kind.LLSC_WRITE, EMPTY_ANNOUNCE, f"s_table[{i}]") for i in range(self.lam)
        ]
        self.views = [[BOTTOM] * m for _ in range(self.lam)]

    @staticmethod
    def expected_registers(m: int, lam: int) -> int:
        return 1 + m + lam * m + lam

    def is_scanner(self, pid: int) -> bool:
        return pid in self.config.ranks

    def rank(self, pid: int) -> int:
        return self.config.ranks[pid]

    def _apply_update(self, j: int) -> Steps:
        values = self.values[j]
        cur = yield LL(values)
        cur_seq = yield Read(self.seq)
        for i in range(self.lam):
            pre = self.pre_values[i][j]
            for _ in range(2):
                yield LL(pre)
                cur = yield Read(values)
                announce = yield Read(self.s_table[i])
                if cur.seq < announce.seq:
                    yield SC(pre, PreValueCell(cur.value, cur.seq))
        if cur.proposed is not BOTTOM:
            return (yield SC(values, self._applied(cur, cur_seq)))
        return False

    def _agree(self, rank: int) -> Steps:
        """Announce, run the rounds, and return this scan's sequence number."""
        seq = yield Read(self.seq)
        yield Write(self.s_table[rank], ScanAnnounce(seq, True))
        for _ in range(ROUNDS):
            cur_seq = yield LL(self.seq)
            for k in range(self.lam):
                cell = self.s_table[k]
                announce = yield LL(cell)
                seq = yield Read(self.seq)
                if announce.seq < seq + 2 and announce.write_enable:
                    yield SC(cell, ScanAnnounce(seq + 2, False))
            yield SC(self.seq, cur_seq + 1)
        mine = yield Read(self.s_table[rank])
        return mine.seq

    def _read(self, rank: int, j: int, seq: int) -> Steps:
        v1 = yield Read(self.values[j])
        v2 = yield Read(self.pre_values[rank][j])
        view = self.views[rank]
        view[j] = v1.value if v1.seq < seq else v2.value
        return view[j]

    def _scan(self, pid: int) -> Steps:
        rank = self.rank(pid)
        seq = yield from self._agree(rank)
        for j in range(self.m):
            yield from self._apply_update(j)
            yield from self._read(rank, j, seq)
        return View(self.views[rank])

    def _partial_scan(self, pid: int, indices: tuple[int, ...]) -> Steps:
        rank = self.rank(pid)
        seq = yield from self._agree(rank)
        out = {}
        for j in indices:
            yield from self._apply_update(j)
            out[j] = yield from self._read(rank, j, seq)
        return out


def apply_update_bound(lam: int) -> int:
    """Worst-case accesses of one ApplyUpdate, counted off the code above."""
    # LL values, read seq, λ x 2 x (LL pre, read values, read s_table, SC pre), SC values
    return 2 + lam * 2 * 4 + 1


def update_bound(lam: int) -> int:
    return 2 * (2 + apply_update_bound(lam))


def agree_bound(lam: int) -> int:
    # read seq + announce write, rounds x (LL seq, λ x (LL, read seq, SC), SC seq), own read
    return 2 + ROUNDS * (2 + 3 * lam) + 1


def scan_bound(m: int, lam: int) -> int:
    return agree_bound(lam) + m * (apply_update_bound(lam) + 2)


def partial_scan_bound(r: int, lam: int) -> int:
    return scan_bound(r, lam)
