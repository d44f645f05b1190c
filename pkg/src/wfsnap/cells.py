"""Register payloads shared by both snapshot objects.

Sequence numbers start at 0, which is what the bottom sequence number
means in every comparison the algorithms make.
"""

from __future__ import annotations

from typing import Any, NamedTuple

from .shmem import BOTTOM, UsageFault


class ComponentCell(NamedTuple):
    value: Any = BOTTOM
    seq: int = 0
    proposed: Any = BOTTOM


class PreValueCell(NamedTuple):
    value: Any = BOTTOM
    seq: int = 0


class ScanAnnounce(NamedTuple):
    seq: int = 0
    write_enable: bool = False


EMPTY_CELL = ComponentCell()
EMPTY_PRE = PreValueCell()
EMPTY_ANNOUNCE = ScanAnnounce()


def check_value(v: Any) -> None:
    if v is BOTTOM:
        raise UsageFault("None is the empty-component marker and cannot be written")


def check_index(j: Any, m: int) -> None:
    if isinstance(j, bool) or not isinstance(j, int) or not 0 <= j < m:
        raise UsageFault(f"component index {j!r} outside [0, {m})")


def normalize_indices(indices: Any, m: int) -> tuple[int, ...]:
    """Sorted, de-duplicated component set for a partial scan."""
    items = set(indices)
    for j in items:
        check_index(j, m)
    return tuple(sorted(items))
