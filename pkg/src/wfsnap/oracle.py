"""Sequential snapshot object: the reference every history is replayed on."""

from __future__ import annotations

from typing import Any, Iterable

from .cells import check_index, check_value, normalize_indices
from .shmem import BOTTOM

OracleState = tuple


def initial(m: int) -> OracleState:
    return (BOTTOM,) * m


def seq_update(state: OracleState, j: int, v: Any) -> OracleState:
    check_index(j, len(state))
    check_value(v)
    return state[:j] + (v,) + state[j + 1 :]


def seq_scan(state: OracleState) -> tuple:
    return tuple(state)


def seq_partial_scan(state: OracleState, indices: Iterable[int]) -> dict[int, Any]:
    return {j: state[j] for j in normalize_indices(indices, len(state))}


def apply(state: OracleState, op: str, args: Any) -> tuple[OracleState, Any]:
    """Run one operation; return the new state and the response it produces."""
    if op == "update":
        j, v = args
        return seq_update(state, j, v), None
    if op == "scan":
        return state, seq_scan(state)
    if op == "partial_scan":
        return state, seq_partial_scan(state, args)
    raise ValueError(f"unknown operation {op!r}")
