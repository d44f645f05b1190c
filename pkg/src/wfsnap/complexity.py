"""Solo-run access counts and their fitted shapes.

Every measurement builds a fresh object on instrumented simulated memory,
writes each component once, and then counts one operation run alone.  Solo
runs are deterministic, so the fits are exact integer fits: the residual
must be zero, not merely small.
"""

from __future__ import annotations

from itertools import product
from typing import Any, Callable, Sequence

import numpy as np

from .lsnap import LambdaSnap
from .shmem import InstrumentedMemory, SimulatedMemory
from .snap1 import OneSnap

FIT_TOL = 1e-9


def _prepared(kind: str, m: int, lam: int = 1, n: int | None = None):
    if kind == "snap1":
        n = n or 2
        mem = InstrumentedMemory(SimulatedMemory(n))
        obj = OneSnap(mem, m, scanner_id=n - 1)
    else:
        n = n or lam + 1
        mem = InstrumentedMemory(SimulatedMemory(n))
        obj = LambdaSnap(mem, m, scanner_ids=range(n - lam, n))
    for j in range(m):
        obj.update(0, j, j + 1)
    mem.reset_counters()
    return mem, obj


def _count(mem: InstrumentedMemory, run: Callable[[], Any]) -> int:
    mem.reset_counters()
    run()
    return mem.snapshot_counters().total


def solo_count(kind: str, op: str, m: int, lam: int = 1, r: int = 0, n: int | None = None) -> int:
    """Accesses of one solo ``op`` on a prepared object."""
    mem, obj = _prepared(kind, m, lam, n)
    scanner = obj.n - 1
    if op == "update":
        return _count(mem, lambda: obj.update(0, 0, 99))
    if op == "apply_update":
        return _count(mem, lambda: obj.apply_update(0, 0))
    if op == "scan":
        return _count(mem, lambda: obj.scan(scanner))
    if op == "partial_scan":
        return _count(mem, lambda: obj.partial_scan(scanner, range(r)))
    raise ValueError(f"unknown operation {op!r}")


def fit(features: Sequence[Sequence[float]], counts: Sequence[int]) -> dict[str, Any]:
    """Least-squares fit ``counts ~ [1, *features] @ coef`` and its residual."""
    y = np.asarray(counts, dtype=float)
    x = np.column_stack([np.ones(len(y))] + [np.asarray(f, dtype=float) for f in features])
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = float(np.max(np.abs(x @ coef - y))) if len(y) else 0.0
    return {"coef": [round(float(c), 9) for c in coef], "max_residual": resid, "exact": resid < FIT_TOL}


def _series(rows: list[dict], key: str) -> list:
    return [row[key] for row in rows]


def snap1_report(ms: Sequence[int], rs: Sequence[int]) -> dict[str, Any]:
    ms = sorted(set(ms))
    upd = [{"m": m, "count": solo_count("snap1", "update", m)} for m in ms]
    scan = [{"m": m, "count": solo_count("snap1", "scan", m)} for m in ms]
    scan_n = [{"n": n, "count": solo_count("snap1", "scan", ms[-1], n=n)} for n in (2, 3, 5)]
    partial = [
        {"m": m, "r": r, "count": solo_count("snap1", "partial_scan", m, r=r)}
        for m, r in product(ms, sorted(set(rs)))
        if r <= m
    ]
    checks = {
        "update_constant_in_m": len(set(_series(upd, "count"))) == 1,
        "scan_independent_of_n": len(set(_series(scan_n, "count"))) == 1,
        "partial_invariant_in_m": _invariant(partial, "r"),
    }
    scan_fit = fit([_series(scan, "m")], _series(scan, "count"))
    partial_fit = fit([_series(partial, "r")], _series(partial, "count"))
    checks["scan_affine_in_m"] = scan_fit["exact"]
    checks["partial_affine_in_r"] = partial_fit["exact"]
    return {
        "object": "snap1",
        "update": upd,
        "scan": scan,
        "scan_vs_n": scan_n,
        "partial_scan": partial,
        "fits": {"scan~m": scan_fit, "partial_scan~r": partial_fit},
        "checks": checks,
        "ok": all(checks.values()),
    }


def lsnap_report(ms: Sequence[int], lams: Sequence[int], rs: Sequence[int]) -> dict[str, Any]:
    ms, lams, rs = sorted(set(ms)), sorted(set(lams)), sorted(set(rs))
    upd = [{"m": m, "lambda": lam, "count": solo_count("lsnap", "update", m, lam)} for m, lam in product(ms, lams)]
    scan = [{"m": m, "lambda": lam, "count": solo_count("lsnap", "scan", m, lam)} for m, lam in product(ms, lams)]
    scan_n = [
        {"n": n, "count": solo_count("lsnap", "scan", ms[-1], lams[-1], n=n)} for n in (lams[-1] + 1, lams[-1] + 3)
    ]
    partial = [
        {"m": m, "lambda": lam, "r": r, "count": solo_count("lsnap", "partial_scan", m, lam, r=r)}
        for m, lam, r in product(ms, lams, rs)
        if r <= m
    ]
    lam_m = [row["lambda"] * row["m"] for row in scan]
    upd_fit = fit([_series(upd, "lambda")], _series(upd, "count"))
    scan_fit = fit([_series(scan, "lambda"), _series(scan, "m"), lam_m], _series(scan, "count"))
    partial_fit = fit(
        [_series(partial, "lambda"), _series(partial, "r"), [row["lambda"] * row["r"] for row in partial]],
        _series(partial, "count"),
    )
    checks = {
        "update_affine_in_lambda": upd_fit["exact"],
        "update_invariant_in_m": _invariant(upd, "lambda"),
        "scan_affine_in_lambda_m": scan_fit["exact"],
        "scan_independent_of_n": len(set(_series(scan_n, "count"))) == 1,
        "partial_affine_in_lambda_r": partial_fit["exact"],
        "partial_invariant_in_m": _invariant(partial, "lambda", "r"),
    }
    return {
        "object": "lsnap",
        "update": upd,
        "scan": scan,
        "scan_vs_n": scan_n,
        "partial_scan": partial,
        "fits": {
            "update~lambda": upd_fit,
            "scan~lambda+m+lambda*m": scan_fit,
            "partial_scan~lambda+r+lambda*r": partial_fit,
        },
        "checks": checks,
        "ok": all(checks.values()),
    }


def _invariant(rows: list[dict], *keys: str) -> bool:
    seen: dict[tuple, int] = {}
    for row in rows:
        k = tuple(row[key] for key in keys)
        if seen.setdefault(k, row["count"]) != row["count"]:
            return False
    return True
