"""Native-thread load generator.

Updaters write unique values to uniformly random components; scanners scan
in a loop.  The opening stretch of the run, about ``sample`` operations per
thread, is recorded as a stamp-order prefix of the history and checked for
linearizability afterwards.
"""

from __future__ import annotations

import random
import sys
import threading
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .histories import History, check
from .lsnap import LambdaSnap
from .shmem import InstrumentedMemory, NativeMemory, UsageFault
from .snap1 import OneSnap


@dataclass
class BenchResult:
    config: dict[str, Any]
    ops: dict[str, int] = field(default_factory=dict)
    throughput: dict[str, float] = field(default_factory=dict)
    access_percentiles: dict[str, dict[str, float]] = field(default_factory=dict)
    access_totals: dict[str, int] = field(default_factory=dict)
    sampled_ops: int = 0
    sample_linearizable: bool | None = None
    elapsed: float = 0.0

    def as_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "elapsed_s": round(self.elapsed, 4),
            "ops": self.ops,
            "throughput_ops_per_s": {k: round(v, 1) for k, v in self.throughput.items()},
            "access_percentiles": self.access_percentiles,
            "access_totals": self.access_totals,
            "sampled_ops": self.sampled_ops,
            "sample_linearizable": self.sample_linearizable,
        }


def run_bench(
    kind: str = "lsnap",
    m: int = 4,
    lam: int = 2,
    updaters: int = 4,
    scanners: int = 2,
    duration: float = 1.0,
    seed: int = 0,
    sample: int = 40,
    switch_interval: float = 1e-4,
) -> BenchResult:
    if kind == "snap1" and scanners > 1:
        raise UsageFault("snap1 has a single scanner handle")
    if kind == "lsnap" and scanners > lam:
        raise UsageFault(f"{scanners} scanners requested but only λ={lam} scanner handles exist")
    if updaters < 0 or scanners < 0 or updaters + scanners == 0:
        raise UsageFault("need at least one thread")
    n = updaters + max(scanners, 1 if kind == "snap1" else lam)
    mem = InstrumentedMemory(NativeMemory(n))
    if kind == "snap1":
        obj = OneSnap(mem, m, scanner_id=updaters)
        scanner_ids = [updaters]
    elif kind == "lsnap":
        scanner_ids = list(range(updaters, updaters + lam))
        obj = LambdaSnap(mem, m, scanner_ids)
    else:
        raise UsageFault(f"unknown object kind {kind!r}")
    history = History(limit=2 * sample * (updaters + scanners))
    counts = [0] * n
    start_barrier = threading.Barrier(updaters + scanners)
    stop_at = [0.0]
    errors: list[BaseException] = []

    def updater(pid: int) -> None:
        rng = random.Random(seed * 1000 + pid)
        k = 0
        start_barrier.wait()
        while time.perf_counter() < stop_at[0]:
            j = rng.randrange(m)
            v = pid + n * k + 1
            if history.full:
                obj.update(pid, j, v)
            else:
                history.invoke(pid, "update", (j, v))
                obj.update(pid, j, v)
                history.respond(pid, "update")
            k += 1
        counts[pid] = k

    def scanner(pid: int) -> None:
        k = 0
        start_barrier.wait()
        while time.perf_counter() < stop_at[0]:
            if history.full:
                obj.scan(pid)
            else:
                history.invoke(pid, "scan")
                view = obj.scan(pid)
                history.respond(pid, "scan", view)
            k += 1
        counts[pid] = k

    def guarded(fn, pid):
        def body() -> None:
            try:
                fn(pid)
            except BaseException as exc:  # surfaced after join
                errors.append(exc)
        return body

    threads = [threading.Thread(target=guarded(updater, p)) for p in range(updaters)]
    threads += [threading.Thread(target=guarded(scanner, p)) for p in scanner_ids[:scanners]]
    old_interval = sys.getswitchinterval()
    sys.setswitchinterval(switch_interval)
    try:
        t0 = time.perf_counter()
        stop_at[0] = t0 + duration
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        elapsed = time.perf_counter() - t0
    finally:
        sys.setswitchinterval(old_interval)
    if errors:
        raise errors[0]

    config = {
        "object": kind,
        "m": m,
        "n": n,
        "lambda": 1 if kind == "snap1" else lam,
        "updaters": updaters,
        "scanners": scanners,
        "duration": duration,
        "seed": seed,
    }
    res = BenchResult(config, elapsed=elapsed)
    res.ops = {
        "update": sum(counts[p] for p in range(updaters)),
        "scan": sum(counts[p] for p in scanner_ids[:scanners]),
    }
    res.throughput = {k: v / elapsed for k, v in res.ops.items()}
    snap = mem.snapshot_counters()
    for label in ("update", "scan"):
        totals = np.array([r.total for r in snap.for_label(label)], dtype=float)
        res.access_totals[label] = int(totals.sum())
        if len(totals):
            p50, p90, p99 = np.percentile(totals, [50, 90, 99])
            res.access_percentiles[label] = {
                "p50": float(p50),
                "p90": float(p90),
                "p99": float(p99),
                "max": float(totals.max()),
            }
    res.sampled_ops = sum(1 for ev in history.events if ev.kind == "invoke")
    res.sample_linearizable = check(history.events, m).linearizable
    return res
