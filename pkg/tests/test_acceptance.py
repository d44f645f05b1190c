"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.  The exhaustive
suites are preemption bounded (see PREEMPTIONS_*); within that bound every
schedule is executed and checked.
"""

from __future__ import annotations

import time
from pathlib import Path

import pytest

from llsc_enum import all_cases, run_impl, run_reference
from wfsnap import complexity, histories, lsnap, snap1
from wfsnap.bench import run_bench
from wfsnap.explore import Bounds, Scenario, enumerate_schedules, load_scenario, stress
from wfsnap.lsnap import LambdaSnap
from wfsnap.shmem import SimulatedMemory
from wfsnap.snap1 import OneSnap

PREEMPTIONS_SNAP1 = 3
PREEMPTIONS_LSNAP = 2
STRESS_ITERATIONS = 10_000
SCENARIOS = Path(__file__).parents[1] / "src" / "wfsnap" / "scenarios"
CORPUS = Path(__file__).parent / "fixtures" / "corpus"

# reports from criteria 1-3, reused by criterion 4
_reports: dict[str, list] = {"explored": [], "stressed": []}


@pytest.fixture
def verdict(capsys):
    def emit(number: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def _suite(scenarios: dict[str, Scenario], k: int) -> tuple[bool, str, float]:
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, sc in scenarios.items():
        rep = enumerate_schedules(sc, Bounds(max_preemptions=k))
        _reports["explored"].append(rep)
        ok &= rep.exhaustive and not rep.violations
        parts.append(f"{name}={rep.schedules_explored}/{len(rep.violations)}v")
    return ok, ", ".join(parts), time.perf_counter() - t0


def snap1_scenarios() -> dict[str, Scenario]:
    out = {}
    for m in (1, 2):
        out[f"m{m}:1x2||scan"] = Scenario(
            "snap1", m, 2, (1,), {0: [("update", (0, 1)), ("update", (m - 1, 2))], 1: [("scan", None)]}
        )
        out[f"m{m}:2x1||scan"] = Scenario(
            "snap1", m, 3, (2,), {0: [("update", (0, 1))], 1: [("update", (0, 2))], 2: [("scan", None)]}
        )
        out[f"m{m}:upd||partial"] = Scenario(
            "snap1", m, 2, (1,), {0: [("update", (0, 5))], 1: [("partial_scan", (0,))]}
        )
    return out


def lsnap_scenarios() -> dict[str, Scenario]:
    out = {}
    for m in (1, 2):
        for lam in (1, 2):
            scanners = tuple(range(1, lam + 1))
            scripts = {0: [("update", (0, 5))], **{p: [("scan", None)] for p in scanners}}
            out[f"m{m},l{lam}:upd||{lam}scan"] = Scenario("lsnap", m, lam + 1, scanners, scripts)
            scanners = tuple(range(2, lam + 2))
            scripts = {0: [("update", (0, 1))], 1: [("update", (0, 2))], 2: [("scan", None)]}
            out[f"m{m},l{lam}:2upd||scan"] = Scenario("lsnap", m, lam + 2, scanners, scripts)
    return out


def test_1_snap1_exhaustive(verdict):
    ok, detail, secs = _suite(snap1_scenarios(), PREEMPTIONS_SNAP1)
    verdict("1", ok and secs < 600, f"1-Snap, preemption bound {PREEMPTIONS_SNAP1}: {detail} ({secs:.0f}s)")


def test_2_lsnap_exhaustive(verdict):
    ok, detail, secs = _suite(lsnap_scenarios(), PREEMPTIONS_LSNAP)
    verdict("2", ok and secs < 1800, f"λ-Snap, preemption bound {PREEMPTIONS_LSNAP}: {detail} ({secs:.0f}s)")


@pytest.mark.parametrize("name", ["snap1_stress", "lsnap_stress"])
def test_3_stress(verdict, name):
    sc = load_scenario(SCENARIOS / f"{name}.jsonl")
    assert sc.m <= 4 and sc.lam <= 2 and sc.n <= 4 and max(len(s) for s in sc.scripts.values()) <= 3
    rep = stress(sc, seed=2026, iterations=STRESS_ITERATIONS, policy="mixed")
    _reports["stressed"].append(rep)
    ok = rep.schedules_explored >= STRESS_ITERATIONS and not rep.violations
    verdict(
        "3",
        ok,
        f"{name} (m={sc.m}, λ={sc.lam}, n={sc.n}): {rep.schedules_explored} schedules, "
        f"{rep.distinct_histories} distinct histories, {len(rep.violations)} violations",
    )


def test_4_wait_freedom_bounds(verdict):
    if not _reports["explored"] or len(_reports["stressed"]) < 2:
        pytest.skip("needs criteria 1-3 in the same session")
    # adversarial solo-resume schedules on top of the mixed runs
    solo = [stress(load_scenario(SCENARIOS / f"{n}.jsonl"), 7, 2000, policy="solo") for n in ("snap1_stress", "lsnap_stress")]
    reps = _reports["explored"] + _reports["stressed"] + solo
    exceed = sum(len(r.exceedances) for r in reps)
    # tightest observed/bound ratio, to show how close runs come to B
    closest = max(
        (seen / r.step_bounds[key], key, seen, r.step_bounds[key])
        for r in reps
        for key, seen in r.max_steps_per_op.items()
    )
    frozen = {
        "1-Snap update": snap1.update_bound(),
        "1-Snap scan": "2+13m",
        "λ-Snap update": "10+16λ",
        "λ-Snap scan": "(9+9λ)+m(5+8λ)",
    }
    assert lsnap.update_bound(3) == 10 + 16 * 3 and lsnap.scan_bound(2, 3) == 9 + 27 + 2 * 29
    helping = max(r.max_applied_per_update for r in reps)
    verdict(
        "4",
        exceed == 0 and helping <= 2,
        f"{exceed} exceedances over {sum(r.schedules_explored for r in reps)} schedules; "
        f"frozen B {frozen}; closest {closest[1]} {closest[2]}/{closest[3]}; max applied per update {helping}",
    )


def test_5_step_complexity_shape(verdict):
    ms, lams, rs = [1, 2, 3, 4, 8, 16], [1, 2, 3, 4], [0, 1, 2, 3]
    s1 = complexity.snap1_report(ms, rs)
    ls = complexity.lsnap_report(ms, lams, rs)
    checks = {
        "snap1 update constant in m": s1["checks"]["update_constant_in_m"],
        "snap1 scan affine in m": s1["checks"]["scan_affine_in_m"],
        "snap1 partial affine in r": s1["checks"]["partial_affine_in_r"],
        "snap1 partial invariant in m": s1["checks"]["partial_invariant_in_m"],
        "lsnap update affine in λ": ls["checks"]["update_affine_in_lambda"],
        "lsnap partial invariant in m": ls["checks"]["partial_invariant_in_m"],
    }
    # taken literally: count = a + b·(λm) and count = a + b·(λr), one feature each
    scan_lm = complexity.fit([[row["lambda"] * row["m"] for row in ls["scan"]]], [row["count"] for row in ls["scan"]])
    part_lr = complexity.fit(
        [[row["lambda"] * row["r"] for row in ls["partial_scan"]]], [row["count"] for row in ls["partial_scan"]]
    )
    checks["lsnap scan affine in λ·m"] = scan_lm["exact"]
    checks["lsnap partial affine in λ·r"] = part_lr["exact"]
    failed = [k for k, v in checks.items() if not v]
    bilinear = ls["fits"]["scan~lambda+m+lambda*m"]
    verdict(
        "5",
        not failed,
        f"failed={failed}; scan~λ·m max residual {scan_lm['max_residual']:.3g}, "
        f"partial~λ·r max residual {part_lr['max_residual']:.3g}; "
        f"bilinear scan fit [1,λ,m,λm] coef {bilinear['coef']} exact={bilinear['exact']}",
    )


def test_6_space(verdict):
    bad = []
    for m in range(1, 9):
        mem = SimulatedMemory(2)
        OneSnap(mem, m, scanner_id=1)
        if mem.register_count() != 2 * m + 1:
            bad.append(("snap1", m))
        for lam in range(1, 5):
            mem = SimulatedMemory(lam + 1)
            LambdaSnap(mem, m, scanner_ids=range(1, lam + 1))
            if mem.register_count() != 1 + m + lam * m + lam:
                bad.append(("lsnap", m, lam))
    verdict("6", not bad, f"m in 1..8, λ in 1..4; mismatches {bad}")


def test_7_checker_vs_brute_force(verdict):
    files = sorted(CORPUS.glob("*.history.jsonl"))
    agree = 0
    for f in files:
        events = histories.load(f)
        assert sum(e.kind == "invoke" for e in events) <= 8
        agree += histories.check(events).linearizable == histories.brute_force_check(events)
    verdict("7", files and agree == len(files), f"{agree}/{len(files)} corpus histories agree")


def test_8_llsc_enumeration(verdict):
    cases = deviations = 0
    for scripts, order in all_cases(max_steps=6, procs=(2, 3)):
        impl, ref = run_impl(scripts, order), run_reference(scripts, order)
        cases += 1
        deviations += (impl.results, impl.payload) != (ref.results, ref.payload)
    verdict("8", cases > 0 and deviations == 0, f"{cases} schedules of ≤6 steps, {deviations} deviations")


def test_9_bench_liveness(verdict):
    res = run_bench("lsnap", m=4, lam=2, updaters=4, scanners=2, duration=1.0, seed=0)
    ok = all(res.throughput[k] > 0 for k in ("update", "scan")) and res.sample_linearizable
    verdict(
        "9",
        ok,
        f"throughput {res.as_dict()['throughput_ops_per_s']} ops/s, "
        f"sample of {res.sampled_ops} ops linearizable={res.sample_linearizable}",
    )
