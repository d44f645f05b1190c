import random
from itertools import combinations

import pytest

from wfsnap import explore
from wfsnap.explore import Bounds, Execution, Scenario, ScenarioFormatError, enumerate_schedules, stress
from wfsnap.shmem import NativeMemory, SimulatedMemory, UsageFault

UPDATE_STEPS = 11  # idle 1-Snap update, no helping possible on disjoint components


def disjoint_updaters():
    return Scenario("snap1", 2, 3, (2,), {0: [("update", (0, 5))], 1: [("update", (1, 6))]})


def preemptions(schedule):
    """Switches away from a process that still has steps left in its operation."""
    left = {p: schedule.count(p) for p in set(schedule)}
    count = 0
    for prev, nxt in zip(schedule, schedule[1:]):
        left[prev] -= 1
        if nxt != prev and left[prev] > 0:
            count += 1
    return count


def brute_force_counts(a, b, kmax):
    counts = [0] * (kmax + 1)
    for ones in combinations(range(a + b), b):
        s = [0] * (a + b)
        for i in ones:
            s[i] = 1
        k = preemptions(s)
        for bound in range(k, kmax + 1):
            counts[bound] += 1
    return counts


def test_single_update_single_schedule():
    sc = Scenario("snap1", 1, 2, (1,), {0: [("update", (0, 5))]})
    rep = enumerate_schedules(sc)
    assert rep.schedules_explored == 1
    assert rep.exhaustive and rep.ok
    assert rep.summary()["all_interleavings"] is True


def test_preemption_bounded_counts_match_brute_force():
    oracle = brute_force_counts(UPDATE_STEPS, UPDATE_STEPS, 3)
    assert oracle[:2] == [2, 22]
    for k in range(4):
        rep = enumerate_schedules(disjoint_updaters(), Bounds(max_preemptions=k))
        assert rep.schedules_explored == oracle[k], k
        assert rep.exhaustive and rep.ok


def test_schedule_limit_is_reported():
    rep = enumerate_schedules(disjoint_updaters(), Bounds(max_schedules=50))
    assert rep.schedules_explored == 50
    assert rep.schedule_limit_hit and not rep.exhaustive


def test_max_steps_truncation_is_reported():
    rep = enumerate_schedules(disjoint_updaters(), Bounds(max_steps=0))
    assert rep.truncated_schedules == 1 and not rep.exhaustive


def test_update_parallel_scan_regression_counts():
    sc = Scenario("snap1", 1, 2, (1,), {0: [("update", (0, 5))], 1: [("scan", None)]})
    reps = [enumerate_schedules(sc, Bounds(max_preemptions=k)) for k in (0, 1, 2)]
    assert all(r.ok and r.exhaustive for r in reps)
    # frozen from the first run
    assert [r.schedules_explored for r in reps] == [2, 25, 318]


def test_bundled_basic_scenario():
    sc = explore.parse_scenario(
        (explore.Path(explore.__file__).parent / "scenarios" / "snap1_basic.jsonl").read_text()
    )
    rep = enumerate_schedules(sc, Bounds(max_preemptions=2))
    assert rep.ok and rep.exhaustive
    assert rep.schedules_explored == 594


def test_dfs_order_starts_with_lowest_pid():
    sc = disjoint_updaters()
    first = Execution(sc)
    while first.enabled():
        first.step(first.enabled()[0])
    assert first.schedule == [0] * UPDATE_STEPS + [1] * UPDATE_STEPS


def test_replay_is_deterministic():
    sc = Scenario("lsnap", 2, 3, (1, 2), {0: [("update", (0, 5)), ("update", (1, 2))], 1: [("scan", None)], 2: [("partial_scan", (1,))]})
    rep = stress(sc, 3, 1)
    ex = Execution(sc)
    rng = random.Random(9)
    while ex.enabled():
        ex.step(rng.choice(ex.enabled()))
    a = explore.replay(sc, ex.schedule)
    b = explore.replay(sc, ex.schedule)
    assert a.events == b.events == ex.events
    assert a.mem.words() == b.mem.words()
    assert rep.ok


@pytest.mark.parametrize("kind", ["snap1", "lsnap"])
def test_backend_equivalence(kind):
    scanners = (2,) if kind == "snap1" else (1, 2)
    scripts = {0: [("update", (0, 1)), ("update", (1, 2))], 2: [("scan", None), ("partial_scan", (0,))]}
    if kind == "lsnap":
        scripts[1] = [("scan", None)]
    else:
        scripts[1] = [("update", (0, 3))]
    sc = Scenario(kind, 2, 3, scanners, scripts)
    for seed in range(20):
        rng = random.Random(seed)
        ex = Execution(sc)
        while ex.enabled():
            ex.step(rng.choice(ex.enabled()))
        native = explore.replay(sc, ex.schedule, memory=NativeMemory)
        assert native.mem.words() == ex.mem.words()
        assert native.events == ex.events


def test_stress_same_seed_same_report():
    sc = Scenario("snap1", 2, 3, (2,), {0: [("update", (0, 1))], 1: [("update", (0, 2))], 2: [("scan", None)]})
    a = stress(sc, 7, 200).summary()
    b = stress(sc, 7, 200).summary()
    assert a == b
    assert a["violations"] == 0 and a["exceedances"] == 0
    assert stress(sc, 8, 200).summary()["distinct_histories"] >= 1


def test_stress_policies_and_errors():
    sc = disjoint_updaters()
    for policy in ("uniform", "solo", "mixed"):
        assert stress(sc, 1, 30, policy=policy).ok
    with pytest.raises(UsageFault):
        stress(sc, 1, 0)
    with pytest.raises(UsageFault):
        stress(sc, 1, 5, policy="fair")


def test_exceedance_is_recorded(monkeypatch):
    sc = disjoint_updaters()
    monkeypatch.setattr(Scenario, "step_bound", lambda self, op, args: 3)
    rep = enumerate_schedules(sc, Bounds(max_preemptions=0))
    assert not rep.ok and rep.exceedances
    e = rep.exceedances[0]
    assert (e.steps, e.bound) == (UPDATE_STEPS, 3)


def test_solo_resume_completes_within_bound():
    sc = Scenario("lsnap", 2, 4, (2, 3), {0: [("update", (0, 1))], 1: [("update", (0, 2))], 2: [("scan", None)], 3: [("scan", None)]})
    rng = random.Random(4)
    for _ in range(50):
        ex = Execution(sc)
        for _ in range(rng.randrange(60)):
            if not ex.enabled():
                break
            ex.step(rng.choice(ex.enabled()))
        for pid in ex.enabled():
            if ex.in_op(pid):
                done_before = ex.current_steps(pid)
                op, args = ex._scripts[pid][ex._next[pid] - 1]
                bound = sc.step_bound(op, args)
                ex.run_solo(pid, bound)
                assert not ex.in_op(pid)
                assert ex.stats[-1].steps <= bound
                assert ex.stats[-1].steps >= done_before


# -- scenario files -----------------------------------------------------------------


def test_scenario_round_trip():
    sc = Scenario("lsnap", 2, 3, (1, 2), {0: [("update", (0, 5))], 1: [("partial_scan", (1, 0))]}, name="x")
    back = explore.parse_scenario(explore.dump_scenario(sc))
    assert (back.object, back.m, back.n, back.scanners, back.scripts, back.name) == (
        sc.object, sc.m, sc.n, sc.scanners, sc.scripts, "x"
    )


def test_schedule_round_trip():
    assert explore.parse_schedule(explore.dump_schedule([0, 1, 1, 2])) == [0, 1, 1, 2]


@pytest.mark.parametrize(
    "text,line",
    [
        ("", 1),
        ('{"object": "snap1", "m": 1, "n": 2, "scanners": [1]}\n{bad\n', 2),
        ('{"object": "snap1", "m": 1}\n', 1),
        ('{"object": "snap1", "m": 1, "n": 2, "scanners": [1]}\n{"process": 0}\n', 2),
        ('{"object": "snap1", "m": 1, "n": 2, "scanners": [1]}\n{"process": 0, "op": "scan"}\n', 0),
        ('{"object": "snap9", "m": 1, "n": 2, "scanners": [1]}\n', 0),
        ('{"object": "snap1", "m": 1, "n": 2, "scanners": [1]}\n{"process": 0, "op": "update", "args": [3, 1]}\n', 0),
    ],
)
def test_scenario_parse_errors(text, line):
    with pytest.raises(ScenarioFormatError) as info:
        explore.parse_scenario(text)
    assert info.value.line == line


def test_comments_are_skipped():
    text = '# two procs\n{"object": "snap1", "m": 1, "n": 2, "scanners": [1]}\n\n{"process": 1, "op": "scan"}\n'
    assert explore.parse_scenario(text).scripts == {1: [("scan", None)]}


def test_bundled_scenarios_parse():
    root = explore.Path(explore.__file__).parent / "scenarios"
    files = sorted(root.glob("*.jsonl"))
    assert len(files) >= 5
    for f in files:
        sc = explore.load_scenario(f)
        assert sc.total_ops() >= 2


def test_simulated_is_default_memory():
    assert isinstance(Execution(disjoint_updaters()).mem, SimulatedMemory)
