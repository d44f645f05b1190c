"""Schedule exploration over the simulated backend.

Each process runs a fixed script of snapshot operations.  An operation is
a step machine, and one scheduling step advances one process by exactly
one shared access; invocation is folded into the first access and the
response into the last, so every schedule is just a sequence of process
ids.  :func:`enumerate_schedules` walks all schedules depth first (lowest
id first) by replaying prefixes; :func:`stress` samples them at random.
Every resulting history goes through the linearizability checker.

``max_preemptions`` bounds how many times a process may be switched out in
the middle of an operation; switches at operation boundaries are free.
With it unset the enumeration covers every interleaving.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

from . import lsnap, snap1
from .base import SnapshotObject
from .histories import History, HistoryEvent, Verdict, check
from .shmem import Memory, SimulatedMemory, UsageFault

OBJECTS = ("snap1", "lsnap")


class ScenarioFormatError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class Scenario:
    object: str
    m: int
    n: int
    scanners: tuple[int, ...]
    scripts: dict[int, list[tuple[str, Any]]]
    name: str = ""

    def __post_init__(self) -> None:
        if self.object not in OBJECTS:
            raise UsageFault(f"unknown object kind {self.object!r}")
        if self.object == "snap1" and len(self.scanners) != 1:
            raise UsageFault("snap1 has exactly one scanner")
        self.scanners = tuple(self.scanners)
        self.scripts = {int(p): [(op, _norm_args(op, a)) for op, a in s] for p, s in self.scripts.items()}
        for pid, script in self.scripts.items():
            if not 0 <= pid < self.n:
                raise UsageFault(f"script for unknown process {pid}")
            for op, _ in script:
                if op in ("scan", "partial_scan") and pid not in self.scanners:
                    raise UsageFault(f"process {pid} scans but is not a scanner")
        # catches bad indices/values before any exploration starts
        obj = self.build(SimulatedMemory(self.n))
        for pid, script in self.scripts.items():
            for op, args in script:
                obj.steps(pid, op, args).close()

    @property
    def lam(self) -> int:
        return len(self.scanners)

    def build(self, mem: Memory) -> SnapshotObject:
        if self.object == "snap1":
            return snap1.OneSnap(mem, self.m, self.scanners[0])
        return lsnap.LambdaSnap(mem, self.m, self.scanners)

    def step_bound(self, op: str, args: Any) -> int:
        """Worst-case accesses of one operation, from the algorithm text."""
        if self.object == "snap1":
            if op == "update":
                return snap1.update_bound()
            if op == "scan":
                return snap1.scan_bound(self.m)
            return snap1.partial_scan_bound(len(args))
        if op == "update":
            return lsnap.update_bound(self.lam)
        if op == "scan":
            return lsnap.scan_bound(self.m, self.lam)
        return lsnap.partial_scan_bound(len(args), self.lam)

    def total_ops(self) -> int:
        return sum(len(s) for s in self.scripts.values())


def _norm_args(op: str, args: Any) -> Any:
    if op == "update":
        j, v = args
        return (j, v)
    if op == "partial_scan":
        return tuple(sorted(set(args)))
    if op == "scan":
        return None
    raise UsageFault(f"unknown operation {op!r}")


@dataclass
class OpStat:
    process: int
    op: str
    args: Any
    steps: int
    applied: int = 0


class Execution:
    """One deterministic run of a scenario, advanced one access at a time."""

    def __init__(self, scenario: Scenario, memory: Callable[[int], Memory] = SimulatedMemory) -> None:
        self.scenario = scenario
        self.mem = memory(scenario.n)
        self.obj = scenario.build(self.mem)
        self.history = History()
        n = scenario.n
        self._scripts = [scenario.scripts.get(p, []) for p in range(n)]
        self._next = [0] * n
        self._gen: list[Any] = [None] * n
        self._req: list[Any] = [None] * n
        self._steps = [0] * n
        self.schedule: list[int] = []
        self.stats: list[OpStat] = []
        self.last: int | None = None
        self.preemptions = 0

    def enabled(self) -> list[int]:
        return [p for p in range(self.scenario.n) if self._gen[p] is not None or self._next[p] < len(self._scripts[p])]

    def in_op(self, pid: int) -> bool:
        return self._gen[pid] is not None

    def current_steps(self, pid: int) -> int:
        return self._steps[pid]

    def step(self, pid: int) -> None:
        if self.last is not None and pid != self.last and self.in_op(self.last):
            self.preemptions += 1
        if self._gen[pid] is None:
            if self._next[pid] >= len(self._scripts[pid]):
                raise UsageFault(f"process {pid} has nothing left to run")
            op, args = self._scripts[pid][self._next[pid]]
            self._next[pid] += 1
            gen = self.obj.steps(pid, op, args)
            self.history.invoke(pid, op, args)
            self._gen[pid] = gen
            self._steps[pid] = 0
            self._req[pid] = next(gen)
        gen = self._gen[pid]
        result = self.mem.execute(pid, self._req[pid])
        self._steps[pid] += 1
        self.schedule.append(pid)
        self.last = pid
        try:
            self._req[pid] = gen.send(result)
        except StopIteration as stop:
            op, args = self._scripts[pid][self._next[pid] - 1]
            self._gen[pid] = None
            self._req[pid] = None
            value = stop.value
            applied = 0
            if op == "update":
                applied, value = value, None
            self.history.respond(pid, op, value)
            self.stats.append(OpStat(pid, op, args, self._steps[pid], applied))

    def run(self, schedule: Iterable[int]) -> "Execution":
        for pid in schedule:
            self.step(pid)
        return self

    def run_solo(self, pid: int, limit: int) -> int:
        """Run ``pid`` alone until its current operation ends or ``limit`` steps pass."""
        taken = 0
        while taken < limit and self.in_op(pid):
            self.step(pid)
            taken += 1
        return taken

    @property
    def events(self) -> list[HistoryEvent]:
        return self.history.events


@dataclass
class Bounds:
    max_steps: int | None = None
    max_schedules: int | None = None
    max_preemptions: int | None = None


@dataclass
class Violation:
    schedule: list[int]
    verdict: Verdict
    events: list[HistoryEvent]


@dataclass
class Exceedance:
    schedule: list[int]
    process: int
    op: str
    steps: int
    bound: int


@dataclass
class ExploreReport:
    scenario: str
    mode: str
    schedules_explored: int = 0
    distinct_histories: int = 0
    truncated_schedules: int = 0
    schedule_limit_hit: bool = False
    preemption_bound: int | None = None
    max_steps_per_op: dict[str, int] = field(default_factory=dict)
    max_applied_per_update: int = 0
    step_bounds: dict[str, int] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    exceedances: list[Exceedance] = field(default_factory=list)
    seed: int | None = None

    @property
    def exhaustive(self) -> bool:
        return self.mode == "enumerate" and not self.truncated_schedules and not self.schedule_limit_hit

    @property
    def ok(self) -> bool:
        return not self.violations and not self.exceedances

    def summary(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "seed": self.seed,
            "schedules_explored": self.schedules_explored,
            "distinct_histories": self.distinct_histories,
            "exhaustive": self.exhaustive,
            "all_interleavings": self.exhaustive and self.preemption_bound is None,
            "preemption_bound": self.preemption_bound,
            "truncated_schedules": self.truncated_schedules,
            "schedule_limit_hit": self.schedule_limit_hit,
            "max_steps_per_op": dict(sorted(self.max_steps_per_op.items())),
            "step_bounds": dict(sorted(self.step_bounds.items())),
            "max_applied_per_update": self.max_applied_per_update,
            "violations": len(self.violations),
            "exceedances": len(self.exceedances),
        }


class _Checker:
    """Folds finished executions into a report, caching verdicts by history."""

    def __init__(self, scenario: Scenario, report: ExploreReport) -> None:
        self.scenario = scenario
        self.report = report
        self._verdicts: dict[tuple, bool] = {}

    def finish(self, ex: Execution) -> None:
        rep = self.report
        rep.schedules_explored += 1
        for st in ex.stats:
            key = st.op
            if st.op == "partial_scan":
                key = f"partial_scan[r={len(st.args)}]"
            bound = self.scenario.step_bound(st.op, st.args)
            rep.step_bounds[key] = bound
            if st.steps > rep.max_steps_per_op.get(key, -1):
                rep.max_steps_per_op[key] = st.steps
            if st.steps > bound:
                rep.exceedances.append(Exceedance(list(ex.schedule), st.process, st.op, st.steps, bound))
            if st.op == "update":
                rep.max_applied_per_update = max(rep.max_applied_per_update, st.applied)
        key = _history_key(ex.events)
        ok = self._verdicts.get(key)
        if ok is None:
            verdict = check(ex.events, self.scenario.m)
            ok = verdict.linearizable
            self._verdicts[key] = ok
            rep.distinct_histories += 1
            if not ok:
                rep.violations.append(Violation(list(ex.schedule), verdict, list(ex.events)))


def _history_key(events: list[HistoryEvent]) -> tuple:
    out = []
    for ev in events:
        result = ev.result
        if isinstance(result, dict):
            result = tuple(sorted(result.items()))
        out.append((ev.kind, ev.op, ev.process, ev.args, result))
    return tuple(out)


def enumerate_schedules(scenario: Scenario, bounds: Bounds | None = None) -> ExploreReport:
    """Depth-first enumeration of every schedule inside ``bounds``."""
    bounds = bounds or Bounds()
    report = ExploreReport(scenario.name, "enumerate", preemption_bound=bounds.max_preemptions)
    checker = _Checker(scenario, report)
    prefix: list[int] = []
    alternatives: list[list[int]] = []
    while True:
        ex = Execution(scenario).run(prefix)
        while True:
            enabled = ex.enabled()
            if not enabled:
                break
            if bounds.max_steps is not None and len(ex.schedule) >= bounds.max_steps:
                report.truncated_schedules += 1
                break
            options = _options(ex, enabled, bounds.max_preemptions)
            alternatives.append(options[1:])
            prefix.append(options[0])
            ex.step(options[0])
        checker.finish(ex)
        while alternatives and not alternatives[-1]:
            alternatives.pop()
            prefix.pop()
        if not alternatives:
            break
        if bounds.max_schedules is not None and report.schedules_explored >= bounds.max_schedules:
            report.schedule_limit_hit = True
            break
        prefix[len(alternatives) - 1] = alternatives[-1].pop(0)
        del prefix[len(alternatives) :]
    return report


def _options(ex: Execution, enabled: list[int], max_preemptions: int | None) -> list[int]:
    last = ex.last
    if max_preemptions is not None and last is not None and ex.in_op(last) and ex.preemptions >= max_preemptions:
        return [last]
    return enabled


def stress(
    scenario: Scenario,
    seed: int,
    iterations: int,
    policy: str = "mixed",
    max_steps: int | None = None,
) -> ExploreReport:
    """Check ``iterations`` pseudo-random schedules drawn from ``seed``.

    ``uniform`` picks any enabled process at every step.  ``solo`` pauses
    processes at random points and later resumes one of them solo until its
    operation completes (the wait-freedom probe).  ``mixed`` alternates.
    """
    if iterations < 1:
        raise UsageFault("iterations must be at least 1")
    if policy not in ("uniform", "solo", "mixed"):
        raise UsageFault(f"unknown policy {policy!r}")
    rng = random.Random(seed)
    report = ExploreReport(scenario.name, "stress", seed=seed)
    checker = _Checker(scenario, report)
    for it in range(iterations):
        solo = policy == "solo" or (policy == "mixed" and it % 2 == 1)
        ex = Execution(scenario)
        while True:
            enabled = ex.enabled()
            if not enabled:
                break
            if max_steps is not None and len(ex.schedule) >= max_steps:
                report.truncated_schedules += 1
                break
            pid = rng.choice(enabled)
            if solo and ex.in_op(pid) and rng.random() < 0.15:
                st = ex._scripts[pid][ex._next[pid] - 1]
                ex.run_solo(pid, scenario.step_bound(*st) + 1)
            else:
                ex.step(pid)
        checker.finish(ex)
    return report


def replay(scenario: Scenario, schedule: Iterable[int], memory: Callable[[int], Memory] = SimulatedMemory) -> Execution:
    return Execution(scenario, memory).run(schedule)


# -- scenario / schedule files --------------------------------------------------


def dump_scenario(scenario: Scenario) -> str:
    head = {
        "name": scenario.name,
        "object": scenario.object,
        "m": scenario.m,
        "n": scenario.n,
        "scanners": list(scenario.scanners),
    }
    lines = [json.dumps(head)]
    for pid in sorted(scenario.scripts):
        for op, args in scenario.scripts[pid]:
            lines.append(json.dumps({"process": pid, "op": op, "args": None if args is None else list(args)}))
    return "\n".join(lines) + "\n"


def parse_scenario(text: str, name: str = "") -> Scenario:
    head: dict | None = None
    scripts: dict[int, list] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(lineno, f"not a JSON record ({exc.msg})") from None
        if not isinstance(doc, dict):
            raise ScenarioFormatError(lineno, "record must be an object")
        if head is None:
            missing = {"object", "m", "n", "scanners"} - doc.keys()
            if missing:
                raise ScenarioFormatError(lineno, f"header missing {sorted(missing)}")
            head = doc
            continue
        if not {"process", "op"} <= doc.keys():
            raise ScenarioFormatError(lineno, "script record needs process and op")
        scripts.setdefault(doc["process"], []).append((doc["op"], doc.get("args")))
    if head is None:
        raise ScenarioFormatError(1, "empty scenario")
    try:
        return Scenario(
            object=head["object"],
            m=int(head["m"]),
            n=int(head["n"]),
            scanners=tuple(head["scanners"]),
            scripts=scripts,
            name=head.get("name") or name,
        )
    except (UsageFault, TypeError, ValueError) as exc:
        raise ScenarioFormatError(0, str(exc)) from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), name=path.stem)


def dump_schedule(schedule: Iterable[int]) -> str:
    return " ".join(str(p) for p in schedule) + "\n"


def parse_schedule(text: str) -> list[int]:
    return [int(tok) for tok in text.split()]
