"""Command-line entry point: ``wfsnap {check,stress,complexity,bench}``.

Every command prints one JSON report on stdout.  Exit codes: 0 success,
1 property violation, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import complexity, explore, histories
from .bench import run_bench
from .shmem import UsageFault

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    pass


def bundled_scenarios() -> list[str]:
    root = resources.files("wfsnap") / "scenarios"
    return sorted(p.name[: -len(".jsonl")] for p in root.iterdir() if p.name.endswith(".jsonl"))


def resolve_scenario(ref: str) -> explore.Scenario:
    path = Path(ref)
    try:
        if path.exists():
            return explore.load_scenario(path)
        bundled = resources.files("wfsnap") / "scenarios" / f"{ref}.jsonl"
        if bundled.is_file():
            return explore.parse_scenario(bundled.read_text(encoding="utf-8"), name=ref)
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read scenario {ref}: {exc}") from None
    except explore.ScenarioFormatError as exc:
        raise CliError(f"{ref}: {exc}") from None
    raise CliError(f"no scenario file or bundled scenario named {ref!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wfsnap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="enumerate all schedules of a scenario")
    p.add_argument("scenario", help="scenario file or bundled scenario name")
    p.add_argument("--max-steps", type=int, default=None, help="truncate schedules longer than this")
    p.add_argument("--max-schedules", type=int, default=None)
    p.add_argument("--max-preemptions", type=int, default=2, help="-1 for no bound")
    p.add_argument("--out", type=Path, default=None, help="directory for report and counterexamples")

    p = sub.add_parser("stress", help="check random schedules of a scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--policy", choices=("uniform", "solo", "mixed"), default="mixed")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("complexity", help="solo access counts and their fits")
    p.add_argument("--object", choices=("snap1", "lsnap", "all"), default="all")
    p.add_argument("--m", type=_int_list, default=[1, 2, 4, 8, 16])
    p.add_argument("--lambda", dest="lam", type=_int_list, default=[1, 2, 3, 4])
    p.add_argument("--r", type=_int_list, default=[0, 1, 2])
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("bench", help="native-thread throughput run")
    p.add_argument("--object", choices=("snap1", "lsnap"), default="lsnap")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--lambda", dest="lam", type=int, default=2)
    p.add_argument("--updaters", type=int, default=4)
    p.add_argument("--scanners", type=int, default=2)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample", type=int, default=40, help="ops per thread recorded for the history check")
    p.add_argument("--out", type=Path, default=None)

    sub.add_parser("scenarios", help="list bundled scenarios")
    return parser


def _emit(report: dict[str, Any], out: Path | None, name: str) -> None:
    text = json.dumps(report, indent=2, sort_keys=False, default=str)
    print(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text + "\n", encoding="utf-8")


def _save_counterexamples(rep: explore.ExploreReport, scenario: explore.Scenario, out: Path | None) -> list[str]:
    if not rep.violations and not rep.exceedances:
        return []
    out = out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "counterexample.scenario.jsonl").write_text(explore.dump_scenario(scenario), encoding="utf-8")
    saved = [str(out / "counterexample.scenario.jsonl")]
    if rep.violations:
        v = rep.violations[0]
        (out / "counterexample.schedule").write_text(explore.dump_schedule(v.schedule), encoding="utf-8")
        histories.save(v.events, out / "counterexample.history.jsonl")
        saved += [str(out / "counterexample.schedule"), str(out / "counterexample.history.jsonl")]
    else:
        e = rep.exceedances[0]
        (out / "counterexample.schedule").write_text(explore.dump_schedule(e.schedule), encoding="utf-8")
        saved.append(str(out / "counterexample.schedule"))
    return saved


def _explore_report(rep: explore.ExploreReport, scenario: explore.Scenario, args: argparse.Namespace) -> dict:
    doc = {
        "command": args.command,
        "config": {
            "object": scenario.object,
            "m": scenario.m,
            "n": scenario.n,
            "lambda": scenario.lam,
            "scanners": list(scenario.scanners),
        },
    }
    doc.update(rep.summary())
    doc["counterexample_files"] = _save_counterexamples(rep, scenario, args.out)
    return doc


def cmd_check(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    preempt = None if args.max_preemptions is not None and args.max_preemptions < 0 else args.max_preemptions
    bounds = explore.Bounds(args.max_steps, args.max_schedules, preempt)
    rep = explore.enumerate_schedules(scenario, bounds)
    doc = _explore_report(rep, scenario, args)
    doc["bounds"] = {"max_steps": args.max_steps, "max_schedules": args.max_schedules, "max_preemptions": preempt}
    _emit(doc, args.out, "check")
    if rep.truncated_schedules or rep.schedule_limit_hit:
        print("warning: exploration truncated, not exhaustive", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_stress(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    rep = explore.stress(scenario, args.seed, args.iterations, policy=args.policy, max_steps=args.max_steps)
    doc = _explore_report(rep, scenario, args)
    doc["iterations"] = args.iterations
    doc["policy"] = args.policy
    _emit(doc, args.out, "stress")
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_complexity(args: argparse.Namespace) -> int:
    if any(v < 1 for v in args.m) or any(v < 1 for v in args.lam) or any(v < 0 for v in args.r):
        raise CliError("m and lambda must be ≥ 1, r ≥ 0")
    doc: dict[str, Any] = {"command": "complexity", "sweep": {"m": args.m, "lambda": args.lam, "r": args.r}}
    reports = []
    if args.object in ("snap1", "all"):
        reports.append(complexity.snap1_report(args.m, args.r))
    if args.object in ("lsnap", "all"):
        reports.append(complexity.lsnap_report(args.m, args.lam, args.r))
    doc["reports"] = reports
    doc["ok"] = all(r["ok"] for r in reports)
    _emit(doc, args.out, "complexity")
    return EXIT_OK if doc["ok"] else EXIT_VIOLATION


def cmd_bench(args: argparse.Namespace) -> int:
    res = run_bench(
        args.object, args.m, args.lam, args.updaters, args.scanners, args.duration, args.seed, args.sample
    )
    doc = {"command": "bench", **res.as_dict()}
    _emit(doc, args.out, "bench")
    return EXIT_OK if res.sample_linearizable else EXIT_VIOLATION


COMMANDS = {"check": cmd_check, "stress": cmd_stress, "complexity": cmd_complexity, "bench": cmd_bench}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "scenarios":
        print("\n".join(bundled_scenarios()))
        return EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (CliError, UsageFault, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
