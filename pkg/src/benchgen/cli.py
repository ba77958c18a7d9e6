"""Command-line interface.

Subcommands: tune (run a graded or discriminating campaign), combine
(sample graded archives into one benchmark set), evaluate (run solvers on
a combined set and rank them), report (export campaign tables), check
(re-verify archived solutions).
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from .archive import CampaignArchive
from .campaign import run_campaign
from .errors import BenchgenError, ValidationError
from .evaluate import DiscriminatingPolicy, EvaluationLimits, GradedPolicy
from .problems import get_problem
from .report import (
    CombinedSet,
    build_combined_set,
    discrimination_report,
    evaluate_combined,
    status_frequencies,
    write_reports,
)
from .runner import SolverAdapter, Status, check_solution
from .tuner import TunerConfig


def parse_mem_limit(text: str) -> int | None:
    text = text.strip()
    if not text or text.lower() == "none":
        return None
    multipliers = {"k": 1024, "m": 1024**2, "g": 1024**3}
    if text[-1].lower() in multipliers:
        return int(float(text[:-1]) * multipliers[text[-1].lower()])
    return int(text)


def _read_config(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str  # keep parameter-name case
    read = parser.read(path)
    if not read:
        raise ValidationError(f"cannot read config file {path}")
    return parser


def load_adapters(config: configparser.ConfigParser) -> dict[str, SolverAdapter]:
    adapters: dict[str, SolverAdapter] = {}
    for section in config.sections():
        if not section.startswith("solver."):
            continue
        name = section[len("solver."):]
        kind = config.get(section, "kind", fallback="complete")
        builtin = config.get(section, "builtin", fallback=None)
        command = config.get(section, "command", fallback=None)
        adapters[name] = SolverAdapter(name=name, kind=kind, builtin=builtin, command=command)
    return adapters


def _adapter(adapters: dict[str, SolverAdapter], name: str) -> SolverAdapter:
    if name in adapters:
        return adapters[name]
    # Bare builtin ids are accepted without a [solver.*] section.
    return SolverAdapter(name=name, builtin=name)


def _types(text: str) -> frozenset[str]:
    types = frozenset(t.strip().upper() for t in text.split(",") if t.strip())
    bad = types - {"SAT", "UNSAT"}
    if bad:
        raise ValidationError(f"unknown instance types: {sorted(bad)}")
    return types


def cmd_tune(args: argparse.Namespace) -> int:
    config = _read_config(args.config)
    if not config.has_section("space"):
        raise ValidationError("config needs a [space] section")
    space_text = "\n".join(f"{k}: {v}" for k, v in config.items("space"))
    model_rel = config.get("generator", "model", fallback=None)
    if model_rel is None:
        raise ValidationError("config needs [generator] model = <path>")
    model_path = Path(args.config).parent / model_rel
    model_text = model_path.read_text()

    camp = config["campaign"] if config.has_section("campaign") else {}
    adapters = load_adapters(config)

    def opt(flag_value, key, fallback):
        if flag_value is not None:
            return flag_value
        return camp.get(key, fallback)

    kind = camp.get("kind", "graded")
    if args.favoured or args.base:
        kind = "discriminating"
    problem = get_problem(opt(None, "problem", "knapsack"))
    t_min = float(opt(args.t_min, "t_min", 10.0))
    t_max = float(opt(args.t_max, "t_max", 1200.0))
    types = _types(opt(args.types, "types", "sat,unsat"))

    if kind == "graded":
        solver_name = opt(args.solver, "solver", None)
        if solver_name is None:
            raise ValidationError("graded campaign needs a solver (config or --solver)")
        oracle_name = camp.get("oracle")
        policy: GradedPolicy | DiscriminatingPolicy = GradedPolicy(
            problem=problem,
            solver=_adapter(adapters, solver_name),
            t_min=t_min,
            t_max=t_max,
            types=types,
            oracle=_adapter(adapters, oracle_name) if oracle_name else None,
            oracle_budget=float(camp["oracle_budget"]) if "oracle_budget" in camp else None,
        )
    elif kind == "discriminating":
        favoured = opt(args.favoured, "favoured", None)
        base = opt(args.base, "base", None)
        if favoured is None or base is None:
            raise ValidationError("discriminating campaign needs favoured and base solvers")
        policy = DiscriminatingPolicy(
            problem=problem,
            favoured=_adapter(adapters, favoured),
            base=_adapter(adapters, base),
            t_min=t_min,
            t_max=t_max,
            types=types,
        )
    else:
        raise ValidationError(f"unknown campaign kind {kind!r}")

    tuner_config = TunerConfig(
        total_budget=int(opt(args.budget, "budget", 2000)),
        seed=int(opt(args.seed, "seed", 0)),
        workers=int(opt(args.workers, "workers", 1)),
    )
    limits = EvaluationLimits(
        translate_limit=float(camp.get("translate_limit", 300.0)),
        solve_limit=float(camp.get("solve_limit", 600.0)),
        mem_limit=parse_mem_limit(opt(args.mem_limit, "mem_limit", "8G")),
    )

    result = run_campaign(
        args.out,
        space_text,
        model_text,
        policy,
        tuner_config,
        limits,
        resume=args.resume,
    )
    report = result.report
    print(f"campaign: {kind} | evaluations: {report.evaluations_used} | iterations: {report.iterations}")
    for status, count in sorted(report.status_counts.items()):
        print(f"  {status}: {count}")
    if report.elites:
        best = report.elites[0]
        print(f"best configuration: {best.id} {dict(best.assignment)}")
    print(f"archive: {result.archive.root}")
    return 0


def cmd_combine(args: argparse.Namespace) -> int:
    archives = [CampaignArchive.open(p) for p in args.archives]
    combined = build_combined_set(archives, args.k, args.seed)
    combined.save(args.out)
    for label, ids in combined.selections.items():
        print(f"{label}: {len(ids)} instances")
    print(f"combined set written to {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    combined = CombinedSet.load(args.combined)
    adapters: dict[str, SolverAdapter] = {}
    if args.config:
        adapters = load_adapters(_read_config(args.config))
    solvers = [_adapter(adapters, name.strip()) for name in args.solvers.split(",")]
    problem_name = args.problem
    if problem_name is None:
        first = CampaignArchive.open(next(iter(combined.sources.values())))
        problem_name = first.meta["problem"]
    problem = get_problem(problem_name)
    limits = EvaluationLimits(mem_limit=parse_mem_limit(args.mem_limit))
    result = evaluate_combined(
        combined,
        solvers,
        problem,
        t_max=args.t_max,
        limits=limits,
        seed=args.seed,
        out_dir=args.out,
    )
    print("Borda ranking (complete scoring):")
    for name, total in result.ranking():
        flags = result.flagged.get(name, 0)
        note = f"  [flagged answers: {flags}]" if flags else ""
        print(f"  {name}: {total:.3f}{note}")
    if args.out:
        print(f"records and score tables written to {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    archive = CampaignArchive.open(args.archive)
    written = write_reports(archive)
    freq = status_frequencies(archive)
    total = sum(count for count, _ in freq.values())
    print(f"evaluations: {total}")
    for status, (count, fraction) in freq.items():
        print(f"  {status}: {count} ({fraction:.1%})")
    if archive.meta.get("campaign") == "discriminating":
        rep = discrimination_report(archive)
        print(f"discriminating instances: {rep.count}")
        if rep.favoured_scores:
            summary = rep.score_summary()
            print(
                "favoured-score distribution: "
                f"min {summary['min']:.3f}, median {summary['median']:.3f}, max {summary['max']:.3f}"
            )
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    archive = CampaignArchive.open(args.archive)
    policy_meta = archive.meta
    problem = get_problem(policy_meta["problem"])
    checked = 0
    failures = 0
    for entry in archive.evaluations():
        for name, raw in entry.get("records", {}).items():
            if raw.get("solution") is None or entry.get("instance_id") is None:
                continue
            from .runner import SolverRecord

            record = SolverRecord.from_jsonable(raw)
            values = archive.instance_values(entry["instance_id"])
            assert record.solution is not None
            try:
                feasible, objective = check_solution(problem, values, record.solution)
            except BenchgenError as err:
                feasible, objective = False, None
                print(f"{entry['instance_id']} {name}: check error: {err}")
            checked += 1
            ok = feasible and (
                problem.kind == "decision"
                or record.objective is None
                or record.status is not Status.SAT
                or objective == record.objective
            )
            if not ok:
                failures += 1
                print(f"{entry['instance_id']} {name}: FAILED re-verification")
    print(f"re-checked {checked} archived solutions, {failures} failures")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="benchgen",
        description="Generate graded or discriminating benchmark instances by tuning an instance generator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    tune = sub.add_parser("tune", help="run a tuning campaign")
    tune.add_argument("config", help="campaign config file (INI)")
    tune.add_argument("--out", required=True, help="campaign archive directory")
    tune.add_argument("--budget", type=int, default=None)
    tune.add_argument("--t-min", dest="t_min", type=float, default=None)
    tune.add_argument("--t-max", dest="t_max", type=float, default=None)
    tune.add_argument("--types", default=None, help="sat,unsat subset")
    tune.add_argument("--solver", default=None, help="graded campaign solver name")
    tune.add_argument("--favoured", default=None)
    tune.add_argument("--base", default=None)
    tune.add_argument("--seed", type=int, default=None)
    tune.add_argument("--workers", type=int, default=None)
    tune.add_argument("--mem-limit", dest="mem_limit", default=None, help="e.g. 8G")
    tune.add_argument("--resume", action="store_true", help="resume from an existing archive")
    tune.set_defaults(func=cmd_tune)

    combine = sub.add_parser("combine", help="sample graded archives into one set")
    combine.add_argument("archives", nargs="+")
    combine.add_argument("--k", type=int, default=50)
    combine.add_argument("--seed", type=int, default=0)
    combine.add_argument("--out", required=True, help="combined-set JSON path")
    combine.set_defaults(func=cmd_combine)

    evaluate = sub.add_parser("evaluate", help="run solvers on a combined set")
    evaluate.add_argument("combined", help="combined-set JSON path")
    evaluate.add_argument("--solvers", required=True, help="comma-separated solver names")
    evaluate.add_argument("--config", default=None, help="config file defining [solver.*] sections")
    evaluate.add_argument("--problem", default=None)
    evaluate.add_argument("--t-max", dest="t_max", type=float, default=1200.0)
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--mem-limit", dest="mem_limit", default="8G")
    evaluate.add_argument("--out", default=None, help="directory for records and score tables")
    evaluate.set_defaults(func=cmd_evaluate)

    report = sub.add_parser("report", help="export campaign tables")
    report.add_argument("archive")
    report.set_defaults(func=cmd_report)

    check = sub.add_parser("check", help="re-verify archived solutions")
    check.add_argument("archive")
    check.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BenchgenError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
