"""``cjm`` command line: scenario runs, stress, and benchmarks.

Exit code 0 means every check passed; anything else is a divergence, audit
failure, or invariant breach, with details on stdout.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import List

from .bench import run_bench
from .runner import run_scenario, run_scenario_exhaustive
from .scenario import ScenarioError, load_scenario
from .stress import run_stress

STRATEGIES = ("chain", "external")


def _scenario_paths(target: str) -> List[Path]:
    p = Path(target)
    if p.is_dir():
        paths = sorted(p.glob("*.scn"))
        if not paths:
            raise SystemExit(f"no .scn files under {p}")
        return paths
    if not p.exists():
        raise SystemExit(f"no such scenario: {p}")
    return [p]


def corpus_dir() -> Path:
    return Path(__file__).resolve().parent / "corpus"


def cmd_run(args: argparse.Namespace) -> int:
    target = args.scenario if args.scenario != "corpus" else str(corpus_dir())
    strategies = STRATEGIES if args.strategy == "both" else (args.strategy,)
    failures = 0
    for path in _scenario_paths(target):
        try:
            scenario = load_scenario(path)
        except ScenarioError as exc:
            print(f"parse error: {exc}")
            failures += 1
            continue
        for strategy in strategies:
            if args.exhaustive:
                try:
                    report = run_scenario_exhaustive(
                        scenario,
                        strategy=strategy,
                        spin=args.spin,
                        seed=args.seed,
                        settle_ms=args.settle_ms,
                    )
                except ValueError as exc:
                    print(f"scenario {scenario.name}[{strategy}]: SKIP ({exc})")
                    continue
            else:
                report = run_scenario(
                    scenario, strategy=strategy, spin=args.spin, seed=args.seed
                )
            print(report.render())
            if not report.passed:
                failures += 1
    return 1 if failures else 0


def cmd_stress(args: argparse.Namespace) -> int:
    strategies = STRATEGIES if args.strategy == "both" else (args.strategy,)
    reports = []
    failures = 0
    for strategy in strategies:
        report = run_stress(
            threads=args.threads,
            monitors=args.monitors,
            iterations=args.iters,
            seed=args.seed,
            mix=args.mix,
            strategy=strategy,
            spin=args.spin,
            nest_depth=args.nest_depth,
            wait_timeout_ms=None if args.wait_timeout_ms == 0 else args.wait_timeout_ms,
        )
        print(report.render())
        reports.append(report)
        if not report.passed:
            failures += 1
    if args.csv:
        _write_stress_csv(reports, args.csv)
        print(f"wrote {args.csv}")
    if args.plot:
        from .figures import render_stress_figures

        for path in render_stress_figures(reports, args.plot):
            print(f"wrote {path}")
    return 1 if failures else 0


STRESS_CSV_COLUMNS = [
    "strategy", "threads", "monitors", "iters", "seed", "elapsed_s",
    "ops_per_sec", "parks", "unparks", "tail_swaps", "handoffs",
    "instant_acquires", "usurps", "allocations", "grants",
    "guard_acquisitions", "passed",
]


def _write_stress_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=STRESS_CSV_COLUMNS)
        writer.writeheader()
        for r in reports:
            c = r.counters
            writer.writerow({
                "strategy": r.strategy,
                "threads": r.threads,
                "monitors": r.monitors,
                "iters": r.iterations,
                "seed": r.seed,
                "elapsed_s": f"{r.elapsed:.6f}",
                "ops_per_sec": f"{r.ops_per_sec:.1f}",
                "parks": c["parks"],
                "unparks": c["unparks"],
                "tail_swaps": c["swaps"],
                "handoffs": c["handoffs"],
                "instant_acquires": c["instant_acquires"],
                "usurps": c["usurps"],
                "allocations": c["allocations"],
                "grants": c["grants"],
                "guard_acquisitions": c["guard_acquisitions"],
                "passed": int(r.passed),
            })


def cmd_bench(args: argparse.Namespace) -> int:
    report = run_bench(
        max_threads=args.max_threads,
        baseline=args.baseline,
        uncontended_iters=args.uncontended_iters,
        contended_iters=args.contended_iters,
        spin=args.spin,
    )
    print(report.render())
    if args.csv:
        report.write_csv(args.csv)
        print(f"wrote {args.csv}")
    if args.plot:
        from .figures import render_bench_figures

        for path in render_bench_figures(report, args.plot):
            print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cjm",
        description="Compact-monitor harness: scenarios, stress, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenario file(s) against the oracle")
    p_run.add_argument("scenario", help=".scn file, a directory of them, or 'corpus'")
    p_run.add_argument("--strategy", choices=("chain", "external", "both"),
                       default="chain")
    p_run.add_argument("--spin", type=int, default=0, help="spin budget before parking")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--exhaustive", action="store_true",
                       help="enumerate barrier release orders (small scenarios)")
    p_run.add_argument("--settle-ms", type=float, default=25.0,
                       help="exhaustive mode: blocked-thread settle window")
    p_run.set_defaults(func=cmd_run)

    p_stress = sub.add_parser("stress", help="randomized invariant-checked workload")
    p_stress.add_argument("--threads", type=int, default=4)
    p_stress.add_argument("--monitors", type=int, default=1)
    p_stress.add_argument("--iters", type=int, default=10000)
    p_stress.add_argument("--seed", type=int, default=1)
    p_stress.add_argument("--mix", default="lock:1",
                          help="e.g. lock:8,wait:1,notify:1,hash:2")
    p_stress.add_argument("--strategy", choices=("chain", "external", "both"),
                          default="chain")
    p_stress.add_argument("--spin", type=int, default=0)
    p_stress.add_argument("--nest-depth", type=int, default=1)
    p_stress.add_argument("--wait-timeout-ms", type=float, default=50.0,
                          help="0 means untimed waits")
    p_stress.add_argument("--csv", help="write a stress CSV here")
    p_stress.add_argument("--plot", help="render figures into this directory")
    p_stress.set_defaults(func=cmd_stress)

    p_bench = sub.add_parser("bench", help="latency/throughput vs plain queue lock")
    p_bench.add_argument("--max-threads", type=int, default=8)
    p_bench.add_argument("--baseline", choices=("mcs", "none"), default="mcs")
    p_bench.add_argument("--uncontended-iters", type=int, default=50000)
    p_bench.add_argument("--contended-iters", type=int, default=5000)
    p_bench.add_argument("--spin", type=int, default=0)
    p_bench.add_argument("--csv", help="write the bench CSV here")
    p_bench.add_argument("--plot", help="render figures into this directory")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
