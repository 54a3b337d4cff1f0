"""``vfcsched`` command line: run, montage, sweep-gwo, compare, fog-nodes.

Exit status is 0 on success, 2 on a configuration error and 3 when some
cells were infeasible (the remaining cells still run and are written).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Optional, Sequence

from .experiments import (
    ALGORITHMS,
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    GwoGrid,
    WorkloadSource,
    load_config,
    run_experiment,
    sensitivity_fog_nodes,
)

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3

# the comparison runs use one GWO setting rather than the full grid
COMPARE_GRID = GwoGrid(agents=(70,), a0=(2.0,), iterations=(50,))
MONTAGE_DESK_SCALE = 100


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, default_out: str) -> None:
    p.add_argument("--config", help="TOML or JSON experiment config")
    p.add_argument("--jobs", type=int, default=None, help="parallel worker processes")
    p.add_argument("--out", default=default_out, help="output directory")
    p.add_argument("--algo", action="append", choices=ALGORITHMS,
                   help="algorithm to run (repeatable); overrides the config")
    p.add_argument("--repetitions", type=int, help="seeds per cell")
    p.add_argument("--seed", type=int, dest="base_seed", help="base seed")
    p.add_argument("--no-plots", action="store_true", help="write CSVs only")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vfcsched", description="Vehicular fog task-scheduling experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run the experiment described by a config file")
    _common(p, "results")

    p = sub.add_parser("montage", help="schedule the Montage workflow")
    _common(p, "results/montage")
    p.add_argument("--scale", type=int, default=MONTAGE_DESK_SCALE,
                   help=f"divide each job count by K, rounding up (default {MONTAGE_DESK_SCALE}; "
                        "1 runs all 10429 tasks)")

    p = sub.add_parser("sweep-gwo", help="GWO over the agents x a0 x iterations grid")
    _common(p, "results/sweep")
    p.add_argument("--n-tasks", type=int, action="append", help="workload size (repeatable)")

    p = sub.add_parser("compare", help="GWO against the four baselines")
    _common(p, "results/compare")
    p.add_argument("--n-tasks", type=int, action="append", help="workload size (repeatable)")

    p = sub.add_parser("fog-nodes", help="vary the number of static and dynamic fog nodes")
    _common(p, "results/fog-nodes")
    p.add_argument("--n-tasks", type=int, action="append", help="workload size (repeatable)")
    return parser


def _base_config(args) -> ExperimentConfig:
    return load_config(args.config) if args.config else ExperimentConfig()


def make_config(args) -> ExperimentConfig:
    cfg = _base_config(args)
    changes = {}
    if args.command == "run" and not args.config:
        raise ConfigError("run needs --config")
    if args.command == "montage":
        changes["workload"] = WorkloadSource(kind="montage", montage_scale=args.scale,
                                             montage_cores=cfg.workload.montage_cores)
        if not args.config:
            changes["gwo"] = COMPARE_GRID
    elif args.command == "sweep-gwo":
        changes["algorithms"] = ("gwo",)
        if not args.config:
            changes["workload"] = dataclasses.replace(cfg.workload, n_tasks=(50,))
    elif args.command in ("compare", "fog-nodes") and not args.config:
        changes["gwo"] = COMPARE_GRID
    n_tasks = getattr(args, "n_tasks", None)
    if n_tasks:
        changes["workload"] = dataclasses.replace(changes.get("workload", cfg.workload),
                                                  kind="random", n_tasks=tuple(n_tasks))
    if args.algo:
        changes["algorithms"] = tuple(dict.fromkeys(args.algo))
    if args.repetitions is not None:
        changes["repetitions"] = args.repetitions
    if args.base_seed is not None:
        changes["base_seed"] = args.base_seed
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    try:
        return dataclasses.replace(cfg, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _summary(result: ExperimentResult, out: Path) -> str:
    lines = [f"{'algo':<7} {'N':>6} {'agents':>6} {'a0':>4} {'iter':>5} {'alpha':>5} "
             f"{'S/D':>5} {'fitness':>8} {'cost':>12} {'makespan':>10}"]
    for r in result.averaged:
        gwo = (f"{r.agents:>6} {r.a0:>4g} {r.iterations:>5}" if r.algo == "gwo"
               else f"{'':>6} {'':>4} {'':>5}")
        lines.append(f"{r.algo:<7} {r.n_tasks:>6} {gwo} {r.alpha:>5g} "
                     f"{f'{r.n_static}/{r.n_dynamic}':>5} {r.fitness:8.4f} {r.cost:12.2f} "
                     f"{r.makespan:10.2f}")
    lines.append(f"wrote {len(result.files)} file(s) to {out}")
    for cell, error in result.failures:
        lines.append(f"infeasible: {cell.algo} n={cell.n_tasks} seed={cell.seed}: {error}")
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = make_config(args)
        out = Path(args.out)
        runner = sensitivity_fog_nodes if args.command == "fog-nodes" else run_experiment
        result = runner(config, out, plots=not args.no_plots)
    except ConfigError as exc:
        print(f"vfcsched: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(_summary(result, out))
    return EXIT_INFEASIBLE if result.failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
