"""Experiment harness: seeded repeated runs, averaging, CSV and SVG output."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from .baselines import max_based_schedule, met_schedule, min_based_schedule, random_schedule
from .gwo import GwoParams, optimize
from .model import (
    CLOUD_CORES,
    DYNAMIC_CORES,
    STATIC_CORES,
    CostRates,
    Infeasible,
    VfcError,
    Weights,
    build_nodes,
)
from .plots import convergence_svg, cost_bars_svg
from .scheduler import SimConfig
from .workloads import RandomWorkloadSpec, generate_random, montage_workload, read_workload

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ALGORITHMS = ("gwo", "random", "min", "max", "met")
WEIGHT_PRESETS = ((0.5, 0.5), (0.25, 0.75), (0.75, 0.25))


class ConfigError(VfcError, ValueError):
    pass


@dataclass(frozen=True)
class GwoGrid:
    agents: tuple[int, ...] = (4, 5, 20, 50, 70)
    a0: tuple[float, ...] = (1.0, 2.0, 3.0)
    iterations: tuple[int, ...] = (50, 100, 150, 200)

    def __post_init__(self):
        if not (self.agents and self.a0 and self.iterations):
            raise ConfigError("GWO grid axes must be nonempty")
        for m, a, it in self.points():
            try:
                GwoParams(m, it, a)
            except ValueError as exc:
                raise ConfigError(f"GWO grid point ({m}, {a}, {it}): {exc}") from None

    def points(self) -> list[tuple[int, float, int]]:
        return [(m, a, it) for m in self.agents for a in self.a0 for it in self.iterations]


@dataclass(frozen=True)
class WorkloadSource:
    """Where tasks come from: ``random``, ``montage`` or ``file``."""

    kind: str = "random"
    n_tasks: tuple[int, ...] = (10, 50, 100)
    demand_range: tuple[int, int] = (1, 6)
    duration_range: tuple[float, float] = (50.0, 1000.0)
    montage_scale: Optional[int] = None
    montage_cores: Optional[tuple[int, ...]] = None
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind == "random":
            for n in self.n_tasks:
                RandomWorkloadSpec(n, self.demand_range, self.duration_range)
        if self.montage_scale is not None and self.montage_scale < 1:
            raise ConfigError(f"montage_scale must be >= 1, got {self.montage_scale}")

    def sizes(self) -> tuple[Optional[int], ...]:
        # montage and file workloads have a single, fixed size
        return self.n_tasks if self.kind == "random" else (None,)

    def build(self, n_tasks: Optional[int], seed: int):
        if self.kind == "random":
            return generate_random(RandomWorkloadSpec(n_tasks, self.demand_range,
                                                      self.duration_range, seed))
        if self.kind == "montage":
            return montage_workload(self.montage_scale, self.montage_cores)
        return read_workload(self.path)


@dataclass(frozen=True)
class ExperimentConfig:
    static_cores: tuple[int, ...] = STATIC_CORES
    dynamic_cores: tuple[int, ...] = DYNAMIC_CORES
    cloud_cores: tuple[int, ...] = CLOUD_CORES
    rates: CostRates = CostRates()
    weights: tuple[Weights, ...] = (Weights(),)
    algorithms: tuple[str, ...] = ALGORITHMS
    gwo: GwoGrid = GwoGrid()
    workload: WorkloadSource = WorkloadSource()
    repetitions: int = 5
    base_seed: int = 0
    sim: SimConfig = SimConfig()
    record_timing: bool = False
    jobs: int = 1
    static_extension: tuple[int, ...] = (3, 4)
    dynamic_extension: tuple[int, ...] = (3, 2)
    static_counts: tuple[int, ...] = (5, 7)
    dynamic_counts: tuple[int, ...] = (10, 12)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if not (self.static_cores or self.dynamic_cores or self.cloud_cores):
            raise ConfigError("node inventory is empty")
        if any(c < 1 for c in (*self.static_cores, *self.dynamic_cores, *self.cloud_cores)):
            raise ConfigError("every node needs at least one core")
        if not self.weights:
            raise ConfigError("at least one (alpha, beta) pair is required")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ConfigError(f"algorithms must be a nonempty subset of {ALGORITHMS}, got {bad}")
        if self.workload.kind not in ("random", "montage", "file"):
            raise ConfigError(f"unknown workload kind {self.workload.kind!r}")
        if self.workload.kind == "file" and not self.workload.path:
            raise ConfigError("workload kind 'file' needs a path")
        if self.workload.kind == "random" and not self.workload.n_tasks:
            raise ConfigError("random workloads need at least one n_tasks value")

    def nodes(self):
        return build_nodes(self.static_cores, self.dynamic_cores, self.cloud_cores)


# ---------------------------------------------------------------- config IO

def _tuple(kind):
    def conv(v):
        if not isinstance(v, (list, tuple)):
            raise TypeError("expected a list")
        return tuple(kind(x) for x in v)
    return conv


def _strict_int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"expected an integer, got {v!r}")
    return v


def _number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError(f"expected a number, got {v!r}")
    return float(v)


def _boolean(v):
    if not isinstance(v, bool):
        raise TypeError(f"expected true/false, got {v!r}")
    return v


def _weights(v):
    if v == "presets":
        return tuple(Weights(a, b) for a, b in WEIGHT_PRESETS)
    if isinstance(v, Mapping):
        v = [v]
    out = []
    for item in v:
        if isinstance(item, Mapping):
            out.append(_from_mapping(Weights, item, "weights"))
        else:
            a, b = item
            out.append(Weights(_number(a), _number(b)))
    return tuple(out)


def _optional(conv):
    return lambda v: None if v is None else conv(v)


_CONVERTERS = {
    ExperimentConfig: {
        "static_cores": _tuple(_strict_int), "dynamic_cores": _tuple(_strict_int),
        "cloud_cores": _tuple(_strict_int), "weights": _weights,
        "algorithms": _tuple(str), "repetitions": _strict_int, "base_seed": _strict_int,
        "record_timing": _boolean, "jobs": _strict_int,
        "static_extension": _tuple(_strict_int), "dynamic_extension": _tuple(_strict_int),
        "static_counts": _tuple(_strict_int), "dynamic_counts": _tuple(_strict_int),
    },
    GwoGrid: {"agents": _tuple(_strict_int), "a0": _tuple(_number),
              "iterations": _tuple(_strict_int)},
    WorkloadSource: {
        "kind": str, "n_tasks": _tuple(_strict_int), "demand_range": _tuple(_strict_int),
        "duration_range": _tuple(_number), "montage_scale": _optional(_strict_int),
        "montage_cores": _optional(_tuple(_strict_int)), "path": _optional(str),
    },
    CostRates: {k: _number for k in ("fs", "fd", "fc", "transfer_per_cloud_task")},
    Weights: {"alpha": _number, "beta": _number},
    SimConfig: {"preference_rule": str, "ideal_makespan_rule": str,
                "cloud_transfer_seconds": _number},
}
_NESTED = {"rates": CostRates, "gwo": GwoGrid, "workload": WorkloadSource, "sim": SimConfig}


def _from_mapping(cls, data: Mapping[str, Any], where: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected a table/object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {unknown}")
    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else key
        if cls is ExperimentConfig and key in _NESTED:
            kwargs[key] = _from_mapping(_NESTED[key], value, path)
            continue
        try:
            kwargs[key] = _CONVERTERS[cls][key](value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError, VfcError) as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from None


def config_from_mapping(data: Mapping[str, Any]) -> ExperimentConfig:
    return _from_mapping(ExperimentConfig, data, "")


def load_config(path) -> ExperimentConfig:
    """Read a TOML (``.toml``) or JSON config; its keys mirror ExperimentConfig."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(data)


def config_to_mapping(config: ExperimentConfig) -> dict:
    """Plain-data form of a config, accepted back by ``config_from_mapping``."""
    out = dataclasses.asdict(config)
    out["weights"] = [[w["alpha"], w["beta"]] for w in out["weights"]]
    for key in list(out["workload"]):
        if out["workload"][key] is None:
            del out["workload"][key]
    return out


# ---------------------------------------------------------------- rows

@dataclass(frozen=True)
class ResultRow:
    algo: str
    n_tasks: int
    seed: Optional[int]  # None on averaged rows
    fitness: float
    cost: float
    makespan: float
    wait_max: float
    wait_mean: float
    elapsed_s: float
    agents: Optional[int] = None
    a0: Optional[float] = None
    iterations: Optional[int] = None
    alpha: float = 0.5
    beta: float = 0.5
    n_static: int = len(STATIC_CORES)
    n_dynamic: int = len(DYNAMIC_CORES)
    averaged: bool = False

    def group_key(self) -> tuple:
        """Everything that identifies a cell except the seed."""
        return (self.alpha, self.beta, self.n_static, self.n_dynamic, self.n_tasks,
                ALGORITHMS.index(self.algo), self.agents or 0, self.a0 or 0.0,
                self.iterations or 0)

    def sort_key(self) -> tuple:
        return self.group_key() + (self.seed if self.seed is not None else -1,)


CSV_COLUMNS = ("algo", "n_tasks", "seed", "fitness", "cost", "makespan", "wait_max",
               "wait_mean", "elapsed_s", "agents", "a0", "iterations",
               "alpha", "beta", "n_static", "n_dynamic")
_METRICS = ("fitness", "cost", "makespan", "wait_max", "wait_mean", "elapsed_s")
_INT_COLUMNS = ("n_tasks", "agents", "iterations", "n_static", "n_dynamic")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows: Iterable[ResultRow], path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                cells = []
                for col in CSV_COLUMNS:
                    if col == "seed" and row.averaged:
                        cells.append("mean")
                    else:
                        cells.append(_fmt(getattr(row, col)))
                writer.writerow(cells)
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> list[ResultRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            kwargs: dict[str, Any] = {}
            for col in CSV_COLUMNS:
                text = rec[col]
                if col == "algo":
                    kwargs[col] = text
                elif col == "seed":
                    kwargs["averaged"] = text == "mean"
                    kwargs[col] = None if text == "mean" else int(text)
                elif text == "":
                    kwargs[col] = None
                elif col in _INT_COLUMNS:
                    kwargs[col] = int(text)
                else:
                    kwargs[col] = float(text)
            rows.append(ResultRow(**kwargs))
    return rows


def average_rows(rows: Sequence[ResultRow]) -> list[ResultRow]:
    """One averaged row per cell: the arithmetic mean over its seeds."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in sorted(rows, key=ResultRow.sort_key):
        groups.setdefault(row.group_key(), []).append(row)
    out = []
    for members in groups.values():
        means = {m: math.fsum(getattr(r, m) for r in members) / len(members) for m in _METRICS}
        out.append(dataclasses.replace(members[0], seed=None, averaged=True, **means))
    return out


# ---------------------------------------------------------------- cells

@dataclass(frozen=True)
class Cell:
    algo: str
    n_tasks: Optional[int]
    seed: int
    weights: Weights
    static_cores: tuple[int, ...]
    dynamic_cores: tuple[int, ...]
    gwo: Optional[tuple[int, float, int]] = None


@dataclass(frozen=True)
class CellOutcome:
    cell: Cell
    row: Optional[ResultRow]
    trace: tuple[float, ...] = ()
    a_values: tuple[float, ...] = ()
    error: str = ""


def run_cell(cell: Cell, config: ExperimentConfig) -> CellOutcome:
    nodes = build_nodes(cell.static_cores, cell.dynamic_cores, config.cloud_cores)
    workload = config.workload.build(cell.n_tasks, cell.seed)
    rates, weights, sim = config.rates, cell.weights, config.sim
    t0 = time.perf_counter()
    trace: tuple[float, ...] = ()
    a_values: tuple[float, ...] = ()
    try:
        if cell.algo == "gwo":
            agents, a0, iters = cell.gwo
            out = optimize(workload, nodes, rates, weights, GwoParams(agents, iters, a0, cell.seed), sim)
            result, trace, a_values = out.schedule, tuple(out.trace), tuple(out.a_values)
        elif cell.algo == "random":
            result = random_schedule(workload, nodes, rates, weights, cell.seed, sim)
        elif cell.algo == "min":
            result = min_based_schedule(workload, nodes, rates, weights, sim)
        elif cell.algo == "max":
            result = max_based_schedule(workload, nodes, rates, weights, sim)
        else:
            result = met_schedule(workload, nodes, rates, weights, sim)
    except Infeasible as exc:
        return CellOutcome(cell, None, error=str(exc))
    elapsed = time.perf_counter() - t0 if config.record_timing else 0.0
    m = result.metrics
    agents, a0, iters = cell.gwo if cell.gwo else (None, None, None)
    row = ResultRow(cell.algo, len(workload), cell.seed, m.fitness, m.cost, m.makespan,
                    m.wait_max, m.wait_mean, elapsed, agents, a0, iters,
                    weights.alpha, weights.beta, len(cell.static_cores), len(cell.dynamic_cores))
    return CellOutcome(cell, row, trace, a_values)


def _run_cell_args(args):
    return run_cell(*args)


def plan_cells(config: ExperimentConfig,
               inventories: Optional[Sequence[tuple[tuple[int, ...], tuple[int, ...]]]] = None
               ) -> list[Cell]:
    inventories = inventories or [(config.static_cores, config.dynamic_cores)]
    cells = []
    for static, dynamic in inventories:
        for w in config.weights:
            for n in config.workload.sizes():
                for algo in config.algorithms:
                    grid = config.gwo.points() if algo == "gwo" else [None]
                    for point in grid:
                        for rep in range(config.repetitions):
                            cells.append(Cell(algo, n, config.base_seed + rep, w,
                                              tuple(static), tuple(dynamic), point))
    return cells


def execute(cells: Sequence[Cell], config: ExperimentConfig, jobs: int = 1) -> list[CellOutcome]:
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_cell_args, [(c, config) for c in cells], chunksize=1))
    return [run_cell(c, config) for c in cells]


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    averaged: list[ResultRow]
    # (group key of the averaged row) -> (mean trace, a values)
    convergence: dict[tuple, tuple[list[float], list[float]]] = field(default_factory=dict)
    failures: list[tuple[Cell, str]] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)


def collect(outcomes: Sequence[CellOutcome]) -> ExperimentResult:
    rows = sorted((o.row for o in outcomes if o.row is not None), key=ResultRow.sort_key)
    failures = [(o.cell, o.error) for o in outcomes if o.row is None]
    traces: dict[tuple, list[tuple[tuple[float, ...], tuple[float, ...]]]] = {}
    for o in sorted((o for o in outcomes if o.row is not None and o.trace),
                    key=lambda o: o.row.sort_key()):
        traces.setdefault(o.row.group_key(), []).append((o.trace, o.a_values))
    convergence = {}
    for key, runs in traces.items():
        mean = [math.fsum(col) / len(col) for col in zip(*(t for t, _ in runs))]
        convergence[key] = (mean, list(runs[0][1]))
    return ExperimentResult(rows, average_rows(rows), convergence, failures)


def _cell_label(row: ResultRow) -> str:
    parts = [f"n{row.n_tasks}", f"ag{row.agents}", f"a{row.a0:g}", f"it{row.iterations}"]
    if (row.alpha, row.beta) != (0.5, 0.5):
        parts.append(f"w{row.alpha:g}-{row.beta:g}")
    if (row.n_static, row.n_dynamic) != (len(STATIC_CORES), len(DYNAMIC_CORES)):
        parts.append(f"s{row.n_static}d{row.n_dynamic}")
    return "_".join(parts)


def _algo_label(row: ResultRow) -> str:
    if row.algo == "gwo":
        return f"gwo({row.agents},{row.a0:g},{row.iterations})"
    return row.algo


def write_artifacts(result: ExperimentResult, out_dir, plots: bool = True) -> list[Path]:
    """raw.csv, averaged.csv, failures.csv (if any), convergence and cost SVGs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [emit_csv(result.rows, out / "raw.csv"), emit_csv(result.averaged, out / "averaged.csv")]
    if result.failures:
        path = out / "failures.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("algo", "n_tasks", "seed", "error"))
            for cell, error in result.failures:
                writer.writerow((cell.algo, _fmt(cell.n_tasks), cell.seed, error))
        files.append(path)
    if not plots:
        return files
    by_key = {r.group_key(): r for r in result.averaged}
    for key, (trace, _) in sorted(result.convergence.items()):
        row = by_key[key]
        label = _cell_label(row)
        files.append(convergence_svg(trace, out / f"convergence_{label}.svg", title=label))
    if result.averaged:
        groups: dict[tuple, dict[str, float]] = {}
        for r in result.averaged:
            scenario = (r.alpha, r.beta, r.n_static, r.n_dynamic, r.n_tasks)
            groups.setdefault(scenario, {})[_algo_label(r)] = r.cost
        algos = sorted({a for g in groups.values() for a in g},
                       key=lambda a: (ALGORITHMS.index(a.split("(")[0]), a))
        names, values = [], []
        for (alpha, beta, ns, nd, n), costs in sorted(groups.items()):
            name = f"N={n}"
            if len({k[:4] for k in groups}) > 1:
                name += f"\n({alpha:g},{beta:g}) {ns}s/{nd}d"
            names.append(name)
            values.append([costs.get(a, 0.0) for a in algos])
        files.append(cost_bars_svg(names, algos, values, out / "cost_comparison.svg",
                                   title="mean cost per algorithm"))
    return files


def check_workload(config: ExperimentConfig) -> None:
    """Fail early, as a config error, on a workload that cannot be built."""
    try:
        config.workload.build(config.workload.sizes()[0], config.base_seed)
    except (OSError, VfcError, ValueError) as exc:
        raise ConfigError(f"workload: {exc}") from None


def run_experiment(config: ExperimentConfig, out_dir=None, jobs: Optional[int] = None,
                   plots: bool = True) -> ExperimentResult:
    """Run every (inventory, weights, workload, algorithm, grid point, seed) cell.

    Seeds are ``base_seed + replicate``. Infeasible cells are collected in
    ``failures`` rather than aborting the sweep.
    """
    check_workload(config)
    outcomes = execute(plan_cells(config), config, jobs or config.jobs)
    result = collect(outcomes)
    if out_dir is not None:
        result.files = write_artifacts(result, out_dir, plots)
    return result


def inventory(base: Sequence[int], extension: Sequence[int], count: int) -> tuple[int, ...]:
    """First ``count`` cores of the base vector followed by the extension vector."""
    pool = tuple(base) + tuple(extension)
    if count < 0 or count > len(pool):
        raise ConfigError(f"cannot build {count} nodes from {len(base)} base and "
                          f"{len(extension)} extension entries")
    return pool[:count]


def sensitivity_fog_nodes(config: ExperimentConfig, out_dir=None, jobs: Optional[int] = None,
                          plots: bool = True) -> ExperimentResult:
    """Rerun the workload for every (static count, dynamic count) pair.

    A dynamic count of 0 removes the vehicular tier entirely.
    """
    pairs = [(inventory(config.static_cores, config.static_extension, s),
              inventory(config.dynamic_cores, config.dynamic_extension, d))
             for s in config.static_counts for d in config.dynamic_counts]
    check_workload(config)
    outcomes = execute(plan_cells(config, pairs), config, jobs or config.jobs)
    result = collect(outcomes)
    if out_dir is not None:
        result.files = write_artifacts(result, out_dir, plots)
    return result
