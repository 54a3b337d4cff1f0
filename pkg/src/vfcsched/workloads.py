"""Workload generation and the JSON workload file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import Task, VfcError


class BadRange(VfcError, ValueError):
    pass


class ParseError(VfcError, ValueError):
    pass


@dataclass(frozen=True)
class RandomWorkloadSpec:
    n_tasks: int
    demand_range: tuple[int, int] = (1, 6)
    duration_range: tuple[float, float] = (50.0, 1000.0)
    seed: int = 0

    def __post_init__(self):
        if self.n_tasks < 1:
            raise BadRange(f"n_tasks must be >= 1, got {self.n_tasks}")
        lo, hi = self.demand_range
        if not 1 <= lo <= hi:
            raise BadRange(f"demand_range must satisfy 1 <= min <= max, got {self.demand_range}")
        lo, hi = self.duration_range
        if not 0 < lo <= hi:
            raise BadRange(f"duration_range must satisfy 0 < min <= max, got {self.duration_range}")


def generate_random(spec: RandomWorkloadSpec) -> list[Task]:
    """Core demand uniform over the integer range, duration uniform over the
    real range, both seeded by ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    cores = rng.integers(spec.demand_range[0], spec.demand_range[1], size=spec.n_tasks,
                         endpoint=True)
    lo, hi = spec.duration_range
    durations = rng.uniform(lo, hi, size=spec.n_tasks) if hi > lo else np.full(spec.n_tasks, lo)
    return [Task(i, int(c), float(d)) for i, (c, d) in enumerate(zip(cores, durations))]


# (job, count, execution time in seconds)
MONTAGE_PROFILE = (
    ("mProjectPP", 2102, 1.73),
    ("mDiffFit", 6172, 0.66),
    ("mConcatFit", 1, 143.26),
    ("mBgModel", 1, 384.49),
    ("mBackground", 2102, 1.72),
    ("mImgTbl", 17, 2.78),
    ("mAdd", 17, 282.37),
    ("mShrink", 16, 66.10),
    ("mJPEG", 1, 0.64),
)


def montage_workload(scale: Optional[int] = None,
                     cores: Optional[Sequence[int]] = None) -> list[Task]:
    """Expand the Montage job profile into independent tasks.

    With ``scale=k`` each job count becomes ``ceil(count / k)``. ``cores``
    overrides the per-job core demand (one core each by default).
    """
    if scale is not None and scale < 1:
        raise BadRange(f"scale must be >= 1, got {scale}")
    if cores is None:
        cores = [1] * len(MONTAGE_PROFILE)
    if len(cores) != len(MONTAGE_PROFILE):
        raise BadRange(f"expected {len(MONTAGE_PROFILE)} core overrides, got {len(cores)}")
    tasks = []
    for (_, count, duration), r in zip(MONTAGE_PROFILE, cores):
        if scale is not None:
            count = math.ceil(count / scale)
        for _ in range(count):
            tasks.append(Task(len(tasks), int(r), duration))
    return tasks


_FIELDS = {"id": int, "cores": int, "duration_s": float}


def write_workload(workload: Sequence[Task], path) -> None:
    records = [{"id": t.id, "cores": t.cores, "duration_s": t.duration} for t in workload]
    # one record per line keeps the file diffable
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('{"tasks": [\n')
        fh.write(",\n".join(json.dumps(r) for r in records))
        fh.write("\n]}\n")


def read_workload(path) -> list[Task]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or set(doc) != {"tasks"} or not isinstance(doc["tasks"], list):
        raise ParseError(f"{path}: expected an object with a single 'tasks' list")
    tasks = []
    seen = set()
    for n, rec in enumerate(doc["tasks"]):
        where = f"{path}: task record {n}"
        if not isinstance(rec, dict):
            raise ParseError(f"{where}: expected an object")
        unknown = set(rec) - set(_FIELDS)
        if unknown:
            raise ParseError(f"{where}: unknown field(s) {sorted(unknown)}")
        for name, kind in _FIELDS.items():
            if name not in rec:
                raise ParseError(f"{where}: missing field '{name}'")
            value = rec[name]
            ok = isinstance(value, int) if kind is int else isinstance(value, (int, float))
            if isinstance(value, bool) or not ok:
                raise ParseError(f"{where}: field '{name}' must be {kind.__name__}, got {value!r}")
        if rec["id"] in seen:
            raise ParseError(f"{where}: duplicate id {rec['id']}")
        seen.add(rec["id"])
        try:
            tasks.append(Task(rec["id"], rec["cores"], float(rec["duration_s"])))
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from None
    return tasks
