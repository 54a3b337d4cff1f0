"""Capacity-queueing list scheduler.

Every task is released at t=0. Tasks are placed one at a time in a fixed
order; each placement reserves cores on a node timeline for the task's
duration, at the earliest instant the cores are free. Node choice follows tier
priority (static, then dynamic, then cloud) unless an optimizer supplies a
preferred node.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .model import (
    Allocation,
    Assignment,
    ComputeNode,
    CostRates,
    Infeasible,
    ScheduleMetrics,
    Task,
    TaskTiming,
    Tier,
    VfcError,
    Weights,
    fitness,
    ideal_cost,
    ideal_makespan,
    processing_time,
    total_cost,
)


class NeverFits(VfcError):
    pass


PREFERENCE_RULES = ("first", "no_later")


@dataclass(frozen=True)
class SimConfig:
    """Knobs of the simulation that are interpretation choices.

    preference_rule
        ``"first"``: a preferred node that has enough cores always gets the
        task, at its earliest slot there. ``"no_later"``: the preferred node
        wins only if it starts the task no later than the tier-priority pick.
    ideal_makespan_rule
        ``"min"`` or ``"max"`` over task durations, the makespan reference in
        the fitness.
    cloud_transfer_seconds
        Extra occupancy added to tasks executed on cloud nodes.
    """

    preference_rule: str = "first"
    ideal_makespan_rule: str = "min"
    cloud_transfer_seconds: float = 0.0

    def __post_init__(self):
        if self.preference_rule not in PREFERENCE_RULES:
            raise ValueError(f"preference_rule must be one of {PREFERENCE_RULES}")
        if self.ideal_makespan_rule not in ("min", "max"):
            raise ValueError("ideal_makespan_rule must be 'min' or 'max'")
        if self.cloud_transfer_seconds < 0:
            raise ValueError("cloud_transfer_seconds must be >= 0")


class NodeTimeline:
    """Free-core profile of one node as a step function over time.

    ``times[k]`` starts a segment with ``free[k]`` idle cores; the last segment
    runs to infinity and is always fully idle.
    """

    __slots__ = ("node", "times", "free", "reservations")

    def __init__(self, node: ComputeNode):
        self.node = node
        self.times = [0.0]
        self.free = [node.cores]
        self.reservations: list[tuple[float, float, int]] = []

    def free_at(self, t: float) -> int:
        return self.free[bisect_right(self.times, t) - 1]

    def min_free(self, start: float, duration: float) -> int:
        """Fewest idle cores anywhere in ``[start, start + duration)``."""
        end = start + duration
        k = bisect_right(self.times, start) - 1
        lowest = self.free[k]
        for j in range(k + 1, len(self.times)):
            if self.times[j] >= end:
                break
            lowest = min(lowest, self.free[j])
        return lowest

    def earliest_slot(self, cores: int, duration: float) -> float:
        """Smallest t >= 0 with ``cores`` idle throughout ``[t, t + duration)``."""
        if cores > self.node.cores:
            raise NeverFits(f"{cores} cores requested on node {self.node.id} "
                            f"with {self.node.cores}")
        times, free = self.times, self.free
        n = len(times)
        k = 0
        while True:
            while free[k] < cores:
                k += 1
            start = times[k]
            end = start + duration
            j = k + 1
            while j < n and times[j] < end:
                if free[j] < cores:
                    break
                j += 1
            else:
                return start
            k = j

    def _split(self, t: float) -> int:
        k = bisect_right(self.times, t) - 1
        if self.times[k] == t:
            return k
        self.times.insert(k + 1, t)
        self.free.insert(k + 1, self.free[k])
        return k + 1

    def reserve(self, start: float, duration: float, cores: int) -> None:
        end = start + duration
        i = self._split(start)
        j = self._split(end)
        for k in range(i, j):
            self.free[k] -= cores
            if self.free[k] < 0:
                raise RuntimeError(f"over-reserved node {self.node.id} at t={self.times[k]}")
        self.reservations.append((start, end, cores))


@dataclass(frozen=True)
class PlacedTask:
    task: Task
    allocations: tuple[Allocation, ...]
    start: float
    timing: TaskTiming

    @property
    def finish(self) -> float:
        return self.timing.finish


@dataclass(frozen=True)
class ScheduleResult:
    placed: tuple[PlacedTask, ...]  # processing order
    metrics: ScheduleMetrics

    @property
    def assignment(self) -> Assignment:
        return Assignment({p.task.id: p.allocations for p in self.placed})

    @property
    def order(self) -> list[int]:
        return [p.task.id for p in self.placed]

    def by_task(self) -> dict[int, PlacedTask]:
        return {p.task.id: p for p in self.placed}


# (start, [(timeline, cores)]) for one task
Choice = tuple[float, list[tuple[NodeTimeline, int]]]
Picker = Callable[[int, Task, list[NodeTimeline]], Choice]


def occupancy(node: ComputeNode, task: Task, config: SimConfig) -> float:
    if node.tier is Tier.CLOUD:
        return task.duration + config.cloud_transfer_seconds
    return task.duration


def tier_priority_pick(task: Task, timelines: Sequence[NodeTimeline], config: SimConfig) -> Choice:
    """Earliest start over all nodes able to hold the task; ties go to the
    higher-priority tier, then to the lowest node id."""
    best = None
    for tl in timelines:
        if tl.node.cores < task.cores:
            continue
        start = tl.earliest_slot(task.cores, occupancy(tl.node, task, config))
        key = (start, tl.node.tier, tl.node.id)
        if best is None or key < best[0]:
            best = (key, tl)
    if best is None:
        return split_pick(task, timelines, config)
    return best[0][0], [(best[1], task.cores)]


def min_finish_pick(task: Task, timelines: Sequence[NodeTimeline], config: SimConfig) -> Choice:
    """Node with the earliest finish time regardless of tier; ties to lowest id."""
    best = None
    for tl in timelines:
        if tl.node.cores < task.cores:
            continue
        dur = occupancy(tl.node, task, config)
        start = tl.earliest_slot(task.cores, dur)
        key = (start + dur, tl.node.id)
        if best is None or key < best[0]:
            best = (key, start, tl)
    if best is None:
        return split_pick(task, timelines, config)
    return best[1], [(best[2], task.cores)]


def split_pick(task: Task, timelines: Sequence[NodeTimeline], config: SimConfig) -> Choice:
    """Spread a task that no single node can hold across several nodes.

    Scans candidate start times in increasing order and fills cores greedily
    in tier-priority order; all parts start together.
    """
    if sum(tl.node.cores for tl in timelines) < task.cores:
        raise Infeasible(f"task {task.id} needs {task.cores} cores, more than all nodes combined")
    ordered = sorted(timelines, key=lambda tl: (tl.node.tier, tl.node.id))
    candidates = sorted({t for tl in timelines for t in tl.times})
    for t in candidates:
        remaining = task.cores
        parts = []
        for tl in ordered:
            avail = tl.min_free(t, occupancy(tl.node, task, config))
            if avail <= 0:
                continue
            take = min(avail, remaining)
            parts.append((tl, take))
            remaining -= take
            if remaining == 0:
                return t, parts
    raise Infeasible(f"task {task.id} could not be split across nodes")  # pragma: no cover


def preferred_pick(preference: Sequence[Optional[int]], config: SimConfig,
                   fallback=tier_priority_pick) -> Picker:
    def pick(pos: int, task: Task, timelines: list[NodeTimeline]) -> Choice:
        idx = preference[pos] if preference is not None else None
        if idx is not None:
            tl = timelines[idx]
            if tl.node.cores >= task.cores:
                start = tl.earliest_slot(task.cores, occupancy(tl.node, task, config))
                if config.preference_rule == "first":
                    return start, [(tl, task.cores)]
                other = fallback(task, timelines, config)
                if start <= other[0]:
                    return start, [(tl, task.cores)]
                return other
        return fallback(task, timelines, config)

    return pick


def run_schedule(workload: Sequence[Task], nodes: Sequence[ComputeNode], order: Sequence[int],
                 pick: Picker, rates: CostRates, weights: Weights,
                 config: SimConfig = SimConfig()) -> ScheduleResult:
    """Place ``workload[i]`` for i in ``order`` using ``pick`` and score the result."""
    if not nodes:
        raise ValueError("no compute nodes")
    if not workload:
        raise ValueError("empty workload")
    timelines = [NodeTimeline(n) for n in nodes]
    placed = []
    for pos in order:
        task = workload[pos]
        start, parts = pick(pos, task, timelines)
        allocations = []
        for tl, cores in parts:
            tl.reserve(start, occupancy(tl.node, task, config), cores)
            allocations.append(Allocation(tl.node, cores))
        allocations = tuple(allocations)
        pt = processing_time(task, allocations, config.cloud_transfer_seconds)
        placed.append(PlacedTask(task, allocations, start, TaskTiming(wait=start, processing=pt)))
    return score(workload, placed, rates, weights, config)


def score(workload: Sequence[Task], placed: list[PlacedTask], rates: CostRates,
          weights: Weights, config: SimConfig = SimConfig()) -> ScheduleResult:
    waits = [p.timing.wait for p in placed]
    makespan = max(p.timing.finish for p in placed)
    assignment = Assignment({p.task.id: p.allocations for p in placed})
    cost = total_cost(workload, assignment, rates)
    fit = fitness(cost, makespan, ideal_cost(workload, rates),
                  ideal_makespan(workload, config.ideal_makespan_rule), weights)
    metrics = ScheduleMetrics(
        makespan=makespan,
        wait_max=max(waits),
        wait_mean=math.fsum(waits) / len(waits),
        cost=cost,
        fitness=fit,
    )
    return ScheduleResult(tuple(placed), metrics)


def max_demand_order(workload: Sequence[Task]) -> list[int]:
    return sorted(range(len(workload)), key=lambda i: (-workload[i].cores, workload[i].id))


def simulate(workload: Sequence[Task], nodes: Sequence[ComputeNode],
             preference: Optional[Sequence[Optional[int]]] = None,
             rates: CostRates = CostRates(), weights: Weights = Weights(),
             config: SimConfig = SimConfig()) -> ScheduleResult:
    """Schedule tasks largest core demand first (ties by id).

    ``preference`` holds, per workload position, an index into ``nodes`` (or
    None). Preferred nodes too small for the task fall back to tier priority.
    """
    return run_schedule(workload, nodes, max_demand_order(workload),
                        preferred_pick(preference, config), rates, weights, config)
