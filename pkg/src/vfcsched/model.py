"""Core data model and objective functions.

Tasks occupy a number of cores on one or more compute nodes for a fixed
duration. A schedule is scored on monetary cost and makespan, combined into a
normalized weighted fitness that is maximized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class VfcError(Exception):
    """Base class for all errors raised by this package."""


class UnassignedTask(VfcError):
    pass


class TierMismatch(VfcError):
    pass


class EmptyWorkload(VfcError):
    pass


class DivisionByZero(VfcError, ZeroDivisionError):
    pass


class Infeasible(VfcError):
    pass


class Tier(enum.IntEnum):
    """Node tier; the integer value is also the scheduling priority."""

    STATIC = 0
    DYNAMIC = 1
    CLOUD = 2

    @property
    def is_fog(self) -> bool:
        return self is not Tier.CLOUD


@dataclass(frozen=True)
class Task:
    id: int
    cores: int
    duration: float

    def __post_init__(self):
        if self.cores < 1:
            raise ValueError(f"task {self.id}: cores must be >= 1, got {self.cores}")
        if not self.duration > 0:
            raise ValueError(f"task {self.id}: duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class ComputeNode:
    id: int
    tier: Tier
    cores: int

    def __post_init__(self):
        if self.cores < 1:
            raise ValueError(f"node {self.id}: cores must be >= 1, got {self.cores}")


@dataclass(frozen=True)
class CostRates:
    """Per core-second prices for each tier plus a flat charge per cloud task."""

    fs: float = 1.0
    fd: float = 0.5
    fc: float = 2.0
    transfer_per_cloud_task: float = 100.0

    def __post_init__(self):
        for name in ("fs", "fd", "fc", "transfer_per_cloud_task"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be >= 0")

    def rate(self, tier: Tier) -> float:
        return (self.fs, self.fd, self.fc)[tier]

    def scaled(self, k: float) -> "CostRates":
        return CostRates(self.fs * k, self.fd * k, self.fc * k, self.transfer_per_cloud_task * k)


@dataclass(frozen=True)
class Weights:
    alpha: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ValueError("alpha and beta must lie in (0, 1)")
        if not math.isclose(self.alpha + self.beta, 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")


@dataclass(frozen=True)
class Allocation:
    node: ComputeNode
    cores: int

    def __post_init__(self):
        if self.cores < 1:
            raise ValueError("allocated cores must be >= 1")


Row = Sequence[Allocation]


@dataclass(frozen=True)
class Assignment:
    """Which nodes serve each task (task id -> allocations)."""

    entries: Mapping[int, tuple[Allocation, ...]] = field(default_factory=dict)

    def row(self, task_id: int) -> tuple[Allocation, ...]:
        return tuple(self.entries.get(task_id, ()))


@dataclass(frozen=True)
class TaskTiming:
    wait: float
    processing: float

    @property
    def finish(self) -> float:
        return self.wait + self.processing


@dataclass(frozen=True)
class ScheduleMetrics:
    makespan: float
    wait_max: float
    wait_mean: float
    cost: float
    fitness: float


def processing_time(task: Task, row: Row, cloud_transfer_seconds: float = 0.0) -> float:
    """Occupancy time of a task: its duration once it is assigned anywhere.

    ``cloud_transfer_seconds`` is added when any allocation is on the cloud;
    it defaults to zero.
    """
    if not row:
        raise UnassignedTask(f"task {task.id} has no assigned node")
    pt = task.duration
    if cloud_transfer_seconds and any(a.node.tier is Tier.CLOUD for a in row):
        pt += cloud_transfer_seconds
    return pt


def fog_cost(task: Task, row: Row, rates: CostRates) -> float:
    total = 0.0
    for a in row:
        if not a.node.tier.is_fog:
            raise TierMismatch(f"node {a.node.id} is a cloud node")
        total += a.cores * task.duration * rates.rate(a.node.tier)
    return total


def cloud_cost(task: Task, row: Row, rates: CostRates) -> float:
    if not row:
        return 0.0
    total = 0.0
    for a in row:
        if a.node.tier is not Tier.CLOUD:
            raise TierMismatch(f"node {a.node.id} is not a cloud node")
        total += a.cores * task.duration * rates.fc
    return total + rates.transfer_per_cloud_task


def task_cost(task: Task, row: Row, rates: CostRates) -> float:
    if not row:
        raise UnassignedTask(f"task {task.id} has no assigned node")
    fog = [a for a in row if a.node.tier.is_fog]
    cloud = [a for a in row if not a.node.tier.is_fog]
    return fog_cost(task, fog, rates) + cloud_cost(task, cloud, rates)


def total_cost(workload: Sequence[Task], assignment: Assignment, rates: CostRates) -> float:
    return math.fsum(task_cost(t, assignment.row(t.id), rates) for t in workload)


def ideal_cost(workload: Iterable[Task], rates: CostRates) -> float:
    """Cost of running every task on the cheapest fog tier with no transfer."""
    cheapest = min(rates.fs, rates.fd)
    return math.fsum(t.cores * t.duration * cheapest for t in workload)


def ideal_makespan(workload: Sequence[Task], rule: str = "min") -> float:
    """Zero-wait reference makespan; ``rule`` picks the min or max duration."""
    if not workload:
        raise EmptyWorkload("ideal makespan of an empty workload is undefined")
    durations = [t.duration for t in workload]
    if rule == "min":
        return min(durations)
    if rule == "max":
        return max(durations)
    raise ValueError(f"unknown ideal makespan rule {rule!r}")


def fitness(cost: float, makespan: float, best_cost: float, best_makespan: float,
            weights: Weights) -> float:
    """Normalized weighted sum of the cost and makespan ratios (maximized)."""
    if cost <= 0 or makespan <= 0:
        raise DivisionByZero("cost and makespan must be positive")
    return weights.alpha * best_cost / cost + weights.beta * best_makespan / makespan


def validate(assignment: Assignment, nodes: Sequence[ComputeNode],
             workload: Sequence[Task]) -> list[str]:
    """List constraint violations; an empty list means the assignment is valid."""
    problems = []
    n = len(workload)
    known = {node.id for node in nodes}
    served: dict[int, int] = {}
    for task in workload:
        if not assignment.row(task.id):
            problems.append(f"task {task.id}: no assigned node")
    for task_id, row in sorted(assignment.entries.items()):
        for node_id in sorted({a.node.id for a in row}):
            if node_id not in known:
                problems.append(f"task {task_id}: unknown node {node_id}")
            served[node_id] = served.get(node_id, 0) + 1
    for node_id, count in sorted(served.items()):
        if count > n:
            problems.append(f"node {node_id}: serves {count} tasks, more than N={n}")
    return problems


STATIC_CORES = (2, 5, 6, 1, 2)
DYNAMIC_CORES = (5, 2, 3, 4, 2, 4, 3, 5, 1, 4)
CLOUD_CORES = (20, 12)


def build_nodes(static: Sequence[int] = STATIC_CORES, dynamic: Sequence[int] = DYNAMIC_CORES,
                cloud: Sequence[int] = CLOUD_CORES) -> list[ComputeNode]:
    """Node inventory from per-tier core vectors; ids run static, dynamic, cloud."""
    nodes = []
    for tier, cores in ((Tier.STATIC, static), (Tier.DYNAMIC, dynamic), (Tier.CLOUD, cloud)):
        for c in cores:
            nodes.append(ComputeNode(len(nodes), tier, int(c)))
    return nodes
