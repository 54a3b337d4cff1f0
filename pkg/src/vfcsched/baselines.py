"""Comparison schedulers: random, min-based, max-based and MET."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import ComputeNode, CostRates, Task, Weights
from .scheduler import (
    ScheduleResult,
    SimConfig,
    max_demand_order,
    min_finish_pick,
    preferred_pick,
    run_schedule,
    tier_priority_pick,
)


def random_schedule(workload: Sequence[Task], nodes: Sequence[ComputeNode],
                    rates: CostRates = CostRates(), weights: Weights = Weights(),
                    seed: int = 0, config: SimConfig = SimConfig()) -> ScheduleResult:
    """Tasks in input order, each sent to a node drawn uniformly among those
    with enough cores. Tasks no single node can hold are split.

    Draws come from the stream ``(seed, 2)`` so they stay independent of a
    workload generated from the same integer seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2,)))
    preference = []
    for task in workload:
        fits = [i for i, n in enumerate(nodes) if n.cores >= task.cores]
        preference.append(int(fits[rng.integers(len(fits))]) if fits else None)
    forced = SimConfig("first", config.ideal_makespan_rule, config.cloud_transfer_seconds)
    return run_schedule(workload, nodes, range(len(workload)),
                        preferred_pick(preference, forced), rates, weights, forced)


def min_based_schedule(workload: Sequence[Task], nodes: Sequence[ComputeNode],
                       rates: CostRates = CostRates(), weights: Weights = Weights(),
                       config: SimConfig = SimConfig()) -> ScheduleResult:
    order = sorted(range(len(workload)), key=lambda i: (workload[i].cores, workload[i].id))
    return run_schedule(workload, nodes, order,
                        lambda pos, task, tls: tier_priority_pick(task, tls, config),
                        rates, weights, config)


def max_based_schedule(workload: Sequence[Task], nodes: Sequence[ComputeNode],
                       rates: CostRates = CostRates(), weights: Weights = Weights(),
                       config: SimConfig = SimConfig()) -> ScheduleResult:
    return run_schedule(workload, nodes, max_demand_order(workload),
                        lambda pos, task, tls: tier_priority_pick(task, tls, config),
                        rates, weights, config)


def met_schedule(workload: Sequence[Task], nodes: Sequence[ComputeNode],
                 rates: CostRates = CostRates(), weights: Weights = Weights(),
                 config: SimConfig = SimConfig()) -> ScheduleResult:
    """Minimum execution time: shortest tasks first, each on the node where it
    finishes earliest given current reservations."""
    order = sorted(range(len(workload)), key=lambda i: (workload[i].duration, workload[i].id))
    return run_schedule(workload, nodes, order,
                        lambda pos, task, tls: min_finish_pick(task, tls, config),
                        rates, weights, config)
