"""Task scheduling over static fog, vehicular fog and cloud nodes with a
Grey Wolf Optimizer and four baseline schedulers."""

from .baselines import max_based_schedule, met_schedule, min_based_schedule, random_schedule
from .gwo import GwoParams, optimize
from .model import ComputeNode, CostRates, Task, Tier, Weights, build_nodes
from .scheduler import SimConfig, simulate
from .workloads import RandomWorkloadSpec, generate_random, montage_workload

__all__ = [
    "ComputeNode", "CostRates", "GwoParams", "RandomWorkloadSpec", "SimConfig", "Task",
    "Tier", "Weights", "build_nodes", "generate_random", "max_based_schedule",
    "met_schedule", "min_based_schedule", "montage_workload", "optimize",
    "random_schedule", "simulate",
]
