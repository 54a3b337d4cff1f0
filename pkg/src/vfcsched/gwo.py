"""Grey Wolf Optimizer over task-to-node preferences.

Each wolf is a real vector with one coordinate per task; rounding a
coordinate names the task's preferred node. The scheduler turns the
preferences into a timed schedule whose fitness the pack maximizes.

Random numbers come from independent streams keyed by ``(seed, 0)`` for the
initial pack and ``(seed, 1, t, w)`` for wolf ``w`` in iteration ``t``. The
outcome therefore does not depend on the order in which fitness evaluations
run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .model import ComputeNode, CostRates, EmptyWorkload, Task, Weights
from .scheduler import ScheduleResult, SimConfig, simulate


@dataclass(frozen=True)
class GwoParams:
    search_agents: int = 70
    iterations: int = 100
    a0: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.search_agents < 3:
            raise ValueError("search_agents must be >= 3 (alpha, beta and delta)")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.a0 > 0:
            raise ValueError("a0 must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")


@dataclass(frozen=True)
class CoefficientDraw:
    A: np.ndarray
    C: np.ndarray


@dataclass
class Leader:
    position: Optional[np.ndarray] = None
    fitness: float = -np.inf


@dataclass
class PackState:
    """The three best solutions seen so far and the best-fitness trace."""

    alpha: Leader = field(default_factory=Leader)
    beta: Leader = field(default_factory=Leader)
    delta: Leader = field(default_factory=Leader)
    trace: list[float] = field(default_factory=list)

    @property
    def leaders(self) -> tuple[Leader, Leader, Leader]:
        return self.alpha, self.beta, self.delta

    def offer(self, position: np.ndarray, fit: float) -> None:
        # strict comparisons: a leader is only displaced by a better wolf
        if fit > self.alpha.fitness:
            self.delta, self.beta = self.beta, self.alpha
            self.alpha = Leader(position.copy(), fit)
        elif fit > self.beta.fitness:
            self.delta = self.beta
            self.beta = Leader(position.copy(), fit)
        elif fit > self.delta.fitness:
            self.delta = Leader(position.copy(), fit)


@dataclass(frozen=True)
class GwoResult:
    position: np.ndarray
    fitness: float
    trace: list[float]
    a_values: list[float]  # a at t = 0 .. iterations inclusive
    pack: PackState


def a_schedule(t: float, a0: float, iterations: int) -> float:
    """Convergence coefficient, decaying linearly from ``a0`` to 0."""
    return a0 - a0 * t / iterations


def coefficients_from(a: float, r1: np.ndarray, r2: np.ndarray) -> CoefficientDraw:
    return CoefficientDraw(A=2 * a * r1 - a, C=2 * r2)


def draw_coefficients(a: float, dim: int, rng: np.random.Generator) -> CoefficientDraw:
    r1 = rng.random(dim)
    r2 = rng.random(dim)
    return coefficients_from(a, r1, r2)


def clamp(position: np.ndarray, lower: float, upper: float) -> np.ndarray:
    """Clip into the half-open box ``[lower, upper)``."""
    return np.clip(position, lower, np.nextafter(upper, -np.inf))


def encircle(position: np.ndarray, leaders: Sequence[np.ndarray],
             draws: Sequence[CoefficientDraw]) -> np.ndarray:
    """Move toward the mean of the three leader-guided positions."""
    moves = []
    for leader, d in zip(leaders, draws):
        distance = np.abs(d.C * leader - position)
        moves.append(leader - d.A * distance)
    return (moves[0] + moves[1] + moves[2]) / 3


def hunt_update(position: np.ndarray, pack: PackState, a: float, rng: np.random.Generator,
                lower: float, upper: float) -> np.ndarray:
    leaders = [ldr.position for ldr in pack.leaders]
    draws = [draw_coefficients(a, position.size, rng) for _ in leaders]
    return clamp(encircle(position, leaders, draws), lower, upper)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def grey_wolf(objective: Callable[[np.ndarray], float], dim: int, lower: float, upper: float,
              params: GwoParams,
              map_fn: Callable[[Callable, Iterable], Iterable] = map) -> GwoResult:
    """Maximize ``objective`` over the box ``[lower, upper)^dim``.

    ``map_fn`` evaluates a batch of positions; pass a parallel map to spread
    the fitness evaluations of one iteration over workers.
    """
    rng = _stream(params.seed, 0)
    wolves = rng.uniform(lower, upper, size=(params.search_agents, dim))
    wolves = clamp(wolves, lower, upper)
    pack = PackState()
    for w, fit in zip(wolves, map_fn(objective, list(wolves))):
        pack.offer(w, float(fit))

    a_values = []
    for t in range(params.iterations):
        a = a_schedule(t, params.a0, params.iterations)
        a_values.append(a)
        wolves = np.array([
            hunt_update(w, pack, a, _stream(params.seed, 1, t, i), lower, upper)
            for i, w in enumerate(wolves)
        ])
        for w, fit in zip(wolves, map_fn(objective, list(wolves))):
            pack.offer(w, float(fit))
        pack.trace.append(pack.alpha.fitness)
    a_values.append(a_schedule(params.iterations, params.a0, params.iterations))

    return GwoResult(pack.alpha.position.copy(), pack.alpha.fitness, list(pack.trace),
                     a_values, pack)


def sphere(x: np.ndarray) -> float:
    return float(np.sum(np.square(x)))


def sphere_self_test(params: GwoParams, dim: int = 2, bound: float = 10.0) -> tuple[float, list[float]]:
    """Minimize the sphere function; returns (best value, best-value trace)."""
    res = grey_wolf(lambda x: -sphere(x), dim, -bound, bound, params)
    return -res.fitness, [-f for f in res.trace]


def decode(position: np.ndarray, node_count: int) -> np.ndarray:
    """Round each coordinate to a node index, clamped into range."""
    return np.clip(np.rint(position), 0, node_count - 1).astype(np.int64)


@dataclass(frozen=True)
class Outcome:
    position: np.ndarray
    preference: list[int]
    schedule: ScheduleResult
    trace: list[float]
    a_values: list[float]


def optimize(workload: Sequence[Task], nodes: Sequence[ComputeNode],
             rates: CostRates = CostRates(), weights: Weights = Weights(),
             params: GwoParams = GwoParams(), config: SimConfig = SimConfig(),
             map_fn=map) -> Outcome:
    """Search node preferences with the wolf pack and return the alpha schedule."""
    if not workload:
        raise EmptyWorkload("nothing to schedule")
    n_nodes = len(nodes)
    cache: dict[bytes, float] = {}

    def objective(position: np.ndarray) -> float:
        pref = decode(position, n_nodes)
        key = pref.tobytes()
        if key not in cache:
            cache[key] = simulate(workload, nodes, pref.tolist(), rates, weights, config).metrics.fitness
        return cache[key]

    res = grey_wolf(objective, len(workload), 0.0, float(n_nodes), params, map_fn)
    pref = decode(res.position, n_nodes).tolist()
    schedule = simulate(workload, nodes, pref, rates, weights, config)
    return Outcome(res.position, pref, schedule, res.trace, res.a_values)
