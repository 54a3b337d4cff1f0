import numpy as np
import pytest
from hypothesis import given, strategies as st

from vfcsched.gwo import (
    GwoParams,
    Leader,
    PackState,
    a_schedule,
    coefficients_from,
    decode,
    draw_coefficients,
    encircle,
    grey_wolf,
    hunt_update,
    optimize,
    sphere_self_test,
)
from vfcsched.model import ComputeNode, CostRates, Task, Tier, Weights

SPHERE_GOLDEN = 1.1803345650603686e-59  # seed 12345, 30 agents, 100 iterations, a0=2


def test_params_validation():
    with pytest.raises(ValueError):
        GwoParams(search_agents=2)
    with pytest.raises(ValueError):
        GwoParams(iterations=0)
    with pytest.raises(ValueError):
        GwoParams(a0=0.0)
    with pytest.raises(ValueError):
        GwoParams(seed=-1)


def test_a_schedule_examples():
    assert a_schedule(0, 2.0, 100) == 2.0
    assert a_schedule(100, 2.0, 100) == 0.0
    assert a_schedule(50, 2.0, 100) == 1.0


@given(a0=st.sampled_from([1.0, 2.0, 3.0]), iters=st.integers(1, 500), data=st.data())
def test_a_schedule_is_linear(a0, iters, data):
    t1 = data.draw(st.integers(0, iters))
    t2 = data.draw(st.integers(t1, iters))
    assert a_schedule(t1, a0, iters) - a_schedule(t2, a0, iters) == pytest.approx(
        a0 * (t2 - t1) / iters, abs=1e-12)


def test_coefficients():
    rng = np.random.default_rng(3)
    d = draw_coefficients(0.0, 5, rng)
    assert np.all(d.A == 0.0)
    assert np.all((0 <= d.C) & (d.C < 2))
    assert coefficients_from(2.0, np.array([1.0]), np.array([0.5])).A[0] == 2.0
    a = draw_coefficients(1.5, 4, np.random.default_rng(9))
    b = draw_coefficients(1.5, 4, np.random.default_rng(9))
    assert np.array_equal(a.A, b.A) and np.array_equal(a.C, b.C)
    assert np.all(np.abs(a.A) <= 1.5)


def _pack(*positions):
    pack = PackState()
    pack.alpha, pack.beta, pack.delta = (Leader(np.array(p, dtype=float), 0.0) for p in positions)
    return pack


def test_hunt_update_fixed_point():
    p = [1.5, 3.0]
    out = hunt_update(np.array(p), _pack(p, p, p), 0.0, np.random.default_rng(0), 0.0, 5.0)
    assert np.array_equal(out, np.array(p))


def test_encircle_is_mean_of_three_moves():
    zero = coefficients_from(0.0, np.zeros(1), np.zeros(1))
    out = encircle(np.array([7.0]), [np.array([1.0]), np.array([2.0]), np.array([3.0])], [zero] * 3)
    assert out[0] == 2.0


def test_hunt_update_collapses_to_leader_centroid():
    leaders = ([0.0, 4.0], [1.0, 1.0], [2.0, 1.0])
    for wolf in ([4.0, 0.0], [0.5, 3.5]):
        out = hunt_update(np.array(wolf), _pack(*leaders), 0.0, np.random.default_rng(1), 0.0, 5.0)
        assert np.allclose(out, [1.0, 2.0], rtol=0, atol=1e-15)


def test_hunt_update_respects_box():
    pack = _pack([0.0, 0.0], [4.9, 4.9], [0.1, 4.8])
    rng = np.random.default_rng(11)
    for _ in range(200):
        out = hunt_update(rng.uniform(0, 5, 2), pack, 2.0, rng, 0.0, 5.0)
        assert np.all((out >= 0.0) & (out < 5.0))


def test_decode_examples():
    assert decode(np.array([2.4]), 5).tolist() == [2]
    assert decode(np.array([-0.7]), 5).tolist() == [0]
    assert decode(np.array([7.9]), 5).tolist() == [4]


def test_sphere_self_test_golden():
    best, trace = sphere_self_test(GwoParams(search_agents=30, iterations=100, a0=2.0, seed=12345))
    assert best < 1e-4
    assert best == pytest.approx(SPHERE_GOLDEN, rel=1e-9)
    assert all(b >= a for a, b in zip(trace[1:], trace))  # values only go down


def test_pack_invariants_and_box():
    seen = []

    def objective(x):
        seen.append(x.copy())
        return -float(np.sum((x - 1.3) ** 2))

    res = grey_wolf(objective, 3, 0.0, 4.0, GwoParams(10, 30, 2.0, 5))
    assert len(res.trace) == 30
    assert all(b >= a for a, b in zip(res.trace, res.trace[1:]))
    pack = res.pack
    assert pack.alpha.fitness >= pack.beta.fitness >= pack.delta.fitness
    assert res.a_values[0] == 2.0 and res.a_values[-1] == 0.0 and len(res.a_values) == 31
    allx = np.array(seen)
    assert np.all((allx >= 0.0) & (allx < 4.0))


def test_single_task_single_node_matches_closed_form():
    task = Task(0, 2, 10.0)
    node = ComputeNode(0, Tier.STATIC, 4)
    out = optimize([task], [node], CostRates(), Weights(), GwoParams(5, 5, 2.0, 1))
    # cost 2*10*FS = 20, ideal cost 2*10*FD = 10, makespan equals its reference 10
    assert out.schedule.metrics.fitness == pytest.approx(0.5 * 10 / 20 + 0.5 * 10 / 10, rel=1e-12)


def test_optimize_is_deterministic():
    from vfcsched.model import build_nodes
    from vfcsched.workloads import RandomWorkloadSpec, generate_random

    tasks = generate_random(RandomWorkloadSpec(12, seed=4))
    nodes = build_nodes()
    p = GwoParams(8, 15, 2.0, 77)
    a = optimize(tasks, nodes, params=p)
    b = optimize(tasks, nodes, params=p)
    assert a.trace == b.trace
    assert np.array_equal(a.position, b.position)
    assert a.schedule == b.schedule
    assert all(y >= x for x, y in zip(a.trace, a.trace[1:]))
