import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import event_simulate, replay_peak_usage
from vfcsched.model import ComputeNode, Infeasible, Task, Tier, build_nodes, validate
from vfcsched.scheduler import (
    NeverFits,
    NodeTimeline,
    SimConfig,
    max_demand_order,
    simulate,
)
from vfcsched.workloads import RandomWorkloadSpec, generate_random


def test_earliest_slot_examples():
    tl = NodeTimeline(ComputeNode(0, Tier.STATIC, 3))
    assert tl.earliest_slot(2, 10.0) == 0.0
    tl.reserve(0.0, 5.0, 3)
    assert tl.earliest_slot(1, 1.0) == 5.0
    with pytest.raises(NeverFits):
        tl.earliest_slot(4, 1.0)


def test_earliest_slot_skips_gap_that_is_too_short():
    tl = NodeTimeline(ComputeNode(0, Tier.STATIC, 2))
    tl.reserve(0.0, 2.0, 2)
    tl.reserve(3.0, 4.0, 2)
    assert tl.earliest_slot(1, 1.0) == 2.0
    assert tl.earliest_slot(1, 1.5) == 7.0
    tl.reserve(2.0, 1.0, 1)
    assert tl.free_at(2.5) == 1
    assert tl.min_free(1.0, 3.0) == 0


def test_contention_hand_trace():
    # R=3 runs first at t=0, the R=1 task waits for all three cores to free up
    tasks = [Task(0, 3, 5.0), Task(1, 1, 5.0)]
    res = simulate(tasks, [ComputeNode(0, Tier.STATIC, 3)])
    placed = res.by_task()
    assert placed[0].start == 0.0
    assert placed[1].timing.wait == 5.0
    assert res.metrics.makespan == 10.0
    oracle = event_simulate(tasks, [ComputeNode(0, Tier.STATIC, 3)], [0, 1], "tier")
    assert oracle == {0: (0.0, 5.0, 0), 1: (5.0, 10.0, 0)}


def test_single_task_on_preferred_node():
    nodes = build_nodes()
    res = simulate([Task(0, 2, 7.5)], nodes, preference=[8])
    p = res.placed[0]
    assert p.allocations[0].node.id == 8
    assert p.timing.wait == 0.0
    assert res.metrics.makespan == 7.5


def test_large_task_falls_back_to_cloud():
    nodes = build_nodes()
    res = simulate([Task(0, 15, 10.0)], nodes)
    (alloc,) = res.placed[0].allocations
    assert alloc.node.tier is Tier.CLOUD and alloc.node.cores == 20


def test_preference_too_small_is_repaired():
    nodes = build_nodes()
    # node 3 is the 1-core static node
    res = simulate([Task(0, 4, 10.0)], nodes, preference=[3])
    node = res.placed[0].allocations[0].node
    assert node.cores >= 4 and node.tier is Tier.STATIC


def test_split_when_no_single_node_fits():
    nodes = [ComputeNode(0, Tier.STATIC, 2), ComputeNode(1, Tier.DYNAMIC, 3)]
    res = simulate([Task(0, 4, 10.0)], nodes)
    allocs = res.placed[0].allocations
    assert [(a.node.id, a.cores) for a in allocs] == [(0, 2), (1, 2)]
    assert validate(res.assignment, nodes, [Task(0, 4, 10.0)]) == []
    # static 2 cores + dynamic 2 cores for 10 s at FS=1, FD=0.5
    assert res.metrics.cost == pytest.approx(2 * 10 * 1.0 + 2 * 10 * 0.5)
    with pytest.raises(Infeasible):
        simulate([Task(0, 6, 1.0)], nodes)


def test_split_waits_for_enough_cores():
    nodes = [ComputeNode(0, Tier.STATIC, 2), ComputeNode(1, Tier.DYNAMIC, 2)]
    tasks = [Task(0, 4, 3.0), Task(1, 1, 5.0)]
    order_first = simulate(tasks, nodes).by_task()
    assert order_first[0].start == 0.0
    assert order_first[1].start == 3.0


def test_preference_rules():
    nodes = [ComputeNode(0, Tier.STATIC, 2), ComputeNode(1, Tier.DYNAMIC, 2)]
    tasks = [Task(0, 2, 5.0), Task(1, 2, 5.0)]
    pref = [1, 1]
    first = simulate(tasks, nodes, pref, config=SimConfig(preference_rule="first")).by_task()
    assert first[1].allocations[0].node.id == 1 and first[1].start == 5.0
    no_later = simulate(tasks, nodes, pref, config=SimConfig(preference_rule="no_later")).by_task()
    assert no_later[1].allocations[0].node.id == 0 and no_later[1].start == 0.0


def test_cloud_transfer_seconds_extend_occupancy():
    nodes = [ComputeNode(0, Tier.CLOUD, 1)]
    tasks = [Task(0, 1, 5.0), Task(1, 1, 5.0)]
    res = simulate(tasks, nodes, config=SimConfig(cloud_transfer_seconds=1.0)).by_task()
    assert res[0].timing.processing == 6.0
    assert res[1].start == 6.0


def _random_instance(rng, max_tasks=8, max_nodes=3):
    nodes = []
    for i in range(rng.randint(1, max_nodes)):
        nodes.append(ComputeNode(i, rng.choice(list(Tier)), rng.randint(1, 4)))
    cap = max(n.cores for n in nodes)
    tasks = [Task(i, rng.randint(1, cap), float(rng.randint(1, 5)))
             for i in range(rng.randint(1, max_tasks))]
    rng.shuffle(tasks)
    return tasks, nodes


def _times(result):
    return {p.task.id: (p.start, p.finish, p.allocations[0].node.id) for p in result.placed}


def test_oracle_equivalence_randomized():
    rng = random.Random(20240601)
    for _ in range(200):
        tasks, nodes = _random_instance(rng)
        pref = None
        if rng.random() < 0.5:
            pref = [rng.randrange(len(nodes)) if rng.random() < 0.8 else None for _ in tasks]
        res = simulate(tasks, nodes, pref)
        expected = event_simulate(tasks, nodes, max_demand_order(tasks), "prefer", pref)
        assert _times(res) == expected


def _check_invariants(tasks, nodes, res):
    assert validate(res.assignment, nodes, tasks) == []
    assert res.order == [tasks[i].id for i in max_demand_order(tasks)]
    for p in res.placed:
        assert p.timing.finish == p.timing.wait + p.timing.processing
        assert p.start == p.timing.wait
    assert res.metrics.makespan == max(p.timing.finish for p in res.placed)
    assert res.metrics.wait_max <= res.metrics.makespan
    for node in nodes:
        booked = [(p.start, p.finish, a.cores) for p in res.placed for a in p.allocations
                  if a.node.id == node.id]
        assert replay_peak_usage(booked) <= node.cores


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 25))
def test_schedule_invariants_property(seed, n):
    nodes = build_nodes()
    tasks = generate_random(RandomWorkloadSpec(n, seed=seed))
    rng = random.Random(seed)
    pref = [rng.randrange(len(nodes)) for _ in tasks]
    for p in (None, pref):
        res = simulate(tasks, nodes, p)
        _check_invariants(tasks, nodes, res)
        assert simulate(tasks, nodes, p) == res


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 20))
def test_tier_priority_honored(seed, n):
    nodes = build_nodes()
    tasks = generate_random(RandomWorkloadSpec(n, seed=seed))
    res = simulate(tasks, nodes)
    timelines = [NodeTimeline(node) for node in nodes]
    for p in res.placed:
        chosen = p.allocations[0].node
        for tl in timelines:
            if tl.node.tier < chosen.tier and tl.node.cores >= p.task.cores:
                # a higher-priority node must not have been able to start the task as early
                assert tl.earliest_slot(p.task.cores, p.task.duration) > p.start
        by_id = {tl.node.id: tl for tl in timelines}
        # work conservation on the chosen node
        assert by_id[chosen.id].earliest_slot(p.task.cores, p.task.duration) == p.start
        by_id[chosen.id].reserve(p.start, p.task.duration, p.task.cores)
