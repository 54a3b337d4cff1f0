import json
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from vfcsched.model import Task
from vfcsched.workloads import (
    MONTAGE_PROFILE,
    BadRange,
    ParseError,
    RandomWorkloadSpec,
    generate_random,
    montage_workload,
    read_workload,
    write_workload,
)

COUNTS = [2102, 6172, 1, 1, 2102, 17, 17, 16, 1]
DURATIONS = [1.73, 0.66, 143.26, 384.49, 1.72, 2.78, 282.37, 66.10, 0.64]


def test_montage_profile_golden():
    assert [c for _, c, _ in MONTAGE_PROFILE] == COUNTS
    assert [d for _, _, d in MONTAGE_PROFILE] == DURATIONS
    tasks = montage_workload()
    assert len(tasks) == 10429
    assert Counter(t.duration for t in tasks) == Counter(dict(zip(DURATIONS, COUNTS)))
    assert all(t.cores == 1 for t in tasks)
    assert [t.id for t in tasks] == list(range(10429))


def test_montage_single_rows_and_scale():
    tasks = montage_workload()
    assert [t.duration for t in tasks].count(384.49) == 1
    scaled = montage_workload(scale=100)
    assert sum(1 for t in scaled if t.duration == 1.73) == 22
    assert len(scaled) == sum(-(-c // 100) for c in COUNTS)
    with pytest.raises(BadRange):
        montage_workload(scale=0)


def test_montage_core_override():
    tasks = montage_workload(scale=1000, cores=[1, 1, 4, 4, 1, 2, 2, 1, 1])
    assert {t.cores for t in tasks if t.duration == 384.49} == {4}
    with pytest.raises(BadRange):
        montage_workload(cores=[1, 2])


def test_generate_random_contract():
    tasks = generate_random(RandomWorkloadSpec(50, seed=1))
    assert len(tasks) == 50
    assert all(t.cores == 2 for t in generate_random(RandomWorkloadSpec(20, (2, 2), seed=4)))
    assert generate_random(RandomWorkloadSpec(20, seed=8)) == generate_random(RandomWorkloadSpec(20, seed=8))
    assert generate_random(RandomWorkloadSpec(20, seed=8)) != generate_random(RandomWorkloadSpec(20, seed=9))
    flat = generate_random(RandomWorkloadSpec(5, duration_range=(7.0, 7.0)))
    assert all(t.duration == 7.0 for t in flat)


def test_bad_ranges():
    for kwargs in ({"n_tasks": 0}, {"n_tasks": 3, "demand_range": (0, 2)},
                   {"n_tasks": 3, "demand_range": (3, 2)},
                   {"n_tasks": 3, "duration_range": (0.0, 2.0)},
                   {"n_tasks": 3, "duration_range": (5.0, 2.0)}):
        with pytest.raises(BadRange):
            RandomWorkloadSpec(**kwargs)


@settings(max_examples=80, deadline=None)
@given(n=st.integers(1, 200), rlo=st.integers(1, 10), rspan=st.integers(0, 10),
       dlo=st.floats(0.01, 1e4), dspan=st.floats(0.0, 1e4), seed=st.integers(0, 2**64 - 1))
def test_generate_random_respects_ranges(n, rlo, rspan, dlo, dspan, seed):
    spec = RandomWorkloadSpec(n, (rlo, rlo + rspan), (dlo, dlo + dspan), seed)
    tasks = generate_random(spec)
    assert len(tasks) == n
    assert all(rlo <= t.cores <= rlo + rspan for t in tasks)
    assert all(dlo <= t.duration <= dlo + dspan for t in tasks)
    assert generate_random(spec) == tasks


def test_round_trip(tmp_path):
    tasks = generate_random(RandomWorkloadSpec(25, seed=2))
    path = tmp_path / "w.json"
    write_workload(tasks, path)
    assert read_workload(path) == tasks


def test_montage_export(tmp_path):
    path = tmp_path / "montage.json"
    write_workload(montage_workload(), path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert len(doc["tasks"]) == 10429
    assert read_workload(path) == montage_workload()


@pytest.mark.parametrize("record, field", [
    ({"id": 0, "cores": "2", "duration_s": 1.0}, "cores"),
    ({"id": 0, "duration_s": 1.0}, "cores"),
    ({"id": 0.5, "cores": 1, "duration_s": 1.0}, "id"),
    ({"id": 0, "cores": 1, "duration_s": 1.0, "prio": 3}, "prio"),
    ({"id": 0, "cores": 1, "duration_s": True}, "duration_s"),
])
def test_malformed_field_is_named(tmp_path, record, field):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"tasks": [record]}), encoding="utf-8")
    with pytest.raises(ParseError, match=field):
        read_workload(path)


def test_parse_errors_carry_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"tasks": [\n{"id": 0, "cores": 1,,}\n]}', encoding="utf-8")
    with pytest.raises(ParseError, match=":2:"):
        read_workload(path)
    path.write_text(json.dumps({"tasks": [{"id": 1, "cores": 1, "duration_s": 1.0}] * 2}))
    with pytest.raises(ParseError, match="duplicate id 1"):
        read_workload(path)
    path.write_text(json.dumps({"tasks": [{"id": 1, "cores": 0, "duration_s": 1.0}]}))
    with pytest.raises(ParseError, match="record 0"):
        read_workload(path)
    path.write_text(json.dumps([1, 2]))
    with pytest.raises(ParseError):
        read_workload(path)


def test_written_file_is_one_record_per_line(tmp_path):
    path = tmp_path / "w.json"
    write_workload([Task(0, 1, 1.5), Task(1, 2, 2.5)], path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1] == '{"id": 0, "cores": 1, "duration_s": 1.5},'
    assert len(lines) == 4
