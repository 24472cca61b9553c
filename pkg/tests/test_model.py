import numpy as np
import pytest
from hypothesis import given, strategies as st

from kpirank.errors import DimensionError
from kpirank.model import (
    AnomalyVector,
    Dataset,
    GroundTruth,
    ScoreVector,
    derive_anomalous_timeslots,
    rank_from_scores,
)


def test_dataset_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        Dataset(["a"], [0, 1], np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        Dataset(["a", "b"], [0], np.zeros((2, 1)))
    with pytest.raises(ValueError):
        Dataset(["a", "a"], [0, 1], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        Dataset(["a"], [0, 1], [[0.0, np.nan]])


def test_arrays_are_read_only():
    d = Dataset(["a"], [0, 1], [[1.0, 2.0]])
    with pytest.raises(ValueError):
        d.values[0, 0] = 5.0
    gt = GroundTruth(np.zeros((1, 2), dtype=int))
    with pytest.raises(ValueError):
        gt.g[0, 0] = 1


def test_non_binary_rejected():
    with pytest.raises(ValueError):
        GroundTruth([[0, 2]])
    with pytest.raises(ValueError):
        AnomalyVector([0, 1, 3])


def test_derived_timeslots_are_column_or():
    g = np.array([[0, 1, 0, 0], [0, 1, 1, 0]])
    a = derive_anomalous_timeslots(GroundTruth(g))
    assert a.a.tolist() == [0, 1, 1, 0]
    assert a.source == "oracle"


def test_ties_broken_by_name():
    r = rank_from_scores([1.0, 2.0, 1.0, 2.0], ["d", "c", "b", "a"])
    assert r.names == ["a", "c", "b", "d"]
    assert r.positions().tolist() == [4, 2, 3, 1]


@given(st.lists(st.integers(0, 5), min_size=1, max_size=12))
def test_ranking_is_permutation_sorted_by_score(raw):
    names = [f"n{i:02d}" for i in range(len(raw))][::-1]
    scores = np.array(raw, dtype=float)
    r = rank_from_scores(ScoreVector(scores), names)
    assert sorted(r.order) == list(range(len(raw)))
    ordered = scores[list(r.order)]
    assert np.all(np.diff(ordered) <= 0)
    for a, b in zip(r.order, r.order[1:]):
        if scores[a] == scores[b]:
            assert names[a] < names[b]
