import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpirank.detect import (
    Contamination,
    DbscanParams,
    DynamicElbow,
    IsolationForestParams,
    StaticScore,
    average_path_length,
    dbscan_detect,
    dbscan_labels,
    dbscan_noise_grid,
    elbow_index,
    ensemble_select,
    if_detect,
    isolation_scores,
    n_contaminated,
    score_from_path_length,
)
from kpirank.errors import KpiRankError, NoDetectionError
from kpirank.model import AnomalyVector, Dataset

from conftest import make_case


def _dataset(x):
    x = np.asarray(x, dtype=float)
    return Dataset([f"k{j}" for j in range(x.shape[0])], range(x.shape[1]), x)


# ------------------------------------------------------------ isolation forest

def test_average_path_length_matches_harmonic_sum():
    assert average_path_length(1) == 0.0
    assert average_path_length(2) == pytest.approx(1.0, abs=1e-12)
    for n in range(2, 60):
        h = sum(1.0 / k for k in range(1, n))
        assert average_path_length(n) == pytest.approx(2 * h - 2 * (n - 1) / n, abs=1e-10)


@pytest.mark.parametrize("n", [2, 10, 256])
def test_average_depth_gives_half(n):
    assert score_from_path_length(average_path_length(n), n) == pytest.approx(0.5, abs=1e-12)


def test_scores_in_open_unit_interval_and_deterministic():
    x = np.random.default_rng(0).normal(size=(4, 300))
    p = IsolationForestParams(n_trees=50, seed=4)
    s = isolation_scores(_dataset(x), p)
    assert np.all((s > 0) & (s < 1))
    np.testing.assert_array_equal(s, isolation_scores(_dataset(x), p))


def test_oversized_subsample_rejected():
    x = np.random.default_rng(0).normal(size=(2, 50))
    with pytest.raises(KpiRankError):
        isolation_scores(_dataset(x), IsolationForestParams(n_trees=5, subsample_size=100))


@pytest.mark.parametrize("n_kpis", [1, 5])
def test_ten_sigma_outlier_scores_highest(n_kpis):
    # one timeslot displaced by 10 sigma in every KPI
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        x = rng.normal(size=(n_kpis, 400))
        k = rng.integers(400)
        x[:, k] += 10.0
        s = isolation_scores(_dataset(x), IsolationForestParams(n_trees=100, seed=seed))
        hits += int(np.argmax(s) == k)
    assert hits >= 19


@pytest.mark.parametrize("t", [1, 7, 100, 211, 999, 10770])
@pytest.mark.parametrize("frac", [0.001, 0.01, 0.05, 0.07, 0.1, 0.3, 0.5])
def test_contamination_flags_ceiling(t, frac):
    scores = np.random.default_rng(t).random(t)
    a = if_detect(scores, Contamination(frac))
    expected = math.ceil(round(frac * t, 9))
    assert a.n_anomalous == expected == n_contaminated(frac, t)
    if expected < t:
        assert scores[a.a == 1].min() >= scores[a.a == 0].max()


def test_contamination_ties_prefer_lower_index():
    a = if_detect(np.array([0.5, 0.9, 0.9, 0.9]), Contamination(0.5))
    assert a.a.tolist() == [0, 1, 1, 0]


def test_static_threshold_strict():
    a = if_detect(np.array([0.6, 0.61, 0.2]), StaticScore(0.6))
    assert a.a.tolist() == [0, 1, 0]


def _brute_elbow(y):
    p0, p1 = np.array([0.0, y[0]]), np.array([len(y) - 1.0, y[-1]])
    u = (p1 - p0) / np.linalg.norm(p1 - p0)
    best, best_d = len(y) - 1, 0.0
    for i in range(1, len(y) - 1):
        v = np.array([float(i), y[i]]) - p0
        d = np.linalg.norm(v - (v @ u) * u)
        if d > best_d + 1e-15:
            best, best_d = i, d
    return best


@settings(max_examples=200)
@given(st.lists(st.floats(0.01, 0.99), min_size=3, max_size=60))
def test_elbow_matches_geometry(values):
    y = np.sort(np.array(values))[::-1]
    got = elbow_index(y)
    want = _brute_elbow(y)
    if got != want:
        # allow numerically tied distances
        d = lambda i: abs((y[-1] - y[0]) * i - (len(y) - 1) * (y[i] - y[0]))
        assert d(got) == pytest.approx(d(want), rel=1e-9, abs=1e-12)


def test_elbow_policy_flags_above_knee():
    scores = np.full(100, 0.3)
    scores[:5] = [0.95, 0.9, 0.88, 0.5, 0.45]
    scores[5:10] = [0.44, 0.43, 0.42, 0.41, 0.40]
    a = if_detect(scores, DynamicElbow(0.1))
    # in (index, score) coordinates the farthest point from the chord is the 0.5 just below the drop
    assert a.a[:4].tolist() == [1, 1, 1, 1]
    assert a.n_anomalous == 4


# ---------------------------------------------------------------------- DBSCAN

def _reference_noise(X, eps, min_pts):
    n = len(X)
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    nb = d <= eps
    core = nb.sum(axis=1) >= min_pts
    return np.array([not core[i] and not np.any(nb[i] & core) for i in range(n)])


SETTINGS = [(1, 2), (2, 5), (3, 10), (4, 20), (5, 40), (6, 60), (8, 80), (10, 5), (13, 80), (20, 200)]


def test_dbscan_matches_quadratic_reference():
    rng = np.random.default_rng(2024)
    eps = sorted({e for e, _ in SETTINGS})
    mins = sorted({m for _, m in SETTINGS})
    for _ in range(200):
        t = int(rng.integers(20, 401))
        f = int(rng.integers(1, 7))
        X = rng.normal(scale=rng.uniform(0.5, 6.0), size=(t, f))
        out = rng.random(t) < 0.05
        X[out] += rng.normal(scale=15.0, size=(out.sum(), f))
        grid = dbscan_noise_grid(_dataset(X.T), eps, mins)
        for e, m in SETTINGS:
            ref = _reference_noise(X, e, m)
            np.testing.assert_array_equal(grid[mins.index(m), eps.index(e)], ref)
    # classic expansion agrees too (smaller sample, it is quadratic in memory)
    for _ in range(20):
        X = rng.normal(scale=3.0, size=(int(rng.integers(20, 200)), 3))
        for e, m in SETTINGS:
            assert np.array_equal(dbscan_labels(X, e, m) == -1, _reference_noise(X, e, m))


def test_dbscan_detect_flags_isolated_point():
    x = np.zeros((2, 50))
    x[:, 10] = 100.0
    a = dbscan_detect(_dataset(x), DbscanParams(1.0, 5))
    assert a.a.tolist() == [1 if i == 10 else 0 for i in range(50)]


def test_dbscan_params_validate():
    with pytest.raises(ValueError):
        DbscanParams(0.0, 5)
    with pytest.raises(ValueError):
        DbscanParams(1.0, 1)
    assert DbscanParams().label() == "eps=13;minpts=80"


# ---------------------------------------------------------------------- ensemble

def test_ensemble_picks_best_and_skips_degenerate():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 40))
    x[0, 10:15] += 8
    case = make_case(x, [0], slice(10, 15))
    wrong = np.zeros(40, dtype=np.int8)
    wrong[30:35] = 1
    right = np.zeros(40, dtype=np.int8)
    right[10:15] = 1
    cands = [
        (AnomalyVector(np.zeros(40, dtype=np.int8)), "none"),
        (AnomalyVector(wrong), "wrong"),
        (AnomalyVector(right), "right"),
        (AnomalyVector(np.ones(40, dtype=np.int8)), "all"),
    ]
    assert np.array_equal(ensemble_select(cands, case).a, right)
    with pytest.raises(NoDetectionError):
        ensemble_select([cands[0], cands[3]], case)
