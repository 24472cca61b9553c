import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpirank.errors import WindowError
from kpirank.model import AnomalyVector, Dataset
from kpirank.score import baseline_alphabetical, baseline_random_expectation, fsa, fsr


def brute_fsa(x, a):
    out = []
    for row in x:
        an = [v for v, flag in zip(row, a) if flag]
        no = [v for v, flag in zip(row, a) if not flag]
        out.append(abs(sum(an) / len(an) - sum(no) / len(no)))
    return np.array(out)


def brute_ranks(values, names):
    # rank 1 = largest; equal values ordered by name
    keyed = sorted(range(len(values)), key=lambda j: (-values[j], names[j]))
    ranks = [0] * len(values)
    for r, j in enumerate(keyed, start=1):
        ranks[j] = r
    return np.array(ranks)


def brute_fsr(x, a, names):
    an = [np.mean([v for v, f in zip(row, a) if f]) for row in x]
    no = [np.mean([v for v, f in zip(row, a) if not f]) for row in x]
    return np.abs(brute_ranks(an, names) - brute_ranks(no, names)).astype(float)


def random_instance(rng):
    f, t = rng.integers(1, 12), rng.integers(2, 40)
    x = rng.normal(size=(f, t))
    if rng.random() < 0.3:
        x = np.round(x)  # force ties
    a = np.zeros(t, dtype=np.int8)
    a[rng.choice(t, size=rng.integers(1, t), replace=False)] = 1
    names = [f"kpi{j:02d}" for j in rng.permutation(f)]
    return Dataset(names, range(t), x), AnomalyVector(a)


def test_fs_against_brute_force_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(100):
        d, a = random_instance(rng)
        np.testing.assert_allclose(fsa(d, a).scores, brute_fsa(d.values, a.a), rtol=0, atol=1e-12)
        np.testing.assert_array_equal(fsr(d, a).scores, brute_fsr(d.values, a.a, d.feature_names))
        swapped = AnomalyVector(1 - a.a)
        np.testing.assert_allclose(fsa(d, swapped).scores, fsa(d, a).scores, atol=1e-12)


def test_fsr_hand_example():
    x = [[10.0, 10.0, 0.0], [5.0, 5.0, 5.0], [0.0, 0.0, 10.0]]
    d = Dataset(["a", "b", "c"], range(3), x)
    s = fsr(d, AnomalyVector([0, 0, 1]))
    # normal window ranks a,b,c = 1,2,3; anomalous window c,b,a = 1,2,3
    assert s.scores.tolist() == [2.0, 0.0, 2.0]


@pytest.mark.parametrize("a", [[0, 0, 0], [1, 1, 1]])
def test_degenerate_window_raises(a):
    d = Dataset(["a"], range(3), [[1.0, 2.0, 3.0]])
    with pytest.raises(WindowError):
        fsa(d, AnomalyVector(a))
    with pytest.raises(WindowError):
        fsr(d, AnomalyVector(a))


@settings(max_examples=50)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 100), st.floats(-50, 50))
def test_fsa_affine_behaviour(seed, scale, shift):
    d, a = random_instance(np.random.default_rng(seed))
    moved = Dataset(d.feature_names, d.timestamps, d.values * scale + shift)
    np.testing.assert_allclose(fsa(moved, a).scores, scale * fsa(d, a).scores, rtol=1e-9, atol=1e-9)


def test_alphabetical_baseline():
    r = baseline_alphabetical(["b", "c", "a"])
    assert r.names == ["a", "b", "c"]


@pytest.mark.parametrize("f,t", [(10, 1), (10, 2), (50, 5)])
def test_random_baseline_effort(f, t):
    _, effort = baseline_random_expectation(f, t, trials=100_000, seed=0)
    assert effort == pytest.approx(t * (f + 1) / (t + 1), rel=0.01)


def test_random_baseline_full_flag_is_perfect():
    nd, effort = baseline_random_expectation(5, 5, trials=1000)
    assert nd == 1.0 and effort == 5.0
