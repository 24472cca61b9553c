import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpirank.errors import KpiRankError
from kpirank.expert import (
    Counts,
    EkGains,
    KnowledgeBase,
    case_contribution,
    ek_apply,
    ek_leave_one_out,
    ek_merge,
    ek_update,
)
from kpirank.model import ScoreVector

from conftest import make_case

NAMES = [f"kpi{i}" for i in range(8)]


@st.composite
def knowledge_bases(draw):
    entries = {}
    for name in draw(st.sets(st.sampled_from(NAMES))):
        n = draw(st.integers(1, 20))
        p = draw(st.integers(0, n))
        m = draw(st.integers(0, n - p))
        entries[name] = Counts(n, p, m)
    return KnowledgeBase(entries)


def test_update_counts():
    x = np.array([[0, 0, 9.0, 9.0], [0, 0, 5.0, 5.0], [0, 0, 1.0, 1.0], [0, 0, 0.0, 0.0]])
    case = make_case(x, [1], slice(2, 4), names=["a", "b", "c", "d"])
    scores = ScoreVector([9.0, 5.0, 1.0, 0.0])
    kb = ek_update(KnowledgeBase(), case, scores)
    assert kb["a"] == Counts(1, 0, 1)  # outscored the flagged KPI but was ignored
    assert kb["b"] == Counts(1, 1, 0)
    assert kb["c"] == Counts(1, 0, 0)
    kb2 = ek_update(kb, case, scores)
    assert kb2["a"] == Counts(2, 0, 2) and kb["a"] == Counts(1, 0, 1)
    assert kb2["b"].k_plus == 1.0


@given(st.lists(st.floats(0, 1e3), min_size=len(NAMES), max_size=len(NAMES)), st.floats(0, 5), st.floats(0, 5))
def test_cold_start_and_zero_gain_identity(raw, gp, gm):
    s = ScoreVector(np.array(raw))
    assert np.array_equal(ek_apply(KnowledgeBase(), s, NAMES, EkGains(gp, gm)).scores, s.scores)
    kb = KnowledgeBase({n: Counts(3, 1, 1) for n in NAMES})
    assert np.array_equal(ek_apply(kb, s, NAMES, EkGains(0.0, 0.0)).scores, s.scores)


@settings(max_examples=100)
@given(knowledge_bases(), knowledge_bases(), knowledge_bases())
def test_merge_commutative_associative(a, b, c):
    assert ek_merge([a, b]) == ek_merge([b, a])
    assert ek_merge([ek_merge([a, b]), c]) == ek_merge([a, ek_merge([b, c])])


def test_merge_empty_raises():
    with pytest.raises(KpiRankError):
        ek_merge([])


def test_positive_bias_preserves_order():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        f = int(rng.integers(2, 10))
        s = rng.random(f) * 10
        kp = rng.random(f)
        names = [f"k{j}" for j in range(f)]
        kb = KnowledgeBase({n: Counts(100, int(round(100 * k)), 0) for n, k in zip(names, kp)})
        k_plus = np.array([kb[n].k_plus for n in names])
        out = ek_apply(kb, ScoreVector(s), names, EkGains(1.0, 0.0)).scores
        for i in range(f):
            for j in range(f):
                if s[i] >= s[j] and k_plus[i] >= k_plus[j]:
                    assert out[i] >= out[j]


def test_negative_gain_clamps_at_zero():
    kb = KnowledgeBase({"a": Counts(1, 0, 1)})
    out = ek_apply(kb, ScoreVector([2.0]), ["a"], EkGains(0.0, 5.0))
    assert out.scores.tolist() == [0.0]


def test_json_round_trip(tmp_path):
    kb = KnowledgeBase({"b": Counts(2, 1, 0), "a": Counts(5, 0, 3)})
    kb.save(tmp_path / "kb.json")
    assert KnowledgeBase.load(tmp_path / "kb.json") == kb
    assert kb.to_json().index('"a"') < kb.to_json().index('"b"')


def test_leave_one_out_excludes_own_case(ek_suite):
    cases = ek_suite[:6]
    loo = ek_leave_one_out(cases)
    contributions = [case_contribution(c) for c in cases]
    for i, case in enumerate(cases):
        others = ek_merge(contributions[:i] + contributions[i + 1:])
        assert loo[case.case_id] == others
        # a case's own labels never leak: total n equals the other cases' feature counts
        total = sum(c.n for c in loo[case.case_id].values())
        assert total == sum(o.dataset.n_features for j, o in enumerate(cases) if j != i)
    with pytest.raises(KpiRankError):
        ek_leave_one_out(cases[:1])
