import numpy as np
import pytest

from kpirank.errors import KpiRankError
from kpirank.evaluation import EvalConfig, evaluate, evaluate_suite, gamma_sweep, relative_impact
from kpirank.detect import DbscanParams, IsolationForestParams
from kpirank.expert import EkGains, KnowledgeBase, ek_leave_one_out

from conftest import make_case


def _clear_case():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(8, 120))
    x[[2, 5], 50:60] += 9.0
    return make_case(x, [2, 5], slice(50, 60))


def test_oracle_pipeline_perfect_on_clear_case():
    ev = evaluate(_clear_case(), "oracle", "fsa")
    assert ev.row.ndcg == pytest.approx(1.0)
    assert (ev.row.m, ev.row.t, ev.row.e) == (2, 2, 0)
    assert not ev.fallback


def test_fallback_when_detector_flags_nothing():
    cfg = EvalConfig(dbscan_params=DbscanParams(epsilon=1e6, min_pts=2))
    ev = evaluate(_clear_case(), "dbscan", "fsa", config=cfg)
    assert ev.fallback and ev.row.fallback
    assert ev.ranking.names == sorted(_clear_case().feature_names)


def test_alphabetical_tag_and_unknown_tags():
    ev = evaluate(_clear_case(), "oracle", "alphabetical")
    assert ev.ranking.names == sorted(ev.ranking.names)
    with pytest.raises(KpiRankError):
        evaluate(_clear_case(), "magic", "fsa")
    with pytest.raises(KpiRankError):
        evaluate(_clear_case(), "oracle", "magic")


def test_detectors_find_the_clear_window():
    case = _clear_case()
    cfg = EvalConfig(if_params=IsolationForestParams(n_trees=100, seed=1), dbscan_params=DbscanParams(3.0, 5))
    for ad in ("if", "dbscan", "ensemble"):
        assert evaluate(case, ad, "fsa", config=cfg).row.ndcg > 0.9, ad


def test_suite_rows_sorted_and_seeded(small_suite):
    cfg = EvalConfig(if_params=IsolationForestParams(n_trees=30))
    a = evaluate_suite(small_suite, "if", "fsa", cfg, seed=5)
    b = evaluate_suite(small_suite, "if", "fsa", cfg, seed=5)
    assert a == b
    assert [r.case_id for r in a] == sorted(r.case_id for r in a)


def test_ek_with_empty_base_changes_nothing(small_suite):
    kbs = {c.case_id: KnowledgeBase() for c in small_suite}
    plain = evaluate_suite(small_suite, "oracle", "fsa")
    biased = evaluate_suite(small_suite, "oracle", "fsa", kbs=kbs, gains=EkGains(1.0, 1.0))
    assert [r.ndcg for r in plain] == [r.ndcg for r in biased]
    assert {r.ek_tag for r in biased} == {"ek"}


def test_gamma_sweep_zero_equals_plain(ek_suite):
    cases = ek_suite[:8]
    kbs = ek_leave_one_out(cases)
    table = gamma_sweep(cases, kbs, ("plus-only", "minus-only", "both"), (0.0, 1.0))
    plain = np.mean([r.ndcg for r in evaluate_suite(cases, "oracle", "fsa")])
    for gamma, _mode, value in table:
        if gamma == 0.0:
            assert value == pytest.approx(plain, abs=1e-12)
    with pytest.raises(KpiRankError):
        gamma_sweep(cases, kbs, "sideways", (1.0,))


def test_relative_impact_groups(small_suite):
    rows = evaluate_suite(small_suite, "oracle", "fsa") + evaluate_suite(small_suite, "oracle", "alphabetical")
    table = relative_impact(rows)
    assert [c for c, _, _ in table] == ["oracle/alphabetical/none", "oracle/fsa/none"]


def test_ensemble_bounded_by_oracle_on_strong_cases(default_suite, default_grids):
    oracle = [r.ndcg for r in evaluate_suite(default_suite, "oracle", "fsa")]
    if_res, db_res = default_grids
    both = np.where(np.hstack([if_res.usable, db_res.usable]), np.hstack([if_res.ndcg, db_res.ndcg]), -np.inf)
    ensemble = both.max(axis=1)
    for i in range(0, len(default_suite), 3):
        assert ensemble[i] <= oracle[i] + 1e-12
