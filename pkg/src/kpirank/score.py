"""Feature scoring: contrast each KPI between anomalous and normal timeslots."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import KpiRankError, WindowError
from .model import AnomalyVector, Dataset, Ranking, ScoreVector, rank_from_scores


def window_means(dataset: Dataset, a: AnomalyVector) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean over anomalous slots and over normal slots."""
    mask = np.asarray(a.a if isinstance(a, AnomalyVector) else a, dtype=float)
    n_anom = mask.sum()
    n_slots = mask.shape[0]
    if n_slots != dataset.n_slots:
        raise WindowError(f"anomaly vector length {n_slots} != T={dataset.n_slots}")
    if n_anom == 0 or n_anom == n_slots:
        raise WindowError("need at least one anomalous and one normal timeslot")
    x = dataset.values
    anomalous = x @ mask / n_anom
    normal = x @ (1.0 - mask) / (n_slots - n_anom)
    return anomalous, normal


def fsa(dataset: Dataset, a: AnomalyVector) -> ScoreVector:
    """Absolute difference between anomalous-window and normal-window means."""
    anomalous, normal = window_means(dataset, a)
    return ScoreVector(np.abs(anomalous - normal), policy="fsa")


def descending_ranks(values, names: Sequence[str]) -> np.ndarray:
    """1-based ranks, rank 1 for the largest value, ties by ascending name."""
    order = rank_from_scores(ScoreVector(values, policy="fsa"), names).order
    ranks = np.empty(len(order), dtype=int)
    ranks[list(order)] = np.arange(1, len(order) + 1)
    return ranks


@dataclass(frozen=True)
class RankPair:
    r_plus: np.ndarray
    r_minus: np.ndarray


def rank_pair(dataset: Dataset, a: AnomalyVector) -> RankPair:
    anomalous, normal = window_means(dataset, a)
    names = dataset.feature_names
    return RankPair(descending_ranks(anomalous, names), descending_ranks(normal, names))


def fsr(dataset: Dataset, a: AnomalyVector) -> ScoreVector:
    """How far each feature moves in the mean-value ordering between windows."""
    rp = rank_pair(dataset, a)
    return ScoreVector(np.abs(rp.r_plus - rp.r_minus).astype(float), policy="fsr")


FS_FUNCTIONS: dict[str, Callable[[Dataset, AnomalyVector], ScoreVector]] = {"fsa": fsa, "fsr": fsr}


def scoring_function(tag: str) -> Callable[[Dataset, AnomalyVector], ScoreVector]:
    try:
        return FS_FUNCTIONS[tag]
    except KeyError:
        raise KpiRankError(f"unknown feature scoring {tag!r}; choose from {sorted(FS_FUNCTIONS)}") from None


def baseline_alphabetical(case) -> Ranking:
    """KPIs in ascending name order, as a plain dashboard would list them."""
    names = case.feature_names if hasattr(case, "feature_names") else tuple(case)
    f = len(names)
    order = sorted(range(f), key=lambda j: names[j])
    ramp = np.empty(f)
    ramp[order] = np.arange(f, 0, -1, dtype=float)
    return rank_from_scores(ScoreVector(ramp, policy="alphabetical"), names)


def baseline_random_expectation(
    f: int, t: int, trials: int = 100_000, seed: int = 0, block: int = 10_000
) -> tuple[float, float]:
    """Monte Carlo mean of (nDCG, reading effort) over uniformly random rankings.

    Trials are drawn in fixed-size blocks, block b seeded by the b-th child of
    ``SeedSequence(seed)``, so the estimate does not depend on scheduling.
    """
    if trials < 1:
        raise KpiRankError("trials must be >= 1")
    if not 1 <= t <= f:
        raise KpiRankError(f"need 1 <= t <= f, got t={t}, f={f}")
    n_blocks = -(-trials // block)
    discount = 1.0 / np.log2(np.arange(2, f + 2))
    idcg = discount[None, :t].sum(axis=1)[0]
    ndcg_sum = 0.0
    effort_sum = 0.0
    for b, child in enumerate(np.random.SeedSequence(seed).spawn(n_blocks)):
        size = min(block, trials - b * block)
        rng = np.random.default_rng(child)
        # positions (0-based) of the t anomalous features in a random permutation
        positions = np.sort(np.argsort(rng.random((size, f)), axis=1)[:, :t], axis=1)
        ndcg_sum += (discount[positions].sum(axis=1) / idcg).sum()
        effort_sum += (positions.max(axis=1) + 1).sum()
    return float(ndcg_sum / trials), float(effort_sum / trials)
