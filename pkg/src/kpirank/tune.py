"""Hyperparameter grids, per-case vs. single-setting selection, and randomized tuning."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detect import (
    N_TREES,
    Contamination,
    DbscanParams,
    DynamicElbow,
    IsolationForestParams,
    StaticScore,
    dbscan_noise_grid,
    if_detect,
    isolation_scores,
    usable,
)
from .errors import KpiRankError
from .ingest import CaseBundle, standardize
from .metrics import ndcg
from .model import AnomalyVector, Dataset, rank_from_scores
from .score import baseline_alphabetical, scoring_function
from .synth import case_seed

EPSILONS = tuple(float(e) for e in range(1, 21))
MIN_PTS = (2, 5, 10, 20, 40, 60, 80, 100, 120, 140, 160, 180, 200)
CONTAMINATIONS = (0.001, 0.01, 0.05, 0.10)
STATIC_THRESHOLDS = (0.55, 0.60, 0.65, 0.70)


@dataclass(frozen=True)
class GridSpec:
    algorithm: str
    combos: tuple

    def __len__(self):
        return len(self.combos)

    def labels(self) -> list[str]:
        return [c.label() for c in self.combos]


def dbscan_grid(epsilons: Sequence[float] = EPSILONS, min_pts: Sequence[int] = MIN_PTS) -> GridSpec:
    """20 radii x 13 density levels = 260 settings, radius-major."""
    return GridSpec("dbscan", tuple(DbscanParams(e, m) for e in epsilons for m in min_pts))


def if_grid() -> GridSpec:
    """4 contamination levels, 4 static score thresholds and the elbow rule (300 trees)."""
    combos = (
        tuple(Contamination(x) for x in CONTAMINATIONS)
        + tuple(StaticScore(th) for th in STATIC_THRESHOLDS)
        + (DynamicElbow(0.10),)
    )
    return GridSpec("if", combos)


def candidate_vectors(x: Dataset, grid: GridSpec, seed: int = 0, n_trees: int = N_TREES) -> list[tuple[AnomalyVector, str]]:
    """Anomaly vector of every combo on one standardized dataset.

    All IF combos share one forest grown from ``seed``; they differ only in
    the threshold.  DBSCAN combos share the distance sweeps.
    """
    if grid.algorithm == "if":
        scores = isolation_scores(x, IsolationForestParams(n_trees=n_trees, seed=seed))
        return [(if_detect(scores, policy), policy.label()) for policy in grid.combos]
    if grid.algorithm == "dbscan":
        eps = sorted({c.epsilon for c in grid.combos})
        mins = sorted({c.min_pts for c in grid.combos})
        noise = dbscan_noise_grid(x, eps, mins)
        e_idx = {e: i for i, e in enumerate(eps)}
        m_idx = {m: i for i, m in enumerate(mins)}
        return [
            (AnomalyVector(noise[m_idx[c.min_pts], e_idx[c.epsilon]].astype(np.int8), source="dbscan"), c.label())
            for c in grid.combos
        ]
    raise KpiRankError(f"unknown grid algorithm {grid.algorithm!r}")


def ndcg_for_vector(x: Dataset, case: CaseBundle, a: AnomalyVector, fs_tag: str = "fsa") -> float:
    """Downstream nDCG of one anomaly vector; unusable vectors fall back to alphabetical order."""
    if usable(a):
        ranking = rank_from_scores(scoring_function(fs_tag)(x, a), x.feature_names)
    else:
        ranking = baseline_alphabetical(case)
    return ndcg(ranking, case.gt)


@dataclass(frozen=True)
class GridResult:
    grid: GridSpec
    case_ids: tuple[str, ...]
    ndcg: np.ndarray  # (n_cases, n_combos)
    usable: np.ndarray  # combo left both an anomalous and a normal window

    def rows(self):
        labels = self.grid.labels()
        for j, label in enumerate(labels):
            for i, cid in enumerate(self.case_ids):
                yield label, cid, float(self.ndcg[i, j])


def evaluate_grid(cases: Sequence[CaseBundle], grid: GridSpec, fs_tag: str = "fsa", seed: int = 0,
                  n_trees: int = N_TREES) -> GridResult:
    """nDCG of every combo on every case; the forest of case i is seeded from (seed, i)."""
    if not cases or len(grid) == 0:
        raise KpiRankError("need at least one case and one combo")
    out = np.empty((len(cases), len(grid)))
    ok = np.empty((len(cases), len(grid)), dtype=bool)
    for i, case in enumerate(cases):
        x = standardize(case.dataset)
        cache: dict[bytes, float] = {}
        for j, (a, _label) in enumerate(candidate_vectors(x, grid, case_seed(seed, i), n_trees)):
            key = a.a.tobytes()
            if key not in cache:
                cache[key] = ndcg_for_vector(x, case, a, fs_tag)
            out[i, j] = cache[key]
            ok[i, j] = usable(a)
    out.setflags(write=False)
    ok.setflags(write=False)
    return GridResult(grid, tuple(c.case_id for c in cases), out, ok)


def grid_search(cases_or_result, grid: GridSpec | None = None, fs_tag: str = "fsa", seed: int = 0):
    """Best combo per case and the single combo with the best mean nDCG.

    Returns ``(per_case_best, single_best)`` where ``per_case_best`` maps
    case_id -> (combo, ndcg) and ``single_best`` is (combo, mean ndcg).
    Ties go to the earlier combo in grid order.
    """
    result = cases_or_result if isinstance(cases_or_result, GridResult) else evaluate_grid(cases_or_result, grid, fs_tag, seed)
    combos = result.grid.combos
    best_idx = np.argmax(result.ndcg, axis=1)
    per_case = {
        cid: (combos[j], float(result.ndcg[i, j]))
        for i, (cid, j) in enumerate(zip(result.case_ids, best_idx))
    }
    means = result.ndcg.mean(axis=0)
    k = int(np.argmax(means))
    return per_case, (combos[k], float(means[k]))


@dataclass(frozen=True)
class TuningCurve:
    fractions: np.ndarray
    mean_normalized_ndcg: np.ndarray
    stderr: np.ndarray
    trials: int
    per_trial: np.ndarray  # (trials, n_combos)

    def value_at(self, n_tests: int) -> float:
        return float(self.mean_normalized_ndcg[n_tests - 1])


def randomized_tuning(cases_or_result, grid: GridSpec | None = None, fs_tag: str = "fsa", trials: int = 100,
                      seed: int = 0, comparator: str = "per-case") -> TuningCurve:
    """Random visiting order over the grid, keeping the better of incumbent and candidate.

    After the k-th test the incumbent's nDCG is divided by the case's best
    nDCG over the whole grid.  ``comparator="per-case"`` keeps one incumbent
    per case; ``"suite-mean"`` keeps one incumbent for all cases, compared by
    mean nDCG.  Trial r draws its order from the r-th child of ``SeedSequence(seed)``.
    """
    result = cases_or_result if isinstance(cases_or_result, GridResult) else evaluate_grid(cases_or_result, grid, fs_tag, seed)
    scores = result.ndcg
    n_combos = scores.shape[1]
    if n_combos < 2:
        raise KpiRankError("randomized tuning needs a grid of at least 2 combos")
    if trials < 1:
        raise KpiRankError("trials must be >= 1")
    if comparator not in ("per-case", "suite-mean"):
        raise KpiRankError("comparator must be 'per-case' or 'suite-mean'")
    normalized = scores / scores.max(axis=1, keepdims=True)
    suite_mean = scores.mean(axis=0)
    curves = np.empty((trials, n_combos))
    for r, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        order = np.random.default_rng(child).permutation(n_combos)
        if comparator == "per-case":
            # keep-the-better on each case is a running maximum
            incumbent = np.maximum.accumulate(normalized[:, order], axis=1)
            curves[r] = incumbent.mean(axis=0)
        else:
            best = order[0]
            for k, j in enumerate(order):
                if suite_mean[j] > suite_mean[best]:
                    best = j
                curves[r, k] = normalized[:, best].mean()
    mean = curves.mean(axis=0)
    stderr = curves.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else np.zeros(n_combos)
    fractions = np.arange(1, n_combos + 1) / n_combos
    return TuningCurve(fractions, mean, stderr, trials, curves)


def write_curve_csv(curve: TuningCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("fraction,mean_normalized_ndcg,stderr\n")
        for f, m, s in zip(curve.fractions, curve.mean_normalized_ndcg, curve.stderr):
            fh.write(f"{f:.6f},{m:.6f},{s:.6f}\n")


def write_grid_csv(result: GridResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("combo,case_id,ndcg\n")
        for label, cid, value in result.rows():
            fh.write(f"{label},{cid},{value:.6f}\n")
