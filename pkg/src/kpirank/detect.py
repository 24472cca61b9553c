"""Anomaly detection over timeslot vectors.

Each timeslot of a standardized dataset is one point in R^F. Isolation
Forest assigns every slot an isolation score; a threshold policy turns the
scores into a binary anomaly vector. DBSCAN flags noise slots directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import digamma

from .errors import KpiRankError, NoDetectionError
from .model import AnomalyVector, Dataset

EULER_GAMMA = 0.5772156649015329
N_TREES = 300
DEFAULT_SUBSAMPLE = 256


# ---------------------------------------------------------------- threshold policies

@dataclass(frozen=True)
class Contamination:
    """Flag the ceil(fraction * T) highest-scoring slots."""

    fraction: float

    def __post_init__(self):
        if not 0 < self.fraction < 1:
            raise ValueError(f"contamination must be in (0, 1), got {self.fraction}")

    def label(self) -> str:
        return f"contamination={self.fraction:g}"


@dataclass(frozen=True)
class StaticScore:
    """Flag slots whose isolation score exceeds theta."""

    theta: float

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"static threshold must be in (0, 1), got {self.theta}")

    def label(self) -> str:
        return f"theta_s={self.theta:g}"


@dataclass(frozen=True)
class DynamicElbow:
    """Threshold at the elbow of the sorted top fraction of scores."""

    top_fraction: float = 0.10

    def __post_init__(self):
        if not 0 < self.top_fraction <= 1:
            raise ValueError(f"top fraction must be in (0, 1], got {self.top_fraction}")

    def label(self) -> str:
        return f"elbow={self.top_fraction:g}"


ThresholdPolicy = Union[Contamination, StaticScore, DynamicElbow]


@dataclass(frozen=True)
class IsolationForestParams:
    n_trees: int = N_TREES
    subsample_size: int | None = None  # None: min(256, T)
    seed: int = 0
    threshold_policy: ThresholdPolicy = Contamination(0.01)

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.subsample_size is not None and self.subsample_size < 2:
            raise ValueError("subsample_size must be >= 2")


@dataclass(frozen=True)
class DbscanParams:
    epsilon: float = 13.0
    min_pts: int = 80

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.min_pts < 2:
            raise ValueError("min_pts must be >= 2")

    def label(self) -> str:
        return f"eps={self.epsilon:g};minpts={self.min_pts}"


# ---------------------------------------------------------------- isolation forest

def harmonic(k) -> np.ndarray:
    """Exact harmonic number H(k) for real k >= 1, via the digamma function."""
    return digamma(np.asarray(k, dtype=float) + 1.0) + EULER_GAMMA


def average_path_length(n) -> np.ndarray:
    """Normalizer c(n) = 2 H(n-1) - 2 (n-1)/n, with c(n) = 0 for n <= 1."""
    n = np.asarray(n, dtype=float)
    out = np.zeros_like(n)
    big = n > 1
    m = n[big]
    out[big] = 2.0 * harmonic(m - 1.0) - 2.0 * (m - 1.0) / m
    return out


def score_from_path_length(mean_path, n) -> np.ndarray:
    """Isolation score 2^(-E[h] / c(n))."""
    return np.power(2.0, -np.asarray(mean_path, dtype=float) / average_path_length(n))


class _Tree:
    """Isolation tree stored as flat node arrays; feature -1 marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "size")

    def __init__(self, X: np.ndarray, height_limit: int, rng: np.random.Generator):
        feature, threshold, left, right, size = [], [], [], [], []

        def new_node(n):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            size.append(n)
            return len(size) - 1

        stack = [(new_node(len(X)), np.arange(len(X)), 0)]
        while stack:
            node, idx, depth = stack.pop()
            if depth >= height_limit or len(idx) <= 1:
                continue
            sub = X[idx]
            lo, hi = sub.min(axis=0), sub.max(axis=0)
            splittable = np.flatnonzero(hi > lo)
            if splittable.size == 0:
                continue
            q = splittable[rng.integers(splittable.size)]
            p = rng.uniform(lo[q], hi[q])
            go_left = sub[:, q] < p
            feature[node] = int(q)
            threshold[node] = float(p)
            lnode = new_node(int(go_left.sum()))
            rnode = new_node(len(idx) - size[lnode])
            left[node], right[node] = lnode, rnode
            stack.append((lnode, idx[go_left], depth + 1))
            stack.append((rnode, idx[~go_left], depth + 1))

        self.feature = np.array(feature, dtype=np.intp)
        self.threshold = np.array(threshold)
        self.left = np.array(left, dtype=np.intp)
        self.right = np.array(right, dtype=np.intp)
        self.size = np.array(size)

    def path_length(self, X: np.ndarray) -> np.ndarray:
        rows = np.arange(len(X))
        node = np.zeros(len(X), dtype=np.intp)
        depth = np.zeros(len(X))
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            x = X[rows, np.where(active, feat, 0)]
            nxt = np.where(x < self.threshold[node], self.left[node], self.right[node])
            node = np.where(active, nxt, node)
            depth += active
        return depth + average_path_length(self.size[node])


def isolation_scores(dataset: Dataset, params: IsolationForestParams) -> np.ndarray:
    """Isolation score in (0, 1) for every timeslot; higher is more anomalous.

    Tree i is grown from the i-th child of ``SeedSequence(params.seed)``, so the
    result depends only on the seed, not on how trees are scheduled.
    """
    X = np.ascontiguousarray(dataset.values.T)
    n_slots = X.shape[0]
    psi = params.subsample_size
    if psi is None:
        psi = min(DEFAULT_SUBSAMPLE, n_slots)
    if psi > n_slots:
        raise KpiRankError(f"subsample_size {psi} exceeds the number of timeslots {n_slots}")
    height_limit = math.ceil(math.log2(psi))

    total = np.zeros(n_slots)
    for child in np.random.SeedSequence(params.seed).spawn(params.n_trees):
        rng = np.random.default_rng(child)
        sample = rng.choice(n_slots, size=psi, replace=False)
        total += _Tree(X[sample], height_limit, rng).path_length(X)
    return score_from_path_length(total / params.n_trees, psi)


def n_contaminated(fraction: float, n_slots: int) -> int:
    """ceil(fraction * T), guarded against binary round-off (0.07 * 100 -> 7)."""
    return min(n_slots, math.ceil(round(fraction * n_slots, 9)))


def elbow_index(sorted_desc: np.ndarray) -> int:
    """Position of the point farthest from the chord joining first and last values."""
    y = np.asarray(sorted_desc, dtype=float)
    n = len(y)
    if n < 3:
        return n - 1
    x = np.arange(n, dtype=float)
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    dist = np.abs(dy * x - dx * y + x[-1] * y[0] - y[-1] * x[0]) / math.hypot(dx, dy)
    interior = dist[1:-1]
    if interior.max() <= 0:
        return n - 1
    return 1 + int(np.argmax(interior))


def if_detect(scores, policy: ThresholdPolicy) -> AnomalyVector:
    scores = np.asarray(scores, dtype=float)
    n_slots = scores.shape[0]
    if n_slots == 0:
        raise KpiRankError("empty score vector")
    a = np.zeros(n_slots, dtype=np.int8)
    if isinstance(policy, Contamination):
        k = n_contaminated(policy.fraction, n_slots)
        # stable sort on -score: equal scores keep lower slot index first
        a[np.argsort(-scores, kind="stable")[:k]] = 1
    elif isinstance(policy, StaticScore):
        a[scores > policy.theta] = 1
    elif isinstance(policy, DynamicElbow):
        k = max(1, math.ceil(round(policy.top_fraction * n_slots, 9)))
        top = np.sort(scores)[::-1][:k]
        cut = top[elbow_index(top)]
        a[scores >= cut] = 1
    else:
        raise TypeError(f"unknown threshold policy {policy!r}")
    return AnomalyVector(a, source="if")


# ---------------------------------------------------------------- DBSCAN

def _row_chunks(n_rows: int, n_cols: int, budget: int = 4_000_000):
    step = max(1, budget // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield start, min(n_rows, start + step)


def _distance_block(Xa: np.ndarray, Xb: np.ndarray, sq_b: np.ndarray) -> np.ndarray:
    sq_a = np.einsum("ij,ij->i", Xa, Xa)
    d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (Xa @ Xb.T)
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2, out=d2)


def core_distances(X: np.ndarray, min_pts_values: Sequence[int]) -> np.ndarray:
    """Distance to the k-th nearest point (the point itself counts as the first).

    Returns shape (len(min_pts_values), T); entries are inf when k > T.
    """
    ks = np.asarray(min_pts_values, dtype=int)
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    out = np.full((len(ks), n), np.inf)
    kmax = int(min(ks.max(), n))
    valid = ks <= n
    for lo, hi in _row_chunks(n, n):
        d = _distance_block(X[lo:hi], X, sq)
        d[np.arange(hi - lo), np.arange(lo, hi)] = 0.0
        nearest = np.sort(np.partition(d, kmax - 1, axis=1)[:, :kmax], axis=1)
        out[valid, lo:hi] = nearest[:, ks[valid] - 1].T
    return out


def dbscan_noise_grid(dataset: Dataset, epsilons: Sequence[float], min_pts_values: Sequence[int]) -> np.ndarray:
    """Noise masks for every (min_pts, epsilon) pair at the cost of a few distance sweeps.

    A slot i is in a cluster iff some slot j (possibly i) is a core point within
    epsilon of it, i.e. iff  min_j max(core_dist_j, d_ij) <= epsilon.  That
    quantity does not depend on epsilon, so one sweep per min_pts serves every
    epsilon.  Returns a boolean array of shape (len(min_pts_values), len(epsilons), T).
    """
    X = np.ascontiguousarray(dataset.values.T)
    n = X.shape[0]
    eps = np.asarray(epsilons, dtype=float)
    cd = core_distances(X, min_pts_values)
    sq = np.einsum("ij,ij->i", X, X)
    reach = np.full((len(cd), n), np.inf)
    for lo, hi in _row_chunks(n, n):
        d = _distance_block(X[lo:hi], X, sq)
        d[np.arange(hi - lo), np.arange(lo, hi)] = 0.0
        for m, core in enumerate(cd):
            reach[m, lo:hi] = np.maximum(d, core[None, :]).min(axis=1)
    return reach[:, None, :] > eps[None, :, None]


def dbscan_detect(dataset: Dataset, params: DbscanParams) -> AnomalyVector:
    """Flag DBSCAN noise slots (neither core nor within epsilon of a core slot)."""
    noise = dbscan_noise_grid(dataset, [params.epsilon], [params.min_pts])[0, 0]
    return AnomalyVector(noise.astype(np.int8), source="dbscan")


def dbscan_labels(X: np.ndarray, epsilon: float, min_pts: int) -> np.ndarray:
    """Classic cluster expansion over the rows of X; -1 marks noise.

    Quadratic memory: meant for moderate T. Cluster ids depend on visit order,
    the noise set does not.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    neighbors = [np.flatnonzero(row <= epsilon) for row in _distance_block(X, X, sq)]
    for i in range(n):
        if i not in neighbors[i]:
            neighbors[i] = np.append(neighbors[i], i)
    core = np.array([len(nb) >= min_pts for nb in neighbors])
    labels = np.full(n, -1)
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cluster
        frontier = [i]
        while frontier:
            p = frontier.pop()
            if not core[p]:
                continue
            for q in neighbors[p]:
                if labels[q] == -1:
                    labels[q] = cluster
                    frontier.append(q)
        cluster += 1
    return labels


# ---------------------------------------------------------------- ensemble

def usable(a: AnomalyVector) -> bool:
    """Feature scoring needs at least one anomalous and one normal slot."""
    return 0 < a.n_anomalous < len(a)


def ensemble_select(
    candidates: Sequence[tuple[AnomalyVector, str]],
    case,
    fs: Callable | str = "fsa",
) -> AnomalyVector:
    """Ideal ensemble: the candidate whose downstream ranking scores best against the labels.

    Reads the ground truth, so it is an upper bound rather than a deployable
    detector. Candidates flagging no slot (or every slot) are skipped; ties go
    to the earlier candidate.
    """
    from .ingest import standardize
    from .metrics import ndcg
    from .model import rank_from_scores
    from .score import scoring_function

    if not candidates:
        raise KpiRankError("ensemble needs at least one candidate")
    score_fn = scoring_function(fs) if isinstance(fs, str) else fs
    x = case.dataset if case.dataset.standardized else standardize(case.dataset)
    best, best_value = None, -np.inf
    for a, _tag in candidates:
        if not usable(a):
            continue
        value = ndcg(rank_from_scores(score_fn(x, a), x.feature_names), case.gt)
        if value > best_value:
            best, best_value = a, value
    if best is None:
        raise NoDetectionError("every ensemble candidate flagged no slot or every slot")
    return best
