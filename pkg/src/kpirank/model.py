"""Core domain types and ranking construction.

Matrices are always oriented features x timeslots (one row per KPI).
All types are frozen; the numpy arrays they hold are marked read-only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError

AD_SOURCES = ("oracle", "if", "dbscan", "ensemble")
SCORE_POLICIES = ("fsa", "fsr", "ek-adjusted", "alphabetical")


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """F x T matrix of KPI values with names and timestamps."""

    feature_names: tuple[str, ...]
    timestamps: tuple
    values: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        names = tuple(self.feature_names)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        values = _frozen(self.values, float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise DimensionError(f"values must be 2-D, got shape {values.shape}")
        n_features, n_slots = values.shape
        if n_features < 1 or n_slots < 2:
            raise DimensionError(f"need F >= 1 and T >= 2, got F={n_features}, T={n_slots}")
        if len(names) != n_features:
            raise DimensionError(f"{len(names)} feature names for {n_features} rows")
        if len(self.timestamps) != n_slots:
            raise DimensionError(f"{len(self.timestamps)} timestamps for {n_slots} columns")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain NaN or infinite entries")

    @property
    def n_features(self) -> int:
        return self.values.shape[0]

    @property
    def n_slots(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.timestamps == other.timestamps
            and self.standardized == other.standardized
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Binary F x T matrix of expert flags."""

    g: np.ndarray
    dataset_id: str = ""

    def __post_init__(self):
        g = np.asarray(self.g)
        if g.ndim != 2:
            raise DimensionError(f"ground truth must be 2-D, got shape {g.shape}")
        if not np.isin(g, (0, 1)).all():
            raise ValueError("ground truth must be binary")
        object.__setattr__(self, "g", _frozen(g, np.int8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.g.shape

    def anomalous_features(self) -> np.ndarray:
        """Indices j with at least one flagged timeslot."""
        return np.flatnonzero(self.g.sum(axis=1) > 0)

    def anomalous_mask(self) -> np.ndarray:
        return self.g.sum(axis=1) > 0

    def __eq__(self, other):
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return self.dataset_id == other.dataset_id and np.array_equal(self.g, other.g)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class AnomalyVector:
    """Length-T binary vector marking anomalous timeslots."""

    a: np.ndarray
    source: str = "oracle"

    def __post_init__(self):
        a = np.asarray(self.a)
        if a.ndim != 1:
            raise DimensionError("anomaly vector must be 1-D")
        if not np.isin(a, (0, 1)).all():
            raise ValueError("anomaly vector must be binary")
        object.__setattr__(self, "a", _frozen(a, np.int8))

    @property
    def n_anomalous(self) -> int:
        return int(self.a.sum())

    def __len__(self):
        return self.a.shape[0]

    def __eq__(self, other):
        if not isinstance(other, AnomalyVector):
            return NotImplemented
        return self.source == other.source and np.array_equal(self.a, other.a)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Per-feature anomaly scores."""

    scores: np.ndarray
    policy: str = "fsa"

    def __post_init__(self):
        s = _frozen(self.scores, float)
        if s.ndim != 1:
            raise DimensionError("scores must be 1-D")
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return self.scores.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ScoreVector):
            return NotImplemented
        return self.policy == other.policy and np.array_equal(self.scores, other.scores)

    __hash__ = None


@dataclass(frozen=True)
class Ranking:
    """Feature order induced by a score vector; position 0 holds the top feature."""

    order: tuple[int, ...]
    scores: ScoreVector = field(compare=False)
    feature_names: tuple[str, ...] = field(default=(), compare=False)

    @property
    def names(self) -> list[str]:
        return [self.feature_names[i] for i in self.order]

    def positions(self) -> np.ndarray:
        """1-based rank position of every feature index."""
        pos = np.empty(len(self.order), dtype=int)
        pos[list(self.order)] = np.arange(1, len(self.order) + 1)
        return pos


def rank_from_scores(scores: ScoreVector | Sequence[float], feature_names: Sequence[str]) -> Ranking:
    """Sort features by decreasing score, breaking ties by ascending name."""
    if not isinstance(scores, ScoreVector):
        scores = ScoreVector(np.asarray(scores, dtype=float))
    names = tuple(feature_names)
    if len(scores) != len(names):
        raise DimensionError(f"{len(scores)} scores for {len(names)} feature names")
    s = scores.scores
    # lexsort: last key is primary
    name_rank = np.argsort(np.array(names, dtype=object), kind="stable")
    name_key = np.empty(len(names), dtype=int)
    name_key[name_rank] = np.arange(len(names))
    order = np.lexsort((name_key, -s))
    return Ranking(tuple(int(i) for i in order), scores, names)


def derive_anomalous_timeslots(gt: GroundTruth) -> AnomalyVector:
    """a_t = 1 iff at least one feature is flagged at slot t."""
    return AnomalyVector((gt.g.sum(axis=0) > 0).astype(np.int8), source="oracle")
