"""Expert-knowledge base built from solved cases.

For every KPI name the base counts the cases it appeared in (n), the cases
where the expert flagged it (n_plus), and the cases where it was left
unflagged although it outscored some flagged KPI (n_minus).  Scores are then
biased by ``s * (1 + gamma_plus * K+ - gamma_minus * K-)`` with K+ = n_plus/n
and K- = n_minus/n.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, KpiRankError
from .model import ScoreVector, derive_anomalous_timeslots


@dataclass(frozen=True)
class Counts:
    n: int
    n_plus: int = 0
    n_minus: int = 0

    def __post_init__(self):
        if self.n < 1 or not (0 <= self.n_plus <= self.n) or not (0 <= self.n_minus <= self.n):
            raise ValueError(f"invalid counters {self}")

    @property
    def k_plus(self) -> float:
        return self.n_plus / self.n

    @property
    def k_minus(self) -> float:
        return self.n_minus / self.n

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.n + other.n, self.n_plus + other.n_plus, self.n_minus + other.n_minus)


class KnowledgeBase(Mapping):
    """Immutable mapping KPI name -> Counts."""

    def __init__(self, entries: Mapping[str, Counts] | None = None):
        self._entries = MappingProxyType(dict(sorted((entries or {}).items())))

    def __getitem__(self, name: str) -> Counts:
        return self._entries[name]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __eq__(self, other):
        if isinstance(other, KnowledgeBase):
            return dict(self._entries) == dict(other._entries)
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        return f"KnowledgeBase({dict(self._entries)!r})"

    def rates(self, names: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """(K+, K-) per name, zero for names the base has never seen."""
        k_plus = np.zeros(len(names))
        k_minus = np.zeros(len(names))
        for j, name in enumerate(names):
            c = self._entries.get(name)
            if c is not None:
                k_plus[j] = c.k_plus
                k_minus[j] = c.k_minus
        return k_plus, k_minus

    def to_json(self) -> str:
        payload = {
            name: {"n": c.n, "n_plus": c.n_plus, "n_minus": c.n_minus}
            for name, c in self._entries.items()
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "KnowledgeBase":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ValueError("knowledge base JSON must be an object")
        return cls({
            name: Counts(int(v["n"]), int(v["n_plus"]), int(v["n_minus"]))
            for name, v in raw.items()
        })

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "KnowledgeBase":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class EkGains:
    gamma_plus: float = 1.0
    gamma_minus: float = 0.0

    def __post_init__(self):
        for g in (self.gamma_plus, self.gamma_minus):
            if not (np.isfinite(g) and g >= 0):
                raise ValueError(f"gains must be finite and non-negative, got {g}")


def ek_update(kb: KnowledgeBase, case, scores: ScoreVector) -> KnowledgeBase:
    """Fold one solved case into the base; the input base is left untouched."""
    names = case.feature_names
    s = scores.scores
    if len(s) != len(names):
        raise DimensionError(f"{len(s)} scores for {len(names)} features")
    flagged = case.gt.anomalous_mask()
    threshold = s[flagged].min() if flagged.any() else None
    entries = dict(kb)
    for j, name in enumerate(names):
        plus = bool(flagged[j])
        minus = not plus and threshold is not None and s[j] > threshold
        delta = Counts(1, int(plus), int(minus))
        entries[name] = entries[name] + delta if name in entries else delta
    return KnowledgeBase(entries)


def ek_apply(kb: KnowledgeBase, scores: ScoreVector, names: Sequence[str], gains: EkGains) -> ScoreVector:
    """Bias scores by past flag/ignore rates; negative results are clamped to 0."""
    s = scores.scores
    if len(s) != len(names):
        raise DimensionError(f"{len(s)} scores for {len(names)} names")
    if len(kb) == 0 or (gains.gamma_plus == 0 and gains.gamma_minus == 0):
        return ScoreVector(s, policy="ek-adjusted")
    k_plus, k_minus = kb.rates(names)
    adjusted = s * (1.0 + gains.gamma_plus * k_plus - gains.gamma_minus * k_minus)
    return ScoreVector(np.maximum(adjusted, 0.0), policy="ek-adjusted")


def ek_merge(kbs: Iterable[KnowledgeBase]) -> KnowledgeBase:
    """Sum counters per name; equals the n-weighted average of the rates."""
    kbs = list(kbs)
    if not kbs:
        raise KpiRankError("nothing to merge")
    entries: dict[str, Counts] = {}
    for kb in kbs:
        for name, c in kb.items():
            entries[name] = entries[name] + c if name in entries else c
    return KnowledgeBase(entries)


def oracle_scores(case, fs: Callable | str = "fsa") -> ScoreVector:
    """Scores a solved ticket would carry: ground-truth anomalous slots + feature scoring."""
    from .ingest import standardize
    from .score import scoring_function

    score_fn = scoring_function(fs) if isinstance(fs, str) else fs
    x = case.dataset if case.dataset.standardized else standardize(case.dataset)
    return score_fn(x, derive_anomalous_timeslots(case.gt))


def case_contribution(case, fs: Callable | str = "fsa") -> KnowledgeBase:
    return ek_update(KnowledgeBase(), case, oracle_scores(case, fs))


def ek_leave_one_out(cases: Sequence, fs: Callable | str = "fsa") -> dict[str, KnowledgeBase]:
    """For every case, the base learned from all *other* cases."""
    if len(cases) < 2:
        raise KpiRankError("leave-one-out needs at least two cases")
    contributions = [case_contribution(c, fs) for c in cases]
    out = {}
    for i, case in enumerate(cases):
        out[case.case_id] = ek_merge(contributions[:i] + contributions[i + 1:])
    return out
