"""Ranking quality against the expert's flags: reading effort and nDCG."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KpiRankError
from .model import GroundTruth, Ranking


def _anomalous_positions(ranking: Ranking, gt: GroundTruth) -> np.ndarray:
    flagged = gt.anomalous_mask()
    if len(flagged) != len(ranking.order):
        raise KpiRankError(f"ranking has {len(ranking.order)} features, ground truth {len(flagged)}")
    if not flagged.any():
        raise KpiRankError("ground truth flags no feature; metrics are undefined")
    return np.sort(ranking.positions()[flagged])


def reading_effort(ranking: Ranking, gt: GroundTruth) -> tuple[int, int, int]:
    """(m, t, e): depth of the last flagged KPI, number flagged, interlopers above it."""
    pos = _anomalous_positions(ranking, gt)
    m, t = int(pos[-1]), len(pos)
    return m, t, m - t


def discount(positions) -> np.ndarray:
    return 1.0 / np.log2(np.asarray(positions, dtype=float) + 1.0)


def ndcg(ranking: Ranking, gt: GroundTruth) -> float:
    """Binary-relevance nDCG; the ideal places all t flagged KPIs first."""
    pos = _anomalous_positions(ranking, gt)
    dcg = discount(pos).sum()
    idcg = discount(np.arange(1, len(pos) + 1)).sum()
    return float(dcg / idcg)


@dataclass(frozen=True)
class MetricsRow:
    case_id: str
    ad_tag: str
    fs_tag: str
    ek_tag: str
    ndcg: float
    m: int
    t: int
    e: int
    f: int
    fallback: bool = False

    def __post_init__(self):
        if not (self.t <= self.m <= self.f and self.e == self.m - self.t):
            raise ValueError(f"inconsistent reading effort m={self.m}, t={self.t}, e={self.e}, f={self.f}")
        if not 0.0 <= self.ndcg <= 1.0 + 1e-12:
            raise ValueError(f"nDCG out of range: {self.ndcg}")

    @property
    def config(self) -> str:
        return f"{self.ad_tag}/{self.fs_tag}/{self.ek_tag}"


METRICS_HEADER = "case_id,ad,fs,ek,ndcg,reading_effort,t,e,f"


def write_metrics_csv(rows, path) -> None:
    """Rows are sorted by (case_id, tags) so output is independent of evaluation order."""
    rows = sorted(rows, key=lambda r: (r.case_id, r.ad_tag, r.fs_tag, r.ek_tag))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in rows:
            fs = f"{r.fs_tag}(fallback)" if r.fallback else r.fs_tag
            fh.write(f"{r.case_id},{r.ad_tag},{fs},{r.ek_tag},{r.ndcg:.6f},{r.m},{r.t},{r.e},{r.f}\n")
