"""Case files: loading, writing, standardization and corpus statistics.

File layout (both dataset and ground truth)::

    timestamp,kpi_a,kpi_b,...
    0,1.25,0.5,...
    1,1.5,0.25,...

Ground-truth cells are 0 or 1. Timestamps are integers or ISO-8601 strings
and must increase strictly; their spacing is ignored.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, KpiRankError, ParseError, StateError
from .model import Dataset, GroundTruth, derive_anomalous_timeslots

KPI_NAME_RE = re.compile(r"^[A-Za-z0-9._/-]+$")
STAT_LABELS = ("min", "q1", "median", "q3", "max")


@dataclass(frozen=True)
class CaseBundle:
    """One troubleshooting case: KPI data plus the expert's labels."""

    dataset: Dataset
    gt: GroundTruth
    case_id: str

    def __post_init__(self):
        if self.gt.shape != self.dataset.values.shape:
            raise DimensionError(
                f"ground truth shape {self.gt.shape} != dataset shape {self.dataset.values.shape}"
            )

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.dataset.feature_names


def _parse_timestamp(cell: str):
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        datetime.fromisoformat(cell)
    except ValueError as exc:
        raise ParseError(f"bad timestamp {cell!r}") from exc
    return cell


def _timestamp_key(ts):
    return ts if isinstance(ts, int) else datetime.fromisoformat(ts).timestamp()


def _read_table(path: Path, kind: str):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise ParseError(f"{kind} file not found: {path}") from exc
    if not rows:
        raise ParseError(f"{kind} file {path} is empty")
    header = rows[0]
    if not header or header[0] != "timestamp":
        raise ParseError(f"{path}: first header cell must be 'timestamp'")
    names = header[1:]
    if not names:
        raise ParseError(f"{path}: no KPI columns")
    for name in names:
        if not KPI_NAME_RE.match(name):
            raise ParseError(f"{path}: invalid KPI name {name!r}")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ParseError(f"{path}: duplicate KPI names {dupes}")
    timestamps = []
    cells = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        timestamps.append(_parse_timestamp(row[0]))
        cells.append(row[1:])
    keys = [_timestamp_key(ts) for ts in timestamps]
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise ParseError(f"{path}: timestamps must increase strictly")
    return names, timestamps, cells


def _to_float(cell: str, path: Path) -> float:
    try:
        value = float(cell)
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric cell {cell!r}") from exc
    if not np.isfinite(value):
        raise ParseError(f"{path}: non-finite cell {cell!r}")
    return value


def load_case(dataset_path, gt_path, case_id: str | None = None) -> CaseBundle:
    """Read a dataset CSV and its ground-truth CSV into a validated bundle."""
    dataset_path, gt_path = Path(dataset_path), Path(gt_path)
    names, timestamps, cells = _read_table(dataset_path, "dataset")
    gt_names, gt_timestamps, gt_cells = _read_table(gt_path, "ground truth")
    if gt_names != names:
        raise ParseError(f"header mismatch between {dataset_path} and {gt_path}")
    if gt_timestamps != timestamps:
        raise ParseError(f"timestamp mismatch between {dataset_path} and {gt_path}")
    if len(timestamps) < 2:
        raise ParseError(f"{dataset_path}: need at least 2 timeslots")

    values = np.array([[_to_float(c, dataset_path) for c in row] for row in cells]).T
    labels = np.empty((len(names), len(timestamps)), dtype=np.int8)
    for t, row in enumerate(gt_cells):
        for j, cell in enumerate(row):
            if cell not in ("0", "1"):
                raise ParseError(f"{gt_path}: non-binary label {cell!r}")
            labels[j, t] = cell == "1"

    if case_id is None:
        case_id = dataset_path.parent.name if dataset_path.stem == "data" else dataset_path.stem
    dataset = Dataset(names, timestamps, values)
    return CaseBundle(dataset, GroundTruth(labels, dataset_id=case_id), case_id)


def write_case(case: CaseBundle, dataset_path, gt_path) -> None:
    """Write a bundle in the layout read by :func:`load_case`.

    Floats are written with ``repr`` so a reload is bit-exact.
    """
    ds = case.dataset
    header = "timestamp," + ",".join(ds.feature_names) + "\n"
    values = ds.values.T.tolist()
    labels = case.gt.g.T.tolist()
    with open(dataset_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header)
        for ts, row in zip(ds.timestamps, values):
            fh.write(f"{ts}," + ",".join(map(repr, row)) + "\n")
    with open(gt_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header)
        for ts, row in zip(ds.timestamps, labels):
            fh.write(f"{ts}," + ",".join(map(str, row)) + "\n")


def standardize(dataset: Dataset) -> Dataset:
    """Z-score every KPI row with the population standard deviation.

    Constant rows become all zeros so the feature count never changes.
    """
    if dataset.standardized:
        raise StateError("dataset is already standardized")
    x = dataset.values
    mean = x.mean(axis=1, keepdims=True)
    centered = x - mean
    std = np.sqrt((centered**2).mean(axis=1, keepdims=True))
    constant = np.ptp(x, axis=1) == 0
    std[constant] = 1.0
    z = centered / std
    z[constant] = 0.0
    return Dataset(dataset.feature_names, dataset.timestamps, z, standardized=True)


@dataclass(frozen=True)
class CorpusStats:
    """Per-case dimensions and anomaly fractions with a five-number summary."""

    case_ids: tuple[str, ...]
    rows: np.ndarray
    columns: np.ndarray
    anomalous_timeslot_frac: np.ndarray
    anomalous_kpi_frac: np.ndarray
    summary: dict[str, dict[str, float]]
    totals: dict[str, float]

    def as_rows(self) -> list[tuple]:
        """Table rows ``(label, rows, columns, slot_frac, kpi_frac)``: cases, summary, total."""
        out = [
            (cid, int(r), int(c), float(a), float(k))
            for cid, r, c, a, k in zip(
                self.case_ids, self.rows, self.columns,
                self.anomalous_timeslot_frac, self.anomalous_kpi_frac,
            )
        ]
        for label in STAT_LABELS:
            s = self.summary
            out.append((label, s["rows"][label], s["columns"][label],
                        s["anomalous_timeslot_frac"][label], s["anomalous_kpi_frac"][label]))
        t = self.totals
        out.append(("total", t["rows"], t["columns"],
                    t["anomalous_timeslot_frac"], t["anomalous_kpi_frac"]))
        return out


def five_number_summary(values) -> dict[str, float]:
    """Min, quartiles (linear interpolation) and max."""
    q = np.percentile(np.asarray(values, dtype=float), [0, 25, 50, 75, 100])
    return dict(zip(STAT_LABELS, (float(v) for v in q)))


def corpus_stats(cases: Sequence[CaseBundle]) -> CorpusStats:
    if not cases:
        raise KpiRankError("corpus_stats needs at least one case")
    rows = np.array([c.dataset.n_slots for c in cases])
    cols = np.array([c.dataset.n_features for c in cases])
    n_slots_anom = np.array([derive_anomalous_timeslots(c.gt).n_anomalous for c in cases])
    n_kpi_anom = np.array([len(c.gt.anomalous_features()) for c in cases])
    slot_frac = n_slots_anom / rows
    kpi_frac = n_kpi_anom / cols
    summary = {
        "rows": five_number_summary(rows),
        "columns": five_number_summary(cols),
        "anomalous_timeslot_frac": five_number_summary(slot_frac),
        "anomalous_kpi_frac": five_number_summary(kpi_frac),
    }
    totals = {
        "rows": int(rows.sum()),
        "columns": int(cols.sum()),
        "anomalous_timeslot_frac": float(n_slots_anom.sum() / rows.sum()),
        "anomalous_kpi_frac": float(n_kpi_anom.sum() / cols.sum()),
    }
    return CorpusStats(
        tuple(c.case_id for c in cases), rows, cols, slot_frac, kpi_frac, summary, totals
    )


def write_corpus_stats(stats: CorpusStats, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("case,rows,columns,anomalous_timeslot_frac,anomalous_kpi_frac\n")
        for label, r, c, a, k in stats.as_rows():
            fh.write(f"{label},{_num(r)},{_num(c)},{a:.6f},{k:.6f}\n")


def _num(v) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:.6f}"
