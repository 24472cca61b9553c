"""Attention focus for network troubleshooting.

Rank the KPIs of a multivariate router time series so that the ones an
expert would flag come first: detect anomalous timeslots, score each KPI by
its deviation inside them, optionally bias the scores with knowledge learned
from solved cases, and measure the ranking with nDCG and reading effort.
"""
from .detect import (
    Contamination,
    DbscanParams,
    DynamicElbow,
    IsolationForestParams,
    StaticScore,
    dbscan_detect,
    ensemble_select,
    if_detect,
    isolation_scores,
)
from .errors import (
    DimensionError,
    KpiRankError,
    NoDetectionError,
    ParseError,
    StateError,
    WindowError,
)
from .evaluation import EvalConfig, evaluate, evaluate_suite, gamma_sweep, relative_impact
from .expert import Counts, EkGains, KnowledgeBase, ek_apply, ek_leave_one_out, ek_merge, ek_update
from .ingest import CaseBundle, corpus_stats, load_case, standardize, write_case
from .metrics import MetricsRow, ndcg, reading_effort
from .model import (
    AnomalyVector,
    Dataset,
    GroundTruth,
    Ranking,
    ScoreVector,
    derive_anomalous_timeslots,
    rank_from_scores,
)
from .score import baseline_alphabetical, baseline_random_expectation, fsa, fsr
from .synth import SuiteRanges, SynthSpec, generate_case, generate_suite, load_suite
from .tune import GridSpec, TuningCurve, dbscan_grid, grid_search, if_grid, randomized_tuning

__version__ = "0.1.0"
