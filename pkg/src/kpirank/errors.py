"""Exception hierarchy shared by every module."""


class KpiRankError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(KpiRankError, ValueError):
    """Array or list lengths that must agree do not."""


class ParseError(KpiRankError, ValueError):
    """An input file does not follow the expected CSV/JSON layout."""


class StateError(KpiRankError, ValueError):
    """An operation was applied to data in the wrong state (e.g. standardizing twice)."""


class WindowError(KpiRankError, ValueError):
    """Feature scoring needs both an anomalous and a normal window."""


class NoDetectionError(KpiRankError, ValueError):
    """No anomaly detector produced a usable anomaly vector."""
