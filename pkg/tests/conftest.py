import numpy as np
import pytest

from kpirank.ingest import CaseBundle
from kpirank.model import Dataset, GroundTruth
from kpirank.synth import SuiteRanges, generate_suite
from kpirank.tune import dbscan_grid, evaluate_grid, if_grid

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def make_case(values, flagged_rows, window, names=None, case_id="c"):
    values = np.asarray(values, dtype=float)
    f, t = values.shape
    names = names or [f"k{j:02d}" for j in range(f)]
    g = np.zeros((f, t), dtype=np.int8)
    for j in flagged_rows:
        g[j, window] = 1
    return CaseBundle(Dataset(names, range(t), values), GroundTruth(g, case_id), case_id)


@pytest.fixture(scope="session")
def small_suite():
    return generate_suite(6, SuiteRanges.small(), master_seed=3)


@pytest.fixture(scope="session")
def default_suite():
    return generate_suite(28, master_seed=0)


@pytest.fixture(scope="session")
def ek_suite():
    return generate_suite(28, master_seed=0, mode="ek")


@pytest.fixture(scope="session")
def default_grids(default_suite):
    """IF and DBSCAN grid results on the default suite (tuning seed 0)."""
    return evaluate_grid(default_suite, if_grid(), seed=0), evaluate_grid(default_suite, dbscan_grid(), seed=0)
