"""
How many hyperparameter tests does a case need?
===============================================

Every detector combo in the grid is scored on every case. Visiting the grid
in random order and keeping the best combo so far gives a tuning curve: the
normalized nDCG reached after k tests.
"""
from kpirank import dbscan_grid, grid_search, if_grid, randomized_tuning
from kpirank.synth import SuiteRanges, generate_suite
from kpirank.tune import evaluate_grid

cases = generate_suite(8, SuiteRanges.small(), master_seed=1)

for grid in (if_grid(), dbscan_grid()):
    result = evaluate_grid(cases, grid, seed=1)
    per_case, (combo, mean) = grid_search(result)
    print(f"{grid.algorithm}: {len(grid)} combos, single best {combo.label()} (mean nDCG {mean:.3f})")
    print("  per-case best mean", round(sum(v for _, v in per_case.values()) / len(per_case), 3))
    curve = randomized_tuning(result, trials=100, seed=1)
    for k in sorted({1, 3, max(1, len(grid) // 20), len(grid)}):
        print(f"  after {k:3d} tests: {curve.value_at(k):.3f} +- {curve.stderr[k - 1]:.3f}")
