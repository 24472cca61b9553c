"""
Finding the anomalous timeslots without labels
==============================================

Isolation forest scores each timeslot; a threshold policy turns scores into a
binary vector. DBSCAN instead flags the slots left out of every dense
cluster. The ideal ensemble picks, per case, whichever candidate ranks best.
"""
import numpy as np

from kpirank import (
    Contamination, DbscanParams, DynamicElbow, EvalConfig, IsolationForestParams,
    StaticScore, SynthSpec, dbscan_detect, evaluate, generate_case, if_detect,
    isolation_scores, standardize,
)

case = generate_case(SynthSpec(
    f=12, t_slots=600, n_anomalous_features=3, n_symptom_features=0,
    anomaly_window=(250, 20), shift_magnitude=8.0, noise_seed=7,
))
x = standardize(case.dataset)
truth = case.gt.g.any(axis=0)

scores = isolation_scores(x, IsolationForestParams(n_trees=200, seed=0))
print("score range", scores.min().round(3), scores.max().round(3))

for policy in (Contamination(0.05), StaticScore(0.6), DynamicElbow(0.1)):
    a = if_detect(scores, policy).a.astype(bool)
    print(f"{policy.label():20s} flagged {a.sum():3d}  hits {np.sum(a & truth):3d} of {truth.sum()}")

# radius is in standardized units and must sit just above typical neighbour distances
a = dbscan_detect(x, DbscanParams(epsilon=3.5, min_pts=20)).a.astype(bool)
print(f"{'dbscan eps=3.5 mp=20':20s} flagged {a.sum():3d}  hits {np.sum(a & truth):3d} of {truth.sum()}")

cfg = EvalConfig(if_params=IsolationForestParams(n_trees=200, seed=0), dbscan_params=DbscanParams(3.5, 20))
for ad in ("oracle", "if", "dbscan", "ensemble"):
    print(f"{ad:9s} nDCG {evaluate(case, ad, 'fsa', config=cfg).row.ndcg:.3f}")
