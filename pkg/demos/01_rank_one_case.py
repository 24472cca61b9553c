"""
Ranking the KPIs of one case
============================

A router exports a few dozen counters. Two of them shift during an incident
and one more follows them as a symptom. We rank every KPI by how much its
mean moves between the anomalous and the normal timeslots.
"""
import numpy as np

from kpirank import SynthSpec, evaluate, generate_case

spec = SynthSpec(
    f=30, t_slots=500, n_anomalous_features=2, n_symptom_features=1,
    anomaly_window=(300, 40), shift_magnitude=6.0, noise_seed=1,
)
case = generate_case(spec)
print(case.dataset.values.shape, "features x timeslots")

# the oracle reads the anomalous timeslots straight from the labels
ev = evaluate(case, "oracle", "fsa")
flagged = set(np.array(case.feature_names)[case.gt.anomalous_features()])
for pos, name in enumerate(ev.ranking.names[:6], start=1):
    print(f"{pos:2d}  {name:40s} {'<- flagged' if name in flagged else ''}")
print(f"nDCG {ev.row.ndcg:.3f}, reading effort {ev.row.m} (t={ev.row.t}, e={ev.row.e})")

# rank differences instead of mean differences
print("fsr nDCG", round(evaluate(case, "oracle", "fsr").row.ndcg, 3))

# what a dashboard sorted by name would give
print("alphabetical nDCG", round(evaluate(case, "oracle", "alphabetical").row.ndcg, 3))
