"""
Learning from solved tickets
============================

In the EK suite every case has a single root-cause KPI whose effects show up
in symptom KPIs shared across routers. Counting how often each KPI was
flagged (and how often it was ignored despite scoring high) lets later cases
push causes up and symptoms down.
"""
import numpy as np

from kpirank import EkGains, ek_leave_one_out, evaluate_suite, generate_suite, gamma_sweep
from kpirank.synth import SuiteRanges

cases = generate_suite(16, SuiteRanges.small(), master_seed=0, mode="ek")

# every case gets a base built from the other 15, so its own labels never leak
kbs = ek_leave_one_out(cases)
kb = kbs[cases[0].case_id]
for name in sorted(kb)[:6]:
    c = kb[name]
    print(f"{name:28s} n={c.n:2d}  K+={c.k_plus:.2f}  K-={c.k_minus:.2f}")

plain = evaluate_suite(cases, "oracle", "fsa")
biased = evaluate_suite(cases, "oracle", "fsa", kbs=kbs, gains=EkGains(1.0, 0.0))
print("mean nDCG without EK", round(np.mean([r.ndcg for r in plain]), 3))
print("mean nDCG with EK   ", round(np.mean([r.ndcg for r in biased]), 3))

for gamma, mode, value in gamma_sweep(cases, kbs, ("plus-only", "minus-only"), (0.0, 0.2, 1.0, 5.0)):
    print(f"{mode:10s} gamma={gamma:<4g} {value:.3f}")
