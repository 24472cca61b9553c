"""
What the numbers mean
=====================

nDCG rewards flagged KPIs near the top with a log2 discount; reading effort
is the depth an operator must scroll to see every flagged KPI. A random
ordering is the floor any method must beat.
"""
import numpy as np

from kpirank import GroundTruth, Ranking, ScoreVector, ndcg, reading_effort
from kpirank.score import baseline_random_expectation

# six flagged KPIs at positions 1, 2, 3, 4, 6 and 8 of 39
f = 39
order = [0, 1, 2, 3, 6, 4, 7, 5] + list(range(8, f))
g = np.zeros((f, 2), dtype=np.int8)
g[:6, 0] = 1
ranking = Ranking(tuple(order), ScoreVector(np.zeros(f)), tuple(f"k{j}" for j in range(f)))
print("nDCG", round(ndcg(ranking, GroundTruth(g)), 4), "effort (m, t, e)", reading_effort(ranking, GroundTruth(g)))

# random orderings: expected effort has the closed form t(f+1)/(t+1)
for f, t in ((10, 1), (39, 6), (373, 10)):
    nd, effort = baseline_random_expectation(f, t, trials=20_000)
    print(f"f={f:3d} t={t:2d}  random nDCG {nd:.3f}  effort {effort:7.2f}  closed form {t * (f + 1) / (t + 1):7.2f}")
