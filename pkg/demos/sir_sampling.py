"""Two-stage sampling: draw K candidates, then resample one in proportion to the improved weights.

Run: python demos/sir_sampling.py
"""
import numpy as np

from sampled_muzero.core import RngSeed, sample_actions
from sampled_muzero.operators import Family, ImprovementOperator, QEstimate, improve_exact, improve_sampled, sir_resample
from sampled_muzero.stats import tv_distance

pi = np.array([0.5, 0.3, 0.2])
q = np.array([0.0, 1.0, 0.5])
op = ImprovementOperator(Family.MPO_EXP, tau=0.5)
exact = improve_exact(pi, q, op).probs
gen = RngSeed(0).generator()
for k in (1, 4, 16, 64):
    counts = np.zeros(3)
    for _ in range(20_000):
        s = sample_actions(pi, pi, k, gen)
        counts[sir_resample(improve_sampled(s, QEstimate(q[s.actions]), op), gen)] += 1
    print(f"K={k:>3}  marginal={np.round(counts / counts.sum(), 3)}  TV to exact={tv_distance(counts / counts.sum(), exact):.4f}")
print("exact improved policy:", np.round(exact, 3))
