"""How fast the sample-based improved policy approaches the exact one as K grows.

Run: python demos/operator_convergence.py
"""
import numpy as np

from sampled_muzero.core import RngSeed
from sampled_muzero.stats import default_operators, random_instance, run_operator_convergence_suite, variance_rate_fit

instance = random_instance(100, np.random.default_rng(0))
k_values = [30, 100, 300, 1000]
reports = run_operator_convergence_suite(instance, default_operators(), k_values, 500, RngSeed(0))

print(f"{'family':<20}{'K':>6}{'KL(mean||exact)':>18}{'var':>12}{'sigma2/K':>12}")
for name, rep in reports.items():
    for k in k_values:
        print(f"{name:<20}{k:>6}{rep.kl[k]:>18.2e}{rep.estimator_variance[k]:>12.3e}{rep.sigma2_over_k(k):>12.3e}")
    print(f"{name:<20} log-log slope of atom variance vs K: {variance_rate_fit(rep):.3f}\n")
