"""Search visit counts on a one-step problem approach the regularized policy pi_bar.

Run: python demos/pi_bar_tracking.py
"""
import numpy as np

from sampled_muzero.core import RngSeed
from sampled_muzero.mcts import run_search
from sampled_muzero.stats import FrozenProblem, pi_bar_target, tv_distance

problem = FrozenProblem.random(10, np.random.default_rng(3))
print("prior pi:", np.round(problem.pi, 3))
print("true Q:  ", np.round(problem.q, 3))
for n in (25, 100, 400, 1600, 6400):
    config = problem.search_config(n, exhaustive_mode=True)
    visits = run_search(0, problem.model(), config, RngSeed(0)).full_policy(10)
    target = pi_bar_target(problem.pi, problem.q, n, config)
    print(f"N={n:>5}  TV(visits, pi_bar)={tv_distance(visits, target):.4f}  pi_bar={np.round(target, 3)}")

# With K < |A| each search only sees a sample of the actions.
config = problem.search_config(50, k_samples=5)
mean = np.mean([run_search(0, problem.model(), config, RngSeed(s)).full_policy(10) for s in range(300)], axis=0)
print("K=5, N=50, mean visit distribution over 300 seeds:", np.round(mean, 3))
