"""A 6-dimensional continuous bandit played as six sequential 7-way choices, with either prior mode.

Run: python demos/continuous_bandit.py [episodes]
"""
import sys
from dataclasses import replace

from sampled_muzero.core import RngSeed
from sampled_muzero.experiments import default_bandit_settings, evaluate_bandit, make_bandit
from sampled_muzero.learner import train

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
env = make_bandit(0)
print("optimal bins:", env.codec.encode(env.bandit.a_star).tolist())
for mode in ("pi_hat_beta", "raw_pi"):
    search, settings = default_bandit_settings(k=5, prior_mode=mode)
    settings = replace(settings, episodes=episodes, eval_every=max(1, episodes // 5))
    _, curve = train(env, search, settings, RngSeed(0), evaluate=lambda a, _: evaluate_bandit(a, env, search))
    print(mode, [(e, round(r, 3)) for e, r in curve])
