"""Train the tabular agent on a 5x5 maze and compare its greedy policy with value iteration.

Run: python demos/gridworld_training.py
"""
from dataclasses import replace

from sampled_muzero.core import RngSeed
from sampled_muzero.experiments import default_gridworld_settings, evaluate_gridworld, greedy_value_errors, make_gridworld
from sampled_muzero.learner import train

env = make_gridworld()
search, settings = default_gridworld_settings()
settings = replace(settings, eval_every=250)
agent, curve = train(env, search, settings, RngSeed(0),
                     evaluate=lambda a, _: evaluate_gridworld(a, env, settings.discount))
for episode, score in curve:
    print(f"episode {episode:>5}: {score:.0%} of cells within 1% of optimal")
worst = max(greedy_value_errors(agent, env, settings.discount).items(), key=lambda kv: kv[1])
print("worst cell:", worst)
