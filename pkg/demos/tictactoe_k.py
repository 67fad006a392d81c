"""Tic-tac-toe with K = 3, 5 sampled actions and the full K = 9 search.

Run: python demos/tictactoe_k.py [episodes]
"""
import sys
from dataclasses import replace

from sampled_muzero.core import RngSeed
from sampled_muzero.envs import TicTacToe
from sampled_muzero.experiments import (default_tictactoe_settings, minimax_opponent, play_match, random_opponent,
                                        train_tictactoe)

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
env = TicTacToe()
for k, exhaustive in ((9, True), (5, False), (3, False)):
    search, settings = default_tictactoe_settings(k, exhaustive)
    agent, _ = train_tictactoe(search, replace(settings, episodes=episodes), RngSeed(0, k))
    vs_random = play_match(agent, env, search, random_opponent, 200, RngSeed(1))
    vs_minimax = play_match(agent, env, search, minimax_opponent, 100, RngSeed(2))
    print(f"K={k}: vs random {vs_random}, vs minimax {vs_minimax}")
