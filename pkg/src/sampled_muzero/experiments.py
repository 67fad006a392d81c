"""Desk-scale experiment setups shared by the command line, the tests and the demos.

Each ``make_*`` function builds an environment, each ``evaluate_*`` function
scores a trained :class:`~sampled_muzero.learner.TabularAgent` against the
matching oracle, and each ``default_*`` function returns the search and
training settings used for that environment.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Callable, Optional

import numpy as np

from .core import RngLike, as_generator
from .envs.bandit import ContinuousBandit, FactoredActionCodec, FactoredBandit
from .envs.gridworld import GridWorld, policy_return, value_iteration
from .envs.tictactoe import TicTacToe, minimax
from .learner import TabularAgent, TrainConfig, act, train
from .mcts import SearchConfig

GRID_WALLS = frozenset({(1, 1), (2, 3), (3, 1)})


def make_gridworld() -> GridWorld:
    """5x5 grid, goal in the far corner, three walls, random start cells."""
    return GridWorld(5, 5, goal=(4, 4), walls=GRID_WALLS)


def make_bandit(seed: int, dims: int = 6, bins: int = 7) -> FactoredBandit:
    """Factored continuous bandit whose optimum lies on bin centers drawn from ``seed``."""
    codec = FactoredActionCodec(dims, bins)
    return FactoredBandit(ContinuousBandit.on_centers(codec, np.random.default_rng(seed)), codec)


def default_gridworld_settings() -> tuple[SearchConfig, TrainConfig]:
    return SearchConfig(), TrainConfig(episodes=1500, lr_pi=0.3)


def default_bandit_settings(k: int = 5, prior_mode: str = "pi_hat_beta") -> tuple[SearchConfig, TrainConfig]:
    # a smaller c1 lets the small value gaps between sibling bins outweigh the prior
    search = SearchConfig(num_simulations=100, k_samples=k, gamma=1.0, c1=0.5, root_q_init=True,
                          prior_mode=prior_mode)
    return search, TrainConfig(episodes=12000, n_step=6, discount=1.0, lr_pi=0.3, lr_v=0.1, replay_per_episode=4)


def default_tictactoe_settings(k: int = 9, exhaustive: bool = False) -> tuple[SearchConfig, TrainConfig]:
    search = SearchConfig(k_samples=k, gamma=1.0, c1=0.5, exhaustive_mode=exhaustive, value_bounds=(-1.0, 1.0))
    return search, TrainConfig(episodes=6000, n_step=9, discount=1.0, lr_pi=0.6, lr_v=0.2, opening_plies=2)


def evaluation_config(config: SearchConfig) -> SearchConfig:
    """The same search without root exploration noise."""
    return replace(config, dirichlet_fraction=0.0)


# GridWorld


def greedy_value_errors(agent: TabularAgent, env: GridWorld, gamma: float) -> dict:
    """Relative shortfall of the agent's greedy policy against value iteration, per non-goal cell."""
    values, _ = value_iteration(env, gamma)
    errors = {}
    for cell in env.free_cells():
        if cell == env.goal:
            continue
        got = policy_return(env, cell, lambda c: agent.greedy_action(env.key(c)), gamma)
        errors[cell] = (values[cell] - got) / abs(values[cell])
    return errors


def evaluate_gridworld(agent: TabularAgent, env: GridWorld, gamma: float, tol: float = 0.01) -> float:
    """Fraction of cells whose greedy value is within ``tol`` (relative) of the optimum."""
    errors = greedy_value_errors(agent, env, gamma)
    return float(np.mean([e <= tol for e in errors.values()]))


# Bandit


def evaluate_bandit(agent: TabularAgent, env: FactoredBandit, config: SearchConfig, episodes: int = 5,
                    seed: int = 10_000) -> float:
    """Mean reward of evaluation-mode episodes (most-visited action, no noise)."""
    cfg = evaluation_config(config)
    returns = [act(agent, env, cfg, seed + i, evaluation=True).episode_return for i in range(episodes)]
    return float(np.mean(returns))


# Tic-tac-toe


def random_opponent(state, gen: np.random.Generator) -> int:
    return int(gen.choice(np.flatnonzero(np.asarray(state) == 0)))


def minimax_opponent(state, gen: np.random.Generator) -> int:
    """Perfect play; ties between optimal moves are broken uniformly at random."""
    _, moves = minimax(state)
    return int(gen.choice(moves))


def play_match(agent: TabularAgent, env: TicTacToe, config: SearchConfig, opponent: Callable, games: int,
               rng: RngLike) -> dict:
    """Evaluation games against ``opponent``; the agent alternates between X and O.

    Returns counts of agent wins, draws and losses.
    """
    gen = as_generator(rng)
    cfg = evaluation_config(config)
    tally = {"wins": 0, "draws": 0, "losses": 0}
    for g in range(games):
        player = g % 2
        traj = act(agent, env, cfg, gen, evaluation=True, opponent=opponent, agent_player=player)
        last = traj.steps[-1]
        if last.reward > 0:
            tally["wins" if last.to_play == player else "losses"] += 1
        else:
            tally["draws"] += 1
    return tally


def tictactoe_opponents(random_every: int = 0) -> Callable:
    """Training schedule: self-play, with every ``random_every``-th episode against a random mover.

    The agent's colour alternates across the random-opponent episodes. Off by
    default: values learned against a random mover are optimistic and leak
    into self-play through the shared value table.
    """
    def schedule(episode: int):
        if random_every and episode % random_every == 0:
            return random_opponent, (episode // random_every) % 2
        return None, 0
    return schedule


def train_tictactoe(search: SearchConfig, settings: TrainConfig, rng: RngLike,
                    evaluate: Optional[Callable] = None, random_every: int = 0):
    """Self-play training; ``settings.opening_plies`` randomizes the openings for coverage."""
    env = TicTacToe()
    return train(env, search, settings, rng, evaluate=evaluate, opponent_for=tictactoe_opponents(random_every))
