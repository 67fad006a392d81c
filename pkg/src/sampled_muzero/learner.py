"""Tabular outer loop: act with search, store trajectories, project onto visit counts."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .core import RngLike, as_generator
from .envs.base import SimulatorModel, masked_policy
from .mcts import SearchConfig, SearchResult, run_reference_search, run_search

CHECKPOINT_FORMAT = "sampled-muzero-tabular"
CHECKPOINT_VERSION = 1


class TabularAgent:
    """Policy and value tables keyed by environment state keys.

    Unseen states get a uniform policy and value 0.
    """

    def __init__(self, num_actions: int, lr_pi: float = 0.5, lr_v: float = 0.1):
        if not (0 < lr_pi <= 1 and 0 < lr_v <= 1):
            raise ValueError("learning rates must lie in (0, 1]")
        self.num_actions = num_actions
        self.lr_pi = lr_pi
        self.lr_v = lr_v
        self.policy_table: dict = {}
        self.value_table: dict = {}

    def policy(self, key) -> np.ndarray:
        row = self.policy_table.get(key)
        if row is None:
            return np.full(self.num_actions, 1.0 / self.num_actions)
        return row

    def value(self, key) -> float:
        return self.value_table.get(key, 0.0)

    def model(self, env) -> SimulatorModel:
        """Exact dynamics of ``env`` with this agent's tables as predictions."""
        return SimulatorModel(env, lambda e, s: self.policy(e.key(s)), lambda e, s: self.value(e.key(s)))

    def greedy_action(self, key, legal: Optional[np.ndarray] = None) -> int:
        p = self.policy(key)
        if legal is not None:
            p = masked_policy(p, legal)
        return int(np.argmax(p))


class UpdateTarget(NamedTuple):
    key: tuple
    actions: np.ndarray
    visit_probs: np.ndarray
    value: float


def update_policy_row(old: np.ndarray, actions, visit_probs, lr: float) -> np.ndarray:
    """Move ``old`` towards the visit distribution on the sampled actions.

    The target keeps the old row's mass on unsampled actions and spreads the
    old mass of the sampled actions according to the visit distribution.
    """
    actions = np.asarray(actions)
    target = old.copy()
    target[actions] = old[actions].sum() * np.asarray(visit_probs)
    new = (1.0 - lr) * old + lr * target
    return new / new.sum()


def update(agent: TabularAgent, batch) -> TabularAgent:
    """Apply one projection step per (state key, visit distribution, value target)."""
    for item in batch:
        key, actions, visit_probs, value_target = item
        agent.policy_table[key] = update_policy_row(agent.policy(key), actions, visit_probs, agent.lr_pi)
        old_v = agent.value(key)
        agent.value_table[key] = old_v + agent.lr_v * (value_target - old_v)
    return agent


@dataclass
class Step:
    key: tuple
    to_play: int
    result: Optional[SearchResult]
    action: int
    reward: float
    done: bool


@dataclass
class Trajectory:
    steps: list = field(default_factory=list)
    final_key: Optional[tuple] = None
    final_to_play: int = 0
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def episode_return(self) -> float:
        """Undiscounted sum of rewards (from the acting player's point of view at each step)."""
        return float(sum(s.reward for s in self.steps))


def _search(env, state, agent, config: SearchConfig, gen, reference: bool) -> SearchResult:
    search = run_reference_search if reference else run_search
    return search(state, agent.model(env), config, gen)


def act(agent: TabularAgent, env, config: SearchConfig, rng: RngLike, evaluation: bool = False,
        max_steps: int = 200, opponent: Optional[Callable] = None, agent_player: int = 0,
        reference: bool = False, random_plies: int = 0) -> Trajectory:
    """Play one episode with search at every agent decision.

    Training mode samples the executed action from the visit distribution;
    evaluation mode plays the most visited action. For two-player games an
    ``opponent(state, gen) -> action`` may control the non-agent player;
    without one the agent plays both sides (self-play). The first
    ``random_plies`` moves are uniformly random legal moves and carry no
    search result, so they produce no training targets.
    """
    gen = as_generator(rng)
    state = env.initial_state(gen)
    traj = Trajectory()
    for _ in range(max_steps):
        if env.is_terminal(state):
            break
        player = env.to_play(state)
        if len(traj.steps) < random_plies:
            result = None
            action = int(gen.choice(np.flatnonzero(env.legal_mask(state))))
        elif opponent is not None and player != agent_player:
            result = None
            action = int(opponent(state, gen))
        else:
            result = _search(env, state, agent, config, gen, reference)
            if evaluation:
                action = result.best_action()
            else:
                action = int(result.actions[gen.choice(len(result.actions), p=result.visit_distribution.probs)])
        next_state, reward, done = env.step(state, action)
        traj.steps.append(Step(env.key(state), player, result, action, reward, done))
        state = next_state
        if done:
            break
    else:
        traj.truncated = not env.is_terminal(state)
    traj.final_key = env.key(state)
    traj.final_to_play = env.to_play(state)
    return traj


def n_step_target(trajectory: Trajectory, t: int, n: int, gamma: float, agent: TabularAgent) -> float:
    """G_t = sum_{i<m} gamma^i r_{t+i} + gamma^m V(s_{t+m}), m = min(n, steps left).

    Rewards and the bootstrap value are sign-flipped when they belong to the
    other player. Nothing is bootstrapped past a terminal step.
    """
    steps = trajectory.steps
    if not 0 <= t < len(steps):
        raise IndexError("t outside the trajectory")
    me = steps[t].to_play
    g, discount = 0.0, 1.0
    end = min(t + n, len(steps))
    for i in range(t, end):
        s = steps[i]
        g += discount * (s.reward if s.to_play == me else -s.reward)
        discount *= gamma
        if s.done:
            return g
    if end < len(steps):
        nxt = steps[end]
        v = agent.value(nxt.key)
        return g + discount * (v if nxt.to_play == me else -v)
    if trajectory.truncated:
        v = agent.value(trajectory.final_key)
        return g + discount * (v if trajectory.final_to_play == me else -v)
    return g


def trajectory_targets(trajectory: Trajectory, n: int, gamma: float, agent: TabularAgent) -> list:
    out = []
    for t, step in enumerate(trajectory.steps):
        if step.result is None:
            continue
        r = step.result
        out.append(UpdateTarget(step.key, r.actions, r.visit_distribution.probs,
                                n_step_target(trajectory, t, n, gamma, agent)))
    return out


class ReplayBuffer:
    """FIFO store of the most recent trajectories with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: deque = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def add(self, trajectory: Trajectory) -> None:
        self._items.append(trajectory)

    def sample(self, count: int, rng: RngLike) -> list:
        if not self._items:
            return []
        gen = as_generator(rng)
        idx = gen.integers(len(self._items), size=count)
        return [self._items[i] for i in idx]


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 1000
    n_step: int = 5
    discount: float = 0.99
    lr_pi: float = 0.5
    lr_v: float = 0.1
    buffer_capacity: int = 2000
    replay_per_episode: int = 1
    max_steps: int = 200
    eval_every: int = 0
    eval_episodes: int = 10
    # self-play only: up to this many uniformly random opening moves per episode
    opening_plies: int = 0


def train(env, search_config: SearchConfig, train_config: TrainConfig, rng: RngLike,
          agent: Optional[TabularAgent] = None, evaluate: Optional[Callable] = None,
          opponent_for: Optional[Callable] = None):
    """Outer policy iteration on ``env``.

    After each episode the agent is updated on that trajectory and on
    ``replay_per_episode`` trajectories drawn uniformly from the buffer.
    ``evaluate(agent, episode) -> float`` is called every ``eval_every``
    episodes; the returned curve is a list of (episode, score) pairs.
    ``opponent_for(episode) -> (opponent, agent_player)`` enables playing
    against a fixed opponent instead of self-play. Self-play episodes open
    with a uniform number in [0, opening_plies] of random moves.
    """
    gen = as_generator(rng)
    if agent is None:
        agent = TabularAgent(env.num_actions, train_config.lr_pi, train_config.lr_v)
    buffer = ReplayBuffer(train_config.buffer_capacity)
    curve = []
    for episode in range(1, train_config.episodes + 1):
        opponent, agent_player = opponent_for(episode) if opponent_for else (None, 0)
        plies = 0
        if opponent is None and train_config.opening_plies:
            plies = int(gen.integers(train_config.opening_plies + 1))
        traj = act(agent, env, search_config, gen, max_steps=train_config.max_steps, random_plies=plies,
                   opponent=opponent, agent_player=agent_player)
        buffer.add(traj)
        batch = [traj] + buffer.sample(train_config.replay_per_episode, gen)
        for item in batch:
            update(agent, trajectory_targets(item, train_config.n_step, train_config.discount, agent))
        if evaluate is not None and train_config.eval_every and episode % train_config.eval_every == 0:
            curve.append((episode, float(evaluate(agent, episode))))
    return agent, curve


def _key_to_text(key) -> str:
    return ",".join(str(int(k)) for k in key)


def _text_to_key(text: str) -> tuple:
    return tuple(int(k) for k in text.split(",")) if text else ()


def save_checkpoint(agent: TabularAgent, path) -> None:
    """Write the agent tables as JSON with a format/version header."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "num_actions": agent.num_actions,
        "lr_pi": agent.lr_pi,
        "lr_v": agent.lr_v,
        "policy": {_key_to_text(k): [float(x) for x in v] for k, v in sorted(agent.policy_table.items())},
        "value": {_key_to_text(k): float(v) for k, v in sorted(agent.value_table.items())},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> TabularAgent:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a tabular agent checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    agent = TabularAgent(payload["num_actions"], payload["lr_pi"], payload["lr_v"])
    agent.policy_table = {_text_to_key(k): np.asarray(v, dtype=np.float64) for k, v in payload["policy"].items()}
    agent.value_table = {_text_to_key(k): float(v) for k, v in payload["value"].items()}
    return agent
