"""Environment protocol and the exact-simulator model used by the search."""
from __future__ import annotations

from typing import Any, Callable, NamedTuple, Optional, Protocol

import numpy as np


class ModelOutput(NamedTuple):
    """What a model returns for one state: dynamics plus policy/value predictions.

    ``policy`` is a probability vector over the full action space with zero
    mass on illegal actions. ``reward`` is the reward of the transition that
    produced ``state``, from the point of view of the player who acted.
    """

    state: Any
    reward: float
    value: float
    policy: np.ndarray
    to_play: int
    terminal: bool


class Model(Protocol):
    num_actions: int

    def initial_inference(self, observation) -> ModelOutput: ...

    def recurrent_inference(self, state, action: int) -> ModelOutput: ...


class Environment(Protocol):
    """Deterministic environment with hashable states.

    ``key`` maps a state onto a flat tuple of ints used by the tabular
    learner; ``step`` returns (next_state, reward, terminal) with the reward
    seen by the player who acted.
    """

    num_actions: int
    two_player: bool

    def initial_state(self, rng: Optional[np.random.Generator] = None) -> Any: ...

    def legal_mask(self, state) -> np.ndarray: ...

    def step(self, state, action: int) -> tuple[Any, float, bool]: ...

    def is_terminal(self, state) -> bool: ...

    def to_play(self, state) -> int: ...

    def key(self, state) -> tuple: ...


def masked_policy(probs, legal: np.ndarray) -> np.ndarray:
    """Restrict ``probs`` to legal actions; fall back to uniform if no mass is left."""
    p = np.where(legal, np.asarray(probs, dtype=np.float64), 0.0)
    total = p.sum()
    if total > 0:
        return p / total
    return legal / legal.sum()


def uniform_policy(env, state) -> np.ndarray:
    legal = env.legal_mask(state)
    return legal / legal.sum()


def zero_value(env, state) -> float:
    return 0.0


class SimulatorModel:
    """Exact environment dynamics with pluggable policy and value predictions.

    ``policy_fn(env, state)`` and ``value_fn(env, state)`` default to a uniform
    policy and zero value. The observation passed to ``initial_inference`` is
    an environment state.
    """

    def __init__(self, env, policy_fn: Callable = uniform_policy, value_fn: Callable = zero_value):
        self.env = env
        self.policy_fn = policy_fn
        self.value_fn = value_fn
        self.num_actions = env.num_actions

    def _output(self, state, reward: float, terminal: bool) -> ModelOutput:
        env = self.env
        legal = env.legal_mask(state)
        if terminal:
            return ModelOutput(state, reward, 0.0, np.zeros(env.num_actions), env.to_play(state), True)
        policy = masked_policy(self.policy_fn(env, state), legal)
        return ModelOutput(state, reward, float(self.value_fn(env, state)), policy, env.to_play(state), False)

    def initial_inference(self, observation) -> ModelOutput:
        return self._output(observation, 0.0, self.env.is_terminal(observation))

    def recurrent_inference(self, state, action: int) -> ModelOutput:
        next_state, reward, terminal = self.env.step(state, int(action))
        return self._output(next_state, reward, terminal)
