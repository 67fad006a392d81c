"""Continuous-action bandit, its factored categorical codec and a fixed-Q bandit."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class FactoredActionCodec:
    """Per-dimension quantization of [-1, 1]^dims into ``bins`` equal cells.

    Bin ``i`` has center ``-1 + (2i + 1) / bins``. Inputs outside the range are
    clamped to the nearest edge bin.
    """

    dims: int
    bins: int = 7

    def __post_init__(self):
        if self.dims < 1 or self.bins < 1:
            raise ValueError("dims and bins must be positive")

    @property
    def centers(self) -> np.ndarray:
        return -1.0 + (2.0 * np.arange(self.bins) + 1.0) / self.bins

    @property
    def num_joint_actions(self) -> int:
        return self.bins**self.dims

    def encode(self, continuous) -> np.ndarray:
        x = np.clip(np.asarray(continuous, dtype=np.float64).reshape(self.dims), -1.0, 1.0)
        idx = np.floor((x + 1.0) * self.bins / 2.0).astype(np.int64)
        return np.clip(idx, 0, self.bins - 1)

    def decode(self, bins) -> np.ndarray:
        idx = np.asarray(bins, dtype=np.int64).reshape(self.dims)
        if np.any(idx < 0) or np.any(idx >= self.bins):
            raise ValueError("bin index out of range")
        return self.centers[idx]

    def flatten(self, bins) -> int:
        """Joint action id of a bin vector (first dimension most significant)."""
        flat = 0
        for b in np.asarray(bins, dtype=np.int64).reshape(self.dims):
            flat = flat * self.bins + int(b)
        return flat

    def unflatten(self, flat: int) -> np.ndarray:
        out = np.empty(self.dims, dtype=np.int64)
        for d in range(self.dims - 1, -1, -1):
            flat, out[d] = divmod(int(flat), self.bins)
        return out


@dataclass(frozen=True)
class ContinuousBandit:
    """One-shot continuous control: reward(a) = -||a - a_star||^2 on [-1, 1]^dim."""

    dim: int
    a_star: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_star, dtype=np.float64).reshape(self.dim)
        if np.any(np.abs(a) > 1):
            raise ValueError("optimum must lie in [-1, 1]^dim")
        a.setflags(write=False)
        object.__setattr__(self, "a_star", a)

    @classmethod
    def on_centers(cls, codec: FactoredActionCodec, rng: np.random.Generator) -> "ContinuousBandit":
        """Bandit whose optimum sits on randomly chosen bin centers (quantized optimum 0)."""
        bins = rng.integers(codec.bins, size=codec.dims)
        return cls(codec.dims, codec.decode(bins))

    def reward(self, action) -> float:
        diff = np.asarray(action, dtype=np.float64) - self.a_star
        return float(-(diff @ diff))


@dataclass(frozen=True)
class FactoredBandit:
    """A continuous bandit played as ``dims`` sequential single-dimension choices.

    States are tuples of the bins chosen so far. Each decision picks one of
    ``bins`` values; the bandit reward is paid on the last decision.
    """

    bandit: ContinuousBandit
    codec: FactoredActionCodec

    two_player = False

    @property
    def num_actions(self) -> int:
        return self.codec.bins

    def initial_state(self, rng: Optional[np.random.Generator] = None) -> tuple:
        return ()

    def legal_mask(self, state) -> np.ndarray:
        return np.ones(self.codec.bins, dtype=bool)

    def step(self, state: tuple, action: int):
        nxt = state + (int(action),)
        if len(nxt) == self.codec.dims:
            return nxt, self.bandit.reward(self.codec.decode(nxt)), True
        return nxt, 0.0, False

    def is_terminal(self, state: tuple) -> bool:
        return len(state) == self.codec.dims

    def to_play(self, state) -> int:
        return 0

    def key(self, state: tuple) -> tuple:
        return tuple(state)


@dataclass(frozen=True)
class JointBandit:
    """The same bandit with one joint categorical over all bins^dims actions (small dims only)."""

    bandit: ContinuousBandit
    codec: FactoredActionCodec

    two_player = False

    def __post_init__(self):
        if self.codec.dims > 3:
            raise ValueError("joint action space is only supported for dims <= 3")

    @property
    def num_actions(self) -> int:
        return self.codec.num_joint_actions

    def initial_state(self, rng: Optional[np.random.Generator] = None):
        return ("start",)

    def legal_mask(self, state) -> np.ndarray:
        return np.ones(self.num_actions, dtype=bool)

    def step(self, state, action: int):
        bins = self.codec.unflatten(action)
        return ("done",), self.bandit.reward(self.codec.decode(bins)), True

    def is_terminal(self, state) -> bool:
        return state == ("done",)

    def to_play(self, state) -> int:
        return 0

    def key(self, state) -> tuple:
        return (0,) if state == ("start",) else (1,)


@dataclass(frozen=True)
class FixedQBandit:
    """Single decision with known action values: action a pays q_values[a] and ends.

    Paired with a fixed prior, this is the frozen one-step problem on which
    search visit counts can be compared with analytic targets.
    """

    q_values: np.ndarray

    two_player = False

    def __post_init__(self):
        q = np.asarray(self.q_values, dtype=np.float64)
        q.setflags(write=False)
        object.__setattr__(self, "q_values", q)

    @property
    def num_actions(self) -> int:
        return self.q_values.size

    def initial_state(self, rng=None):
        return 0

    def legal_mask(self, state) -> np.ndarray:
        return np.ones(self.num_actions, dtype=bool)

    def step(self, state, action: int):
        return 1, float(self.q_values[action]), True

    def is_terminal(self, state) -> bool:
        return state == 1

    def to_play(self, state) -> int:
        return 0

    def key(self, state) -> tuple:
        return (int(state),)
