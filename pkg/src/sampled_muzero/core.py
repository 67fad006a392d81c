"""Action distributions, seeded RNG streams and sampled action sets.

Everything downstream (operators, search, learner) consumes the two types
defined here: :class:`DiscreteDistribution` for full-space policies and
:class:`SampledActionSet` for the K actions drawn from a proposal.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-9


class InvalidDistributionError(ValueError):
    """Raised when a probability vector is negative, empty or not normalized."""


@dataclass(frozen=True)
class RngSeed:
    """A (seed, stream) pair; each consumer derives its own generator from it."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.default_rng(ss)

    def spawn(self, stream_id: int) -> "RngSeed":
        """Child seed for replica ``stream_id`` (mixes in the parent stream)."""
        return RngSeed(self.seed, (int(self.stream_id) << 32) ^ int(stream_id))


RngLike = Union[np.random.Generator, RngSeed, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSeed):
        return rng.generator()
    return RngSeed(int(rng)).generator()


def _check_probs(probs: np.ndarray) -> None:
    if probs.ndim != 1 or probs.size == 0:
        raise InvalidDistributionError("probabilities must be a non-empty vector")
    # min >= 0 rejects NaN; a finite sum of non-negatives rules out inf
    lowest = probs.min()
    total = probs.sum()
    if not lowest >= 0 or not abs(total - 1.0) <= SUM_TOLERANCE:
        raise InvalidDistributionError(f"not a probability vector (min {lowest!r}, sum {total!r})")


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Normalized probability vector over an indexed action set.

    The constructor is strict. Use :meth:`from_weights` to normalize arbitrary
    non-negative weights, or ``renormalize=True`` to repair a vector that is
    only approximately normalized (logged as a warning).
    """

    probs: np.ndarray
    renormalize: bool = field(default=False, repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64)
        if self.renormalize and p.ndim == 1 and p.size and np.all(p >= 0) and p.sum() > 0:
            total = p.sum()
            if abs(total - 1.0) > SUM_TOLERANCE:
                logger.warning("renormalizing distribution with mass %r", total)
                p = p / total
        _check_probs(p)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_weights(cls, weights) -> "DiscreteDistribution":
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidDistributionError("weights must be a finite non-negative vector")
        total = w.sum()
        if total <= 0:
            raise InvalidDistributionError("weights have zero total mass")
        return cls(w / total)

    @classmethod
    def uniform(cls, n: int) -> "DiscreteDistribution":
        return cls(np.full(n, 1.0 / n))

    @property
    def support_size(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, index):
        return self.probs[index]

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __repr__(self) -> str:
        return f"DiscreteDistribution({np.array2string(self.probs, precision=4)})"


def as_probs(dist) -> np.ndarray:
    """Probability vector of ``dist`` (a distribution or a raw array, validated)."""
    if isinstance(dist, DiscreteDistribution):
        return dist.probs
    p = np.asarray(dist, dtype=np.float64)
    _check_probs(p)
    return p


@dataclass(frozen=True, eq=False)
class SampledActionSet:
    """K draws from a proposal ``beta``, aggregated by action.

    Entries are sorted by action index. ``pi`` and ``beta`` hold the policy and
    proposal probabilities of each sampled action; the full proposal is never
    needed after sampling.
    """

    actions: np.ndarray
    counts: np.ndarray
    pi: np.ndarray
    beta: np.ndarray
    k: int

    def __post_init__(self):
        actions = np.asarray(self.actions, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        pi = np.asarray(self.pi, dtype=np.float64)
        beta = np.asarray(self.beta, dtype=np.float64)
        if not (actions.shape == counts.shape == pi.shape == beta.shape) or actions.ndim != 1:
            raise ValueError("sampled entries must be parallel 1-d arrays")
        if actions.size == 0:
            raise ValueError("a sampled action set needs at least one entry")
        if np.any(actions < 0) or np.unique(actions).size != actions.size:
            raise ValueError("sampled actions must be distinct non-negative indices")
        if np.any(counts <= 0) or counts.sum() != self.k:
            raise ValueError("counts must be positive and sum to k")
        if np.any(beta <= 0) or np.any(beta > 1):
            raise ValueError("every sampled action needs beta in (0, 1]")
        if np.any(pi < 0) or np.any(pi > 1):
            raise ValueError("pi entries must lie in [0, 1]")
        for name, arr in (("actions", actions), ("counts", counts), ("pi", pi), ("beta", beta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def _trusted(cls, actions, counts, pi, beta, k) -> "SampledActionSet":
        """Build from arrays already known to satisfy the invariants."""
        obj = object.__new__(cls)
        for name, arr in (("actions", actions), ("counts", counts), ("pi", pi), ("beta", beta)):
            object.__setattr__(obj, name, arr)
        object.__setattr__(obj, "k", k)
        return obj

    def __len__(self) -> int:
        return self.actions.size

    @property
    def beta_hat(self) -> np.ndarray:
        """Empirical proposal count(a)/K over the entries."""
        return self.counts / self.k

    @property
    def importance(self) -> np.ndarray:
        """Importance ratios beta_hat(a)/beta(a)."""
        return self.beta_hat / self.beta

    def scatter(self, values, size: int) -> np.ndarray:
        """Place per-entry ``values`` into a zero vector over the full action space."""
        out = np.zeros(size)
        out[self.actions] = values
        return out


def sample_actions(pi, beta, k: int, rng: RngLike) -> SampledActionSet:
    """Draw ``k`` actions from ``beta`` with replacement and aggregate by action."""
    pi_p = as_probs(pi)
    beta_p = np.asarray(beta.probs if isinstance(beta, DiscreteDistribution) else beta, dtype=np.float64)
    if pi_p.size != beta_p.size:
        raise ValueError(f"pi has {pi_p.size} actions but beta has {beta_p.size}")
    if k < 1:
        raise ValueError("k must be at least 1")
    if beta_p.ndim != 1 or not beta_p.min() >= 0 or not beta_p.sum() > 0:
        raise InvalidDistributionError("proposal has no positive mass")
    beta_p = as_probs(beta_p)
    gen = as_generator(rng)
    counts = gen.multinomial(k, beta_p / beta_p.sum())
    actions = np.flatnonzero(counts)
    return SampledActionSet._trusted(actions, counts[actions], pi_p[actions], beta_p[actions], int(k))


def enumerate_actions(pi) -> SampledActionSet:
    """Every action in the support of ``pi`` exactly once, under a uniform proposal.

    The importance ratios are exactly 1, so sample-based quantities collapse to
    their full-enumeration counterparts. Consumes no randomness.
    """
    pi_p = as_probs(pi)
    actions = np.flatnonzero(pi_p > 0)
    n = actions.size
    beta = np.full(n, 1.0 / n)
    return SampledActionSet._trusted(actions, np.ones(n, dtype=np.int64), pi_p[actions], beta, n)


def apply_temperature(pi, tau: float) -> DiscreteDistribution:
    """Distribution proportional to pi**(1/tau); zero entries stay zero."""
    if not tau > 0:
        raise ValueError("temperature must be positive")
    p = as_probs(pi)
    if tau == 1.0:
        return pi if isinstance(pi, DiscreteDistribution) else DiscreteDistribution(p)
    # scale by the max first so large 1/tau cannot underflow everything
    scaled = np.power(p / p.max(), 1.0 / tau)
    return DiscreteDistribution.from_weights(scaled)


def mix_dirichlet(pi, alpha: float, fraction: float, rng: RngLike) -> DiscreteDistribution:
    """(1 - fraction) * pi + fraction * Dirichlet(alpha) noise over the support of pi."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    p = as_probs(pi)
    if fraction == 0.0:
        return pi if isinstance(pi, DiscreteDistribution) else DiscreteDistribution(p)
    support = np.flatnonzero(p > 0)
    gen = as_generator(rng)
    noise = gen.dirichlet(np.full(support.size, alpha)) if support.size > 1 else np.ones(1)
    mixed = (1.0 - fraction) * p
    mixed[support] += fraction * noise
    return DiscreteDistribution.from_weights(mixed)
