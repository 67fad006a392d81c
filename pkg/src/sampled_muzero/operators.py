"""Action-independent policy improvement operators.

An operator maps (pi, Q) to an improved policy f(a, Z) where Z is the single
state-dependent normalizer. :func:`improve_exact` enumerates the whole action
space; :func:`improve_sampled` only sees K actions drawn from a proposal beta
and reweights by beta_hat/beta before renormalizing.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import DiscreteDistribution, RngLike, SampledActionSet, as_generator, as_probs

BISECTION_ITERATIONS = 200


class Family(str, enum.Enum):
    POLICY_GRADIENT = "policy_gradient"
    PPO_EXP = "ppo_exp"
    MPO_EXP = "mpo_exp"
    AWR_EXP = "awr_exp"
    MUZERO_REGULARIZED = "muzero_regularized"


class NegativeMassError(ValueError):
    """The policy-gradient operator was given a negative Q on the policy support."""


class SolverError(RuntimeError):
    """The normalizer bisection failed to bracket or converge."""


@dataclass(frozen=True)
class ImprovementOperator:
    family: Family
    tau: float = 1.0
    lambda_n: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.lambda_n > 0:
            raise ValueError("lambda_n must be positive")


@dataclass(frozen=True)
class QEstimate:
    """Action values (return units) and the state-value baseline used by AWR."""

    values: np.ndarray
    baseline: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or not math.isfinite(self.baseline):
            raise ValueError("Q estimates must be a finite vector")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class ImprovedPolicy:
    """An improved policy over ``actions`` together with its normalizer.

    In exact mode ``actions`` is the full range of action ids; in sampled mode
    it holds the sampled actions only.
    """

    dist: DiscreteDistribution
    actions: np.ndarray
    normalizer_z: float
    mode: str

    @property
    def probs(self) -> np.ndarray:
        return self.dist.probs

    def full(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.actions] = self.dist.probs
        return out


def _as_q(q) -> QEstimate:
    return q if isinstance(q, QEstimate) else QEstimate(q)


def _unnormalized(pi: np.ndarray, q: QEstimate, op: ImprovementOperator) -> np.ndarray:
    """f up to its normalizer, for every family except MuZeroRegularized."""
    values = q.values
    if op.family is Family.POLICY_GRADIENT:
        if np.any(values[pi > 0] < 0):
            raise NegativeMassError("policy-gradient operator needs Q >= 0 wherever pi > 0; shift Q first")
        return pi * values
    if op.family is Family.PPO_EXP:
        return np.exp((values - values.max()) / op.tau)
    if op.family is Family.MPO_EXP:
        return pi * np.exp((values - values.max()) / op.tau)
    if op.family is Family.AWR_EXP:
        adv = values - q.baseline
        return pi * np.exp((adv - adv.max()) / op.tau)
    raise ValueError(f"{op.family} has no closed-form normalizer")


def _regularized_sum(weights, gaps, lam, delta):
    return lam * np.sum(weights / (gaps + delta))


def solve_normalizer(pi_weights, q, op: ImprovementOperator) -> float:
    """Normalizer Z of the operator for the given (possibly unnormalized) weights.

    For the exponential and policy-gradient families Z is the plain sum of the
    unnormalized weights. For MuZeroRegularized, Z is the unique root above
    max Q of ``sum_a lambda_n * w_a / (Z - Q_a) = 1``, found by bisection on
    the gap ``Z - max Q`` so that tiny gaps keep full relative precision.
    """
    w = np.asarray(pi_weights, dtype=np.float64)
    q = _as_q(q)
    if w.shape != q.values.shape:
        raise ValueError("weights and Q must cover the same actions")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("need non-negative weights with at least one positive entry")
    if op.family is not Family.MUZERO_REGULARIZED:
        return float(_unnormalized(w, q, op).sum())

    lam = op.lambda_n
    mask = w > 0
    w, values = w[mask], q.values[mask]
    q_max = values.max()
    gaps = q_max - values
    # sum is decreasing in delta; at delta = lam * sum(w) every term is <= its share
    lo, hi = 0.0, lam * w.sum()
    if _regularized_sum(w, gaps, lam, hi) > 1.0 + 1e-12:
        raise SolverError("upper bracket does not bound the normalizer")
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _regularized_sum(w, gaps, lam, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    # pick whichever endpoint (as an absolute Z) has the smaller residual
    best = None
    for delta in (lo, hi):
        if delta <= 0:
            continue
        z = q_max + delta
        if z <= q_max:
            continue
        res = abs(lam * np.sum(w / (z - values)) - 1.0)
        if best is None or res < best[0]:
            best = (res, z)
    if best is None:
        raise SolverError("normalizer collapsed onto max Q")
    return float(best[1])


def _regularized_policy(weights, values, lam, z) -> np.ndarray:
    probs = lam * weights / (z - values)
    return probs / probs.sum()


def improve_exact(pi, q, op: ImprovementOperator) -> ImprovedPolicy:
    """Improved policy over the full action space."""
    p = as_probs(pi)
    q = _as_q(q)
    if p.size != q.values.size:
        raise ValueError("pi and Q must cover the same action space")
    if op.family is Family.MUZERO_REGULARIZED:
        z = solve_normalizer(p, q, op)
        probs = _regularized_policy(p, q.values, op.lambda_n, z)
    else:
        unnorm = _unnormalized(p, q, op)
        z = float(unnorm.sum())
        if not z > 0:
            raise NegativeMassError("improved policy has zero total mass")
        probs = unnorm / z
    return ImprovedPolicy(DiscreteDistribution(probs), np.arange(p.size), z, "exact")


def improve_sampled(samples: SampledActionSet, q, op: ImprovementOperator) -> ImprovedPolicy:
    """Sample-based improved policy (beta_hat/beta) f(a, Z_hat) over the sampled actions.

    ``q`` gives one value per sampled entry (aligned with ``samples.actions``).
    Z_hat renormalizes the importance-weighted family.
    """
    q = _as_q(q)
    if q.values.size != len(samples):
        raise ValueError("need exactly one Q value per sampled action")
    if np.any(samples.beta <= 0):
        raise ValueError("sampled action with zero proposal probability")
    ratio = samples.importance
    if op.family is Family.MUZERO_REGULARIZED:
        weights = ratio * samples.pi
        z = solve_normalizer(weights, q, op)
        probs = _regularized_policy(weights, q.values, op.lambda_n, z)
    else:
        unnorm = ratio * _unnormalized(samples.pi, q, op)
        z = float(unnorm.sum())
        if not z > 0:
            raise NegativeMassError("sampled improved policy has zero total mass")
        probs = unnorm / z
    return ImprovedPolicy(DiscreteDistribution(probs), samples.actions, z, "sampled")


def expectation_under_improved(improved: ImprovedPolicy, x) -> float:
    """sum_a improved(a) * x(a) over the improved policy's support."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != improved.probs.shape:
        raise ValueError("x must give one value per support atom")
    return float(improved.probs @ x)


def sir_resample(improved: ImprovedPolicy, rng: RngLike) -> int:
    """Draw one action id from the improved policy (sampling importance resampling)."""
    gen = as_generator(rng)
    index = gen.choice(improved.probs.size, p=improved.probs)
    return int(improved.actions[index])


def regularized_lambda(c: float, num_simulations: int, num_actions: int) -> float:
    """lambda_N = c * sqrt(N) / (N + |A|), the usual constant for PUCT visit tracking."""
    return c * math.sqrt(num_simulations) / (num_simulations + num_actions)
