"""Replica experiments comparing sample-based operators with their exact targets."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import RngSeed, SampledActionSet, as_probs, sample_actions
from .envs.bandit import FixedQBandit
from .envs.base import SimulatorModel
from .mcts import SearchConfig
from .operators import Family, ImprovementOperator, QEstimate, improve_exact, improve_sampled, regularized_lambda

CSV_COLUMNS = ("family", "k", "replica_count", "kl", "tv", "mean_var", "sigma2_over_k", "slope")
MIN_REPLICAS_FOR_VARIANCE = 100


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats; ``math.inf`` when p puts mass where q has none."""
    p = as_probs(p)
    q = as_probs(q)
    if p.shape != q.shape:
        raise ValueError("distributions must share a support")
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(max(np.sum(p[mask] * np.log(p[mask] / q[mask])), 0.0))


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return float(0.5 * np.abs(p - q).sum())


@dataclass(frozen=True)
class OperatorInstance:
    """A fixed state: policy, action values, proposal, and a test function X."""

    pi: np.ndarray
    q: QEstimate
    beta: np.ndarray
    x: np.ndarray

    @property
    def num_actions(self) -> int:
        return self.pi.size


def random_instance(num_actions: int, rng: np.random.Generator, beta_is_pi: bool = True) -> OperatorInstance:
    """Dirichlet(1) policy, U[0, 1] values, standard-normal X."""
    pi = rng.dirichlet(np.ones(num_actions))
    q = rng.uniform(0.0, 1.0, num_actions)
    x = rng.normal(size=num_actions)
    beta = pi if beta_is_pi else rng.dirichlet(np.ones(num_actions))
    return OperatorInstance(pi, QEstimate(q, baseline=float(pi @ q)), beta, x)


def centered(x, weights) -> np.ndarray:
    """X minus its mean under ``weights``."""
    x = np.asarray(x, dtype=np.float64)
    return x - float(np.asarray(weights) @ x)


def exact_sigma2(instance: OperatorInstance, op: ImprovementOperator, x=None) -> float:
    """Var_{a~beta}[f(a, Z) / beta(a) * X(a)] by enumeration over the action space."""
    target = improve_exact(instance.pi, instance.q, op).probs
    x = instance.x if x is None else np.asarray(x, dtype=np.float64)
    beta = instance.beta
    mask = beta > 0
    ratio = target[mask] / beta[mask] * x[mask]
    mean = float(beta[mask] @ ratio)
    return float(beta[mask] @ (ratio - mean) ** 2)


@dataclass
class ReplicaReport:
    """Per-K summaries of the sampled operator for one family."""

    family: str
    k_values: list
    replica_count: int
    mean_estimate: dict = field(default_factory=dict)
    atom_variance: dict = field(default_factory=dict)
    kl: dict = field(default_factory=dict)
    tv: dict = field(default_factory=dict)
    max_abs_deviation: dict = field(default_factory=dict)
    estimator_variance: dict = field(default_factory=dict)
    z_error: dict = field(default_factory=dict)
    sigma2: float = math.nan
    normality: dict = field(default_factory=dict)

    def mean_atom_variance(self, k: int) -> float:
        return float(np.mean(self.atom_variance[k]))

    def sigma2_over_k(self, k: int) -> float:
        return self.sigma2 / k


def variance_rate_fit(report_or_k, variances: Optional[Sequence[float]] = None) -> float:
    """Least-squares slope of log(variance) against log(K).

    Accepts a :class:`ReplicaReport` (its mean per-atom variances are used,
    atoms with zero variance at any K are excluded) or explicit K values and
    variances.
    """
    if isinstance(report_or_k, ReplicaReport):
        report = report_or_k
        ks = list(report.k_values)
        per_atom = np.array([report.atom_variance[k] for k in ks])
        keep = np.all(per_atom > 0, axis=0)
        if not np.any(keep):
            raise ValueError("every atom has zero variance at some K")
        vals = per_atom[:, keep].mean(axis=1)
    else:
        ks = list(report_or_k)
        vals = np.asarray(variances, dtype=np.float64)
    if len(set(ks)) < 3:
        raise ValueError("need at least three distinct K values")
    if np.any(vals <= 0):
        raise ValueError("variances must be positive")
    slope, _ = np.polyfit(np.log(np.asarray(ks, dtype=np.float64)), np.log(vals), 1)
    return float(slope)


def _sampled_full(samples: SampledActionSet, instance: OperatorInstance, op: ImprovementOperator):
    q = QEstimate(instance.q.values[samples.actions], instance.q.baseline)
    imp = improve_sampled(samples, q, op)
    return samples.scatter(imp.probs, instance.num_actions), imp.normalizer_z


def run_operator_convergence_suite(instance: OperatorInstance, operators: Iterable[ImprovementOperator],
                                   k_values: Sequence[int], replicas: int, rng: RngSeed) -> dict:
    """Replicate the sampled operator at each K and compare it with the exact operator.

    Replica ``r`` at a given K draws its actions from stream ``(K, r)`` of
    ``rng``, and every family is evaluated on the same draws. X is centered
    under each family's exact improved policy, which makes the enumerated
    sigma^2 the asymptotic variance of the self-normalized estimate.
    Returns a dict family name -> :class:`ReplicaReport`.
    """
    if replicas < 1:
        raise ValueError("replicas must be positive")
    operators = list(operators)
    n = instance.num_actions
    exact = {op.family.value: improve_exact(instance.pi, instance.q, op) for op in operators}
    xs = {name: centered(instance.x, ex.probs) for name, ex in exact.items()}
    reports = {}
    for op in operators:
        name = op.family.value
        rep = ReplicaReport(name, list(k_values), replicas)
        rep.sigma2 = exact_sigma2(instance, op, xs[name])
        reports[name] = rep

    for k in k_values:
        est = {name: np.empty((replicas, n)) for name in reports}
        scal = {name: np.empty(replicas) for name in reports}
        zerr = {name: np.empty(replicas) for name in reports}
        for r in range(replicas):
            samples = sample_actions(instance.pi, instance.beta, k, rng.spawn(k).spawn(r))
            for op in operators:
                name = op.family.value
                full, z_hat = _sampled_full(samples, instance, op)
                est[name][r] = full
                scal[name][r] = full @ xs[name]
                zerr[name][r] = abs(z_hat - exact[name].normalizer_z)
        for op in operators:
            name = op.family.value
            rep = reports[name]
            target = exact[name].probs
            # exactly rounded sums make the mean independent of replica order
            mean = np.array([math.fsum(col) for col in est[name].T]) / replicas
            rep.mean_estimate[k] = mean
            rep.atom_variance[k] = est[name].var(axis=0, ddof=1) if replicas > 1 else np.zeros(n)
            rep.kl[k] = kl_divergence(mean / mean.sum(), target)
            rep.tv[k] = tv_distance(mean, target)
            rep.max_abs_deviation[k] = float(np.max(np.abs(mean - target)))
            rep.estimator_variance[k] = float(scal[name].var(ddof=1)) if replicas > 1 else 0.0
            rep.z_error[k] = float(np.mean(zerr[name]))
            s = scal[name] - scal[name].mean()
            m2 = float(np.mean(s**2))
            rep.normality[k] = {
                "skew": float(np.mean(s**3) / m2**1.5) if m2 > 0 else 0.0,
                "excess_kurtosis": float(np.mean(s**4) / m2**2 - 3.0) if m2 > 0 else 0.0,
            }
    return reports


def report_rows(reports: dict) -> list:
    rows = []
    for name, rep in reports.items():
        try:
            slope = variance_rate_fit(rep)
        except ValueError:
            slope = math.nan
        for k in rep.k_values:
            rows.append({
                "family": name,
                "k": k,
                "replica_count": rep.replica_count,
                "kl": rep.kl[k],
                "tv": rep.tv[k],
                "mean_var": rep.mean_atom_variance(k),
                "sigma2_over_k": rep.sigma2_over_k(k),
                "slope": slope,
            })
    return rows


def write_csv(reports: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in report_rows(reports):
            writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})


def default_operators(tau: float = 0.5, lambda_n: float = 0.25) -> list:
    return [
        ImprovementOperator(Family.POLICY_GRADIENT),
        ImprovementOperator(Family.PPO_EXP, tau=tau),
        ImprovementOperator(Family.MPO_EXP, tau=tau),
        ImprovementOperator(Family.AWR_EXP, tau=tau),
        ImprovementOperator(Family.MUZERO_REGULARIZED, lambda_n=lambda_n),
    ]


@dataclass(frozen=True)
class FrozenProblem:
    """One-step decision with a fixed prior and fixed action values spanning [0, 1]."""

    pi: np.ndarray
    q: np.ndarray

    @classmethod
    def random(cls, num_actions: int, rng: np.random.Generator) -> "FrozenProblem":
        pi = rng.dirichlet(np.ones(num_actions))
        q = rng.uniform(size=num_actions)
        q = (q - q.min()) / (q.max() - q.min())
        return cls(pi, q)

    @property
    def num_actions(self) -> int:
        return self.pi.size

    def env(self):
        return FixedQBandit(self.q)

    def model(self):
        pi = self.pi
        return SimulatorModel(self.env(), lambda env, state: pi)

    def search_config(self, num_simulations: int, **overrides):
        """Search settings under which root Q is exactly ``q``: no noise, known bounds, Q from root_q_init."""
        base = dict(num_simulations=num_simulations, k_samples=self.num_actions, gamma=1.0,
                    dirichlet_fraction=0.0, root_q_init=True, value_bounds=(0.0, 1.0))
        base.update(overrides)
        return SearchConfig(**base)


def pi_bar_target(pi, q, num_simulations: int, config) -> np.ndarray:
    """Regularized policy pi_bar that PUCT visit counts track after ``num_simulations`` visits.

    lambda_N = c(N) * sqrt(N) / (N + |A|), with c(N) the exploration factor at N
    total visits.
    """
    pi = as_probs(pi)
    lam = regularized_lambda(config.exploration_factor(num_simulations), num_simulations, pi.size)
    op = ImprovementOperator(Family.MUZERO_REGULARIZED, lambda_n=lam)
    return improve_exact(pi, QEstimate(q), op).probs
