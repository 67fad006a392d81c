"""Sampled-PUCT Monte-Carlo tree search.

Each expanded node only holds the K actions drawn from a proposal beta. The
PUCT prior of a sampled child is (beta_hat/beta) * pi, renormalized, so that
the root visit distribution estimates the improved policy over the whole
action space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    DiscreteDistribution,
    RngLike,
    SampledActionSet,
    apply_temperature,
    as_generator,
    enumerate_actions,
    mix_dirichlet,
    sample_actions,
)
from .envs.base import ModelOutput

PRIOR_MODES = ("pi_hat_beta", "raw_pi")


@dataclass(frozen=True)
class SearchConfig:
    num_simulations: int = 50
    k_samples: int = 20
    c1: float = 1.25
    c2: float = 19652.0
    gamma: float = 0.99
    proposal_temperature: float = 1.0
    dirichlet_alpha: float = 0.3
    dirichlet_fraction: float = 0.25
    prior_mode: str = "pi_hat_beta"
    root_q_init: bool = False
    exhaustive_mode: bool = False
    # known (min, max) of values; None means normalize over the observed range
    value_bounds: Optional[tuple] = None

    def __post_init__(self):
        if self.num_simulations < 1 or self.k_samples < 1:
            raise ValueError("num_simulations and k_samples must be positive")
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("c1 and c2 must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not self.proposal_temperature > 0 or not self.dirichlet_alpha > 0:
            raise ValueError("temperature and Dirichlet alpha must be positive")
        if not 0.0 <= self.dirichlet_fraction <= 1.0:
            raise ValueError("dirichlet_fraction must lie in [0, 1]")
        mode = self.prior_mode.replace("-", "_")
        if mode not in PRIOR_MODES:
            raise ValueError(f"unknown prior_mode {self.prior_mode!r}")
        object.__setattr__(self, "prior_mode", mode)
        if self.value_bounds is not None:
            lo, hi = self.value_bounds
            if not hi > lo:
                raise ValueError("value_bounds must be (min, max) with max > min")
            object.__setattr__(self, "value_bounds", (float(lo), float(hi)))

    def exploration_factor(self, total_visits: int) -> float:
        """c(s) = c1 + log((1 + c2 + sum_b N(s, b)) / c2)."""
        return self.c1 + math.log((1.0 + self.c2 + total_visits) / self.c2)


class MinMaxStats:
    """Running range of backed-up values used to normalize Q into [0, 1]."""

    def __init__(self, bounds: Optional[tuple] = None):
        self.fixed = bounds is not None
        self.minimum, self.maximum = bounds if bounds is not None else (math.inf, -math.inf)

    def update(self, value: float) -> None:
        if self.fixed:
            return
        if value < self.minimum:
            self.minimum = value
        if value > self.maximum:
            self.maximum = value

    def normalize(self, value: float) -> float:
        if self.maximum > self.minimum:
            return (value - self.minimum) / (self.maximum - self.minimum)
        return value


class SearchNode:
    """A state in the search tree plus the statistics of its sampled edges.

    Edge statistics live on the parent: ``child_visits[i]`` is N(s, a_i) and
    ``value_sums[i]`` accumulates the returns G backed up through that edge,
    from the parent's point of view. ``reward`` is the reward of the
    transition that entered this node.
    """

    __slots__ = (
        "state", "reward", "to_play", "terminal", "value_pred", "policy",
        "expanded", "samples", "actions", "priors", "child_visits", "value_sums",
        "q_init", "children", "visit_count", "value_sum",
    )

    def __init__(self, state, reward: float = 0.0, to_play: int = 0, terminal: bool = False,
                 value_pred: float = 0.0, policy: Optional[np.ndarray] = None):
        self.state = state
        self.reward = reward
        self.to_play = to_play
        self.terminal = terminal
        self.value_pred = value_pred
        self.policy = policy
        self.expanded = False
        self.samples: Optional[SampledActionSet] = None
        self.actions: list = []
        self.priors: list = []
        self.child_visits: list = []
        self.value_sums: list = []
        self.q_init: list = []
        self.children: list = []
        self.visit_count = 0
        self.value_sum = 0.0

    @classmethod
    def from_output(cls, out: ModelOutput) -> "SearchNode":
        return cls(out.state, out.reward, out.to_play, out.terminal,
                   0.0 if out.terminal else out.value, out.policy)

    def value(self) -> float:
        return self.value_sum / self.visit_count if self.visit_count else 0.0

    def q(self, i: int) -> Optional[float]:
        """Mean backed-up return of edge ``i``, its initialization, or None."""
        if self.child_visits[i]:
            return self.value_sums[i] / self.child_visits[i]
        return self.q_init[i]


@dataclass(frozen=True, eq=False)
class SearchResult:
    actions: np.ndarray
    visit_counts: np.ndarray
    visit_distribution: DiscreteDistribution
    root_value: float
    sampled_actions: SampledActionSet
    per_action_q: np.ndarray
    priors: np.ndarray
    trace: list = field(default_factory=list, repr=False)

    def full_policy(self, num_actions: int) -> np.ndarray:
        """Visit distribution scattered onto the full action space."""
        out = np.zeros(num_actions)
        out[self.actions] = self.visit_distribution.probs
        return out

    def best_action(self) -> int:
        """Most visited action, lowest action id on ties."""
        return int(self.actions[int(np.argmax(self.visit_counts))])


def child_priors(samples: SampledActionSet, prior_mode: str = "pi_hat_beta") -> np.ndarray:
    """Per-child PUCT priors: (beta_hat/beta) * pi or plain pi, renormalized over the samples."""
    if prior_mode == "pi_hat_beta":
        weights = samples.importance * samples.pi
    elif prior_mode == "raw_pi":
        weights = np.array(samples.pi)
    else:
        raise ValueError(f"unknown prior_mode {prior_mode!r}")
    total = weights.sum()
    if not total > 0:
        # pi vanished on every sampled action; fall back to the empirical distribution
        return samples.beta_hat
    return weights / total


def expand_node(node: SearchNode, model_output: ModelOutput, config: SearchConfig, rng: RngLike,
                is_root: bool = False) -> SearchNode:
    """Sample K actions for ``node`` and attach one unexpanded edge per distinct action.

    At the root, Dirichlet noise is mixed into pi before the proposal is formed,
    so both pi and beta carry it. Noise is applied first, then temperature.
    """
    if node.expanded:
        raise ValueError("node is already expanded")
    gen = as_generator(rng)
    pi = model_output.policy
    if is_root and config.dirichlet_fraction > 0:
        pi = mix_dirichlet(pi, config.dirichlet_alpha, config.dirichlet_fraction, gen).probs
    if config.exhaustive_mode:
        samples = enumerate_actions(pi)
    else:
        beta = apply_temperature(pi, config.proposal_temperature)
        samples = sample_actions(pi, beta, config.k_samples, gen)
    n = len(samples)
    node.samples = samples
    node.actions = samples.actions.tolist()
    node.priors = child_priors(samples, config.prior_mode).tolist()
    node.child_visits = [0] * n
    node.value_sums = [0.0] * n
    node.q_init = [None] * n
    node.children = [None] * n
    node.expanded = True
    return node


def select_child(node: SearchNode, config: SearchConfig, min_max: Optional[MinMaxStats] = None) -> int:
    """Index of the child maximizing normalized Q plus the PUCT exploration bonus.

    Unvisited children without an initialized Q borrow the parent's mean
    value. Ties go to the lowest child index.
    """
    if not node.expanded or not node.actions:
        raise ValueError("cannot select from an unexpanded node")
    if min_max is None:
        min_max = MinMaxStats(config.value_bounds)
    visits = node.child_visits
    total = sum(visits)
    explore = config.exploration_factor(total) * math.sqrt(total)
    parent_q = node.value()
    best_index, best_score = 0, -math.inf
    for i, n_i in enumerate(visits):
        if n_i:
            q = node.value_sums[i] / n_i
        elif node.q_init[i] is not None:
            q = node.q_init[i]
        else:
            q = parent_q
        score = min_max.normalize(q) + explore * node.priors[i] / (1 + n_i)
        if score > best_score:
            best_index, best_score = i, score
    return best_index


def backup(path: list, leaf_value: float, config: SearchConfig, min_max: Optional[MinMaxStats] = None) -> None:
    """Propagate a leaf evaluation up ``path`` (a list of (parent, child_index) edges).

    Each edge receives G = r + gamma * G_below, with G_below negated when the
    player to move changes between parent and child.
    """
    if not path:
        return
    parent, index = path[-1]
    leaf = parent.children[index]
    leaf.visit_count += 1
    leaf.value_sum += leaf_value
    g = leaf_value
    gamma = config.gamma
    for parent, index in reversed(path):
        child = parent.children[index]
        below = g if child.to_play == parent.to_play else -g
        g = child.reward + gamma * below
        parent.value_sums[index] += g
        parent.child_visits[index] += 1
        parent.visit_count += 1
        parent.value_sum += g
        if min_max is not None:
            min_max.update(g)


def root_q_init(root: SearchNode, model, config: SearchConfig, min_max: Optional[MinMaxStats] = None) -> None:
    """Evaluate every sampled root action once and use r + gamma * v as its initial Q.

    Visit counts are left untouched; the created children are expanded lazily
    on their first visit.
    """
    if not config.root_q_init:
        return
    for i, action in enumerate(root.actions):
        out = model.recurrent_inference(root.state, action)
        child = SearchNode.from_output(out)
        root.children[i] = child
        v = child.value_pred if child.to_play == root.to_play else -child.value_pred
        q = out.reward + config.gamma * v
        root.q_init[i] = q
        if min_max is not None:
            min_max.update(q)


def _simulate(root: SearchNode, model, config: SearchConfig, gen, min_max: MinMaxStats, trace) -> None:
    node = root
    path = []
    while True:
        i = select_child(node, config, min_max)
        path.append((node, i))
        child = node.children[i]
        if child is None:
            out = model.recurrent_inference(node.state, node.actions[i])
            child = SearchNode.from_output(out)
            node.children[i] = child
            if not child.terminal:
                expand_node(child, out, config, gen)
            leaf_value = child.value_pred
            break
        if child.visit_count == 0:
            # created by root_q_init and never evaluated
            if not child.terminal:
                expand_node(child, ModelOutput(child.state, child.reward, child.value_pred, child.policy,
                                               child.to_play, False), config, gen)
            leaf_value = child.value_pred
            break
        if child.terminal:
            leaf_value = 0.0
            break
        node = child
    if trace is not None:
        trace.append(tuple(parent.actions[idx] for parent, idx in path))
    backup(path, leaf_value, config, min_max)


def run_search(root_observation, model, config: SearchConfig, rng: RngLike, record_trace: bool = False) -> SearchResult:
    """Run ``config.num_simulations`` select/expand/backup passes from ``root_observation``."""
    gen = as_generator(rng)
    min_max = MinMaxStats(config.value_bounds)
    out = model.initial_inference(root_observation)
    if out.terminal:
        raise ValueError("cannot search from a terminal state")
    root = SearchNode.from_output(out)
    expand_node(root, out, config, gen, is_root=True)
    root.visit_count = 1
    root.value_sum = root.value_pred
    root_q_init(root, model, config, min_max)
    trace = [] if record_trace else None
    for _ in range(config.num_simulations):
        _simulate(root, model, config, gen, min_max, trace)
    return _result(root, trace)


def _result(root: SearchNode, trace) -> SearchResult:
    visits = np.asarray(root.child_visits, dtype=np.int64)
    q = np.array([np.nan if root.q(i) is None else root.q(i) for i in range(len(visits))])
    return SearchResult(
        actions=np.asarray(root.actions, dtype=np.int64),
        visit_counts=visits,
        visit_distribution=DiscreteDistribution(visits / visits.sum()),
        root_value=root.value(),
        sampled_actions=root.samples,
        per_action_q=q,
        priors=np.asarray(root.priors),
        trace=trace or [],
    )


def run_reference_search(root_observation, model, config: SearchConfig, rng: RngLike,
                         record_trace: bool = False) -> SearchResult:
    """Plain MuZero-style search that expands every legal action with prior pi.

    Written independently of the sampled expansion path; used as the oracle
    that exhaustive sampled search must reproduce exactly.
    """
    gen = as_generator(rng)
    stats = MinMaxStats(config.value_bounds)

    def new_node(o: ModelOutput, is_root: bool) -> dict:
        node = {"out": o, "visits": 0, "value_sum": 0.0, "edges": None}
        if o.terminal:
            return node
        pi = o.policy
        if is_root and config.dirichlet_fraction > 0:
            pi = mix_dirichlet(pi, config.dirichlet_alpha, config.dirichlet_fraction, gen).probs
        legal = np.flatnonzero(pi > 0)
        prior = pi[legal] / pi[legal].sum()
        node["edges"] = [{"action": int(a), "prior": float(p), "n": 0, "w": 0.0, "child": None}
                         for a, p in zip(legal, prior)]
        return node

    root_out = model.initial_inference(root_observation)
    if root_out.terminal:
        raise ValueError("cannot search from a terminal state")
    root = new_node(root_out, True)
    root["visits"], root["value_sum"] = 1, root_out.value
    trace = []
    for _ in range(config.num_simulations):
        node, path = root, []
        while True:
            edges = node["edges"]
            total = sum(e["n"] for e in edges)
            c = config.c1 + math.log((1.0 + config.c2 + total) / config.c2)
            explore = c * math.sqrt(total)
            parent_q = node["value_sum"] / node["visits"] if node["visits"] else 0.0
            best, best_score = None, -math.inf
            for e in edges:
                q = e["w"] / e["n"] if e["n"] else parent_q
                score = stats.normalize(q) + explore * e["prior"] / (1 + e["n"])
                if score > best_score:
                    best, best_score = e, score
            path.append((node, best))
            if best["child"] is None:
                o = model.recurrent_inference(node["out"].state, best["action"])
                best["child"] = new_node(o, False)
                value = 0.0 if o.terminal else o.value
                break
            child = best["child"]
            if child["out"].terminal:
                value = 0.0
                break
            node = child
        trace.append(tuple(e["action"] for _, e in path))
        leaf = path[-1][1]["child"]
        leaf["visits"] += 1
        leaf["value_sum"] += value
        g = value
        for parent, e in reversed(path):
            child_out = e["child"]["out"]
            g = child_out.reward + config.gamma * (g if child_out.to_play == parent["out"].to_play else -g)
            e["n"] += 1
            e["w"] += g
            parent["visits"] += 1
            parent["value_sum"] += g
            stats.update(g)
    edges = root["edges"]
    visits = np.array([e["n"] for e in edges], dtype=np.int64)
    actions = np.array([e["action"] for e in edges], dtype=np.int64)
    n = len(edges)
    samples = SampledActionSet(actions, np.ones(n, dtype=np.int64), root_out.policy[actions], np.full(n, 1.0 / n), n)
    return SearchResult(
        actions=actions,
        visit_counts=visits,
        visit_distribution=DiscreteDistribution(visits / visits.sum()),
        root_value=root["value_sum"] / root["visits"],
        sampled_actions=samples,
        per_action_q=np.array([e["w"] / e["n"] if e["n"] else np.nan for e in edges]),
        priors=np.array([e["prior"] for e in edges]),
        trace=trace if record_trace else [],
    )
