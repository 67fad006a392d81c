import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sampled_muzero.core import RngSeed, SampledActionSet, sample_actions
from sampled_muzero.envs import FixedQBandit, SimulatorModel, TicTacToe
from sampled_muzero.experiments import make_gridworld
from sampled_muzero.operators import Family, ImprovementOperator, QEstimate, improve_sampled
from sampled_muzero.stats import FrozenProblem, tv_distance
from sampled_muzero.mcts import (
    MinMaxStats,
    SearchConfig,
    SearchNode,
    backup,
    child_priors,
    expand_node,
    root_q_init,
    run_reference_search,
    run_search,
    select_child,
)


def fixed_model(q, pi=None):
    q = np.asarray(q, dtype=float)
    pi = np.full(q.size, 1.0 / q.size) if pi is None else np.asarray(pi, dtype=float)
    return SimulatorModel(FixedQBandit(q), lambda env, s: pi)


def expanded_node(priors, visits=None, sums=None, value_sum=0.0):
    node = SearchNode("s")
    n = len(priors)
    node.actions = list(range(n))
    node.priors = list(priors)
    node.child_visits = list(visits or [0] * n)
    node.value_sums = list(sums or [0.0] * n)
    node.q_init = [None] * n
    node.children = [None] * n
    node.expanded = True
    node.visit_count = 1 + sum(node.child_visits)
    node.value_sum = value_sum
    return node


class TestPriors:
    def test_pi_hat_beta_equals_empirical_at_unit_temperature(self):
        pi = np.random.default_rng(0).dirichlet(np.ones(30))
        s = sample_actions(pi, pi, 12, RngSeed(4))
        np.testing.assert_allclose(child_priors(s, "pi_hat_beta"), s.beta_hat, rtol=1e-12)

    def test_single_sample(self):
        s = SampledActionSet([2], [1], [0.3], [0.3], 1)
        assert child_priors(s).tolist() == [1.0]

    def test_hand_example(self):
        s = SampledActionSet([0, 1], [3, 1], [0.8, 0.2], [0.8, 0.2], 4)
        np.testing.assert_allclose(child_priors(s, "raw_pi"), [0.8, 0.2])
        np.testing.assert_allclose(s.importance, [0.9375, 1.25])
        np.testing.assert_allclose(child_priors(s, "pi_hat_beta"), [0.75, 0.25])


class TestSelect:
    def test_zero_visits_picks_first(self):
        node = expanded_node([0.2, 0.5, 0.3])
        assert select_child(node, SearchConfig()) == 0

    def test_hand_scores(self):
        node = expanded_node([0.5, 0.5], visits=[1, 0], sums=[0.0, 0.0])
        cfg = SearchConfig()
        c = cfg.exploration_factor(1)
        assert c == pytest.approx(1.25, abs=1e-3)
        assert select_child(node, cfg) == 1
        scores = [c * 1 * 0.5 / 2, c * 1 * 0.5 / 1]
        assert scores == pytest.approx([0.3125, 0.625], abs=1e-4)

    def test_exploration_factor_inversion(self):
        cfg = SearchConfig()
        total = cfg.c2 * (math.e - 1) - 1
        assert cfg.exploration_factor(total) == pytest.approx(cfg.c1 + 1, abs=1e-12)

    @settings(max_examples=100)
    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8), st.integers(0, 50), st.floats(-3, 3))
    def test_equal_q_lets_exploration_decide(self, raw, visits0, qv):
        priors = np.asarray(raw) / sum(raw)
        n = len(priors)
        visits = [visits0] + [1] * (n - 1)
        sums = [qv * v for v in visits]
        # unvisited children borrow the parent mean, so make that equal too
        node = expanded_node(priors.tolist(), visits, sums, value_sum=qv * (1 + sum(visits)))
        bounds = (qv - 1.0, qv + 2.0)
        bonus = [p / (1 + v) for p, v in zip(priors, visits)]
        expected = int(np.argmax(bonus))
        for mm in (MinMaxStats(), MinMaxStats(bounds)):
            assert select_child(node, SearchConfig(), mm) == expected


class TestBackup:
    def _chain(self, rewards, to_play=None):
        nodes = [SearchNode(i, reward=(0.0 if i == 0 else rewards[i - 1]),
                            to_play=(to_play[i] if to_play else 0)) for i in range(len(rewards) + 1)]
        path = []
        for parent, child in zip(nodes, nodes[1:]):
            parent.actions, parent.priors = [0], [1.0]
            parent.child_visits, parent.value_sums = [0], [0.0]
            parent.q_init, parent.children, parent.expanded = [None], [child], True
            path.append((parent, 0))
        return nodes, path

    def test_one_step(self):
        nodes, path = self._chain([0.0])
        backup(path, 1.0, SearchConfig(gamma=0.99))
        assert nodes[0].value_sums[0] == pytest.approx(0.99)

    def test_terminal_zero(self):
        nodes, path = self._chain([0.0, 0.0])
        backup(path, 0.0, SearchConfig())
        assert nodes[0].value_sums[0] == 0.0 and nodes[1].value_sums[0] == 0.0

    def test_discounted_sum(self):
        nodes, path = self._chain([1.0, 1.0])
        backup(path, 4.0, SearchConfig(gamma=0.5))
        assert nodes[0].value_sums[0] == pytest.approx(2.5)

    def test_two_player_sign(self):
        # child is the opponent; its value of +1 is -1 for the parent
        nodes, path = self._chain([0.0], to_play=[0, 1])
        backup(path, 1.0, SearchConfig(gamma=1.0))
        assert nodes[0].value_sums[0] == -1.0


class TestRootQInit:
    def test_disabled(self):
        model = fixed_model([1.0, 0.0])
        out = model.initial_inference(0)
        root = SearchNode.from_output(out)
        cfg = SearchConfig(exhaustive_mode=True, root_q_init=False)
        expand_node(root, out, cfg, 0, is_root=True)
        root_q_init(root, model, cfg)
        assert root.q_init == [None, None]

    def test_values(self):
        model = fixed_model([1.0, 0.0])
        out = model.initial_inference(0)
        root = SearchNode.from_output(out)
        cfg = SearchConfig(exhaustive_mode=True, root_q_init=True)
        expand_node(root, out, cfg, 0, is_root=True)
        root_q_init(root, model, cfg)
        assert root.q_init == [1.0, 0.0]
        assert root.child_visits == [0, 0]


class TestRunSearch:
    def test_single_action(self):
        for cfg in (SearchConfig(), SearchConfig(k_samples=1, num_simulations=7), SearchConfig(exhaustive_mode=True)):
            r = run_search(0, fixed_model([0.3]), cfg, 0)
            assert r.visit_distribution.probs.tolist() == [1.0]

    def test_two_armed_bandit(self):
        cfg = SearchConfig(num_simulations=100, gamma=0.0, exhaustive_mode=True)
        r = run_search(0, fixed_model([1.0, 0.0]), cfg, 0)
        assert r.actions[np.argmax(r.visit_distribution.probs)] == 0

    @given(st.integers(1, 200), st.booleans(), st.integers(0, 1000))
    @settings(max_examples=40, deadline=None)
    def test_visit_conservation(self, sims, qinit, seed):
        cfg = SearchConfig(num_simulations=sims, k_samples=5, root_q_init=qinit)
        r = run_search(0, fixed_model(np.linspace(0, 1, 8)), cfg, seed)
        assert r.visit_counts.sum() == sims

    def test_deterministic(self):
        env = TicTacToe()
        model = SimulatorModel(env)
        cfg = SearchConfig(k_samples=4)
        a = run_search(env.initial_state(), model, cfg, RngSeed(3), record_trace=True)
        b = run_search(env.initial_state(), model, cfg, RngSeed(3), record_trace=True)
        assert a.trace == b.trace
        np.testing.assert_array_equal(a.visit_counts, b.visit_counts)

    def test_terminal_root(self):
        env = TicTacToe()
        with pytest.raises(ValueError):
            run_search((1, 1, 1, 2, 2, 0, 0, 0, 0), SimulatorModel(env), SearchConfig(), 0)

    def test_search_finds_immediate_win(self):
        env = TicTacToe()
        board = (1, 1, 0, 2, 2, 0, 0, 0, 0)  # X to move, cell 2 wins
        r = run_search(board, SimulatorModel(env), SearchConfig(exhaustive_mode=True, num_simulations=200,
                                                                gamma=1.0, dirichlet_fraction=0.0), 0)
        assert r.best_action() == 2


@pytest.mark.parametrize("seed", range(5))
def test_exhaustive_equals_reference_step_by_step(seed):
    grid = make_gridworld()
    model = SimulatorModel(grid, value_fn=lambda env, s: 0.1 * (s[0] + s[1]))
    cfg = SearchConfig(num_simulations=80, exhaustive_mode=True)
    a = run_search((0, 0), model, cfg, RngSeed(seed), record_trace=True)
    b = run_reference_search((0, 0), model, cfg, RngSeed(seed), record_trace=True)
    assert a.trace == b.trace
    np.testing.assert_array_equal(a.visit_counts, b.visit_counts)
    np.testing.assert_array_equal(a.per_action_q, b.per_action_q)
    assert a.root_value == b.root_value


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(prior_mode="other")
    with pytest.raises(ValueError):
        SearchConfig(value_bounds=(1.0, 0.0))
    assert SearchConfig(prior_mode="raw-pi").prior_mode == "raw_pi"


def test_sampled_search_tracks_sample_based_pi_bar():
    fp = FrozenProblem.random(10, np.random.default_rng(0))
    cfg = fp.search_config(50, k_samples=10)
    lam = cfg.exploration_factor(50) * math.sqrt(50) / 60
    op = ImprovementOperator(Family.MUZERO_REGULARIZED, lambda_n=lam)
    visits, target = np.zeros(10), np.zeros(10)
    for seed in range(1000):
        result = run_search(0, fp.model(), cfg, RngSeed(seed))
        s = result.sampled_actions
        visits += result.full_policy(10)
        target += s.scatter(improve_sampled(s, QEstimate(fp.q[s.actions]), op).probs, 10)
    assert tv_distance(visits / 1000, target / 1000) <= 0.03
