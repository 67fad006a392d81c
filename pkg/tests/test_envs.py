import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sampled_muzero.envs import (
    ContinuousBandit,
    FactoredActionCodec,
    FactoredBandit,
    FixedQBandit,
    GridWorld,
    JointBandit,
    SimulatorModel,
    TicTacToe,
    minimax,
    policy_return,
    value_iteration,
)
from sampled_muzero.envs.tictactoe import check_legal, winner
from sampled_muzero.experiments import make_gridworld


class TestCodec:
    def test_center_bins(self):
        codec = FactoredActionCodec(1, 7)
        assert codec.encode([0.0]).tolist() == [3]
        assert codec.decode([3])[0] == pytest.approx(0.0, abs=1e-15)

    def test_edge_bin(self):
        codec = FactoredActionCodec(1, 7)
        assert codec.encode([-1.0]).tolist() == [0]
        assert codec.decode([0])[0] == pytest.approx(-6 / 7)
        assert codec.encode([1.0]).tolist() == [6]
        assert codec.encode([5.0]).tolist() == [6]

    @given(st.lists(st.integers(0, 6), min_size=3, max_size=3))
    def test_roundtrip(self, bins):
        codec = FactoredActionCodec(3, 7)
        assert codec.encode(codec.decode(bins)).tolist() == bins
        assert codec.unflatten(codec.flatten(bins)).tolist() == bins

    @given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
    def test_quantization_error(self, x):
        codec = FactoredActionCodec(4, 7)
        err = np.abs(codec.decode(codec.encode(x)) - np.asarray(x))
        assert np.all(err <= 1 / 7 + 1e-12)


class TestBandits:
    def test_on_centers_optimum_is_zero(self):
        codec = FactoredActionCodec(6, 7)
        bandit = ContinuousBandit.on_centers(codec, np.random.default_rng(0))
        assert bandit.reward(codec.decode(codec.encode(bandit.a_star))) == 0.0

    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_best_bin_bound(self, a_star):
        codec = FactoredActionCodec(3, 7)
        bandit = ContinuousBandit(3, np.asarray(a_star))
        best = max(bandit.reward(codec.decode(b)) for b in itertools.product(range(7), repeat=3))
        assert best >= -3 * (1 / 7) ** 2 - 1e-12

    def test_factored_matches_joint(self):
        codec = FactoredActionCodec(2, 5)
        bandit = ContinuousBandit(2, np.array([0.3, -0.6]))
        fac, joint = FactoredBandit(bandit, codec), JointBandit(bandit, codec)
        for bins in itertools.product(range(5), repeat=2):
            s = fac.initial_state()
            s, r0, d0 = fac.step(s, bins[0])
            s, r1, d1 = fac.step(s, bins[1])
            assert (r0, d0, d1) == (0.0, False, True)
            _, rj, dj = joint.step(joint.initial_state(), codec.flatten(bins))
            assert r1 == rj and dj

    def test_joint_dims_limit(self):
        with pytest.raises(ValueError):
            JointBandit(ContinuousBandit(4, np.zeros(4)), FactoredActionCodec(4, 3))

    def test_fixed_q(self):
        env = FixedQBandit(np.array([0.2, 0.9]))
        assert env.step(0, 1) == (1, 0.9, True)
        assert env.is_terminal(1)


class TestGridWorld:
    def test_adjacent_to_goal(self):
        grid = make_gridworld()
        values, policy = value_iteration(grid, 0.9)
        assert values[grid.goal] == 0.0
        assert values[(3, 4)] == pytest.approx(1.0)
        assert values[(4, 3)] == pytest.approx(1.0)

    def test_one_by_two(self):
        grid = GridWorld(2, 1, goal=(0, 1))  # cells are (row, col)
        values, policy = value_iteration(grid, 0.5)
        assert values[(0, 0)] == pytest.approx(1.0)
        east = 1
        assert policy[(0, 0)] == [east]

    def test_deterministic(self):
        grid = make_gridworld()
        a, _ = value_iteration(grid, 0.99)
        b, _ = value_iteration(grid, 0.99)
        assert a == b

    def test_bellman_residual(self):
        grid = make_gridworld()
        gamma = 0.99
        values, _ = value_iteration(grid, gamma)
        for c in grid.free_cells():
            if c == grid.goal:
                continue
            best = max(r + (0 if d else gamma * values[n]) for n, r, d in (grid.step(c, a) for a in range(4)))
            assert abs(best - values[c]) < 1e-9

    def test_optimal_return_matches_oracle(self):
        grid = make_gridworld()
        gamma = 0.99
        values, policy = value_iteration(grid, gamma)
        for c in grid.free_cells():
            if c != grid.goal:
                assert policy_return(grid, c, lambda x: policy[x][0], gamma) == pytest.approx(values[c], abs=1e-9)

    def test_unreachable_goal(self):
        with pytest.raises(ValueError):
            GridWorld(3, 1, goal=(2, 0), walls={(1, 0)})

    def test_replay_is_deterministic(self):
        grid = make_gridworld()
        gen = np.random.default_rng(0)
        actions = gen.integers(4, size=30)
        def rollout():
            s, out = (0, 0), []
            for a in actions:
                if grid.is_terminal(s):
                    break
                s, r, d = grid.step(s, int(a))
                out.append((s, r, d))
            return out
        assert rollout() == rollout()


class TestTicTacToe:
    def test_empty_board_is_draw(self):
        value, moves = minimax((0,) * 9)
        assert value == 0
        assert sorted(moves) == list(range(9))  # every opening draws

    def test_immediate_win(self):
        value, moves = minimax((1, 1, 0, 2, 2, 0, 0, 0, 0))
        assert value == 1
        assert 2 in moves

    def test_last_move(self):
        board = (1, 2, 1, 1, 2, 2, 2, 1, 0)
        value, moves = minimax(board)
        assert moves == [8]
        after = TicTacToe().step(board, 8)
        assert after[1] == 0.0 and after[2] and value == 0

    def test_illegal(self):
        with pytest.raises(ValueError):
            check_legal((1, 1, 1, 1, 0, 0, 0, 0, 0))
        with pytest.raises(ValueError):
            TicTacToe().step((1, 0, 0, 0, 0, 0, 0, 0, 0), 0)

    def test_zero_sum_reward(self):
        env = TicTacToe()
        s = env.initial_state()
        for a in (0, 3, 1, 4):
            s, r, d = env.step(s, a)
        s, r, d = env.step(s, 2)
        assert (r, d) == (1.0, True) and winner(s) == 1

    @settings(max_examples=50)
    @given(st.permutations(range(9)))
    def test_random_games_are_consistent(self, order):
        env = TicTacToe()
        s = env.initial_state()
        for a in order:
            if env.is_terminal(s):
                break
            assert env.legal_mask(s).sum() == s.count(0)
            s, r, d = env.step(s, a)
            assert d == env.is_terminal(s)
        check_legal(s)

    def test_simulator_model_terminal(self):
        env = TicTacToe()
        out = SimulatorModel(env).recurrent_inference((1, 1, 0, 2, 2, 0, 0, 0, 0), 2)
        assert out.terminal and out.reward == 1.0 and out.value == 0.0
