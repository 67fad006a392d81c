import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sampled_muzero.core import (
    DiscreteDistribution,
    InvalidDistributionError,
    RngSeed,
    SampledActionSet,
    apply_temperature,
    enumerate_actions,
    mix_dirichlet,
    sample_actions,
)

weights = st.lists(st.floats(0.0, 10.0, allow_nan=False), min_size=1, max_size=30).filter(lambda w: sum(w) > 1e-3)


class TestDiscreteDistribution:
    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidDistributionError):
            DiscreteDistribution([0.5, 0.6])

    def test_rejects_negative_and_nan(self):
        with pytest.raises(InvalidDistributionError):
            DiscreteDistribution([1.5, -0.5])
        with pytest.raises(InvalidDistributionError):
            DiscreteDistribution([np.nan, 1.0])

    def test_accepts_within_tolerance(self):
        DiscreteDistribution([0.5, 0.5 + 5e-10])

    def test_repair_on_request_logs(self, caplog):
        d = DiscreteDistribution([1.0, 1.0], renormalize=True)
        np.testing.assert_array_equal(d.probs, [0.5, 0.5])
        assert "renormalizing" in caplog.text

    def test_read_only(self):
        d = DiscreteDistribution.uniform(3)
        with pytest.raises(ValueError):
            d.probs[0] = 1.0

    @given(weights)
    def test_from_weights_is_normalized(self, w):
        d = DiscreteDistribution.from_weights(w)
        assert abs(d.probs.sum() - 1.0) <= 1e-9
        assert np.all(d.probs >= 0)


class TestSampleActions:
    def test_point_mass_proposal(self):
        beta = np.eye(5)[3]
        s = sample_actions(DiscreteDistribution.uniform(5), beta, 5, RngSeed(0))
        assert s.actions.tolist() == [3]
        assert s.counts.tolist() == [5]
        assert s.beta_hat.tolist() == [1.0]

    def test_two_action_outcome_frequencies(self):
        # K = 2 draws from a fair coin: (2,0), (1,1), (0,2) with probabilities 1/4, 1/2, 1/4
        tally = {(1.0, 0.0): 0, (0.5, 0.5): 0, (0.0, 1.0): 0}
        m = 20_000
        for i in range(m):
            s = sample_actions([0.5, 0.5], [0.5, 0.5], 2, RngSeed(7, i))
            tally[tuple(s.scatter(s.beta_hat, 2))] += 1
        for outcome, p in zip(tally, (0.25, 0.5, 0.25)):
            se = np.sqrt(p * (1 - p) / m)
            assert abs(tally[outcome] / m - p) < 4 * se

    @given(st.integers(0, 2**32 - 1))
    def test_bookkeeping(self, seed):
        s = sample_actions(np.full(4, 0.25), np.full(4, 0.25), 20, RngSeed(seed))
        assert s.counts.sum() == 20
        assert np.all(s.beta == 0.25)
        assert np.all(np.diff(s.actions) > 0)

    def test_reproducible(self):
        pi = np.random.default_rng(0).dirichlet(np.ones(50))
        a = sample_actions(pi, pi, 30, RngSeed(11, 3))
        b = sample_actions(pi, pi, 30, RngSeed(11, 3))
        for name in ("actions", "counts", "pi", "beta"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_single_draw_frequencies(self):
        beta = np.array([0.1, 0.2, 0.3, 0.4])
        m = 100_000
        counts = np.zeros(4)
        gen = RngSeed(5).generator()
        for _ in range(m):
            s = sample_actions(beta, beta, 1, gen)
            counts[s.actions[0]] += 1
        se = np.sqrt(beta * (1 - beta) / m)
        assert np.all(np.abs(counts / m - beta) < 4 * se)

    def test_errors(self):
        with pytest.raises(ValueError):
            sample_actions([0.5, 0.5], [1.0, 0.0, 0.0], 3, 0)
        with pytest.raises(InvalidDistributionError):
            sample_actions([0.5, 0.5], [0.0, 0.0], 3, 0)
        with pytest.raises(ValueError):
            sample_actions([0.5, 0.5], [0.5, 0.5], 0, 0)


def test_sampled_action_set_validation():
    with pytest.raises(ValueError):
        SampledActionSet([0, 0], [1, 1], [0.5, 0.5], [0.5, 0.5], 2)
    with pytest.raises(ValueError):
        SampledActionSet([0, 1], [1, 1], [0.5, 0.5], [0.5, 0.0], 2)
    with pytest.raises(ValueError):
        SampledActionSet([0, 1], [1, 1], [0.5, 0.5], [0.5, 0.5], 3)


def test_enumerate_actions_has_unit_ratios():
    s = enumerate_actions([0.2, 0.0, 0.8])
    assert s.actions.tolist() == [0, 2]
    np.testing.assert_array_equal(s.importance, [1.0, 1.0])


class TestTemperature:
    def test_identity(self):
        pi = DiscreteDistribution([0.3, 0.7])
        assert apply_temperature(pi, 1.0) == pi

    def test_high_temperature_is_uniform_on_support(self):
        np.testing.assert_allclose(apply_temperature([0.8, 0.2], 1e6).probs, [0.5, 0.5], atol=1e-3)
        assert apply_temperature([0.8, 0.0, 0.2], 1e6).probs[1] == 0.0

    def test_sharpening(self):
        np.testing.assert_allclose(apply_temperature([0.8, 0.2], 0.5).probs, [0.64 / 0.68, 0.04 / 0.68], atol=1e-12)

    def test_invalid(self):
        with pytest.raises(ValueError):
            apply_temperature([0.5, 0.5], 0.0)

    @given(weights, st.floats(0.05, 20.0))
    def test_zeros_stay_zero_and_order_is_kept(self, w, tau):
        pi = DiscreteDistribution.from_weights(w).probs
        out = apply_temperature(pi, tau).probs
        assert np.all(out[pi == 0] == 0)
        assert abs(out.sum() - 1.0) <= 1e-9
        for i, j in itertools.combinations(range(pi.size), 2):
            if pi[i] > pi[j]:
                assert out[i] >= out[j]


class TestDirichlet:
    def test_no_noise(self):
        pi = DiscreteDistribution([0.3, 0.7])
        assert mix_dirichlet(pi, 0.3, 0.0, 0) == pi

    def test_single_action_support(self):
        np.testing.assert_array_equal(mix_dirichlet([0.0, 1.0], 0.3, 1.0, 0).probs, [0.0, 1.0])

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_mixture_lower_bound(self, seed):
        out = mix_dirichlet(np.full(10, 0.1), 0.3, 0.25, RngSeed(seed)).probs
        assert abs(out.sum() - 1.0) < 1e-12
        assert np.all(out >= 0.75 * 0.1 - 1e-15)
