import numpy as np
import pytest

from lai.hmm import (
    PROB_FLOOR,
    HmmParams,
    filter_step,
    forward_backward,
    initial_belief,
    sample_paths,
    update_transitions,
)
from oracles import brute_force_posterior, random_chain


def chain(p01=0.01, p11=0.5, p1_init=None):
    params = HmmParams.from_rates(p01, p11)
    if p1_init is not None:
        params = HmmParams(
            initial=np.array([1.0 - p1_init, p1_init]), transition=params.transition
        )
    return params


class TestHmmParams:
    def test_from_rates(self):
        params = HmmParams.from_rates(0.01, 0.5)
        assert params.initial.tolist() == [0.99, 0.01]
        assert params.transition[0].tolist() == [0.99, 0.01]
        assert params.transition[1].tolist() == [0.5, 0.5]

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            HmmParams(np.array([0.6, 0.6]), np.array([[0.9, 0.1], [0.5, 0.5]]))
        with pytest.raises(ValueError):
            HmmParams(np.array([0.9, 0.1]), np.array([[0.9, 0.2], [0.5, 0.5]]))

    def test_rejects_below_floor(self):
        with pytest.raises(ValueError):
            HmmParams(np.array([1.0, 0.0]), np.array([[0.9, 0.1], [0.5, 0.5]]))


class TestForwardBackward:
    def test_uniform_emissions_keep_prior(self):
        # with equal emissions the T=1 marginal is the prior, whatever the
        # transition matrix says
        emissions = np.array([[0.0, 0.0]])
        for p11 in (0.1, 0.5, 0.9):
            post = forward_backward(emissions, chain(0.1, p11, p1_init=0.1))
            assert post.marginals[0] == pytest.approx(0.1, abs=1e-12)

    def test_impossible_state_never_visited(self):
        emissions = np.array([[0.0, -1e9], [0.0, -1e9]])
        params = HmmParams(np.array([0.5, 0.5]), np.array([[0.5, 0.5], [0.5, 0.5]]))
        post = forward_backward(emissions, params)
        assert np.all(post.marginals < 1e-100)

    def test_matches_enumeration_t3(self):
        emissions = np.array([[-1.0, -5.0], [-6.0, -1.0], [-1.0, -5.0]])
        params = HmmParams(
            np.array([0.99, 0.01]), np.array([[0.99, 0.01], [0.5, 0.5]])
        )
        post = forward_backward(emissions, params)
        marginals, evidence = brute_force_posterior(
            emissions, params.initial, params.transition
        )
        assert np.allclose(post.marginals, marginals, atol=1e-10)
        assert post.loglik == pytest.approx(evidence, abs=1e-10)

    def test_matches_enumeration_random(self):
        rng = np.random.default_rng(123)
        for _ in range(25):
            T = int(rng.integers(1, 9))
            emissions, initial, transition = random_chain(rng, T)
            params = HmmParams(initial, transition)
            post = forward_backward(emissions, params)
            marginals, evidence = brute_force_posterior(emissions, initial, transition)
            assert np.allclose(post.marginals, marginals, atol=1e-10)
            assert post.loglik == pytest.approx(evidence, abs=1e-10)

    def test_forward_messages_normalized(self):
        rng = np.random.default_rng(5)
        emissions, initial, transition = random_chain(rng, 40)
        post = forward_backward(emissions, HmmParams(initial, transition))
        sums = np.logaddexp(post.forward_log[:, 0], post.forward_log[:, 1])
        assert np.allclose(sums, 0.0, atol=1e-12)

    def test_extreme_logliks_stay_finite(self):
        emissions = np.array([[1e9, -1e9], [-1e9, 1e9], [1e9, 1e9], [-1e9, -1e9]])
        post = forward_backward(emissions, chain())
        assert np.all(np.isfinite(post.marginals))
        assert np.all(np.isfinite(post.forward_log[np.isfinite(post.forward_log)]))
        assert np.isfinite(post.loglik) or post.loglik != 0  # no NaN
        assert not np.isnan(post.loglik)

    def test_rejects_nan_emissions(self):
        with pytest.raises(ValueError):
            forward_backward(np.array([[0.0, np.nan]]), chain())

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            forward_backward(np.zeros((0, 2)), chain())


class TestSamplePaths:
    def test_degenerate_posterior_forces_path(self):
        forced = np.array([0, 1, 1, 0, 0])
        emissions = np.full((5, 2), -1e9)
        emissions[np.arange(5), forced] = 0.0
        paths = sample_paths(emissions, chain(), 50, seed=0)
        assert np.array_equal(paths, np.tile(forced, (50, 1)))

    def test_empirical_frequency_matches_marginal(self):
        emissions = np.array([[-1.0, -5.0], [-6.0, -1.0]])
        params = HmmParams(
            np.array([0.99, 0.01]), np.array([[0.99, 0.01], [0.5, 0.5]])
        )
        exact = forward_backward(emissions, params).marginals
        paths = sample_paths(emissions, params, 100_000, seed=42)
        freq = paths.mean(axis=0)
        assert np.all(np.abs(freq - exact) < 0.01)

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        emissions, initial, transition = random_chain(rng, 30)
        params = HmmParams(initial, transition)
        a = sample_paths(emissions, params, 10, seed=3)
        b = sample_paths(emissions, params, 10, seed=3)
        assert np.array_equal(a, b)

    def test_convergence_tolerance_bound(self):
        # empirical marginals within 3 sigma of the exact ones, per step
        rng = np.random.default_rng(21)
        emissions, initial, transition = random_chain(rng, 12)
        params = HmmParams(initial, transition)
        exact = forward_backward(emissions, params).marginals
        n = 20_000
        freq = sample_paths(emissions, params, n, seed=77).mean(axis=0)
        bound = 3.0 * np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / n) + 1e-9
        assert np.all(np.abs(freq - exact) <= bound + 0.002)


class TestUpdateTransitions:
    def test_hand_counts(self):
        params = update_transitions([[0, 0, 1], [0, 1, 1]], smoothing=1.0)
        assert params.transition[0, 1] == pytest.approx(0.6)
        assert params.transition[1, 1] == pytest.approx(2.0 / 3.0)

    def test_single_state_path_hits_floor(self):
        params = update_transitions([[0, 0, 0]], smoothing=0.0)
        assert params.transition[0, 0] == pytest.approx(1.0 - PROB_FLOOR)
        assert params.transition[0, 1] == pytest.approx(PROB_FLOOR)

    def test_symmetric_initial(self):
        params = update_transitions([[0, 1], [1, 0]], smoothing=0.0)
        assert params.initial.tolist() == [0.5, 0.5]

    def test_always_valid(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            T = int(rng.integers(2, 15))
            paths = rng.integers(0, 2, size=(n, T))
            smoothing = float(rng.choice([0.0, 0.5, 1.0, 3.0]))
            params = update_transitions(paths, smoothing)
            assert np.max(np.abs(params.transition.sum(axis=1) - 1.0)) <= 1e-12
            assert params.initial.sum() == pytest.approx(1.0, abs=1e-12)
            assert params.transition.min() >= PROB_FLOOR
            assert params.initial.min() >= PROB_FLOOR

    def test_short_paths_error(self):
        with pytest.raises(ValueError):
            update_transitions([[0], [1]], smoothing=1.0)


class TestFilterStep:
    def test_equal_emissions_apply_transition(self):
        params = HmmParams(
            np.array([0.9, 0.1]), np.array([[0.9, 0.1], [0.5, 0.5]])
        )
        prev = np.array([0.3, 0.7])
        belief = filter_step(prev, (0.0, 0.0), params)
        assert np.allclose(belief, params.transition.T @ prev, atol=1e-12)

    def test_predict_then_update(self):
        params = HmmParams(
            np.array([0.9, 0.1]), np.array([[0.9, 0.1], [0.5, 0.5]])
        )
        belief = filter_step(np.array([1.0, 0.0]), (0.0, -1e9), params)
        assert belief[0] == pytest.approx(1.0, abs=1e-12)

    def test_chain_matches_forward_messages(self):
        rng = np.random.default_rng(31)
        emissions, initial, transition = random_chain(rng, 60)
        params = HmmParams(initial, transition)
        post = forward_backward(emissions, params)
        belief = initial_belief(emissions[0], params)
        for t in range(1, 60):
            belief = filter_step(belief, emissions[t], params)
        assert belief[1] == pytest.approx(np.exp(post.forward_log[-1, 1]), abs=1e-10)

    def test_zero_mass_error(self):
        params = HmmParams.from_rates(0.01, 0.5)
        with pytest.raises(ValueError):
            filter_step(np.array([0.5, 0.5]), (-np.inf, -np.inf), params)

    def test_rejects_bad_belief(self):
        with pytest.raises(ValueError):
            filter_step(np.array([0.5, 0.6]), (0.0, 0.0), HmmParams.from_rates(0.01, 0.5))
