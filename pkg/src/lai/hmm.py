"""Two-state anomaly indicator chain: exact inference, sampling, updates.

State 0 is nominal, state 1 anomalous.  Emission inputs are (T, 2) arrays
of per-step log likelihoods, column 0 under the nominal model and column 1
under the anomalous model.  Everything runs in log space.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels

#: Smallest admissible probability entry; keeps both states reachable even
#: when an epoch samples no anomalies at all.
PROB_FLOOR = 1e-6


def _floored_pair(p1, floor=PROB_FLOOR):
    """Return (p0, p1) summing to one with both entries >= floor."""
    p1 = min(max(p1, floor), 1.0 - floor)
    return 1.0 - p1, p1


@dataclass(frozen=True)
class HmmParams:
    """Initial distribution and row-stochastic 2x2 transition matrix."""

    initial: np.ndarray
    transition: np.ndarray

    def __post_init__(self):
        initial = np.asarray(self.initial, dtype=np.float64)
        transition = np.asarray(self.transition, dtype=np.float64)
        if initial.shape != (2,) or transition.shape != (2, 2):
            raise ValueError("initial must have shape (2,), transition (2, 2)")
        if np.any(initial < 0) or np.any(transition < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(initial.sum() - 1.0) > 1e-12:
            raise ValueError("initial must sum to 1")
        if np.max(np.abs(transition.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("transition rows must sum to 1")
        if np.min(initial) < PROB_FLOOR or np.min(transition) < PROB_FLOOR:
            raise ValueError(f"all entries must be >= {PROB_FLOOR}")
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "transition", transition)

    @classmethod
    def from_rates(cls, p01, p11):
        """Build from P(anomalous | nominal) and P(anomalous | anomalous).

        The initial distribution is set to (1 - p01, p01): the stationary
        anomaly share is roughly the entry rate when anomalies are rare.
        """
        return cls(
            initial=np.array(_floored_pair(p01)),
            transition=np.array([_floored_pair(p01), _floored_pair(p11)]),
        )

    @property
    def log_initial(self):
        return np.log(self.initial)

    @property
    def log_transition(self):
        return np.log(self.transition)


@dataclass(frozen=True)
class IndicatorPosterior:
    """Smoothed per-step anomaly marginals plus reusable forward messages.

    ``forward_log[t]`` is the normalized log filtering distribution
    P(z_t | x_{1:t}); ``loglik`` is log p(x_{1:T}).
    """

    marginals: np.ndarray
    forward_log: np.ndarray
    loglik: float

    def __len__(self):
        return self.marginals.size


def _check_emissions(emissions):
    emissions = np.ascontiguousarray(emissions, dtype=np.float64)
    if emissions.ndim != 2 or emissions.shape[1] != 2 or emissions.shape[0] == 0:
        raise ValueError("emissions must be a non-empty (T, 2) array")
    if not np.all(np.isfinite(emissions)):
        raise ValueError("emission log likelihoods must be finite")
    return emissions


def forward_backward(emissions, hmm: HmmParams) -> IndicatorPosterior:
    """Exact smoothing over the indicator chain.

    Args:
        emissions: (T, 2) log likelihoods, columns (nominal, anomalous).
        hmm: chain parameters.

    Returns:
        IndicatorPosterior with marginals P(z_t = 1 | x_{1:T}), normalized
        log forward messages, and the log evidence.
    """
    emissions = _check_emissions(emissions)
    marg1, alpha, loglik = _kernels.hmm_posterior(
        emissions, hmm.log_initial, hmm.log_transition
    )
    return IndicatorPosterior(marginals=marg1, forward_log=alpha, loglik=float(loglik))


def sample_paths(emissions, hmm: HmmParams, n_samples: int, seed: int) -> np.ndarray:
    """Draw exact joint-posterior indicator paths.

    Forward messages are filtered once, then each path is sampled backward.
    Deterministic given the seed.

    Returns:
        (n_samples, T) uint8 array of 0/1 states.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    posterior = forward_backward(emissions, hmm)
    return sample_paths_from_posterior(posterior, hmm, n_samples, seed)


def sample_paths_from_posterior(
    posterior: IndicatorPosterior, hmm: HmmParams, n_samples: int, seed: int
) -> np.ndarray:
    """Backward-sample paths reusing an existing posterior's forward messages."""
    rng = np.random.default_rng(seed)
    uniforms = rng.random((n_samples, len(posterior)))
    return _kernels.hmm_sample_paths(posterior.forward_log, hmm.log_transition, uniforms)


def update_transitions(paths: Sequence[np.ndarray], smoothing: float = 1.0) -> HmmParams:
    """Re-estimate chain parameters from sampled paths.

    Transition entries are smoothed relative transition counts,
    (count(i -> j) + smoothing) / (count(i -> .) + 2 * smoothing), pooled
    across paths; the initial distribution comes from the first-step state
    frequencies with the same smoothing.  Rows with no mass default to
    uniform.  Everything is floored at PROB_FLOOR and renormalized.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    if isinstance(paths, np.ndarray) and paths.ndim == 1:
        paths = [paths]
    path_list = []
    for p in paths:
        p = np.asarray(p, dtype=np.int64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("each path must be a non-empty 1-D sequence")
        if not np.all((p == 0) | (p == 1)):
            raise ValueError("path states must be 0 or 1")
        path_list.append(p)
    if not any(p.size >= 2 for p in path_list):
        raise ValueError("need at least one path of length >= 2")

    counts = np.zeros((2, 2))
    first = np.zeros(2)
    for p in path_list:
        first[p[0]] += 1
        src, dst = p[:-1], p[1:]
        for i in (0, 1):
            for j in (0, 1):
                counts[i, j] += np.count_nonzero((src == i) & (dst == j))

    def smoothed_pair(count1, total):
        denom = total + 2.0 * smoothing
        if denom == 0:
            return np.array([0.5, 0.5])
        return np.array(_floored_pair((count1 + smoothing) / denom))

    transition = np.stack(
        [
            smoothed_pair(counts[0, 1], counts[0].sum()),
            smoothed_pair(counts[1, 1], counts[1].sum()),
        ]
    )
    initial = smoothed_pair(first[1], first.sum())
    return HmmParams(initial=initial, transition=transition)


def filter_step(prev_belief, emission_t, hmm: HmmParams):
    """One predict-then-update filtering step in log space.

    Args:
        prev_belief: probability 2-vector P(z_{t-1} | x_{1:t-1}).
        emission_t: (loglik_nominal, loglik_anomalous) at the current step.
        hmm: chain parameters.

    Returns:
        Normalized belief P(z_t | x_{1:t}) as a probability 2-vector.

    The very first step of a series has no preceding transition: start the
    chain with ``initial_belief`` instead of applying filter_step to the
    initial distribution (see ``initial_belief``).
    """
    prev = np.asarray(prev_belief, dtype=np.float64)
    if prev.shape != (2,) or abs(prev.sum() - 1.0) > 1e-9 or np.any(prev < 0):
        raise ValueError("prev_belief must be a probability 2-vector")
    e = np.asarray(emission_t, dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_prev = np.log(prev)
    lt = hmm.log_transition
    predicted = np.array(
        [
            np.logaddexp(log_prev[0] + lt[0, 0], log_prev[1] + lt[1, 0]),
            np.logaddexp(log_prev[0] + lt[0, 1], log_prev[1] + lt[1, 1]),
        ]
    )
    log_belief = predicted + e
    norm = np.logaddexp(log_belief[0], log_belief[1])
    if not np.isfinite(norm):
        raise ValueError("belief has zero total mass (both emissions -inf)")
    return np.exp(log_belief - norm)


def initial_belief(emission_1, hmm: HmmParams):
    """Belief at the first observation: initial distribution times emission.

    Matches the first forward message of ``forward_backward`` exactly, so a
    filter chain seeded here agrees with the smoother's final forward
    marginal.
    """
    e = np.asarray(emission_1, dtype=np.float64)
    log_belief = hmm.log_initial + e
    norm = np.logaddexp(log_belief[0], log_belief[1])
    if not np.isfinite(norm):
        raise ValueError("belief has zero total mass (both emissions -inf)")
    return np.exp(log_belief - norm)
