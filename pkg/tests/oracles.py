"""Independent reference computations the tests check the library against."""

import itertools

import numpy as np


def brute_force_posterior(emissions, initial, transition):
    """Exact smoothing by enumerating all 2^T indicator paths.

    Returns (marginals of state 1, log evidence).  Only viable for small T;
    deliberately shares no code with the forward-backward implementation.
    """
    emissions = np.asarray(emissions, dtype=np.float64)
    T = emissions.shape[0]
    log_init = np.log(initial)
    log_trans = np.log(transition)
    paths = list(itertools.product((0, 1), repeat=T))
    logps = np.empty(len(paths))
    for n, path in enumerate(paths):
        lp = log_init[path[0]] + emissions[0, path[0]]
        for t in range(1, T):
            lp += log_trans[path[t - 1], path[t]] + emissions[t, path[t]]
        logps[n] = lp
    evidence = float(np.logaddexp.reduce(logps))
    marginals = np.zeros(T)
    for n, path in enumerate(paths):
        weight = np.exp(logps[n] - evidence)
        for t in range(T):
            if path[t] == 1:
                marginals[t] += weight
    return marginals, evidence


def interpolated_quantile(values, q):
    """Linear interpolation between order statistics (the type-7 rule)."""
    ordered = sorted(float(v) for v in values)
    if len(ordered) == 1:
        return ordered[0]
    pos = q * (len(ordered) - 1)
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    frac = pos - lo
    return ordered[lo] * (1.0 - frac) + ordered[hi] * frac


def random_chain(rng, T):
    """A random valid 2-state chain instance for property tests."""
    emissions = rng.uniform(-10.0, 3.0, size=(T, 2))
    p01 = rng.uniform(0.001, 0.999)
    p11 = rng.uniform(0.001, 0.999)
    p1_init = rng.uniform(0.001, 0.999)
    initial = np.array([1.0 - p1_init, p1_init])
    transition = np.array([[1.0 - p01, p01], [1.0 - p11, p11]])
    return emissions, initial, transition
