"""Pure NumPy reference implementation of the hot kernels.

Semantics here are authoritative; the Cython module ``_core`` must agree
with this backend (see tests/test_backends.py).  All chain computations
run in log space so emission log likelihoods as extreme as +-1e9 stay
finite.
"""

import numpy as np

BACKEND_NAME = "python"


def _logaddexp2(a, b):
    return np.logaddexp(a, b)


def hmm_posterior(log_emit, log_init, log_trans):
    """Smoothed posteriors of a 2-state chain by forward-backward.

    Args:
        log_emit: (T, 2) per-step emission log likelihoods.
        log_init: (2,) log initial state distribution.
        log_trans: (2, 2) log transition matrix, row i = from state i.

    Returns:
        (marg1, alpha, loglik): marginal P(z_t = 1 | x_{1:T}) of shape (T,),
        normalized log forward messages of shape (T, 2) (each row's exp sums
        to one), and the total log evidence.
    """
    T = log_emit.shape[0]
    alpha = np.empty((T, 2))
    loglik = 0.0

    a = log_init + log_emit[0]
    c = _logaddexp2(a[0], a[1])
    alpha[0] = a - c
    loglik += c
    for t in range(1, T):
        a0 = _logaddexp2(alpha[t - 1, 0] + log_trans[0, 0], alpha[t - 1, 1] + log_trans[1, 0])
        a1 = _logaddexp2(alpha[t - 1, 0] + log_trans[0, 1], alpha[t - 1, 1] + log_trans[1, 1])
        a = np.array([a0, a1]) + log_emit[t]
        c = _logaddexp2(a[0], a[1])
        alpha[t] = a - c
        loglik += c

    beta = np.zeros(2)
    marg1 = np.empty(T)
    g = alpha[T - 1] + beta
    marg1[T - 1] = np.exp(g[1] - _logaddexp2(g[0], g[1]))
    for t in range(T - 2, -1, -1):
        b0 = _logaddexp2(
            log_trans[0, 0] + log_emit[t + 1, 0] + beta[0],
            log_trans[0, 1] + log_emit[t + 1, 1] + beta[1],
        )
        b1 = _logaddexp2(
            log_trans[1, 0] + log_emit[t + 1, 0] + beta[0],
            log_trans[1, 1] + log_emit[t + 1, 1] + beta[1],
        )
        beta = np.array([b0, b1])
        beta -= _logaddexp2(beta[0], beta[1])
        g = alpha[t] + beta
        marg1[t] = np.exp(g[1] - _logaddexp2(g[0], g[1]))
    return marg1, alpha, loglik


def hmm_sample_paths(alpha, log_trans, uniforms):
    """Joint-posterior path samples by backward sampling of forward messages.

    ``uniforms`` has shape (S, T); sample s consumes uniforms[s, T-1],
    uniforms[s, T-2], ... so every backend draws identical paths from
    identical uniforms.
    """
    S, T = uniforms.shape
    paths = np.empty((S, T), dtype=np.uint8)

    p_last = np.exp(alpha[T - 1, 0] - _logaddexp2(alpha[T - 1, 0], alpha[T - 1, 1]))
    paths[:, T - 1] = uniforms[:, T - 1] >= p_last
    for t in range(T - 2, -1, -1):
        nxt = paths[:, t + 1].astype(np.intp)
        l0 = alpha[t, 0] + log_trans[0, nxt]
        l1 = alpha[t, 1] + log_trans[1, nxt]
        p0 = np.exp(l0 - np.logaddexp(l0, l1))
        paths[:, t] = uniforms[:, t] >= p0
    return paths


def _softplus(x):
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _forward_cached(ws, bs, x):
    h = x
    acts = [h]
    n = len(ws)
    for k in range(n - 1):
        h = np.tanh(h @ ws[k] + bs[k])
        acts.append(h)
    out = h @ ws[-1] + bs[-1]
    return out, acts


def mlp_forward(ws, bs, x, var_floor):
    """Feed-forward pass of the tanh MLP with a (mean, variance) head.

    Args:
        ws, bs: per-layer weight matrices (fan_in, fan_out) and bias vectors.
        x: (B, l) batch of input windows.
        var_floor: additive lower bound of the predicted variance.

    Returns:
        (mean, var) arrays of shape (B,); var = softplus(raw) + var_floor.
    """
    out, _ = _forward_cached(ws, bs, x)
    return out[:, 0].copy(), _softplus(out[:, 1]) + var_floor


def mlp_loss_grad(ws, bs, x, y, var_floor):
    """Mean Gaussian NLL over the batch and its parameter gradients.

    Returns:
        (loss, gws, gbs) where loss is the mean negative log likelihood and
        gws/gbs mirror the shapes of ws/bs.
    """
    B = x.shape[0]
    out, acts = _forward_cached(ws, bs, x)
    mean = out[:, 0]
    raw = out[:, 1]
    var = _softplus(raw) + var_floor
    resid = y - mean
    loss = float(np.mean(0.5 * np.log(2.0 * np.pi * var) + resid**2 / (2.0 * var)))

    delta = np.empty_like(out)
    delta[:, 0] = (mean - y) / var / B
    delta[:, 1] = (0.5 / var - resid**2 / (2.0 * var**2)) * _sigmoid(raw) / B

    gws = [np.empty_like(w) for w in ws]
    gbs = [np.empty_like(b) for b in bs]
    for k in range(len(ws) - 1, -1, -1):
        gws[k] = acts[k].T @ delta
        gbs[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ ws[k].T) * (1.0 - acts[k] ** 2)
    return loss, gws, gbs


def _forward_one(ws, bs, window):
    out, _ = _forward_cached(ws, bs, window[None, :])
    return out[0, 0], _softplus(np.array([out[0, 1]]))[0]


def online_detect(ws, bs, var_floor, values, l, log_init, log_trans, anom_loglik, threshold):
    """Left-to-right filtering pass with on-the-fly input replacement.

    The first ``l`` steps carry no forecast: their emissions are equal in
    both states so the belief follows the chain alone.  From step ``l`` on,
    each incoming value is scored against the one-step forecast built from
    the working buffer; values scoring above ``threshold`` are overwritten
    with the forecast mean so later windows see the replacement.

    Returns:
        (scores, means, variances, work): filtered P(z_t = 1), per-step
        forecast mean/variance (NaN for t < l), and the working buffer.
    """
    T = values.shape[0]
    scores = np.empty(T)
    means = np.full(T, np.nan)
    variances = np.full(T, np.nan)
    work = values.copy()

    log_belief = log_init.copy()
    for t in range(T):
        if t >= l:
            m, v_raw = _forward_one(ws, bs, work[t - l:t])
            v = v_raw + var_floor
            means[t] = m
            variances[t] = v
            r = values[t] - m
            e0 = -0.5 * np.log(2.0 * np.pi * v) - r * r / (2.0 * v)
            e1 = anom_loglik
        else:
            e0 = 0.0
            e1 = 0.0
        if t > 0:
            p0 = _logaddexp2(log_belief[0] + log_trans[0, 0], log_belief[1] + log_trans[1, 0])
            p1 = _logaddexp2(log_belief[0] + log_trans[0, 1], log_belief[1] + log_trans[1, 1])
            log_belief = np.array([p0, p1])
        log_belief = log_belief + np.array([e0, e1])
        log_belief -= _logaddexp2(log_belief[0], log_belief[1])
        scores[t] = np.exp(log_belief[1])
        if t >= l and scores[t] > threshold:
            work[t] = means[t]
    return scores, means, variances, work
