# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementation of the hot kernels.

Mirrors lai._kernels._ref function for function; see that module for the
contracts.  Chain recursions, per-window MLP passes, and the online
detection loop are plain C loops, which removes the per-step interpreter
and NumPy dispatch overhead that dominates the pure backend.
"""

from libc.math cimport exp, log, log1p, tanh, M_PI

import numpy as np

BACKEND_NAME = "compiled"

cdef double LOG2 = 0.6931471805599453


cdef inline double _lae(double a, double b) noexcept nogil:
    if a > b:
        return a + log1p(exp(b - a))
    elif b > a:
        return b + log1p(exp(a - b))
    return a + LOG2


cdef inline double _softplus(double x) noexcept nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def hmm_posterior(double[:, ::1] log_emit, double[::1] log_init, double[:, ::1] log_trans):
    cdef Py_ssize_t T = log_emit.shape[0]
    cdef Py_ssize_t t
    cdef double a0, a1, c, b0, b1, g0, g1

    alpha_arr = np.empty((T, 2))
    marg_arr = np.empty(T)
    cdef double[:, ::1] alpha = alpha_arr
    cdef double[::1] marg1 = marg_arr
    cdef double loglik = 0.0

    a0 = log_init[0] + log_emit[0, 0]
    a1 = log_init[1] + log_emit[0, 1]
    c = _lae(a0, a1)
    alpha[0, 0] = a0 - c
    alpha[0, 1] = a1 - c
    loglik += c
    for t in range(1, T):
        a0 = _lae(alpha[t - 1, 0] + log_trans[0, 0], alpha[t - 1, 1] + log_trans[1, 0]) + log_emit[t, 0]
        a1 = _lae(alpha[t - 1, 0] + log_trans[0, 1], alpha[t - 1, 1] + log_trans[1, 1]) + log_emit[t, 1]
        c = _lae(a0, a1)
        alpha[t, 0] = a0 - c
        alpha[t, 1] = a1 - c
        loglik += c

    b0 = 0.0
    b1 = 0.0
    g0 = alpha[T - 1, 0]
    g1 = alpha[T - 1, 1]
    marg1[T - 1] = exp(g1 - _lae(g0, g1))
    for t in range(T - 2, -1, -1):
        a0 = _lae(log_trans[0, 0] + log_emit[t + 1, 0] + b0,
                  log_trans[0, 1] + log_emit[t + 1, 1] + b1)
        a1 = _lae(log_trans[1, 0] + log_emit[t + 1, 0] + b0,
                  log_trans[1, 1] + log_emit[t + 1, 1] + b1)
        c = _lae(a0, a1)
        b0 = a0 - c
        b1 = a1 - c
        g0 = alpha[t, 0] + b0
        g1 = alpha[t, 1] + b1
        marg1[t] = exp(g1 - _lae(g0, g1))
    return marg_arr, alpha_arr, loglik


def hmm_sample_paths(double[:, ::1] alpha, double[:, ::1] log_trans, double[:, ::1] uniforms):
    cdef Py_ssize_t S = uniforms.shape[0]
    cdef Py_ssize_t T = uniforms.shape[1]
    cdef Py_ssize_t s, t
    cdef double p_last, l0, l1, p0
    cdef int nxt

    paths_arr = np.empty((S, T), dtype=np.uint8)
    cdef unsigned char[:, ::1] paths = paths_arr

    p_last = exp(alpha[T - 1, 0] - _lae(alpha[T - 1, 0], alpha[T - 1, 1]))
    for s in range(S):
        paths[s, T - 1] = 0 if uniforms[s, T - 1] < p_last else 1
        for t in range(T - 2, -1, -1):
            nxt = paths[s, t + 1]
            l0 = alpha[t, 0] + log_trans[0, nxt]
            l1 = alpha[t, 1] + log_trans[1, nxt]
            p0 = exp(l0 - _lae(l0, l1))
            paths[s, t] = 0 if uniforms[s, t] < p0 else 1
    return paths_arr


cdef void _dense(double[:, ::1] h, double[:, ::1] w, double[::1] b,
                 double[:, ::1] out, bint apply_tanh) noexcept nogil:
    cdef Py_ssize_t B = h.shape[0]
    cdef Py_ssize_t fi = w.shape[0]
    cdef Py_ssize_t fo = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double hv
    for i in range(B):
        for j in range(fo):
            out[i, j] = b[j]
        for k in range(fi):
            hv = h[i, k]
            for j in range(fo):
                out[i, j] += hv * w[k, j]
        if apply_tanh:
            for j in range(fo):
                out[i, j] = tanh(out[i, j])


cdef list _forward_stack(list ws, list bs, double[:, ::1] x):
    """Activations per layer; the last entry is the raw 2-unit head output."""
    cdef Py_ssize_t B = x.shape[0]
    cdef int n = len(ws)
    cdef int k
    acts = [np.asarray(x)]
    cur = np.asarray(x)
    for k in range(n - 1):
        nxt = np.empty((B, ws[k].shape[1]))
        _dense(cur, ws[k], bs[k], nxt, True)
        acts.append(nxt)
        cur = nxt
    out = np.empty((B, 2))
    _dense(cur, ws[n - 1], bs[n - 1], out, False)
    acts.append(out)
    return acts


def mlp_forward(list ws, list bs, double[:, ::1] x, double var_floor):
    cdef Py_ssize_t B = x.shape[0]
    cdef Py_ssize_t i
    acts = _forward_stack(ws, bs, x)
    cdef double[:, ::1] out = acts[len(acts) - 1]
    mean_arr = np.empty(B)
    var_arr = np.empty(B)
    cdef double[::1] mean = mean_arr
    cdef double[::1] var = var_arr
    for i in range(B):
        mean[i] = out[i, 0]
        var[i] = _softplus(out[i, 1]) + var_floor
    return mean_arr, var_arr


cdef void _grad_layer(double[:, ::1] act, double[:, ::1] delta,
                      double[:, ::1] gw, double[::1] gb) noexcept nogil:
    cdef Py_ssize_t B = act.shape[0]
    cdef Py_ssize_t fi = act.shape[1]
    cdef Py_ssize_t fo = delta.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double d
    for k in range(fi):
        for j in range(fo):
            gw[k, j] = 0.0
    for j in range(fo):
        gb[j] = 0.0
    for i in range(B):
        for j in range(fo):
            d = delta[i, j]
            gb[j] += d
            for k in range(fi):
                gw[k, j] += act[i, k] * d


cdef void _backprop_delta(double[:, ::1] delta, double[:, ::1] w,
                          double[:, ::1] act, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t B = delta.shape[0]
    cdef Py_ssize_t fi = w.shape[0]
    cdef Py_ssize_t fo = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(B):
        for k in range(fi):
            acc = 0.0
            for j in range(fo):
                acc += delta[i, j] * w[k, j]
            out[i, k] = acc * (1.0 - act[i, k] * act[i, k])


def mlp_loss_grad(list ws, list bs, double[:, ::1] x, double[::1] y, double var_floor):
    cdef Py_ssize_t B = x.shape[0]
    cdef int n = len(ws)
    cdef Py_ssize_t i
    cdef int k
    cdef double m, raw, v, r, loss

    acts = _forward_stack(ws, bs, x)
    cdef double[:, ::1] out = acts[n]

    delta_arr = np.empty((B, 2))
    cdef double[:, ::1] delta = delta_arr
    loss = 0.0
    for i in range(B):
        m = out[i, 0]
        raw = out[i, 1]
        v = _softplus(raw) + var_floor
        r = y[i] - m
        loss += 0.5 * log(2.0 * M_PI * v) + r * r / (2.0 * v)
        delta[i, 0] = (m - y[i]) / v / B
        delta[i, 1] = (0.5 / v - r * r / (2.0 * v * v)) * _sigmoid(raw) / B
    loss /= B

    gws = [None] * n
    gbs = [None] * n
    cur_delta = delta_arr
    for k in range(n - 1, -1, -1):
        gw = np.empty((ws[k].shape[0], ws[k].shape[1]))
        gb = np.empty(ws[k].shape[1])
        _grad_layer(acts[k], cur_delta, gw, gb)
        gws[k] = gw
        gbs[k] = gb
        if k > 0:
            new_delta = np.empty((B, ws[k].shape[0]))
            _backprop_delta(cur_delta, ws[k], acts[k], new_delta)
            cur_delta = new_delta
    return loss, gws, gbs


def online_detect(list ws, list bs, double var_floor, double[::1] values,
                  Py_ssize_t l, double[::1] log_init, double[:, ::1] log_trans,
                  double anom_loglik, double threshold):
    cdef Py_ssize_t T = values.shape[0]
    cdef int n = len(ws)
    cdef Py_ssize_t t
    cdef int k
    cdef double e0, e1, p0, p1, norm, m, v, r
    cdef double lb0, lb1

    scores_arr = np.empty(T)
    means_arr = np.full(T, np.nan)
    vars_arr = np.full(T, np.nan)
    work_arr = np.ascontiguousarray(values).copy()
    cdef double[::1] scores = scores_arr
    cdef double[::1] means = means_arr
    cdef double[::1] variances = vars_arr
    cdef double[::1] work = work_arr

    window = np.empty((1, l))
    cdef double[:, ::1] win = window
    bufs = [window]
    for k in range(n):
        bufs.append(np.empty((1, ws[k].shape[1])))
    head_arr = bufs[n]
    cdef double[:, ::1] head = head_arr
    cdef Py_ssize_t j

    lb0 = log_init[0]
    lb1 = log_init[1]
    for t in range(T):
        if t >= l:
            for j in range(l):
                win[0, j] = work[t - l + j]
            for k in range(n):
                _dense(bufs[k], ws[k], bs[k], bufs[k + 1], k < n - 1)
            m = head[0, 0]
            v = _softplus(head[0, 1]) + var_floor
            means[t] = m
            variances[t] = v
            r = values[t] - m
            e0 = -0.5 * log(2.0 * M_PI * v) - r * r / (2.0 * v)
            e1 = anom_loglik
        else:
            e0 = 0.0
            e1 = 0.0
        if t > 0:
            p0 = _lae(lb0 + log_trans[0, 0], lb1 + log_trans[1, 0])
            p1 = _lae(lb0 + log_trans[0, 1], lb1 + log_trans[1, 1])
            lb0 = p0
            lb1 = p1
        lb0 += e0
        lb1 += e1
        norm = _lae(lb0, lb1)
        lb0 -= norm
        lb1 -= norm
        scores[t] = exp(lb1)
        if t >= l and scores[t] > threshold:
            work[t] = means[t]
    return scores_arr, means_arr, vars_arr, work_arr
