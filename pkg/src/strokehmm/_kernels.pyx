# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled kernel backend.

Same four entry points and semantics as `strokehmm._kernels_py`; see that
module for the contracts. Log-domain float64 in, -inf for probability
zero, never NaN.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, M_PI, exp, log

cnp.import_array()

cdef double LOG_2PI = log(2.0 * M_PI)


cdef inline double _lse(const double* buf, Py_ssize_t n) noexcept nogil:
    cdef double m = -INFINITY
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        if buf[i] > m:
            m = buf[i]
    if m == -INFINITY:
        return -INFINITY
    for i in range(n):
        s += exp(buf[i] - m)
    return m + log(s)


def mixture_log_pdf(obs, means, variances, log_weights):
    cdef double[:, ::1] x = np.ascontiguousarray(obs, dtype=np.float64)
    cdef double[:, :, ::1] mu = np.ascontiguousarray(means, dtype=np.float64)
    cdef double[:, :, ::1] var = np.ascontiguousarray(variances, dtype=np.float64)
    cdef double[:, ::1] lw = np.ascontiguousarray(log_weights, dtype=np.float64)

    cdef Py_ssize_t n_steps = x.shape[0]
    cdef Py_ssize_t n_feat = x.shape[1]
    cdef Py_ssize_t n_states = mu.shape[0]
    cdef Py_ssize_t n_mix = mu.shape[1]

    log_b_arr = np.empty((n_steps, n_states))
    log_comp_arr = np.empty((n_steps, n_states, n_mix))
    cdef double[:, ::1] log_b = log_b_arr
    cdef double[:, :, ::1] log_comp = log_comp_arr

    # per-component constant and inverse variances, computed once
    norm_arr = np.empty((n_states, n_mix))
    inv_var_arr = np.empty_like(np.asarray(var))
    cdef double[:, ::1] log_norm = norm_arr
    cdef double[:, :, ::1] inv_var = inv_var_arr

    cdef Py_ssize_t t, i, q, p
    cdef double acc, d
    for i in range(n_states):
        for q in range(n_mix):
            acc = 0.0
            for p in range(n_feat):
                acc += log(var[i, q, p])
                inv_var[i, q, p] = 1.0 / var[i, q, p]
            log_norm[i, q] = -0.5 * (n_feat * LOG_2PI + acc)

    with nogil:
        for t in range(n_steps):
            for i in range(n_states):
                for q in range(n_mix):
                    acc = 0.0
                    for p in range(n_feat):
                        d = x[t, p] - mu[i, q, p]
                        acc += d * d * inv_var[i, q, p]
                    log_comp[t, i, q] = lw[i, q] + log_norm[i, q] - 0.5 * acc
                log_b[t, i] = _lse(&log_comp[t, i, 0], n_mix)
    return log_b_arr, log_comp_arr


def forward(log_prior, log_trans, log_b):
    cdef double[::1] lp = np.ascontiguousarray(log_prior, dtype=np.float64)
    cdef double[:, ::1] lt = np.ascontiguousarray(log_trans, dtype=np.float64)
    cdef double[:, ::1] lb = np.ascontiguousarray(log_b, dtype=np.float64)

    cdef Py_ssize_t n_steps = lb.shape[0]
    cdef Py_ssize_t n_states = lb.shape[1]
    log_alpha_arr = np.empty((n_steps, n_states))
    cdef double[:, ::1] log_alpha = log_alpha_arr
    work_arr = np.empty(n_states)
    cdef double[::1] work = work_arr

    cdef Py_ssize_t t, i, j
    cdef double loglik
    with nogil:
        for i in range(n_states):
            log_alpha[0, i] = lp[i] + lb[0, i]
        for t in range(1, n_steps):
            for j in range(n_states):
                for i in range(n_states):
                    work[i] = log_alpha[t - 1, i] + lt[i, j]
                log_alpha[t, j] = lb[t, j] + _lse(&work[0], n_states)
        loglik = _lse(&log_alpha[n_steps - 1, 0], n_states)
    return log_alpha_arr, loglik


def backward(log_trans, log_b):
    cdef double[:, ::1] lt = np.ascontiguousarray(log_trans, dtype=np.float64)
    cdef double[:, ::1] lb = np.ascontiguousarray(log_b, dtype=np.float64)

    cdef Py_ssize_t n_steps = lb.shape[0]
    cdef Py_ssize_t n_states = lb.shape[1]
    log_beta_arr = np.zeros((n_steps, n_states))
    cdef double[:, ::1] log_beta = log_beta_arr
    work_arr = np.empty(n_states)
    cdef double[::1] work = work_arr

    cdef Py_ssize_t t, i, j
    with nogil:
        for t in range(n_steps - 2, -1, -1):
            for i in range(n_states):
                for j in range(n_states):
                    work[j] = lt[i, j] + lb[t + 1, j] + log_beta[t + 1, j]
                log_beta[t, i] = _lse(&work[0], n_states)
    return log_beta_arr


def viterbi(log_prior, log_trans, log_b):
    cdef double[::1] lp = np.ascontiguousarray(log_prior, dtype=np.float64)
    cdef double[:, ::1] lt = np.ascontiguousarray(log_trans, dtype=np.float64)
    cdef double[:, ::1] lb = np.ascontiguousarray(log_b, dtype=np.float64)

    cdef Py_ssize_t n_steps = lb.shape[0]
    cdef Py_ssize_t n_states = lb.shape[1]
    back_arr = np.zeros((n_steps, n_states), dtype=np.int64)
    path_arr = np.empty(n_steps, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] back = back_arr
    cdef cnp.int64_t[::1] path = path_arr
    prev_arr = np.empty(n_states)
    cur_arr = np.empty(n_states)
    cdef double[::1] prev = prev_arr
    cdef double[::1] cur = cur_arr

    cdef Py_ssize_t t, i, j, arg
    cdef double best, v, logp
    with nogil:
        for i in range(n_states):
            prev[i] = lp[i] + lb[0, i]
        for t in range(1, n_steps):
            for j in range(n_states):
                best = -INFINITY
                arg = 0
                for i in range(n_states):
                    v = prev[i] + lt[i, j]
                    if v > best:  # strict: ties keep the lowest index
                        best = v
                        arg = i
                cur[j] = lb[t, j] + best
                back[t, j] = arg
            for j in range(n_states):
                prev[j] = cur[j]
        best = -INFINITY
        arg = 0
        for i in range(n_states):
            if prev[i] > best:
                best = prev[i]
                arg = i
        logp = best
        path[n_steps - 1] = arg
        for t in range(n_steps - 1, 0, -1):
            path[t - 1] = back[t, path[t]]
    return path_arr, logp
