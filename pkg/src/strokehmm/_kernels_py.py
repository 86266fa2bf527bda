"""Pure-NumPy kernel backend.

Reference implementations of the log-space recursions that dominate
training and scoring time. `strokehmm._kernels` (Cython) implements the
same four functions with identical signatures and semantics; this module
is the fallback when the extension is not built and the ground truth the
extension is tested against.

All inputs are log-domain float64 arrays. Probability zeros are
represented as -inf and propagate exactly (never as NaN).
"""

import numpy as np
from scipy.special import logsumexp

LOG_2PI = float(np.log(2.0 * np.pi))


def mixture_log_pdf(obs, means, variances, log_weights):
    """Per-frame emission log density under diagonal Gaussian mixtures.

    obs: (T, P); means, variances: (N, Q, P); log_weights: (N, Q).
    Returns (log_b, log_comp) with shapes (T, N) and (T, N, Q), where
    log_comp[t, i, q] = log_weights[i, q] + log N(obs[t]; means[i, q],
    variances[i, q]) and log_b is log_comp reduced over q.
    """
    n_features = obs.shape[1]
    # (N, Q): constant part of the log density per component
    log_norm = -0.5 * (n_features * LOG_2PI + np.log(variances).sum(axis=2))
    diff = obs[:, None, None, :] - means[None, :, :, :]
    quad = np.einsum("tiqp,tiqp->tiq", diff, diff / variances[None, :, :, :])
    log_comp = log_weights[None, :, :] + log_norm[None, :, :] - 0.5 * quad
    log_b = logsumexp(log_comp, axis=2)
    return log_b, log_comp


def forward(log_prior, log_trans, log_b):
    """Forward recursion. Returns (log_alpha (T, N), log-likelihood)."""
    n_steps, n_states = log_b.shape
    log_alpha = np.empty((n_steps, n_states))
    log_alpha[0] = log_prior + log_b[0]
    for t in range(1, n_steps):
        log_alpha[t] = log_b[t] + logsumexp(
            log_alpha[t - 1][:, None] + log_trans, axis=0
        )
    return log_alpha, float(logsumexp(log_alpha[-1]))


def backward(log_trans, log_b):
    """Backward recursion. Returns log_beta with shape (T, N)."""
    n_steps, n_states = log_b.shape
    log_beta = np.zeros((n_steps, n_states))
    for t in range(n_steps - 2, -1, -1):
        log_beta[t] = logsumexp(
            log_trans + (log_b[t + 1] + log_beta[t + 1])[None, :], axis=1
        )
    return log_beta


def viterbi(log_prior, log_trans, log_b):
    """Most probable state path. Returns (path (T,) int64, joint log prob).

    Ties resolve to the lowest state index.
    """
    n_steps, n_states = log_b.shape
    log_delta = log_prior + log_b[0]
    back = np.empty((n_steps, n_states), dtype=np.int64)
    for t in range(1, n_steps):
        cand = log_delta[:, None] + log_trans
        back[t] = np.argmax(cand, axis=0)  # first max = lowest index
        log_delta = log_b[t] + cand[back[t], np.arange(n_states)]
    path = np.empty(n_steps, dtype=np.int64)
    path[-1] = int(np.argmax(log_delta))
    for t in range(n_steps - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, float(log_delta[path[-1]])
