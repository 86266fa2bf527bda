"""Independent oracles for the numerical test suites.

Nothing here touches the package's recursion kernels: densities come
from scipy.stats, likelihoods from exhaustive path enumeration, and
error rates from literal threshold counting. Keep it that way - these
are the other side of every dual-route check.
"""

import itertools
import math

import numpy as np
from scipy.stats import norm


def mixture_frame_logpdf(x, weights, means, variances):
    """log density of one frame under a diagonal Gaussian mixture (scipy)."""
    comp = norm.logpdf(x[None, :], loc=means, scale=np.sqrt(variances)).sum(axis=1)
    logw = np.where(weights > 0, np.log(np.where(weights > 0, weights, 1.0)), -np.inf)
    total = logw + comp
    m = total.max()
    if m == -np.inf:
        return -np.inf
    return m + math.log(np.exp(total - m).sum())


def _frame_table(model, obs):
    n_states, n_steps = model.n_states, obs.shape[0]
    table = np.empty((n_steps, n_states))
    for t in range(n_steps):
        for i in range(n_states):
            table[t, i] = mixture_frame_logpdf(
                obs[t], model.mix_weights[i], model.means[i], model.variances[i]
            )
    return table


def enumerate_path_logprobs(model, obs):
    """(path, joint log prob) for every nonzero-probability state path."""
    obs = np.asarray(obs, dtype=np.float64)
    n_states, n_steps = model.n_states, obs.shape[0]
    frames = _frame_table(model, obs)
    results = []
    for path in itertools.product(range(n_states), repeat=n_steps):
        if model.prior[path[0]] == 0:
            continue
        logp = math.log(model.prior[path[0]]) + frames[0, path[0]]
        ok = True
        for t in range(1, n_steps):
            a = model.trans[path[t - 1], path[t]]
            if a == 0:
                ok = False
                break
            logp += math.log(a) + frames[t, path[t]]
        if ok:
            results.append((path, logp))
    return results


def brute_force_loglik(model, obs):
    """log P(obs | model) by summing over every admissible path."""
    logps = [lp for _, lp in enumerate_path_logprobs(model, obs)]
    if not logps:
        return -np.inf
    m = max(logps)
    return m + math.log(sum(math.exp(lp - m) for lp in logps))

def brute_force_viterbi(model, obs):
    """(best path, best joint log prob) by enumeration.

    Ties pick the lexicographically smallest path, matching the
    lowest-state-index rule.
    """
    best_path, best = None, -np.inf
    for path, logp in enumerate_path_logprobs(model, obs):
        if logp > best + 1e-12 or best_path is None:
            best_path, best = path, logp
    return np.array(best_path), best


def sample_sequence(model, length, rng):
    """Draw one observation sequence from a model (test data generator)."""
    states = np.empty(length, dtype=np.int64)
    states[0] = rng.choice(model.n_states, p=model.prior)
    for t in range(1, length):
        states[t] = rng.choice(model.n_states, p=model.trans[states[t - 1]])
    obs = np.empty((length, model.n_features))
    for t, i in enumerate(states):
        k = rng.choice(model.n_mixtures, p=model.mix_weights[i])
        obs[t] = rng.normal(model.means[i, k], np.sqrt(model.variances[i, k]))
    return obs


def brute_force_rates(genuine, impostor):
    """FAR/FRR curves, EER, and zero-error operating points by counting.

    Accept iff score >= threshold; thresholds are the observed scores
    plus -inf/+inf sentinels; EER interpolates linearly at the crossing.
    """
    genuine = list(genuine)
    impostor = list(impostor)
    thresholds = [-math.inf] + sorted(set(genuine) | set(impostor)) + [math.inf]
    far, frr = [], []
    for tau in thresholds:
        far.append(sum(1 for s in impostor if s >= tau) / len(impostor))
        frr.append(sum(1 for s in genuine if s < tau) / len(genuine))

    eer = None
    for k in range(len(thresholds)):
        d = far[k] - frr[k]
        if d <= 0:
            if d == 0:
                eer = far[k]
            else:
                d_prev = far[k - 1] - frr[k - 1]
                lam = d_prev / (d_prev - d)
                eer = far[k - 1] + lam * (far[k] - far[k - 1])
            break
    far_at_frr0 = min(f for f, r in zip(far, frr) if r == 0)
    frr_at_far0 = min(r for f, r in zip(far, frr) if f == 0)
    return thresholds, far, frr, eer, far_at_frr0, frr_at_far0
