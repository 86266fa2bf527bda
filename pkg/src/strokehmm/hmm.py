"""Left-right continuous HMMs with diagonal-covariance Gaussian mixtures.

States may only self-loop or advance by one (no skips); the last state
self-loops with probability 1. All recursions run in log space through
the kernel backend (`strokehmm.kernels`), so stroke-length sequences
never underflow. Emission variances are floored at `VAR_FLOOR` to keep
densities finite on degenerate (constant-feature) input.

Trained models are immutable; every scoring function here is read-only
and safe to call concurrently on a shared model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    InvalidDimensions,
    NumericalFailure,
    SequenceTooShort,
)

VAR_FLOOR = 1e-4
DEFAULT_REL_TOL = 1e-4
DEFAULT_MAX_ITERS = 100

_STOCHASTIC_TOL = 1e-9
_MASS_EPS = 1e-10  # below this responsibility mass, keep old parameters


@dataclass(frozen=True)
class Hmm:
    """Model parameters.

    prior: (N,) initial state distribution.
    trans: (N, N) transition matrix, exactly zero off the main and first
        upper diagonal.
    mix_weights: (N, Q) per-state mixture weights.
    means / variances: (N, Q, P) diagonal Gaussian parameters on
        normalized (dimensionless) features.
    """

    prior: np.ndarray
    trans: np.ndarray
    mix_weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    @property
    def n_states(self) -> int:
        return self.prior.shape[0]

    @property
    def n_mixtures(self) -> int:
        return self.mix_weights.shape[1]

    @property
    def n_features(self) -> int:
        return self.means.shape[2]

    def validate(self) -> None:
        """Raise if any structural invariant is broken."""
        n = self.prior.shape[0]
        q = self.mix_weights.shape[1] if self.mix_weights.ndim == 2 else -1
        if self.trans.shape != (n, n):
            raise InvalidDimensions("trans must be (n_states, n_states)")
        if self.mix_weights.shape != (n, q) or q < 1:
            raise InvalidDimensions("mix_weights must be (n_states, n_mixtures)")
        if self.means.ndim != 3 or self.means.shape[:2] != (n, q):
            raise InvalidDimensions("means must be (n_states, n_mixtures, n_features)")
        if self.variances.shape != self.means.shape:
            raise InvalidDimensions("variances must match means shape")
        for name, arr in (
            ("prior", self.prior),
            ("trans", self.trans),
            ("mix_weights", self.mix_weights),
            ("means", self.means),
            ("variances", self.variances),
        ):
            if not np.all(np.isfinite(arr)):
                raise InvalidDimensions(f"{name} contains non-finite values")
        if abs(self.prior.sum() - 1.0) > _STOCHASTIC_TOL:
            raise InvalidDimensions("prior does not sum to 1")
        if np.max(np.abs(self.trans.sum(axis=1) - 1.0)) > _STOCHASTIC_TOL:
            raise InvalidDimensions("trans rows do not sum to 1")
        if np.max(np.abs(self.mix_weights.sum(axis=1) - 1.0)) > _STOCHASTIC_TOL:
            raise InvalidDimensions("mix_weights rows do not sum to 1")
        band = np.eye(n, dtype=bool) | np.eye(n, k=1, dtype=bool)
        if np.any(self.trans[~band] != 0.0):
            raise InvalidDimensions("trans has mass outside the left-right band")
        if self.trans[n - 1, n - 1] != 1.0:
            raise InvalidDimensions("last state must self-loop with probability 1")
        if np.any(self.prior < 0) or np.any(self.trans < 0) or np.any(self.mix_weights < 0):
            raise InvalidDimensions("negative probability entry")
        if np.any(self.variances < VAR_FLOOR):
            raise InvalidDimensions("variance below floor")


def as_sequence(obs) -> np.ndarray:
    """Coerce to a (T, P) float64 observation matrix."""
    arr = np.ascontiguousarray(obs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidDimensions("observation sequence must be a (T, P) matrix, T >= 1")
    return arr


def _check_obs(model: Hmm, obs) -> np.ndarray:
    arr = as_sequence(obs)
    if arr.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"sequence has {arr.shape[1]} features, model expects {model.n_features}"
        )
    return arr


def _log(p: np.ndarray) -> np.ndarray:
    """Elementwise log mapping exact zeros to -inf (no warnings, no NaN)."""
    out = np.full(p.shape, -np.inf)
    np.log(p, out=out, where=p > 0)
    return out


def _emission_logprob(model: Hmm, obs: np.ndarray):
    return kernels.mixture_log_pdf(
        obs, model.means, model.variances, _log(model.mix_weights)
    )


def log_forward(model: Hmm, obs) -> float:
    """log P(obs | model) via the forward recursion, in nats.

    May exceed 0: emissions are continuous densities.
    """
    arr = _check_obs(model, obs)
    log_b, _ = _emission_logprob(model, arr)
    _, loglik = kernels.forward(_log(model.prior), _log(model.trans), log_b)
    if not np.isfinite(loglik):
        raise NumericalFailure("forward log-likelihood is non-finite")
    return loglik


def viterbi(model: Hmm, obs):
    """Most probable state path and its joint log density.

    The path is non-decreasing with unit increments (left-right band);
    ties resolve to the lowest state index.
    """
    arr = _check_obs(model, obs)
    log_b, _ = _emission_logprob(model, arr)
    path, logp = kernels.viterbi(_log(model.prior), _log(model.trans), log_b)
    if not np.isfinite(logp):
        raise NumericalFailure("viterbi log-probability is non-finite")
    return path, logp


def normalized_loglik(model: Hmm, obs) -> float:
    """Forward log-likelihood divided by the sequence length."""
    arr = _check_obs(model, obs)
    return log_forward(model, arr) / arr.shape[0]


def normalized_viterbi_loglik(model: Hmm, obs) -> float:
    """Viterbi joint log density divided by the sequence length.

    Alternative per-sample fit measure for callers that score with the
    best-path approximation instead of the full forward likelihood.
    """
    arr = _check_obs(model, obs)
    return viterbi(model, arr)[1] / arr.shape[0]


def state_occupancy(model: Hmm, obs) -> np.ndarray:
    """Fraction of Viterbi-path time spent in each state (sums to 1)."""
    arr = _check_obs(model, obs)
    path, _ = viterbi(model, arr)
    counts = np.bincount(path, minlength=model.n_states)
    return counts / arr.shape[0]


# ---------------------------------------------------------------------------
# initialization


def init_model(n_states: int, n_mixtures: int, training_set, seed: int) -> Hmm:
    """Seeded random prior/transitions plus segmental emission estimates.

    The prior and the in-band transition entries are drawn from the
    seeded generator and row-normalized. Emissions come from the data:
    each sequence is cut into `n_states` equal temporal segments, segment
    k is pooled across sequences as evidence for state k, and a
    `n_mixtures`-component diagonal Gaussian mixture is fitted per state
    by k-means assignment. Deterministic given (inputs, seed).
    """
    if n_states < 1 or n_mixtures < 1:
        raise InvalidDimensions("n_states and n_mixtures must be positive")
    seqs = [as_sequence(s) for s in training_set]
    if not seqs:
        raise EmptyTrainingSet("no training sequences")
    n_features = seqs[0].shape[1]
    for s in seqs:
        if s.shape[1] != n_features:
            raise InvalidDimensions("training sequences disagree on feature count")
        if s.shape[0] < n_states:
            raise SequenceTooShort(
                f"sequence of length {s.shape[0]} cannot support {n_states} states"
            )

    rng = np.random.default_rng(seed)
    prior = rng.uniform(0.1, 1.0, n_states)
    prior /= prior.sum()
    trans = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        pair = rng.uniform(0.1, 1.0, 2)
        trans[i, i], trans[i, i + 1] = pair / pair.sum()
    trans[n_states - 1, n_states - 1] = 1.0

    mix_weights = np.empty((n_states, n_mixtures))
    means = np.empty((n_states, n_mixtures, n_features))
    variances = np.empty((n_states, n_mixtures, n_features))
    for i in range(n_states):
        pool = np.vstack([np.array_split(s, n_states)[i] for s in seqs])
        w, mu, var = _fit_mixture(pool, n_mixtures, rng)
        mix_weights[i], means[i], variances[i] = w, mu, var

    model = Hmm(prior, trans, mix_weights, means, variances)
    model.validate()
    return model


def _fit_mixture(samples: np.ndarray, n_mixtures: int, rng):
    """K-means style mixture fit of pooled per-state samples.

    Degenerate pools (fewer points than components, all-identical points)
    yield zero-weight components with floored variances rather than
    failing; those components stay inert under EM.
    """
    n_samples, n_features = samples.shape
    if n_mixtures == 1:
        mean = samples.mean(axis=0)
        var = np.maximum(samples.var(axis=0), VAR_FLOOR)
        return np.ones(1), mean[None, :], var[None, :]

    if n_samples >= n_mixtures:
        idx = rng.choice(n_samples, size=n_mixtures, replace=False)
    else:
        idx = rng.integers(0, n_samples, size=n_mixtures)
    centers = samples[idx].astype(np.float64, copy=True)

    assign = np.zeros(n_samples, dtype=np.intp)
    for _ in range(10):
        d2 = ((samples[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        # repopulate empty clusters with the worst-fit samples
        pinned: set[int] = set()
        for k in range(n_mixtures):
            if np.any(new_assign == k) or len(pinned) >= n_samples:
                continue
            fit = d2[np.arange(n_samples), new_assign].copy()
            if pinned:
                fit[list(pinned)] = -1.0
            far = int(np.argmax(fit))
            new_assign[far] = k
            pinned.add(far)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for k in range(n_mixtures):
            members = samples[assign == k]
            if len(members):
                centers[k] = members.mean(axis=0)

    weights = np.zeros(n_mixtures)
    means = centers.copy()
    variances = np.full((n_mixtures, n_features), VAR_FLOOR)
    for k in range(n_mixtures):
        members = samples[assign == k]
        weights[k] = len(members) / n_samples
        if len(members):
            means[k] = members.mean(axis=0)
            variances[k] = np.maximum(members.var(axis=0), VAR_FLOOR)
    return weights / weights.sum(), means, variances


# ---------------------------------------------------------------------------
# Baum-Welch


def baum_welch(model: Hmm, training_set, max_iters: int = DEFAULT_MAX_ITERS,
               rel_tol: float = DEFAULT_REL_TOL):
    """EM re-estimation over a set of sequences.

    Returns (trained model, log-likelihood trace). trace[k] is the total
    log-likelihood of the training set after k parameter updates, so the
    trace is non-decreasing (up to ~1e-8 rounding) and one entry longer
    than the number of updates performed. Stops early once the relative
    improvement drops below `rel_tol`.

    Entries of `trans` outside the left-right band stay exactly zero.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    seqs = [_check_obs(model, s) for s in training_set]
    if not seqs:
        raise EmptyTrainingSet("no training sequences")
    for s in seqs:
        if s.shape[0] < model.n_states:
            raise SequenceTooShort(
                f"sequence of length {s.shape[0]} cannot support {model.n_states} states"
            )

    current = model
    trace: list[float] = []
    for iteration in range(max_iters + 1):
        stats, total = _e_step(current, seqs)
        if not np.isfinite(total):
            raise NumericalFailure("total log-likelihood is non-finite")
        trace.append(total)
        if len(trace) > 1:
            improvement = (total - trace[-2]) / max(abs(trace[-2]), 1e-12)
            if improvement < rel_tol:
                break
        if iteration == max_iters:
            break
        current = _m_step(current, stats)
    return current, trace


def _e_step(model: Hmm, seqs):
    n, q, p = model.n_states, model.n_mixtures, model.n_features
    log_prior = _log(model.prior)
    log_trans = _log(model.trans)
    log_w = _log(model.mix_weights)

    prior_acc = np.zeros(n)
    trans_acc = np.zeros((n, n))
    mix_acc = np.zeros((n, q))
    mean_acc = np.zeros((n, q, p))
    sq_acc = np.zeros((n, q, p))
    total = 0.0

    for s in seqs:
        log_b, log_comp = kernels.mixture_log_pdf(s, model.means, model.variances, log_w)
        log_alpha, loglik = kernels.forward(log_prior, log_trans, log_b)
        log_beta = kernels.backward(log_trans, log_b)
        total += loglik

        gamma = np.exp(log_alpha + log_beta - loglik)
        prior_acc += gamma[0]
        if s.shape[0] > 1:
            log_xi = (
                log_alpha[:-1, :, None]
                + log_trans[None, :, :]
                + (log_b[1:] + log_beta[1:])[:, None, :]
                - loglik
            )
            trans_acc += np.exp(log_xi).sum(axis=0)
        # responsibilities per mixture component; log_b is finite because
        # weights sum to 1 and variances are floored
        resp = gamma[:, :, None] * np.exp(log_comp - log_b[:, :, None])
        mix_acc += resp.sum(axis=0)
        mean_acc += np.einsum("tiq,tp->iqp", resp, s)
        sq_acc += np.einsum("tiq,tp->iqp", resp, s * s)

    stats = {
        "n_seqs": len(seqs),
        "prior": prior_acc,
        "trans": trans_acc,
        "mix": mix_acc,
        "mean": mean_acc,
        "sq": sq_acc,
    }
    return stats, total


def _m_step(model: Hmm, stats) -> Hmm:
    n = model.n_states
    prior = stats["prior"] / stats["n_seqs"]
    prior = np.maximum(prior, 0.0)
    prior /= prior.sum()

    trans = np.zeros((n, n))
    for i in range(n - 1):
        num_stay = stats["trans"][i, i]
        num_advance = stats["trans"][i, i + 1]
        den = num_stay + num_advance
        if den > _MASS_EPS:
            trans[i, i] = num_stay / den
            trans[i, i + 1] = num_advance / den
        else:  # state never left traces through here; keep its old row
            trans[i, i] = model.trans[i, i]
            trans[i, i + 1] = model.trans[i, i + 1]
    trans[n - 1, n - 1] = 1.0

    mix_weights = model.mix_weights.copy()
    means = model.means.copy()
    variances = model.variances.copy()
    state_mass = stats["mix"].sum(axis=1)
    for i in range(n):
        if state_mass[i] <= _MASS_EPS:
            continue
        weights = stats["mix"][i] / state_mass[i]
        for k in range(model.n_mixtures):
            mass = stats["mix"][i, k]
            if mass <= _MASS_EPS:
                weights[k] = 0.0
                continue
            mu = stats["mean"][i, k] / mass
            means[i, k] = mu
            variances[i, k] = np.maximum(stats["sq"][i, k] / mass - mu * mu, VAR_FLOOR)
        total = weights.sum()
        if total > 0:
            mix_weights[i] = weights / total

    new = Hmm(prior, trans, mix_weights, means, variances)
    for arr in (new.prior, new.trans, new.mix_weights, new.means, new.variances):
        if not np.all(np.isfinite(arr)):
            raise NumericalFailure("non-finite parameter after M-step")
    return new
