"""Template enrollment: per-user model selection and fitting.

A user's template is built from their own strokes only. The number of
states N and mixtures Q is chosen by k-fold cross validation over a
grid, restricted by the evidence constraint

    N * Q <= floor(median training length / evidence_divisor)

so every Gaussian sees a few samples per median-length stroke. The
winning configuration is refit on all training sequences, and the
template stores the average normalized log-likelihood of the training
strokes plus each training stroke's state-occupancy vector, which the
scoring side compares against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NoFeasibleConfiguration, NumericalFailure, TooFewSequences
from .hmm import (
    DEFAULT_MAX_ITERS,
    DEFAULT_REL_TOL,
    Hmm,
    baum_welch,
    init_model,
    normalized_loglik,
    normalized_viterbi_loglik,
    state_occupancy,
)
from .strokes import (
    DEFAULT_DIRECTION_THRESHOLD,
    Direction,
    Normalizer,
    apply_normalizer,
    classify_stroke,
    extract_observations,
    fit_normalizer,
)

DEFAULT_STATE_GRID = (2, 3, 4, 5, 6, 8)
DEFAULT_MIXTURE_GRID = (1, 2, 3)
DEFAULT_EVIDENCE_DIVISOR = 3
DEFAULT_N_FOLDS = 5

_LOGLIK_FUNCS = {
    "forward": normalized_loglik,
    "viterbi": normalized_viterbi_loglik,
}


def sequence_loglik(model: Hmm, obs, mode: str = "forward") -> float:
    """Length-normalized log-likelihood under the configured recursion."""
    try:
        fn = _LOGLIK_FUNCS[mode]
    except KeyError:
        raise ValueError(f"unknown likelihood mode {mode!r}") from None
    return fn(model, obs)


@dataclass(frozen=True)
class EnrollmentConfig:
    state_grid: tuple = DEFAULT_STATE_GRID
    mixture_grid: tuple = DEFAULT_MIXTURE_GRID
    evidence_divisor: int = DEFAULT_EVIDENCE_DIVISOR
    n_folds: int = DEFAULT_N_FOLDS
    rel_tol: float = DEFAULT_REL_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    likelihood_mode: str = "forward"
    direction_threshold: float = DEFAULT_DIRECTION_THRESHOLD
    seed: int = 0


@dataclass(frozen=True)
class CvCell:
    """One grid configuration's cross-validation outcome."""

    n_states: int
    n_mixtures: int
    fold_logliks: tuple
    mean_loglik: float
    failed: bool = False


@dataclass(frozen=True)
class SelectionResult:
    n_states: int
    n_mixtures: int
    table: tuple  # every evaluated CvCell, grid order


@dataclass(frozen=True)
class UserModel:
    """Everything scoring needs to authenticate strokes for one user."""

    user_id: int
    stroke_type: Direction
    model: Hmm
    normalizer: Normalizer
    l_avg: float
    train_kinematics: np.ndarray  # (m_train, n_states) occupancy vectors
    m_train: int
    likelihood_mode: str = "forward"
    selection: SelectionResult | None = field(default=None, compare=False)

    def validate(self) -> None:
        self.model.validate()
        kin = np.asarray(self.train_kinematics)
        if kin.shape != (self.m_train, self.model.n_states):
            raise ValueError("kinematics table shape mismatch")
        if np.any(kin < 0) or not np.allclose(kin.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("kinematics rows must lie in the simplex")
        if not math.isfinite(self.l_avg):
            raise ValueError("l_avg must be finite")
        if self.likelihood_mode not in _LOGLIK_FUNCS:
            raise ValueError(f"unknown likelihood mode {self.likelihood_mode!r}")


def evidence_budget(training: Sequence[np.ndarray], divisor: int = DEFAULT_EVIDENCE_DIVISOR) -> int:
    """Largest admissible N*Q for these sequences."""
    median_len = np.median([len(obs) for obs in training])
    return int(median_len // divisor)


def derive_seed(*entropy) -> int:
    """Fold integer entropy values into one reproducible child seed."""
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, np.uint64)[0])


def _fold_partition(n_sequences: int, n_folds: int, seed: int) -> list:
    order = np.random.default_rng(derive_seed(seed, n_sequences, n_folds)).permutation(n_sequences)
    return [fold for fold in np.array_split(order, n_folds)]


def _fit(training, n_states, n_mixtures, seed, rel_tol, max_iters) -> Hmm:
    model = init_model(n_states, n_mixtures, training, seed)
    trained, _ = baum_welch(model, training, max_iters=max_iters, rel_tol=rel_tol)
    return trained


def select_model(
    training: Sequence[np.ndarray],
    state_grid=DEFAULT_STATE_GRID,
    mixture_grid=DEFAULT_MIXTURE_GRID,
    seed: int = 0,
    *,
    n_folds: int = DEFAULT_N_FOLDS,
    evidence_divisor: int = DEFAULT_EVIDENCE_DIVISOR,
    rel_tol: float = DEFAULT_REL_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    likelihood_mode: str = "forward",
) -> SelectionResult:
    """Pick (N, Q) by k-fold cross-validated held-out log-likelihood.

    Each admissible grid cell trains on k-1 folds and scores the mean
    normalized log-likelihood of the held-out fold; the cell with the
    highest mean across folds wins, ties broken toward smaller N*Q and
    then smaller N. A cell whose training diverges numerically in any
    fold is kept in the table but marked failed and never selected.
    """
    training = [np.asarray(obs, dtype=np.float64) for obs in training]
    if len(training) < max(n_folds, 2):
        raise TooFewSequences(
            f"need at least {max(n_folds, 2)} sequences for {n_folds}-fold selection, got {len(training)}"
        )
    if not state_grid or not mixture_grid:
        raise NoFeasibleConfiguration("empty state or mixture grid")

    budget = evidence_budget(training, evidence_divisor)
    grid = [
        (n, q)
        for n in sorted(set(state_grid))
        for q in sorted(set(mixture_grid))
        if n * q <= budget
    ]
    if not grid:
        raise NoFeasibleConfiguration(
            f"no (N, Q) with N*Q <= {budget} in the grid; strokes too short"
        )

    folds = _fold_partition(len(training), n_folds, seed)
    table = []
    for n, q in grid:
        fold_scores = []
        failed = False
        for fold_idx, val_idx in enumerate(folds):
            val_mask = np.zeros(len(training), dtype=bool)
            val_mask[val_idx] = True
            train_set = [training[i] for i in range(len(training)) if not val_mask[i]]
            val_set = [training[i] for i in val_idx]
            if not train_set or not val_set:
                failed = True
                break
            cell_seed = derive_seed(seed, n, q, fold_idx)
            try:
                model = _fit(train_set, n, q, cell_seed, rel_tol, max_iters)
                fold_scores.append(
                    float(np.mean([sequence_loglik(model, obs, likelihood_mode) for obs in val_set]))
                )
            except NumericalFailure:
                failed = True
                break
        if failed:
            table.append(CvCell(n, q, tuple(fold_scores), -math.inf, failed=True))
        else:
            table.append(CvCell(n, q, tuple(fold_scores), float(np.mean(fold_scores))))

    viable = [cell for cell in table if not cell.failed]
    if not viable:
        raise NoFeasibleConfiguration("every admissible configuration failed to train")
    best = _pick_best(viable)
    return SelectionResult(best.n_states, best.n_mixtures, tuple(table))


def _pick_best(cells):
    """Highest mean validation log-likelihood wins; exact ties go to the
    smaller N*Q, then the smaller N."""
    return max(
        cells,
        key=lambda c: (c.mean_loglik, -(c.n_states * c.n_mixtures), -c.n_states),
    )


def enroll(
    user_id: int,
    strokes,
    stroke_type: Direction,
    config: EnrollmentConfig = EnrollmentConfig(),
) -> UserModel:
    """Build a UserModel from the owner's strokes of one direction type.

    Strokes of other directions are ignored. The normalizer is fitted on
    the enrollment strokes only and frozen into the template.
    """
    stroke_type = Direction(stroke_type)
    selected = [
        s for s in strokes
        if classify_stroke(s, config.direction_threshold) is stroke_type
    ]
    if len(selected) < max(config.n_folds, 2):
        raise TooFewSequences(
            f"need at least {max(config.n_folds, 2)} {stroke_type.value} strokes, got {len(selected)}"
        )
    raw = [extract_observations(s) for s in selected]
    normalizer = fit_normalizer(raw)
    training = [apply_normalizer(normalizer, m) for m in raw]

    selection = select_model(
        training,
        config.state_grid,
        config.mixture_grid,
        config.seed,
        n_folds=config.n_folds,
        evidence_divisor=config.evidence_divisor,
        rel_tol=config.rel_tol,
        max_iters=config.max_iters,
        likelihood_mode=config.likelihood_mode,
    )
    final_seed = derive_seed(config.seed, selection.n_states, selection.n_mixtures)
    model = _fit(
        training, selection.n_states, selection.n_mixtures,
        final_seed, config.rel_tol, config.max_iters,
    )
    logliks = [sequence_loglik(model, obs, config.likelihood_mode) for obs in training]
    kinematics = np.stack([state_occupancy(model, obs) for obs in training])
    template = UserModel(
        user_id=user_id,
        stroke_type=stroke_type,
        model=model,
        normalizer=normalizer,
        l_avg=float(np.mean(logliks)),
        train_kinematics=kinematics,
        m_train=len(training),
        likelihood_mode=config.likelihood_mode,
        selection=selection,
    )
    template.validate()
    return template
