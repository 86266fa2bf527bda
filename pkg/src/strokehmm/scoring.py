"""Per-stroke similarity scores against a user template, plus fusion.

Three scores per stroke:

    s_l = exp(-d_l / P)      d_l = l_avg - normalized loglik of the stroke
    s_k = exp(-d_bar / (Q*N)) d_bar = mean euclidean distance between the
                              stroke's state-occupancy vector and each
                              training stroke's stored occupancy vector
    s_c = (s_l + s_k) / 2

P is the feature count, N states, Q mixtures. s_l is deliberately not
clamped at 1: a test stroke fitting better than the training average
gives d_l < 0 and s_l > 1. Window fusion averages s_c over runs of
consecutive strokes (sliding by default, disjoint blocks optionally).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .enrollment import UserModel, sequence_loglik
from .errors import WindowLargerThanSequence
from .hmm import state_occupancy
from .strokes import (
    DEFAULT_DIRECTION_THRESHOLD,
    Direction,
    apply_normalizer,
    classify_stroke,
    extract_observations,
)

SCORE_CSV_COLUMNS = ("user_id", "claimed_id", "stroke_type", "stroke_index", "s_l", "s_k", "s_c")


@dataclass(frozen=True)
class ScoreRecord:
    s_l: float
    s_k: float
    s_c: float
    d_l: float
    d_bar: float


def likelihood_score(template: UserModel, obs) -> tuple[float, float]:
    """(s_l, d_l) for an observation already normalized with the template."""
    loglik = sequence_loglik(template.model, obs, template.likelihood_mode)
    d_l = template.l_avg - loglik
    s_l = math.exp(-d_l / template.model.n_features)
    return s_l, d_l


def kinematic_score(template: UserModel, obs) -> tuple[float, float]:
    """(s_k, d_bar) comparing state occupancy against the stored table."""
    sk_t = state_occupancy(template.model, obs)
    distances = np.linalg.norm(template.train_kinematics - sk_t[None, :], axis=1)
    d_bar = float(distances.mean())
    s_k = math.exp(-d_bar / (template.model.n_mixtures * template.model.n_states))
    return s_k, d_bar


def combined_score(s_l: float, s_k: float) -> float:
    return (s_l + s_k) / 2.0


def score_observation(template: UserModel, obs) -> ScoreRecord:
    """Score one normalized observation sequence."""
    s_l, d_l = likelihood_score(template, obs)
    s_k, d_bar = kinematic_score(template, obs)
    return ScoreRecord(s_l, s_k, combined_score(s_l, s_k), d_l, d_bar)


def score_stroke(template: UserModel, stroke) -> ScoreRecord:
    """Score one raw stroke: extract features, normalize, score."""
    obs = apply_normalizer(template.normalizer, extract_observations(stroke))
    return score_observation(template, obs)


def score_strokes(template: UserModel, strokes) -> list:
    return [score_stroke(template, s) for s in strokes]


def score_session(templates: dict, strokes,
                  direction_threshold: float = DEFAULT_DIRECTION_THRESHOLD) -> tuple[list, int]:
    """Route mixed-direction strokes to the matching template.

    `templates` maps Direction to UserModel. Strokes whose direction has
    no template (taps, missing types) are skipped; returns the records
    in stroke order plus the skip count. Fusion over the resulting s_c
    series then mixes types, which is the intended deployment behavior.
    """
    records = []
    skipped = 0
    for stroke in strokes:
        template = templates.get(classify_stroke(stroke, direction_threshold))
        if template is None:
            skipped += 1
        else:
            records.append(score_stroke(template, stroke))
    return records, skipped


def fuse_window(scores, window: int, disjoint: bool = False) -> list:
    """Average scores over windows of `window` consecutive strokes.

    Sliding windows move by stride 1; disjoint windows tile the series
    and drop the ragged tail. Raises WindowLargerThanSequence when fewer
    than `window` scores are available, signalling the caller to collect
    more strokes first.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    scores = np.asarray(list(scores), dtype=np.float64)
    if window > scores.shape[0]:
        raise WindowLargerThanSequence(
            f"window {window} exceeds the {scores.shape[0]} available scores"
        )
    if disjoint:
        n_blocks = scores.shape[0] // window
        blocks = scores[: n_blocks * window].reshape(n_blocks, window)
        return [float(v) for v in blocks.mean(axis=1)]
    panes = np.lib.stride_tricks.sliding_window_view(scores, window)
    return [float(v) for v in panes.mean(axis=1)]


def write_scores_csv(rows, dest) -> None:
    """Dump score rows for offline analysis.

    Each row is (user_id, claimed_id, stroke_type, stroke_index, record).
    """
    def emit(handle):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SCORE_CSV_COLUMNS)
        for user_id, claimed_id, stroke_type, stroke_index, record in rows:
            writer.writerow([
                user_id, claimed_id, Direction(stroke_type).value, stroke_index,
                repr(record.s_l), repr(record.s_k), repr(record.s_c),
            ])

    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as handle:
            emit(handle)
    else:
        emit(dest)
