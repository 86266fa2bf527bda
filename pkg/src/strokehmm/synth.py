"""Synthetic multi-user stroke datasets from known ground-truth models.

Every pipeline stage stays testable without real capture data: each
synthetic user owns a left-right generator HMM per stroke direction
(horizontal strokes ramp the x feature across states, vertical strokes
ramp y), and sampled normalized sequences are denormalized into screen
coordinates, pressure, area, and ~60 Hz timestamps, then framed as
down/move/up touch events.

User identity is a translation of the emission means. Profile seeds
0..11 map onto distinct offset directions over the pressure/area/dt
features, so at separation 1 any two such profiles sit several pooled
standard deviations apart; at separation 0 every profile collapses to
the same base population. Optional per-day mean drift and per-session
jitter create the time structure the scenario splits look for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .enrollment import derive_seed
from .hmm import Hmm
from .strokes import MS_PER_DAY, Action, Direction, TouchEvent

N_FEATURES = 5
BASE_VAR = 0.25  # normalized-space emission variance of every generator
BASE_SIGMA = np.sqrt(BASE_VAR)
RAMP_SPAN = 1.8  # first..last state mean of the swiped axis, in normalized units
SELF_LOOP = 0.85
OFFSET_RADIUS = 2.4  # normalized-space distance of a profile from the base
OFFSET_JITTER = 0.05

DENORM_MEAN = np.array([540.0, 960.0, 0.5, 0.3, 16.0])
DENORM_STD = np.array([150.0, 300.0, 0.1, 0.08, 2.4])

_RAMP_AXIS = {Direction.HORIZONTAL: 0, Direction.VERTICAL: 1}

# unit offset directions over (pressure, area, dt); position axes stay
# clear of user offsets so swipes never leave the screen
_SLOTS = []
for _axis in (2, 3, 4):
    for _sign in (1.0, -1.0):
        _v = np.zeros(N_FEATURES)
        _v[_axis] = _sign
        _SLOTS.append(_v)
for _a, _b in ((2, 3), (3, 4), (2, 4)):
    for _sign in (1.0, -1.0):
        _v = np.zeros(N_FEATURES)
        _v[_a] = _sign / np.sqrt(2.0)
        _v[_b] = _sign / np.sqrt(2.0)
        _SLOTS.append(_v)


@dataclass(frozen=True)
class SessionPlan:
    """Which sessions to record and how much data each holds.

    One entry of `days` per session; same-day sessions start
    `gap_minutes` apart. The default plan (two sessions on day 0, one a
    week later) supports all three evaluation scenarios.
    """

    days: tuple = (0, 0, 7)
    strokes_per_session: int = 30
    gap_minutes: int = 15
    min_len: int = 20
    max_len: int = 40


@dataclass(frozen=True)
class UserProfile:
    seed: int
    separation: float
    models: dict  # Direction -> ground-truth Hmm in normalized space
    offset: np.ndarray  # the translation that identifies this user
    drift_signs: np.ndarray  # per-feature drift direction


def _base_model(n_states: int, direction: Direction, offset: np.ndarray) -> Hmm:
    prior = np.zeros(n_states)
    prior[0] = 1.0
    trans = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        trans[i, i], trans[i, i + 1] = SELF_LOOP, 1.0 - SELF_LOOP
    trans[-1, -1] = 1.0
    means = np.tile(offset, (n_states, 1, 1)).reshape(n_states, 1, N_FEATURES)
    means[:, 0, _RAMP_AXIS[direction]] += np.linspace(-RAMP_SPAN, RAMP_SPAN, n_states)
    model = Hmm(
        prior, trans,
        np.ones((n_states, 1)),
        means,
        np.full((n_states, 1, N_FEATURES), BASE_VAR),
    )
    model.validate()
    return model


def generate_profile(seed: int, separation: float) -> UserProfile:
    """Seeded ground-truth profile; `separation` in [0, 1] scales how far
    this profile's population sits from the shared base population."""
    if not 0.0 <= separation <= 1.0:
        raise ValueError("separation must lie in [0, 1]")
    rng = np.random.default_rng(derive_seed(seed, 101))
    n_states = 3 + int(separation * rng.uniform(0.0, 3.0))
    slot = _SLOTS[seed % len(_SLOTS)]
    jitter = rng.normal(0.0, OFFSET_JITTER, N_FEATURES)
    offset = separation * (OFFSET_RADIUS * slot + jitter)
    drift_signs = rng.choice([-1.0, 1.0], N_FEATURES)
    models = {d: _base_model(n_states, d, offset) for d in _RAMP_AXIS}
    return UserProfile(seed, separation, models, offset, drift_signs)


def sample_observation(model: Hmm, length: int, rng) -> np.ndarray:
    """One normalized (length, P) emission sequence from a generator."""
    if length < 1:
        raise ValueError("length must be >= 1")
    out = np.empty((length, model.n_features))
    state = rng.choice(model.n_states, p=model.prior)
    for t in range(length):
        comp = rng.choice(model.n_mixtures, p=model.mix_weights[state])
        out[t] = rng.normal(model.means[state, comp], np.sqrt(model.variances[state, comp]))
        if t + 1 < length:
            state = rng.choice(model.n_states, p=model.trans[state])
    return out


def _denormalize(matrix: np.ndarray) -> np.ndarray:
    raw = matrix * DENORM_STD + DENORM_MEAN
    raw[:, 0] = np.clip(raw[:, 0], 0.0, 1080.0)
    raw[:, 1] = np.clip(raw[:, 1], 0.0, 1920.0)
    raw[:, 2] = np.maximum(raw[:, 2], 0.0)
    raw[:, 3] = np.maximum(raw[:, 3], 0.0)
    raw[:, 4] = np.maximum(raw[:, 4], 1.0)
    return raw


def _stroke_events(matrix, user_id, doc_id, phone_id, start_ms):
    """Frame one denormalized matrix as down/move/up events."""
    raw = _denormalize(matrix)
    events = []
    t = start_ms
    length = raw.shape[0]
    for k in range(length):
        if k > 0:
            t += int(round(raw[k, 4]))
        if k == 0:
            action = Action.DOWN
        elif k == length - 1:
            action = Action.UP
        else:
            action = Action.MOVE
        events.append(TouchEvent(
            phone_id, user_id, doc_id, t, action, 0,
            float(raw[k, 0]), float(raw[k, 1]),
            float(raw[k, 2]), float(raw[k, 3]), 0.0,
        ))
    return events, t


def _shifted(model: Hmm, shift: np.ndarray) -> Hmm:
    if not np.any(shift):
        return model
    return Hmm(model.prior, model.trans, model.mix_weights,
               model.means + shift, model.variances)


def sample_dataset(
    profiles,
    seed: int = 0,
    *,
    plan: SessionPlan = SessionPlan(),
    drift_per_day: float = 0.0,
    session_jitter: float = 0.0,
    stroke_types=(Direction.HORIZONTAL, Direction.VERTICAL),
) -> list:
    """TouchEvent stream for every profile following the session plan.

    Users are numbered 1..len(profiles) in order; session doc_ids are
    unique per user. Strokes cycle through `stroke_types`. Optional
    drift shifts a user's emission means by `drift_per_day` pooled
    standard deviations per elapsed day along the profile's drift
    direction; `session_jitter` adds an independent seeded mean shift
    per session, in the same units.
    """
    if not profiles:
        raise ValueError("need at least one profile")
    stroke_types = tuple(Direction(t) for t in stroke_types)
    events = []
    for user_idx, profile in enumerate(profiles):
        user_id = user_idx + 1
        phone_id = 1 + user_idx % 4
        same_day_seen: dict[int, int] = {}
        for sess_idx, day in enumerate(plan.days):
            rank = same_day_seen.get(day, 0)
            same_day_seen[day] = rank + 1
            doc_id = user_id * 100 + sess_idx
            rng = np.random.default_rng(derive_seed(seed, user_id, sess_idx))
            t = day * MS_PER_DAY + (10 + rank * plan.gap_minutes) * 60_000 + user_idx
            shift = drift_per_day * day * BASE_SIGMA * profile.drift_signs
            if session_jitter:
                shift = shift + session_jitter * BASE_SIGMA * rng.normal(0.0, 1.0, N_FEATURES)
            for k in range(plan.strokes_per_session):
                direction = stroke_types[k % len(stroke_types)]
                model = _shifted(profile.models[direction], shift)
                length = int(rng.integers(plan.min_len, plan.max_len + 1))
                matrix = sample_observation(model, length, rng)
                t += int(rng.integers(300, 900))
                stroke, t = _stroke_events(matrix, user_id, doc_id, phone_id, t)
                events.extend(stroke)
    return events
