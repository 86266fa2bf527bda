"""Verification-error evaluation: scenario splits, FAR/FRR/EER, sweeps.

The harness reproduces a standard verification protocol. Per claimed
user, genuine scores come from the user's own held-out strokes and
impostor scores from every other user's held-out strokes, both fused
over windows of consecutive strokes. Acceptance is "score >= threshold",
so FAR falls and FRR rises as the threshold grows; the equal error rate
is read off at the crossing with linear interpolation.

Three scenario splits mirror increasing elapsed time between enrollment
and test: short_term draws train/test at random from all sessions,
inter_session trains on the first session of a day and tests on that
day's later sessions, long_term trains on the first day and tests on
data at least a week older.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .enrollment import EnrollmentConfig, derive_seed, enroll
from .errors import (
    EmptyScoreSet,
    ScenarioUnsupportedByData,
    SingleUserDataset,
    StrokeHmmError,
    WindowLargerThanSequence,
)
from .scoring import fuse_window, score_stroke
from .serialize import atomic_write_text
from .strokes import DEFAULT_DIRECTION_THRESHOLD, Direction, classify_stroke

DEFAULT_WINDOWS = (1, 3, 5, 7, 9, 11, 13, 15, 17, 19)
DEFAULT_STROKE_TYPES = (Direction.HORIZONTAL, Direction.VERTICAL)


class Scenario(str, enum.Enum):
    SHORT_TERM = "short_term"
    INTER_SESSION = "inter_session"
    LONG_TERM = "long_term"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class ScenarioSplit:
    scenario: Scenario
    train: dict  # user_id -> [Stroke], temporal order
    test: dict  # user_id -> [Stroke], temporal order
    excluded: tuple  # ((user_id, reason), ...) users the scenario cannot use


@dataclass(frozen=True)
class RateCurve:
    thresholds: np.ndarray  # sorted, with -inf/+inf sentinels
    far: np.ndarray
    frr: np.ndarray
    eer: float
    far_at_frr0: float
    frr_at_far0: float


@dataclass(frozen=True)
class WindowResult:
    user_id: int
    stroke_type: Direction
    window: int
    n_genuine: int
    n_impostor: int
    rates: RateCurve


@dataclass(frozen=True)
class SkipRecord:
    user_id: int
    stroke_type: Direction
    window: int | None  # None = the user/type pair as a whole
    reason: str


@dataclass(frozen=True)
class EvalReport:
    scenario: Scenario
    windows: tuple
    stroke_types: tuple
    results: tuple  # WindowResult entries
    skips: tuple  # SkipRecord entries
    excluded_users: tuple  # ((user_id, reason), ...) from the split
    median_eer: dict  # stroke_type value -> {window -> median over users}


# ---------------------------------------------------------------- splits

def _sessions_in_order(strokes):
    """Group one user's strokes by session, ordered by first touch."""
    by_doc: dict[int, list] = {}
    for stroke in strokes:
        by_doc.setdefault(stroke.doc_id, []).append(stroke)
    return sorted(by_doc.values(), key=lambda group: group[0].events[0].time_ms)


def _split_user(strokes, scenario: Scenario, user_seed: int):
    """(train, test) for one user, or a string reason for exclusion."""
    if scenario is Scenario.SHORT_TERM:
        n_train = (2 * len(strokes)) // 3
        if n_train < 1 or n_train == len(strokes):
            return "too few strokes for a 2:1 split"
        order = np.random.default_rng(user_seed).permutation(len(strokes))
        train_idx = np.sort(order[:n_train])
        test_idx = np.sort(order[n_train:])
        return [strokes[i] for i in train_idx], [strokes[i] for i in test_idx]

    sessions = _sessions_in_order(strokes)
    if scenario is Scenario.INTER_SESSION:
        by_day: dict[int, list] = {}
        for sess in sessions:
            by_day.setdefault(sess[0].day, []).append(sess)
        for day in sorted(by_day):
            if len(by_day[day]) >= 2:
                first, *rest = by_day[day]
                return list(first), [s for sess in rest for s in sess]
        return "no day with two or more sessions"

    if scenario is Scenario.LONG_TERM:
        first_day = min(s.day for s in strokes)
        train = [s for s in strokes if s.day == first_day]
        test = [s for s in strokes if s.day >= first_day + 7]
        if not test:
            return "no data a week or more after the first day"
        return train, test

    raise ValueError(f"unknown scenario {scenario!r}")


def build_split(strokes, scenario, seed: int = 0) -> ScenarioSplit:
    """Deterministic per-user train/test assignment for a scenario.

    Users the scenario cannot serve (missing sessions or days) are
    excluded with a reason, not an error; the split fails only when no
    user survives.
    """
    scenario = Scenario(scenario)
    by_user: dict[int, list] = {}
    for stroke in strokes:
        by_user.setdefault(stroke.user_id, []).append(stroke)

    train, test, excluded = {}, {}, []
    for user_id in sorted(by_user):
        outcome = _split_user(by_user[user_id], scenario, derive_seed(seed, user_id))
        if isinstance(outcome, str):
            excluded.append((user_id, outcome))
        else:
            train[user_id], test[user_id] = outcome
    if not train:
        raise ScenarioUnsupportedByData(
            f"no user has the session/day structure {scenario.value} needs"
        )
    return ScenarioSplit(scenario, train, test, tuple(excluded))


# ----------------------------------------------------------------- rates

def compute_rates(genuine, impostor) -> RateCurve:
    """FAR/FRR curves over the observed-score threshold grid, plus EER
    and the zero-error operating points.

    Accept iff score >= threshold. The grid is the sorted union of all
    observed scores with -inf/+inf sentinels, so FAR starts at 1 and
    ends at 0 while FRR goes the other way; the equal error rate is
    linearly interpolated where the difference changes sign.
    """
    genuine = np.asarray(list(genuine), dtype=np.float64)
    impostor = np.asarray(list(impostor), dtype=np.float64)
    if genuine.size == 0 or impostor.size == 0:
        raise EmptyScoreSet("both score sets must be non-empty")

    grid = np.unique(np.concatenate([genuine, impostor]))
    thresholds = np.concatenate([[-np.inf], grid, [np.inf]])
    # fraction of impostor scores accepted / genuine scores rejected
    far = (impostor[None, :] >= thresholds[:, None]).mean(axis=1)
    frr = (genuine[None, :] < thresholds[:, None]).mean(axis=1)

    diff = far - frr
    eer = math.nan
    for k in range(thresholds.size):
        if diff[k] <= 0:
            if diff[k] == 0:
                eer = float(far[k])
            else:
                lam = diff[k - 1] / (diff[k - 1] - diff[k])
                eer = float(far[k - 1] + lam * (far[k] - far[k - 1]))
            break
    far_at_frr0 = float(far[frr == 0].min())
    frr_at_far0 = float(frr[far == 0].min())
    return RateCurve(thresholds, far, frr, eer, far_at_frr0, frr_at_far0)


# ------------------------------------------------------------- protocol

@dataclass(frozen=True)
class ScoreSeries:
    """Per-claimed-user combined-score series before window fusion."""

    claimed_id: int
    genuine: tuple  # s_c of the user's own test strokes, temporal order
    impostor: dict  # other user_id -> s_c tuple in temporal order


def impostor_scores(templates: dict, test_strokes: dict,
                    direction_threshold: float = DEFAULT_DIRECTION_THRESHOLD) -> list:
    """Genuine/impostor combined-score series for each claimed user.

    `templates` maps user_id to that user's UserModel (all of one stroke
    type); `test_strokes` maps user_id to held-out strokes. Only strokes
    matching the template's type are scored. Impostor series stay keyed
    by impostor user so fusion never mixes two impostors in one window.
    """
    if len(templates) < 2:
        raise SingleUserDataset("impostor scoring needs at least two enrolled users")

    series = []
    for claimed_id in sorted(templates):
        template = templates[claimed_id]
        wanted = template.stroke_type

        def s_c_series(strokes):
            return tuple(
                score_stroke(template, s).s_c
                for s in strokes
                if classify_stroke(s, direction_threshold) is wanted
            )

        genuine = s_c_series(test_strokes.get(claimed_id, []))
        impostor = {
            other: s_c_series(test_strokes.get(other, []))
            for other in sorted(templates)
            if other != claimed_id
        }
        series.append(ScoreSeries(claimed_id, genuine, impostor))
    return series


def _fused_rates(series: ScoreSeries, window: int, disjoint: bool):
    """(WindowResult fields, or a skip reason string) for one window."""
    try:
        genuine = fuse_window(series.genuine, window, disjoint)
    except WindowLargerThanSequence:
        return f"fewer than {window} genuine test strokes"
    impostor: list[float] = []
    for scores in series.impostor.values():
        try:
            impostor.extend(fuse_window(scores, window, disjoint))
        except WindowLargerThanSequence:
            continue
    if not impostor:
        return f"no impostor supplies {window} consecutive strokes"
    return genuine, impostor


def run_experiment(
    strokes,
    scenario,
    windows=DEFAULT_WINDOWS,
    config: EnrollmentConfig = EnrollmentConfig(),
    seed: int = 0,
    stroke_types=DEFAULT_STROKE_TYPES,
    disjoint: bool = False,
) -> EvalReport:
    """End-to-end protocol: split, enroll, score, fuse, rate.

    One user's enrollment or scoring failure excludes that user (and is
    recorded), never the run. Raises SingleUserDataset only when fewer
    than two users survive enrollment for every stroke type.
    """
    scenario = Scenario(scenario)
    windows = tuple(int(w) for w in windows)
    stroke_types = tuple(Direction(t) for t in stroke_types)
    split = build_split(strokes, scenario, seed)

    results: list[WindowResult] = []
    skips: list[SkipRecord] = []
    any_pair = False
    for type_idx, stroke_type in enumerate(stroke_types):
        templates = {}
        for user_id in sorted(split.train):
            user_config = dataclasses.replace(
                config, seed=derive_seed(seed, type_idx, user_id)
            )
            try:
                templates[user_id] = enroll(
                    user_id, split.train[user_id], stroke_type, user_config
                )
            except StrokeHmmError as exc:
                skips.append(SkipRecord(user_id, stroke_type, None, str(exc)))
        if len(templates) < 2:
            for user_id in sorted(templates):
                skips.append(SkipRecord(
                    user_id, stroke_type, None,
                    "fewer than two users enrolled for this stroke type",
                ))
            continue
        any_pair = True

        for series in impostor_scores(templates, split.test, config.direction_threshold):
            for window in windows:
                outcome = _fused_rates(series, window, disjoint)
                if isinstance(outcome, str):
                    skips.append(SkipRecord(series.claimed_id, stroke_type, window, outcome))
                    continue
                genuine, impostor = outcome
                results.append(WindowResult(
                    series.claimed_id, stroke_type, window,
                    len(genuine), len(impostor),
                    compute_rates(genuine, impostor),
                ))

    if not any_pair:
        raise SingleUserDataset("no stroke type has two or more enrolled users")

    median_eer: dict = {}
    for stroke_type in stroke_types:
        per_window = {}
        for window in windows:
            eers = [
                r.rates.eer
                for r in results
                if r.stroke_type is stroke_type and r.window == window
            ]
            if eers:
                per_window[window] = float(np.median(eers))
        if per_window:
            median_eer[stroke_type.value] = per_window

    return EvalReport(
        scenario, windows, stroke_types,
        tuple(results), tuple(skips), split.excluded, median_eer,
    )


# ---------------------------------------------------------------- output

def report_to_dict(report: EvalReport) -> dict:
    return {
        "scenario": report.scenario.value,
        "windows": list(report.windows),
        "stroke_types": [t.value for t in report.stroke_types],
        "excluded_users": [
            {"user_id": uid, "reason": reason} for uid, reason in report.excluded_users
        ],
        "skips": [
            {
                "user_id": s.user_id,
                "stroke_type": s.stroke_type.value,
                "window": s.window,
                "reason": s.reason,
            }
            for s in report.skips
        ],
        "results": [
            {
                "user_id": r.user_id,
                "stroke_type": r.stroke_type.value,
                "window": r.window,
                "n_genuine": r.n_genuine,
                "n_impostor": r.n_impostor,
                "eer": r.rates.eer,
                "far_at_frr0": r.rates.far_at_frr0,
                "frr_at_far0": r.rates.frr_at_far0,
            }
            for r in report.results
        ],
        "median_eer": {
            stroke_type: {str(window): value for window, value in per_window.items()}
            for stroke_type, per_window in report.median_eer.items()
        },
    }


def write_report(report: EvalReport, out_dir) -> Path:
    """Write report.json plus one (threshold, far, frr) CSV per curve."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    atomic_write_text(
        report_path,
        json.dumps(report_to_dict(report), indent=2, allow_nan=False) + "\n",
    )
    curve_dir = out_dir / "curves"
    curve_dir.mkdir(exist_ok=True)
    for r in report.results:
        name = f"user{r.user_id}_{r.stroke_type.value}_w{r.window}.csv"
        rows = ["threshold,far,frr"]
        rows += [
            f"{repr(float(t))},{repr(float(a))},{repr(float(b))}"
            for t, a, b in zip(r.rates.thresholds, r.rates.far, r.rates.frr)
        ]
        atomic_write_text(curve_dir / name, "\n".join(rows) + "\n")
    return report_path
