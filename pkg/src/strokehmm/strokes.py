"""Raw touch-log handling: parsing, stroke segmentation, features.

Touch logs are 11-column CSV (UTF-8, LF or CRLF, optional header):

    phone_id, user_id, doc_id, time_ms, action, phone_orientation,
    x, y, pressure, area, finger_orientation

with action coded 0=down, 1=up, 2=move. A stroke is one maximal
down..up run within a (phone, user, doc) stream. Each stroke turns into
a (T, 5) feature matrix with per-sample x, y, pressure, area, and dt
(milliseconds since the previous sample, 0 for the first).

All functions here are pure over immutable inputs.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import EmptyFile, EmptyPool, MalformedRow, StrokeTooShort

N_FEATURES = 5
FEATURE_NAMES = ("x", "y", "pressure", "area", "dt")
DEFAULT_DIRECTION_THRESHOLD = 25.0  # px of net displacement; below = tap/jitter
STD_FLOOR = 1e-8
MS_PER_DAY = 86_400_000


class Action(enum.IntEnum):
    DOWN = 0
    UP = 1
    MOVE = 2


class Direction(str, enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    OTHER = "other"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class TouchEvent:
    phone_id: int
    user_id: int
    doc_id: int
    time_ms: int
    action: Action
    phone_orientation: int
    x: float
    y: float
    pressure: float
    area: float
    finger_orientation: float


@dataclass(frozen=True)
class Stroke:
    """One down..up gesture. events is ordered and has length >= 2."""

    events: tuple[TouchEvent, ...]

    @property
    def user_id(self) -> int:
        return self.events[0].user_id

    @property
    def doc_id(self) -> int:
        return self.events[0].doc_id

    @property
    def phone_id(self) -> int:
        return self.events[0].phone_id

    @property
    def duration_ms(self) -> int:
        return self.events[-1].time_ms - self.events[0].time_ms

    @property
    def dx(self) -> float:
        return self.events[-1].x - self.events[0].x

    @property
    def dy(self) -> float:
        return self.events[-1].y - self.events[0].y

    @property
    def day(self) -> int:
        """Day index derived from the first event's timestamp."""
        return self.events[0].time_ms // MS_PER_DAY

    @property
    def direction(self) -> Direction:
        return classify_stroke(self)

    def __len__(self) -> int:
        return len(self.events)


class SegmentationResult(NamedTuple):
    strokes: list[Stroke]
    dropped_runs: int


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, bytes):
        return io.TextIOWrapper(io.BytesIO(source), encoding="utf-8", newline=""), True
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return io.StringIO(data), True


_INT_FIELDS = (0, 1, 2, 3, 4, 5)
_FLOAT_FIELDS = (6, 7, 8, 9, 10)


def parse_touch_log(source) -> list[TouchEvent]:
    """Parse a touch log into events, preserving input order.

    `source` may be a path, raw bytes, or a (binary or text) file-like
    object. A header row is skipped when its first field is non-numeric.
    """
    stream, close = _open_text(source)
    try:
        events: list[TouchEvent] = []
        for idx, row in enumerate(csv.reader(stream)):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if idx == 0:
                try:
                    float(row[0])
                except ValueError:
                    continue  # header
            if len(row) != 11:
                raise MalformedRow(idx, f"expected 11 fields, got {len(row)}")
            try:
                ints = [int(row[k]) for k in _INT_FIELDS]
                floats = [float(row[k]) for k in _FLOAT_FIELDS]
            except ValueError as exc:
                raise MalformedRow(idx, str(exc)) from exc
            phone_id, user_id, doc_id, time_ms, action_code, orientation = ints
            if time_ms < 0:
                raise MalformedRow(idx, "negative timestamp")
            try:
                action = Action(action_code)
            except ValueError as exc:
                raise MalformedRow(idx, f"unknown action code {action_code}") from exc
            x, y, pressure, area, finger = floats
            if pressure < 0 or area < 0:
                raise MalformedRow(idx, "negative pressure or area")
            events.append(
                TouchEvent(
                    phone_id, user_id, doc_id, time_ms, action, orientation,
                    x, y, pressure, area, finger,
                )
            )
        if not events:
            raise EmptyFile("touch log contains no data rows")
        return events
    finally:
        if close:
            stream.close()


def write_touch_log(events, dest) -> None:
    """Write events in the same 11-column CSV layout the parser reads."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as handle:
            _write_rows(events, handle)
    else:
        _write_rows(events, dest)


def _write_rows(events, handle) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    for ev in events:
        writer.writerow(
            [
                ev.phone_id, ev.user_id, ev.doc_id, ev.time_ms,
                int(ev.action), ev.phone_orientation,
                repr(ev.x), repr(ev.y), repr(ev.pressure), repr(ev.area),
                repr(ev.finger_orientation),
            ]
        )


def segment_strokes(events) -> SegmentationResult:
    """Cut per-stream event runs into strokes.

    Runs without a matching up (trace truncation), zero-duration runs,
    and stray events outside any run are dropped, not errors; the count
    of dropped runs is reported alongside the strokes.
    """
    streams: dict[tuple[int, int, int], list[TouchEvent]] = {}
    for ev in events:
        streams.setdefault((ev.phone_id, ev.user_id, ev.doc_id), []).append(ev)

    strokes: list[Stroke] = []
    dropped = 0
    for stream in streams.values():
        run: list[TouchEvent] | None = None
        for ev in stream:
            if ev.action is Action.DOWN:
                if run is not None:
                    dropped += 1
                run = [ev]
            elif run is not None:
                run.append(ev)
                if ev.action is Action.UP:
                    if len(run) >= 2 and run[-1].time_ms > run[0].time_ms:
                        strokes.append(Stroke(tuple(run)))
                    else:
                        dropped += 1
                    run = None
        if run is not None:
            dropped += 1
    return SegmentationResult(strokes, dropped)


def classify_stroke(stroke: Stroke, threshold: float = DEFAULT_DIRECTION_THRESHOLD) -> Direction:
    """Axis-dominant direction; taps and jitter below `threshold` px are OTHER."""
    dx, dy = stroke.dx, stroke.dy
    if math.hypot(dx, dy) < threshold:
        return Direction.OTHER
    return Direction.HORIZONTAL if abs(dx) >= abs(dy) else Direction.VERTICAL


def group_by_direction(strokes, threshold: float = DEFAULT_DIRECTION_THRESHOLD):
    """Bucket strokes into {Direction: [Stroke, ...]}."""
    groups: dict[Direction, list[Stroke]] = {d: [] for d in Direction}
    for stroke in strokes:
        groups[classify_stroke(stroke, threshold)].append(stroke)
    return groups


def extract_observations(stroke: Stroke) -> np.ndarray:
    """Raw (T, 5) feature matrix: x, y, pressure, area, dt."""
    if len(stroke) < 2:
        raise StrokeTooShort("stroke needs at least two events")
    times = np.array([ev.time_ms for ev in stroke.events], dtype=np.float64)
    out = np.empty((len(stroke), N_FEATURES))
    out[:, 0] = [ev.x for ev in stroke.events]
    out[:, 1] = [ev.y for ev in stroke.events]
    out[:, 2] = [ev.pressure for ev in stroke.events]
    out[:, 3] = [ev.area for ev in stroke.events]
    out[0, 4] = 0.0
    out[1:, 4] = np.diff(times)
    return out


@dataclass(frozen=True)
class Normalizer:
    """Per-feature z-score statistics, fitted on enrollment data only."""

    mean: np.ndarray
    std: np.ndarray


def fit_normalizer(training) -> Normalizer:
    """Pool all rows of the training matrices and fit per-feature stats.

    Standard deviations are floored at `STD_FLOOR` so constant features
    normalize to zero instead of dividing by zero.
    """
    matrices = [np.asarray(m, dtype=np.float64) for m in training]
    if not matrices or sum(m.shape[0] for m in matrices) == 0:
        raise EmptyPool("no samples to fit the normalizer")
    pool = np.vstack(matrices)
    mean = pool.mean(axis=0)
    std = np.maximum(pool.std(axis=0), STD_FLOOR)
    return Normalizer(mean, std)


def apply_normalizer(norm: Normalizer, raw) -> np.ndarray:
    """Map raw features to z-scores using frozen training statistics."""
    return (np.asarray(raw, dtype=np.float64) - norm.mean) / norm.std
