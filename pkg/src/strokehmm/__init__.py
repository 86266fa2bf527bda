"""HMM behavior templates for continuous touch-stroke authentication.

Enrollment trains a per-user, per-stroke-direction left-right HMM from
the owner's strokes only; authentication fuses a length-normalized
likelihood score with a Viterbi state-occupancy score over windows of
consecutive strokes. The evaluation harness measures FAR/FRR/EER across
short-term, inter-session, and long-term scenarios.
"""

from . import kernels
from .enrollment import EnrollmentConfig, UserModel, derive_seed, enroll, select_model
from .errors import DataError, NumericalFailure, StrokeHmmError
from .evaluation import Scenario, build_split, compute_rates, run_experiment
from .hmm import (
    Hmm,
    baum_welch,
    init_model,
    log_forward,
    normalized_loglik,
    state_occupancy,
    viterbi,
)
from .scoring import fuse_window, score_session, score_stroke, score_strokes
from .serialize import load_template, save_template
from .strokes import (
    Direction,
    Normalizer,
    Stroke,
    TouchEvent,
    classify_stroke,
    extract_observations,
    parse_touch_log,
    segment_strokes,
)
from .synth import SessionPlan, generate_profile, sample_dataset

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Direction",
    "EnrollmentConfig",
    "Hmm",
    "Normalizer",
    "NumericalFailure",
    "Scenario",
    "SessionPlan",
    "Stroke",
    "StrokeHmmError",
    "TouchEvent",
    "UserModel",
    "baum_welch",
    "build_split",
    "classify_stroke",
    "compute_rates",
    "derive_seed",
    "enroll",
    "extract_observations",
    "fuse_window",
    "generate_profile",
    "init_model",
    "kernels",
    "load_template",
    "log_forward",
    "normalized_loglik",
    "parse_touch_log",
    "run_experiment",
    "sample_dataset",
    "save_template",
    "score_session",
    "score_stroke",
    "score_strokes",
    "segment_strokes",
    "select_model",
    "state_occupancy",
    "viterbi",
    "__version__",
]
