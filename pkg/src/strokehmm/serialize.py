"""Versioned JSON serialization for models and user templates.

Two document formats:

    hmm-v1       a bare Hmm (prior, trans, mix_weights, means, variances)
    template-v1  a UserModel embedding an hmm-v1 model plus normalizer,
                 l_avg, the training kinematics table, and metadata

Floats are written with Python's shortest-repr formatting, which JSON
readers parse back to the identical IEEE-754 double, so round trips are
exact. NaN/Infinity are rejected in both directions. Loaders validate
shapes and stochastic invariants before returning anything.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .enrollment import UserModel
from .errors import SerializationError
from .hmm import Hmm
from .strokes import Direction, Normalizer

HMM_FORMAT = "hmm-v1"
TEMPLATE_FORMAT = "template-v1"


def _reject_constant(token):
    raise ValueError(f"non-finite JSON constant {token!r}")


def _loads(text: str) -> dict:
    try:
        payload = json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise SerializationError(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SerializationError("top-level JSON value must be an object")
    return payload


def _array(payload: dict, key: str, shape: tuple) -> np.ndarray:
    try:
        arr = np.asarray(payload[key], dtype=np.float64)
    except KeyError:
        raise SerializationError(f"missing key {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise SerializationError(f"key {key!r}: {exc}") from exc
    if arr.shape != shape:
        raise SerializationError(f"key {key!r}: expected shape {shape}, got {arr.shape}")
    return arr


def hmm_to_dict(model: Hmm) -> dict:
    return {
        "format": HMM_FORMAT,
        "n_states": model.n_states,
        "n_mixtures": model.n_mixtures,
        "n_features": model.n_features,
        "prior": model.prior.tolist(),
        "trans": model.trans.tolist(),
        "mix_weights": model.mix_weights.tolist(),
        "means": model.means.tolist(),
        "variances": model.variances.tolist(),
    }


def hmm_from_dict(payload: dict) -> Hmm:
    if payload.get("format") != HMM_FORMAT:
        raise SerializationError(
            f"expected format {HMM_FORMAT!r}, got {payload.get('format')!r}"
        )
    try:
        n = int(payload["n_states"])
        q = int(payload["n_mixtures"])
        p = int(payload["n_features"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"bad dimension fields: {exc}") from exc
    model = Hmm(
        prior=_array(payload, "prior", (n,)),
        trans=_array(payload, "trans", (n, n)),
        mix_weights=_array(payload, "mix_weights", (n, q)),
        means=_array(payload, "means", (n, q, p)),
        variances=_array(payload, "variances", (n, q, p)),
    )
    try:
        model.validate()
    except Exception as exc:
        raise SerializationError(f"stored model violates invariants: {exc}") from exc
    return model


def hmm_to_json(model: Hmm) -> str:
    return json.dumps(hmm_to_dict(model), indent=2, allow_nan=False) + "\n"


def hmm_from_json(text: str) -> Hmm:
    return hmm_from_dict(_loads(text))


def template_to_dict(template: UserModel) -> dict:
    return {
        "format": TEMPLATE_FORMAT,
        "user_id": template.user_id,
        "stroke_type": template.stroke_type.value,
        "likelihood_mode": template.likelihood_mode,
        "m_train": template.m_train,
        "l_avg": template.l_avg,
        "model": hmm_to_dict(template.model),
        "normalizer": {
            "mean": np.asarray(template.normalizer.mean, dtype=np.float64).tolist(),
            "std": np.asarray(template.normalizer.std, dtype=np.float64).tolist(),
        },
        "train_kinematics": np.asarray(template.train_kinematics, dtype=np.float64).tolist(),
    }


def template_from_dict(payload: dict) -> UserModel:
    if payload.get("format") != TEMPLATE_FORMAT:
        raise SerializationError(
            f"expected format {TEMPLATE_FORMAT!r}, got {payload.get('format')!r}"
        )
    try:
        user_id = int(payload["user_id"])
        stroke_type = Direction(payload["stroke_type"])
        mode = str(payload["likelihood_mode"])
        m_train = int(payload["m_train"])
        l_avg = float(payload["l_avg"])
        model = hmm_from_dict(payload["model"])
        norm_payload = payload["normalizer"]
    except SerializationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"bad template field: {exc}") from exc
    normalizer = Normalizer(
        mean=_array(norm_payload, "mean", (model.n_features,)),
        std=_array(norm_payload, "std", (model.n_features,)),
    )
    kinematics = _array(payload, "train_kinematics", (m_train, model.n_states))
    template = UserModel(
        user_id=user_id,
        stroke_type=stroke_type,
        model=model,
        normalizer=normalizer,
        l_avg=l_avg,
        train_kinematics=kinematics,
        m_train=m_train,
        likelihood_mode=mode,
    )
    try:
        template.validate()
    except Exception as exc:
        raise SerializationError(f"stored template violates invariants: {exc}") from exc
    return template


def template_to_json(template: UserModel) -> str:
    return json.dumps(template_to_dict(template), indent=2, allow_nan=False) + "\n"


def template_from_json(text: str) -> UserModel:
    return template_from_dict(_loads(text))


def load_template(path) -> UserModel:
    return template_from_json(Path(path).read_text(encoding="utf-8"))


def save_template(template: UserModel, path) -> None:
    atomic_write_text(path, template_to_json(template))


def atomic_write_text(path, text: str) -> None:
    """Write via a same-directory temp file and rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
