import numpy as np
import pytest

from strokehmm.hmm import VAR_FLOOR, Hmm
from strokehmm.strokes import Action, Stroke, TouchEvent


def random_lr_model(rng, n_states, n_mixtures, n_features, mean_scale=2.0):
    """Random valid left-right model for property tests."""
    prior = rng.uniform(0.1, 1.0, n_states)
    prior /= prior.sum()
    trans = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        pair = rng.uniform(0.1, 1.0, 2)
        trans[i, i], trans[i, i + 1] = pair / pair.sum()
    trans[-1, -1] = 1.0
    weights = rng.uniform(0.2, 1.0, (n_states, n_mixtures))
    weights /= weights.sum(axis=1, keepdims=True)
    means = rng.normal(0.0, mean_scale, (n_states, n_mixtures, n_features))
    variances = rng.uniform(VAR_FLOOR * 10, 1.5, (n_states, n_mixtures, n_features))
    model = Hmm(prior, trans, weights, means, variances)
    model.validate()
    return model


def ramp_generator(n_states=3, n_features=5, spread=4.0, var=0.25, self_loop=0.85):
    """Left-right generator whose feature-0 means ramp across states.

    The ramp gives sampled strokes a large net x displacement, so they
    classify as horizontal, and makes the state count recoverable.
    """
    prior = np.zeros(n_states)
    prior[0] = 1.0
    trans = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        trans[i, i], trans[i, i + 1] = self_loop, 1.0 - self_loop
    trans[-1, -1] = 1.0
    means = np.zeros((n_states, 1, n_features))
    means[:, 0, 0] = spread * (np.arange(n_states) - (n_states - 1) / 2.0)
    model = Hmm(
        prior, trans,
        np.ones((n_states, 1)),
        means,
        np.full((n_states, 1, n_features), var),
    )
    model.validate()
    return model


def strokes_from_model(model, n_strokes, rng, *, user_id=1, doc_id=1, phone_id=1,
                       start_ms=0, min_len=20, max_len=36, x_gain=60.0, y_gain=30.0):
    """Sample generator sequences and wrap them as screen-plausible strokes.

    Feature 0 maps to x with enough gain that displacement dominates;
    timestamps advance by 16 ms nominal plus the sampled dt feature.
    """
    from oracles import sample_sequence

    strokes = []
    t = start_ms
    for _ in range(n_strokes):
        length = int(rng.integers(min_len, max_len + 1))
        mat = sample_sequence(model, length, rng)
        t += int(rng.integers(400, 900))
        events = []
        for k in range(length):
            if k > 0:
                t += max(1, int(round(16 + 2.0 * mat[k, 4])))
            if k == 0:
                action = Action.DOWN
            elif k == length - 1:
                action = Action.UP
            else:
                action = Action.MOVE
            events.append(TouchEvent(
                phone_id, user_id, doc_id, t, action, 0,
                200.0 + x_gain * mat[k, 0], 800.0 + y_gain * mat[k, 1],
                0.5 + 0.05 * mat[k, 2], 0.3 + 0.05 * mat[k, 3], 0.0,
            ))
        strokes.append(Stroke(tuple(events)))
    return strokes


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# one verdict line per acceptance criterion, echoed after the test summary
# so the lines survive pytest's output capture
acceptance_lines: list = []


@pytest.fixture(scope="session")
def acceptance_log():
    return acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
