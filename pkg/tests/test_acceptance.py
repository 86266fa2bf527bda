"""Acceptance suite: one test per release criterion.

Each test prints a single verdict line (also echoed in the terminal
summary via conftest) stating PASS or FAIL plus the measured numbers, so
a log of this module is a readable scorecard. Criteria with a stated
runtime budget assert the elapsed wall time too.

Criterion 8 needs a real touch-log dataset and is skipped unless the
STROKEHMM_TOUCHALYTICS environment variable points at one.
"""

import itertools
import math
import os
import time

import numpy as np
import pytest
from conftest import random_lr_model

import oracles
from strokehmm.enrollment import EnrollmentConfig, UserModel, sequence_loglik
from strokehmm.evaluation import Scenario, compute_rates, run_experiment
from strokehmm.hmm import (
    Hmm,
    baum_welch,
    init_model,
    log_forward,
    state_occupancy,
    viterbi,
)
from strokehmm.scoring import (
    combined_score,
    kinematic_score,
    likelihood_score,
)
from strokehmm.strokes import Direction, Normalizer, parse_touch_log, segment_strokes
from strokehmm.synth import SessionPlan, generate_profile, sample_dataset

TOUCHALYTICS_ENV = "STROKEHMM_TOUCHALYTICS"


def _verdict(log, num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    log.append(line)
    print(line)
    assert ok, line


def _template(model, l_avg, kinematics):
    kin = np.asarray(kinematics, dtype=np.float64)
    return UserModel(
        user_id=1,
        stroke_type=Direction.HORIZONTAL,
        model=model,
        normalizer=Normalizer(np.zeros(model.n_features), np.ones(model.n_features)),
        l_avg=l_avg,
        train_kinematics=kin,
        m_train=kin.shape[0],
    )


# ------------------------------------------------------------ criterion 1

def test_criterion_1_oracle_equivalence(acceptance_log):
    """Forward and Viterbi match exhaustive path enumeration on small models."""
    start = time.perf_counter()
    rng = np.random.default_rng(11001)
    n_cases = 1000
    worst_fwd = 0.0
    worst_vit = 0.0
    for case in range(n_cases):
        n = int(rng.integers(1, 4))
        q = int(rng.integers(1, 3))
        t = int(rng.integers(1, 7))
        model = random_lr_model(rng, n, q, 2)
        if case % 2 == 0:
            obs = oracles.sample_sequence(model, t, rng)
        else:
            obs = rng.normal(0.0, 2.0, size=(t, 2))

        worst_fwd = max(worst_fwd, abs(log_forward(model, obs) - oracles.brute_force_loglik(model, obs)))
        path, logp = viterbi(model, obs)
        ref_path, ref_logp = oracles.brute_force_viterbi(model, obs)
        worst_vit = max(worst_vit, abs(logp - ref_logp))
        assert np.array_equal(path, ref_path)
    elapsed = time.perf_counter() - start
    ok = worst_fwd <= 1e-9 and worst_vit <= 1e-9 and elapsed < 30.0
    _verdict(
        acceptance_log, 1, ok,
        f"forward/viterbi vs path enumeration over {n_cases} cases: "
        f"max |dforward| {worst_fwd:.2e}, max |dviterbi| {worst_vit:.2e} "
        f"(tol 1e-9), {elapsed:.1f}s (budget 30s)",
    )


# ------------------------------------------------------------ criterion 2

def test_criterion_2_em_monotonicity(acceptance_log):
    """Every EM update is non-decreasing and keeps the band exactly zero."""
    start = time.perf_counter()
    rng = np.random.default_rng(11002)
    n_runs = 100
    worst_drop = 0.0
    for run in range(n_runs):
        n = int(rng.integers(2, 5))
        q = int(rng.integers(1, 3))
        p = int(rng.integers(2, 4))
        n_seqs = int(rng.integers(3, 7))
        source = random_lr_model(rng, n, q, p)
        seqs = [
            oracles.sample_sequence(source, int(rng.integers(max(8, n), 16)), rng)
            for _ in range(n_seqs)
        ]
        if run % 2 == 0:
            start_model = random_lr_model(rng, n, q, p)
        else:
            start_model = init_model(n, q, seqs, int(rng.integers(0, 2**32)))
        fitted, trace = baum_welch(start_model, seqs, max_iters=6, rel_tol=1e-15)

        drops = np.diff(trace)
        if drops.size:
            worst_drop = min(worst_drop, float(drops.min()))
        band = np.eye(n, dtype=bool) | np.eye(n, k=1, dtype=bool)
        assert np.all(fitted.trans[~band] == 0.0)
        assert fitted.trans[n - 1, n - 1] == 1.0
        fitted.validate()
    elapsed = time.perf_counter() - start
    ok = worst_drop >= -1e-8 and elapsed < 60.0
    _verdict(
        acceptance_log, 2, ok,
        f"loglik trace over {n_runs} EM runs: worst step {worst_drop:.2e} "
        f"(floor -1e-8), band zeros exact, {elapsed:.1f}s (budget 60s)",
    )


# ------------------------------------------------------------ criterion 3

def test_criterion_3_self_loop_recovery(acceptance_log):
    """EM on 200 sampled sequences recovers the generator's self-loops."""
    start = time.perf_counter()
    true_loops = (0.88, 0.78)
    prior = np.array([1.0, 0.0, 0.0])
    trans = np.array([
        [true_loops[0], 1.0 - true_loops[0], 0.0],
        [0.0, true_loops[1], 1.0 - true_loops[1]],
        [0.0, 0.0, 1.0],
    ])
    means = np.zeros((3, 1, 2))
    means[:, 0, 0] = [-3.0, 0.0, 3.0]
    generator = Hmm(prior, trans, np.ones((3, 1)), means, np.full((3, 1, 2), 0.25))
    generator.validate()

    hits = 0
    errors = []
    for seed in range(10):
        rng = np.random.default_rng(11003 + seed)
        seqs = [
            oracles.sample_sequence(generator, int(rng.integers(18, 30)), rng)
            for _ in range(200)
        ]
        fitted, _ = baum_welch(
            init_model(3, 1, seqs, seed), seqs, max_iters=30, rel_tol=1e-6
        )
        err = float(np.max(np.abs(np.diag(fitted.trans) - np.diag(trans))))
        errors.append(err)
        hits += err <= 0.1
    elapsed = time.perf_counter() - start
    ok = hits >= 8 and elapsed < 60.0
    _verdict(
        acceptance_log, 3, ok,
        f"self-loops within 0.1 in {hits}/10 seeds "
        f"(max |err| per seed: {max(errors):.3f}), {elapsed:.1f}s (budget 60s)",
    )


# ------------------------------------------------------------ criterion 4

def test_criterion_4_score_formulas(acceptance_log):
    """Closed-form identities of the likelihood/kinematic/combined scores."""
    rng = np.random.default_rng(11004)
    model = random_lr_model(rng, 3, 1, 5)
    obs = rng.normal(0.0, 1.0, size=(24, 5))
    loglik = sequence_loglik(model, obs, "forward")
    occ = state_occupancy(model, obs)

    checks = []

    # d_l = 0 scores exactly 1
    s_l, d_l = likelihood_score(_template(model, loglik, [occ]), obs)
    checks.append(("s_l identity", d_l == 0.0 and s_l == 1.0))

    # d_l = P scores exp(-1)
    s_l, d_l = likelihood_score(_template(model, loglik + 5.0, [occ]), obs)
    checks.append(("s_l closed form", abs(s_l - math.exp(-1.0)) <= 1e-12))

    # d_bar = 0 scores exactly 1
    s_k, d_bar = kinematic_score(_template(model, loglik, [occ]), obs)
    checks.append(("s_k identity", d_bar == 0.0 and s_k == 1.0))

    # single training vector at unit-simplex distance sqrt(2), Q=1, N=2:
    # state 1 absorbs the whole path, training occupancy is [1, 0]
    two = Hmm(
        np.array([0.0, 1.0]),
        np.array([[0.5, 0.5], [0.0, 1.0]]),
        np.ones((2, 1)),
        np.array([[[50.0]], [[0.0]]]),
        np.full((2, 1, 1), 1.0),
    )
    two.validate()
    obs_two = np.zeros((4, 1))
    s_k, d_bar = kinematic_score(
        _template(two, 0.0, np.array([[1.0, 0.0]])), obs_two
    )
    checks.append((
        "s_k closed form",
        abs(d_bar - math.sqrt(2.0)) <= 1e-12
        and abs(s_k - math.exp(-math.sqrt(2.0) / 2.0)) <= 1e-12,
    ))

    mean_exact = all(
        combined_score(a, b) == (a + b) / 2.0
        for a, b in rng.uniform(0.0, 2.0, size=(50, 2))
    )
    checks.append(("s_c arithmetic mean", mean_exact))

    failed = [name for name, ok in checks if not ok]
    _verdict(
        acceptance_log, 4, not failed,
        "score identities "
        + (f"all {len(checks)} hold" if not failed else f"failed: {failed}"),
    )


# ------------------------------------------------------------ criterion 5

def test_criterion_5_eer_oracle(acceptance_log):
    """compute_rates matches threshold counting on every small grid score set."""
    start = time.perf_counter()
    grid = (0.25, 0.5, 0.75)
    sets = [
        list(combo)
        for size in range(1, 9)
        for combo in itertools.combinations_with_replacement(grid, size)
    ]
    worst = 0.0
    n_pairs = 0
    for genuine in sets:
        for impostor in sets:
            curve = compute_rates(genuine, impostor)
            thr, far, frr, eer, far0, frr0 = oracles.brute_force_rates(genuine, impostor)
            assert np.array_equal(curve.thresholds, thr)
            assert np.array_equal(curve.far, far)
            assert np.array_equal(curve.frr, frr)
            assert curve.far_at_frr0 == far0
            assert curve.frr_at_far0 == frr0
            worst = max(worst, abs(curve.eer - eer))
            n_pairs += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 30.0
    _verdict(
        acceptance_log, 5, ok,
        f"EER vs counting oracle on {n_pairs} genuine/impostor set pairs "
        f"({len(sets)} sets of size <= 8 from grid {grid}): max |dEER| "
        f"{worst:.2e} (tol 1e-12), {elapsed:.1f}s (budget 30s)",
    )


# ------------------------------------------------------------ criterion 6

def test_criterion_6_synthetic_separation(acceptance_log):
    """Well-separated users authenticate almost perfectly, better with fusion."""
    start = time.perf_counter()
    config = EnrollmentConfig(
        state_grid=(4,), mixture_grid=(1,), max_iters=20, rel_tol=1e-3
    )
    plan = SessionPlan(days=(0,), strokes_per_session=120)
    profiles = [generate_profile(s, 1.0) for s in range(10)]

    hits = 0
    medians = []
    for seed in range(10):
        events = sample_dataset(
            profiles, seed=seed, plan=plan, stroke_types=(Direction.HORIZONTAL,)
        )
        strokes, _ = segment_strokes(events)
        report = run_experiment(
            strokes,
            Scenario.SHORT_TERM,
            windows=(1, 11),
            config=config,
            seed=seed,
            stroke_types=(Direction.HORIZONTAL,),
        )
        med = report.median_eer[Direction.HORIZONTAL.value]
        medians.append((med[1], med[11]))
        hits += med[1] <= 0.10 and med[11] <= 0.02 and med[11] <= med[1]
    elapsed = time.perf_counter() - start
    worst_w1 = max(m for m, _ in medians)
    worst_w11 = max(m for _, m in medians)
    ok = hits >= 9 and elapsed < 300.0
    _verdict(
        acceptance_log, 6, ok,
        f"10 users, 80 enroll + 40 test strokes: median EER <= 10% @w1 "
        f"and <= 2% @w11 and w11 <= w1 in {hits}/10 replications "
        f"(worst medians {worst_w1:.4f} @w1, {worst_w11:.4f} @w11), "
        f"{elapsed:.0f}s (budget 300s)",
    )


# ------------------------------------------------------------ criterion 7

def test_criterion_7_scenario_ordering(acceptance_log):
    """Drifting generators make later-gap scenarios strictly harder."""
    start = time.perf_counter()
    config = EnrollmentConfig(
        state_grid=(4,), mixture_grid=(1, 2), max_iters=20, rel_tol=1e-3
    )
    plan = SessionPlan(days=(0, 0, 7), strokes_per_session=30)
    profiles = [generate_profile(s, 0.5) for s in range(8)]
    scenarios = (Scenario.SHORT_TERM, Scenario.INTER_SESSION, Scenario.LONG_TERM)

    hits = 0
    rows = []
    for seed in range(10):
        events = sample_dataset(
            profiles,
            seed=seed,
            plan=plan,
            drift_per_day=0.3,
            session_jitter=0.6,
            stroke_types=(Direction.HORIZONTAL,),
        )
        strokes, _ = segment_strokes(events)
        med = {}
        for scenario in scenarios:
            report = run_experiment(
                strokes,
                scenario,
                windows=(1,),
                config=config,
                seed=seed,
                stroke_types=(Direction.HORIZONTAL,),
            )
            med[scenario] = report.median_eer[Direction.HORIZONTAL.value][1]
        rows.append(med)
        hits += (
            med[Scenario.SHORT_TERM]
            <= med[Scenario.INTER_SESSION]
            <= med[Scenario.LONG_TERM]
        )
    elapsed = time.perf_counter() - start
    mean = {s: float(np.mean([r[s] for r in rows])) for s in scenarios}
    ok = hits >= 8
    _verdict(
        acceptance_log, 7, ok,
        f"short <= inter <= long EER ordering under 0.3 std/day drift in "
        f"{hits}/10 seeds (mean medians {mean[Scenario.SHORT_TERM]:.4f} / "
        f"{mean[Scenario.INTER_SESSION]:.4f} / {mean[Scenario.LONG_TERM]:.4f}), "
        f"{elapsed:.0f}s",
    )


# ------------------------------------------------------------ criterion 8

def test_criterion_8_touchalytics(acceptance_log):
    """Dataset-conditional check against published short-term error rates."""
    path = os.environ.get(TOUCHALYTICS_ENV, "")
    if not path or not os.path.exists(path):
        line = (
            f"criterion 8: SKIP - set {TOUCHALYTICS_ENV} to a touch-log CSV "
            "to run the dataset-conditional check"
        )
        acceptance_log.append(line)
        print(line)
        pytest.skip(f"{TOUCHALYTICS_ENV} not set or file missing")

    start = time.perf_counter()
    events = parse_touch_log(path)
    strokes, _ = segment_strokes(events)
    report = run_experiment(
        strokes,
        Scenario.SHORT_TERM,
        windows=(1, 11),
        config=EnrollmentConfig(),
        seed=0,
        stroke_types=(Direction.HORIZONTAL, Direction.VERTICAL),
    )
    elapsed = time.perf_counter() - start

    parts = []
    ok = True
    for kind in (Direction.HORIZONTAL, Direction.VERTICAL):
        med = report.median_eer.get(kind.value)
        if med is None or 1 not in med or 11 not in med:
            parts.append(f"{kind.value}: no usable users")
            ok = False
            continue
        kind_ok = 0.03 <= med[1] <= 0.12 and med[11] <= 0.05
        ok = ok and kind_ok
        parts.append(f"{kind.value}: w1 {med[1]:.4f} (want [0.03, 0.12]), "
                     f"w11 {med[11]:.4f} (want <= 0.05)")
    _verdict(acceptance_log, 8, ok, "; ".join(parts) + f", {elapsed:.0f}s")
