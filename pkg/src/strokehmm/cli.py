"""Command-line front end.

Subcommands:

    enroll    build a user template from a touch-log CSV
    score     score a test CSV against a stored template
    evaluate  run a full FAR/FRR/EER experiment on a dataset
    synth     generate a synthetic multi-user dataset
    inspect   pretty-print a stored template

Exit codes: 0 success, 2 usage error, 3 data error (bad or insufficient
input), 4 numerical failure. The STROKEHMM_OUTPUT_DIR environment
variable sets the default directory for outputs whose flag is omitted.
All files are written atomically.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
from pathlib import Path

from . import __version__
from .enrollment import (
    DEFAULT_EVIDENCE_DIVISOR,
    DEFAULT_MIXTURE_GRID,
    DEFAULT_STATE_GRID,
    EnrollmentConfig,
    enroll,
)
from .errors import DataError, NumericalFailure, UserNotFound
from .evaluation import DEFAULT_WINDOWS, run_experiment, write_report
from .hmm import DEFAULT_MAX_ITERS, DEFAULT_REL_TOL
from .scoring import fuse_window, score_strokes, write_scores_csv
from .serialize import atomic_write_text, load_template, save_template, template_to_json
from .strokes import (
    DEFAULT_DIRECTION_THRESHOLD,
    Direction,
    classify_stroke,
    parse_touch_log,
    segment_strokes,
    write_touch_log,
)
from .synth import SessionPlan, generate_profile, sample_dataset

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

OUTPUT_DIR_ENV = "STROKEHMM_OUTPUT_DIR"


def _int_tuple(text: str) -> tuple:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _direction_tuple(text: str) -> tuple:
    try:
        return tuple(Direction(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _output_dir(args) -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def _default_output(args, name: str) -> Path:
    return _output_dir(args) / name


def _add_model_flags(parser):
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--states", type=_int_tuple, default=DEFAULT_STATE_GRID,
                        metavar="N,N,...", help="state-count grid")
    parser.add_argument("--mixtures", type=_int_tuple, default=DEFAULT_MIXTURE_GRID,
                        metavar="Q,Q,...", help="mixture-count grid")
    parser.add_argument("--evidence-divisor", type=int, default=DEFAULT_EVIDENCE_DIVISOR,
                        help="admit (N,Q) only if N*Q <= median stroke length / this")
    parser.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL,
                        help="EM relative convergence tolerance")
    parser.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS,
                        help="EM iteration cap")
    parser.add_argument("--likelihood-mode", choices=("forward", "viterbi"),
                        default="forward",
                        help="recursion behind the likelihood score")
    parser.add_argument("--direction-threshold", type=float,
                        default=DEFAULT_DIRECTION_THRESHOLD,
                        help="min displacement (px) before a stroke has a direction")


def _config_from(args) -> EnrollmentConfig:
    return EnrollmentConfig(
        state_grid=args.states,
        mixture_grid=args.mixtures,
        evidence_divisor=args.evidence_divisor,
        rel_tol=args.rel_tol,
        max_iters=args.max_iters,
        likelihood_mode=args.likelihood_mode,
        direction_threshold=args.direction_threshold,
        seed=args.seed,
    )


def _load_strokes(path, user_id=None):
    events = parse_touch_log(path)
    if user_id is not None:
        events = [ev for ev in events if ev.user_id == user_id]
        if not events:
            raise UserNotFound(f"user {user_id} not found in {path}")
    strokes, dropped = segment_strokes(events)
    return strokes, dropped


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strokehmm",
        description="Continuous touch-stroke authentication toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enroll", help="build a user template from a touch log")
    p.add_argument("--input", required=True, help="touch-log CSV")
    p.add_argument("--user", required=True, type=int, help="user id to enroll")
    p.add_argument("--stroke-type", type=Direction, choices=(Direction.HORIZONTAL, Direction.VERTICAL),
                   default=Direction.HORIZONTAL)
    p.add_argument("--output", help="template file (default template_user<ID>_<TYPE>.json)")
    _add_model_flags(p)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("score", help="score a test touch log against a template")
    p.add_argument("--template", required=True, help="template-v1 file")
    p.add_argument("--input", required=True, help="touch-log CSV of test strokes")
    p.add_argument("--output", help="per-stroke score CSV (default scores.csv)")
    p.add_argument("--window", type=int, default=1, help="fusion window size")
    p.add_argument("--disjoint", action="store_true", help="disjoint windows instead of sliding")
    p.add_argument("--direction-threshold", type=float, default=DEFAULT_DIRECTION_THRESHOLD)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="run the full verification-error protocol")
    p.add_argument("--input", required=True, help="touch-log CSV with many users")
    p.add_argument("--scenario", choices=("short_term", "inter_session", "long_term"),
                   default="short_term")
    p.add_argument("--output-dir", help="report directory (default eval_<scenario>)")
    p.add_argument("--windows", type=_int_tuple, default=DEFAULT_WINDOWS,
                   metavar="W,W,...", help="fusion window sweep")
    p.add_argument("--stroke-types", type=_direction_tuple,
                   default=(Direction.HORIZONTAL, Direction.VERTICAL),
                   metavar="TYPE,TYPE", help="stroke types to evaluate")
    p.add_argument("--disjoint", action="store_true")
    _add_model_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="dataset CSV (default synthetic.csv)")
    p.add_argument("--days", type=_int_tuple, default=(0, 0, 7),
                   metavar="D,D,...", help="day index of each session")
    p.add_argument("--strokes-per-session", type=int, default=30)
    p.add_argument("--drift-per-day", type=float, default=0.0,
                   help="mean drift per day, in pooled stds")
    p.add_argument("--session-jitter", type=float, default=0.0,
                   help="per-session mean jitter, in pooled stds")
    p.add_argument("--stroke-types", type=_direction_tuple,
                   default=(Direction.HORIZONTAL, Direction.VERTICAL),
                   metavar="TYPE,TYPE")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inspect", help="pretty-print a stored template")
    p.add_argument("--template", required=True)
    p.add_argument("--json", action="store_true", help="dump the raw document instead")
    p.set_defaults(func=cmd_inspect)

    return parser


def cmd_enroll(args) -> int:
    strokes, dropped = _load_strokes(args.input, args.user)
    config = _config_from(args)
    template = enroll(args.user, strokes, args.stroke_type, config)
    out = Path(args.output) if args.output else _default_output(
        args, f"template_user{args.user}_{args.stroke_type.value}.json"
    )
    save_template(template, out)

    sel = template.selection
    print(f"enrolled user {args.user} ({args.stroke_type.value}) from {template.m_train} strokes"
          + (f", {dropped} runs dropped" if dropped else ""))
    print(f"selected N={sel.n_states} Q={sel.n_mixtures} (budget-constrained 5-fold CV)")
    print("  N  Q  mean val loglik")
    for cell in sel.table:
        status = "failed" if cell.failed else f"{cell.mean_loglik:.6f}"
        marker = " *" if (cell.n_states, cell.n_mixtures) == (sel.n_states, sel.n_mixtures) else ""
        print(f"  {cell.n_states}  {cell.n_mixtures}  {status}{marker}")
    print(f"l_avg={template.l_avg:.6f}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_score(args) -> int:
    template = load_template(args.template)
    strokes, _ = _load_strokes(args.input)
    wanted = [
        s for s in strokes
        if classify_stroke(s, args.direction_threshold) is template.stroke_type
    ]
    skipped = len(strokes) - len(wanted)
    if not wanted:
        raise DataError(
            f"no {template.stroke_type.value} strokes in {args.input} "
            f"({skipped} other strokes present)"
        )
    records = score_strokes(template, wanted)
    out = Path(args.output) if args.output else _default_output(args, "scores.csv")
    rows = [
        (stroke.user_id, template.user_id, template.stroke_type, idx, record)
        for idx, (stroke, record) in enumerate(zip(wanted, records))
    ]
    buffer = io.StringIO()
    write_scores_csv(rows, buffer)
    atomic_write_text(out, buffer.getvalue())

    mean_d_l = sum(r.d_l for r in records) / len(records)
    mean_s_c = sum(r.s_c for r in records) / len(records)
    print(f"scored {len(records)} {template.stroke_type.value} strokes"
          + (f" ({skipped} of other types skipped)" if skipped else ""))
    print(f"mean d_l={mean_d_l:.6f}  mean s_c={mean_s_c:.6f}")
    print(f"wrote {out}")

    if args.window > 1:
        try:
            fused = fuse_window([r.s_c for r in records], args.window, args.disjoint)
        except DataError as exc:
            print(f"warning: window {args.window} not fused: {exc}", file=sys.stderr)
        else:
            fused_out = out.with_suffix(".fused.csv")
            lines = ["window_start,fused_s_c"]
            step = args.window if args.disjoint else 1
            lines += [f"{j * step},{repr(v)}" for j, v in enumerate(fused)]
            atomic_write_text(fused_out, "\n".join(lines) + "\n")
            print(f"fused {len(fused)} windows of {args.window}; wrote {fused_out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    strokes, dropped = _load_strokes(args.input)
    report = run_experiment(
        strokes,
        args.scenario,
        windows=args.windows,
        config=_config_from(args),
        seed=args.seed,
        stroke_types=args.stroke_types,
        disjoint=args.disjoint,
    )
    out_dir = Path(args.output_dir) if args.output_dir else _default_output(
        args, f"eval_{args.scenario}"
    )
    report_path = write_report(report, out_dir)

    print(f"scenario {report.scenario.value}: {len(report.results)} user/window curves"
          + (f", {dropped} runs dropped at parse" if dropped else ""))
    if report.excluded_users:
        for user_id, reason in report.excluded_users:
            print(f"  excluded user {user_id}: {reason}")
    for stroke_type, per_window in report.median_eer.items():
        cells = "  ".join(f"w{w}={eer:.4f}" for w, eer in sorted(per_window.items()))
        print(f"median EER [{stroke_type}]: {cells}")
    print(f"wrote {report_path}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.users < 1:
        raise DataError("--users must be >= 1")
    plan = SessionPlan(days=args.days, strokes_per_session=args.strokes_per_session)
    profiles = [generate_profile(seed, args.separation) for seed in range(args.users)]
    events = sample_dataset(
        profiles, args.seed, plan=plan,
        drift_per_day=args.drift_per_day,
        session_jitter=args.session_jitter,
        stroke_types=args.stroke_types,
    )
    out = Path(args.output) if args.output else _default_output(args, "synthetic.csv")
    buffer = io.StringIO()
    write_touch_log(events, buffer)
    atomic_write_text(out, buffer.getvalue())
    print(f"wrote {len(events)} events for {args.users} users to {out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    template = load_template(args.template)
    if args.json:
        print(template_to_json(template), end="")
        return EXIT_OK
    model = template.model
    print(f"template-v1: user {template.user_id}, {template.stroke_type.value} strokes")
    print(f"  model: N={model.n_states} states, Q={model.n_mixtures} mixtures, "
          f"P={model.n_features} features")
    print(f"  trained on {template.m_train} strokes, likelihood mode {template.likelihood_mode}")
    print(f"  l_avg={template.l_avg:.6f}")
    loops = ", ".join(f"{model.trans[i, i]:.3f}" for i in range(model.n_states))
    print(f"  self-loops: {loops}")
    occupancy = template.train_kinematics.mean(axis=0)
    print("  mean training occupancy: "
          + ", ".join(f"{v:.3f}" for v in occupancy))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
