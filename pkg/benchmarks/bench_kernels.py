"""Compare the compiled and pure-NumPy kernel backends.

Times the four hot kernels on one synthetic stroke and a full Baum-Welch
fit on a batch of sequences, once per available backend, and prints the
per-call medians with the compiled-over-python speedup. Run from the
repository root after installing the package:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --length 120 --states 8 --mixtures 3
"""

import argparse
import math
import time

import numpy as np

from strokehmm import kernels
from strokehmm.hmm import Hmm, baum_welch, init_model


def log_or_ninf(p):
    out = np.full(p.shape, -np.inf)
    np.log(p, out=out, where=p > 0)
    return out


def random_model(rng, n_states, n_mixtures, n_features):
    prior = rng.uniform(0.1, 1.0, n_states)
    prior /= prior.sum()
    trans = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        pair = rng.uniform(0.1, 1.0, 2)
        trans[i, i], trans[i, i + 1] = pair / pair.sum()
    trans[-1, -1] = 1.0
    weights = rng.uniform(0.2, 1.0, (n_states, n_mixtures))
    weights /= weights.sum(axis=1, keepdims=True)
    means = rng.normal(0.0, 2.0, (n_states, n_mixtures, n_features))
    variances = rng.uniform(0.05, 1.5, (n_states, n_mixtures, n_features))
    model = Hmm(prior, trans, weights, means, variances)
    model.validate()
    return model


def sample_from(model, length, rng):
    states = np.empty(length, dtype=np.int64)
    states[0] = rng.choice(model.n_states, p=model.prior)
    for t in range(1, length):
        states[t] = rng.choice(model.n_states, p=model.trans[states[t - 1]])
    obs = np.empty((length, model.n_features))
    for t, i in enumerate(states):
        k = rng.choice(model.n_mixtures, p=model.mix_weights[i])
        obs[t] = rng.normal(model.means[i, k], np.sqrt(model.variances[i, k]))
    return obs


def best_time(fn, repeats, number):
    """Per-call seconds, best of `repeats` batches of `number` calls."""
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def bench_backend(name, model, obs, seqs, args):
    kernels.use(name)
    log_prior = log_or_ninf(model.prior)
    log_trans = log_or_ninf(model.trans)
    log_w = log_or_ninf(model.mix_weights)
    log_b, _ = kernels.mixture_log_pdf(obs, model.means, model.variances, log_w)

    rows = {}
    rows["mixture_log_pdf"] = best_time(
        lambda: kernels.mixture_log_pdf(obs, model.means, model.variances, log_w),
        args.repeats, args.number,
    )
    rows["forward"] = best_time(
        lambda: kernels.forward(log_prior, log_trans, log_b),
        args.repeats, args.number,
    )
    rows["backward"] = best_time(
        lambda: kernels.backward(log_trans, log_b), args.repeats, args.number
    )
    rows["viterbi"] = best_time(
        lambda: kernels.viterbi(log_prior, log_trans, log_b),
        args.repeats, args.number,
    )

    start_model = init_model(model.n_states, model.n_mixtures, seqs, args.seed)
    rows["baum_welch fit"] = best_time(
        lambda: baum_welch(start_model, seqs, max_iters=args.em_iters, rel_tol=1e-12),
        max(1, args.repeats // 2), 1,
    )
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--states", type=int, default=4)
    parser.add_argument("--mixtures", type=int, default=2)
    parser.add_argument("--features", type=int, default=5)
    parser.add_argument("--length", type=int, default=60, help="frames per sequence")
    parser.add_argument("--seqs", type=int, default=40, help="sequences in the EM fit")
    parser.add_argument("--em-iters", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--number", type=int, default=200, help="calls per batch")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    model = random_model(rng, args.states, args.mixtures, args.features)
    obs = sample_from(model, args.length, rng)
    seqs = [
        sample_from(model, int(rng.integers(args.length // 2, args.length + 1)), rng)
        for _ in range(args.seqs)
    ]

    backends = kernels.available_backends()
    print(
        f"N={args.states} Q={args.mixtures} P={args.features} T={args.length}, "
        f"EM on {args.seqs} seqs x {args.em_iters} iters; backends: {', '.join(backends)}"
    )
    if "cython" not in backends:
        print("compiled extension not built; timing the python backend only")

    default = kernels.active_backend()
    results = {}
    try:
        for name in backends:
            results[name] = bench_backend(name, model, obs, seqs, args)
    finally:
        kernels.use(default)

    names = list(results[backends[0]])
    width = max(len(n) for n in names)
    header = f"{'kernel':<{width}}" + "".join(f"  {b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    for kernel_name in names:
        row = f"{kernel_name:<{width}}"
        for b in backends:
            row += f"  {results[b][kernel_name] * 1e6:>10.1f}us"
        if len(backends) == 2:
            ratio = results["python"][kernel_name] / results["cython"][kernel_name]
            row += f"  {ratio:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
