"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Prints one row per kernel with the best-of-``repeat`` wall time for each
backend, the speedup, and the largest absolute difference between outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rngrc.kernels import get_backend
from rngrc.ng import Schedule
from rngrc.rng import RngVariant


def _best(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(quick):
    rng = np.random.default_rng(0)
    K = 2000 if quick else 10000
    n = 100 if quick else 300
    ng_iters = 5000 if quick else 50000
    x = rng.uniform(-1, 1, (K, 1))
    w_in0 = rng.uniform(-1, 1, (n, 1))
    w_rec0 = rng.uniform(0, 1, (n, n))
    mask = np.zeros(n, np.uint8)
    mask[: n // 4] = 1
    eps = Schedule(0.1, 0.001, K).values()
    lam = Schedule(50.0, 0.01, K).values()
    pts = rng.uniform(-1, 1, (ng_iters, 2))
    g0 = rng.uniform(-1, 1, (100, 2))
    ng_eps = Schedule(0.5, 0.005, ng_iters).values()
    ng_lam = Schedule(8.0, 0.1, ng_iters).values()

    def ng(k):
        w = g0.copy()
        k.ng_train(w, pts, ng_eps, ng_lam)
        return w

    def run(k):
        return k.rng_run(w_in0, w_rec0, mask, 3.0, 0.3, 0.3, 0.3, x, np.zeros(n))

    def pretrain(variant):
        def go(k):
            w_in, w_rec = w_in0.copy(), w_rec0.copy()
            k.rng_pretrain(w_in, w_rec, mask, 3.0, 0.3, 0.3, 0.3, int(variant), x, eps, lam,
                           np.zeros(n))
            return np.concatenate([w_in.ravel(), w_rec.ravel()])
        return go

    def mg(k):
        return k.mackey_glass(0.2, 0.1, 17.0, 10.0, 0.1, 1.2, K, 10000, 10)

    def lorenz(k):
        return k.lorenz(10.0, 28.0, 8.0 / 3.0, 0.01, (1.0, 1.0, 1.0), K, 1000, 2)

    return [(f"ng_train ({ng_iters} iters, 100 units)", ng),
            (f"rng_run (K={K}, n={n})", run),
            (f"rng_pretrain M-RNG-IRM (K={K}, n={n})", pretrain(RngVariant.M_RNG_IRM)),
            (f"rng_pretrain M-RNG-JM (K={K}, n={n})", pretrain(RngVariant.M_RNG_JM)),
            (f"mackey_glass ({K} samples)", mg),
            (f"lorenz ({K} samples)", lorenz)]


def main(argv=None):
    ap = argparse.ArgumentParser(description="compiled vs numpy kernel timings")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args(argv)
    fast, slow = get_backend("cython"), get_backend("python")
    print(f"{'kernel':44s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases(args.quick):
        tc, oc = _best(lambda: fn(fast), args.repeat)
        tp, op = _best(lambda: fn(slow), max(1, args.repeat // 3))
        diff = float(np.max(np.abs(np.asarray(oc) - np.asarray(op))))
        print(f"{name:44s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f} {diff:11.3g}")


if __name__ == "__main__":
    main()
