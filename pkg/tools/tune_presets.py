"""Tune the experiment presets in ``configs/presets.ini``.

A full grid over every model and case does not fit on one core, so each
case runs a cyclic coordinate search over the grid values: one key at a
time is swept with the others held, for up to ``--rounds`` passes. Points
are scored by mean validation NRMSE (training tail held out) over the
first ``--seeds`` seeds, so test data never influences the presets.

Usage::

    python3 tools/tune_presets.py --out configs/presets.ini [--only CASE ...]
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import sys
import time

from rngrc.evaluation import (DatasetSpec, ExperimentSpec, ModelSpec, _RECOVERABLE,
                              apply_point, run_repeats)
from rngrc.rng import RngVariant, SEPARATE

ESN_GRID = {
    "radius": (0.7, 0.8, 0.9, 0.95, 0.99, 1.1),
    "sparsity": (0.0, 0.5, 0.9),
    "gamma": (0.1, 0.3, 0.5, 1.0),
    "input_scaling": (0.1, 0.5, 1.0),
    "input_bias": (0.0, 0.5, 1.0),
    "mu": (1e-8, 1e-6, 1e-4, 1e-2),
}
ESN_START = {"radius": 0.9, "sparsity": 0.0, "gamma": 1.0, "input_scaling": 1.0,
             "input_bias": 0.0, "mu": 1e-6}

RNG_GRID = {
    "alpha": (0.1, 0.3, 1.0, 3.0, 10.0, 30.0),
    "beta": (0.01, 0.03, 0.1, 0.3, 1.0, 3.0),
    "beta_masked": (0.01, 0.03, 0.1, 0.3, 1.0, 3.0),
    "gamma": (0.1, 0.3, 0.5, 1.0),
    "eta": (0.25, 0.5, 0.75),
    "mu": (1e-8, 1e-6, 1e-4, 1e-2),
}
RNG_START = {"alpha": 3.0, "beta": 0.3, "beta_masked": 0.3, "gamma": 0.3, "eta": 0.25,
             "mu": 1e-6}

ALL_VARIANTS = [v.label for v in RngVariant]
MASKED_VARIANTS = [v.label for v in RngVariant if v.masked]

# section name -> (dataset, params, n, models)
CASES = {
    "narma.n400": ("narma", {}, 400, ["ESN"] + ALL_VARIANTS),
    "mackey_glass.th10.n300": ("mackey_glass", {"t_h": 10}, 300, ["ESN"]),
    "mackey_glass.th20.n300": ("mackey_glass", {"t_h": 20}, 300, ["ESN"]),
    "mackey_glass.th40.n300": ("mackey_glass", {"t_h": 40}, 300, ["ESN"]),
    "mackey_glass.th80.n300": ("mackey_glass", {"t_h": 80}, 300, ["ESN"] + MASKED_VARIANTS),
    "mackey_glass.th20.n10": ("mackey_glass", {"t_h": 20}, 10, ["ESN", "M-RNG-IRM"]),
    "mackey_glass.th20.n20": ("mackey_glass", {"t_h": 20}, 20, ["ESN", "M-RNG-IRM"]),
    "mackey_glass.th20.n40": ("mackey_glass", {"t_h": 20}, 40, ["ESN", "M-RNG-IRM"]),
    "mackey_glass.th20.n80": ("mackey_glass", {"t_h": 20}, 80, ["ESN", "M-RNG-IRM"]),
    "mackey_glass.th20.n100": ("mackey_glass", {"t_h": 20}, 100, ["M-RNG-IRM"]),
    "mackey_glass.th20.n400": ("mackey_glass", {"t_h": 20}, 400, ["M-RNG-IRM"]),
    "lorenz.th2.n100": ("lorenz", {"t_h": 2}, 100, ["ESN"] + ALL_VARIANTS),
    "lorenz.th2.n200": ("lorenz", {"t_h": 2}, 200, ["ESN"] + ALL_VARIANTS),
    "lorenz.th2.n300": ("lorenz", {"t_h": 2}, 300, ["ESN"] + ALL_VARIANTS),
    "lorenz.th2.n400": ("lorenz", {"t_h": 2}, 400, ["ESN"] + ALL_VARIANTS),
}

log = logging.getLogger("tune")


def search_keys(kind):
    if kind == "ESN":
        return list(ESN_GRID)
    v = RngVariant.parse(kind)
    keys = ["alpha", "beta", "gamma"]
    if v.masked:
        keys.append("eta")
        if v & SEPARATE:
            keys.append("beta_masked")
    return keys + ["mu"]


def coordinate_search(base, kind, seeds, rounds):
    grid = ESN_GRID if kind == "ESN" else RNG_GRID
    start = ESN_START if kind == "ESN" else RNG_START
    keys = search_keys(kind)
    point = {k: start[k] for k in keys}
    cache = {}

    def score(p):
        key = json.dumps(p, sort_keys=True)
        if key not in cache:
            try:
                cache[key] = run_repeats(apply_point(base, p), seeds, validation=True).mean
            except _RECOVERABLE:
                cache[key] = math.inf
        return cache[key]

    best = score(point)
    for _ in range(rounds):
        moved = False
        for k in keys:
            for val in grid[k]:
                cand = dict(point, **{k: val})
                s = score(cand)
                if s < best:
                    best, point, moved = s, cand, True
        if not moved:
            break
    return point, best, len(cache)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="configs/presets.ini")
    ap.add_argument("--seeds", type=int, default=2)
    ap.add_argument("--rounds", type=int, default=2)
    ap.add_argument("--only", nargs="*", help="case names to (re)tune")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    logging.getLogger("rngrc").setLevel(logging.ERROR)

    out = configparser.ConfigParser()
    out.read(args.out)
    seeds = tuple(range(args.seeds))
    for case, (name, params, n, models) in CASES.items():
        if args.only and case not in args.only:
            continue
        for kind in models:
            section = f"{case}.{kind}"
            t0 = time.time()
            base = ExperimentSpec(dataset=DatasetSpec(name, params=dict(params)),
                                  model=ModelSpec(kind), n=n, seeds=seeds, bias=True)
            point, best, evals = coordinate_search(base, kind, seeds, args.rounds)
            out[section] = {"dataset": name, "n": str(n), "model": kind,
                            "validation_nrmse": repr(best),
                            **{k: repr(v) for k, v in params.items()},
                            **{k: repr(v) for k, v in point.items()}}
            log.info("%s -> %.4g %s (%d evals, %.0fs)", section, best, point, evals,
                     time.time() - t0)
            with open(args.out, "w") as fh:
                out.write(fh)
    return 0


if __name__ == "__main__":
    sys.exit(main())
