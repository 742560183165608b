"""Write the per-figure experiment configs in ``configs/`` from the tuned presets.

Usage::

    python3 tools/make_configs.py [--presets configs/presets.ini] [--out configs]

Each figure config is a plain CLI config: ``rngrc sweep units --config
configs/lorenz.ini`` reruns that figure. Tuned parameters land in
``[model.KIND n=.. t_h=..]`` sections so every sweep point picks up its own
preset; an unqualified ``[model.KIND]`` holds the first preset as a fallback.
"""

from __future__ import annotations

import argparse
import configparser
import os

PROTOCOL = {"seeds": "10", "washout": "100", "train_len": "10000", "test_len": "2000",
            "bias": "true"}
META_KEYS = ("dataset", "n", "model", "validation_nrmse", "t_h")

# file -> (dataset, [dataset], models, sweep, list of (preset case, qualifiers))
FIGURES = {
    "narma_n400.ini": ("narma", {}, "all", None, [("narma.n400", "")]),
    "mg_horizon.ini": (
        "mackey_glass", {"t_h": "80"}, "ESN, M-RNG-IR, M-RNG-J, M-RNG-IRM, M-RNG-JM",
        ("horizon", "10, 20, 40, 80"),
        [(f"mackey_glass.th{t}.n300", f"t_h={t}") for t in (10, 20, 40, 80)]),
    "mg_small_n.ini": (
        "mackey_glass", {"t_h": "20"}, "ESN, M-RNG-IRM", ("units", "10, 20, 40, 80"),
        [(f"mackey_glass.th20.n{n}", f"n={n}") for n in (10, 20, 40, 80)]),
    "lorenz.ini": (
        "lorenz", {"t_h": "2"}, "all", ("units", "100, 200, 300, 400"),
        [(f"lorenz.th2.n{n}", f"n={n}") for n in (100, 200, 300, 400)]),
    "mg_lambda.ini": (
        "mackey_glass", {"t_h": "20"}, "M-RNG-IRM", ("lambda", "100, 400"),
        [(f"mackey_glass.th20.n{n}", f"n={n}") for n in (100, 400)]),
}


def presets_for(presets, case):
    """``{kind: params}`` for every preset section of one case."""
    out = {}
    for name in presets.sections():
        if name.startswith(case + "."):
            sec = presets[name]
            out[sec["model"]] = {k: v for k, v in sec.items() if k not in META_KEYS}
    return out


def figure_config(presets, dataset, ds_params, models, sweep, cases):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    n = presets[next(s for s in presets.sections() if s.startswith(cases[0][0] + "."))]["n"]
    cp["experiment"] = {"dataset": dataset, "models": models, "n": n, **PROTOCOL}
    if ds_params:
        cp["dataset"] = ds_params
    if sweep:
        cp["sweep"] = {"kind": sweep[0], "values": sweep[1]}
    fallback = {}
    for case, qual in cases:
        for kind, params in presets_for(presets, case).items():
            fallback.setdefault(kind, params)
            if qual:
                cp[f"model.{kind} {qual}"] = params
    for kind, params in fallback.items():
        cp[f"model.{kind}"] = params
    return cp


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--presets", default="configs/presets.ini")
    ap.add_argument("--out", default="configs")
    args = ap.parse_args(argv)
    presets = configparser.ConfigParser(interpolation=None)
    presets.optionxform = str
    if not presets.read(args.presets):
        ap.error(f"cannot read {args.presets}")
    for fname, (dataset, ds, models, sweep, cases) in FIGURES.items():
        cp = figure_config(presets, dataset, dict(ds), models, sweep, cases)
        with open(os.path.join(args.out, fname), "w") as fh:
            fh.write(f"# generated by tools/make_configs.py from {args.presets}\n")
            cp.write(fh)
    with open(os.path.join(args.out, "ring.ini"), "w") as fh:
        fh.write("[ring]\nn = 100\niters = 100000\nseeds = 10\nlambda_i = 8.0\n"
                 "lambda_f = 0.1\nepsilon_i = 0.5\nepsilon_f = 0.005\ncheckpoints = 10\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
