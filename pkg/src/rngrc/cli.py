"""Command-line front end.

Subcommands::

    rngrc gen-data  --config CFG --out DIR       write train/test CSV and binary cache
    rngrc run       --config CFG --out DIR       one result row per model
    rngrc sweep {units,horizon,lambda} --config CFG --out DIR [--values 10,20]
    rngrc demo-ring --out DIR                    ring coverage demo

Every invocation prints the effective configuration and writes it to
``DIR/effective-config.ini``. Exit codes: 0 ok, 2 usage or configuration
error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io as _io
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from rngrc import config as cfgmod
from rngrc import io as rio
from rngrc import kernels
from rngrc.evaluation import (apply_point, build_model, format_table, load_task_for_seed,
                              prepare_model, run_experiment)
from rngrc.ng import RingDataset, ring_demo
from rngrc.readout import SingularReadoutError

log = logging.getLogger("rngrc.cli")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4


class DataError(Exception):
    pass


class NumericalError(Exception):
    pass


def _csv_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _common(p, with_config=True):
    if with_config:
        p.add_argument("--config", help="INI experiment configuration")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seeds", type=int, help="number of seeded repeats")
    p.add_argument("--seed-base", type=int, help="first seed (default 0)")
    p.add_argument("--n", type=int, help="reservoir size")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the '# generated' line from CSV outputs")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _experiment_flags(p):
    p.add_argument("--th", type=int, help="prediction horizon t_h")
    p.add_argument("--variant", type=_csv_list,
                   help="comma-separated model kinds (ESN, RNG-IR, ..., or 'all')")
    p.add_argument("--lambda-i", type=float, help="initial NG neighbourhood range")
    p.add_argument("--lambda-f", type=float, help="final NG neighbourhood range")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--grid", dest="grid", action="store_true", default=None,
                   help="grid search before the final run")
    g.add_argument("--no-grid", dest="grid", action="store_false")
    p.add_argument("--jobs", type=int, help="worker processes")


def build_parser():
    ap = argparse.ArgumentParser(prog="rngrc", description="Reservoir computing experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a dataset and write CSV + cache")
    _common(p)
    _experiment_flags(p)
    p.add_argument("--dataset", help="dataset name (overrides [experiment] dataset)")

    p = sub.add_parser("run", help="run one experiment per selected model")
    _common(p)
    _experiment_flags(p)
    p.add_argument("--no-snapshot", action="store_true",
                   help="skip writing the first seed's reservoir snapshot")

    p = sub.add_parser("sweep", help="sweep n, t_h or the lambda schedule")
    _common(p)
    _experiment_flags(p)
    p.add_argument("kind", choices=("units", "horizon", "lambda"))
    p.add_argument("--values", type=_csv_list, help="comma-separated sweep values")

    p = sub.add_parser("demo-ring", help="neural gas on a ring, coverage and energy")
    _common(p)
    p.add_argument("--lambda-i", type=float, help="initial neighbourhood range")
    p.add_argument("--lambda-f", type=float, help="final neighbourhood range")
    p.add_argument("--iters", type=int, help="training iterations per seed")
    return ap


def _timestamp(args):
    if args.no_timestamp:
        return None
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    rio._atomic_write(path, text)


def _effective(args, cp):
    text = cfgmod.echo(cp)
    sys.stdout.write("# effective-config\n" + text)
    sys.stdout.flush()
    _write(os.path.join(args.out, "effective-config.ini"), text)


def _load(args, extra=None):
    cp = cfgmod.load_config(args.config) if getattr(args, "config", None) else cfgmod.new_config()
    flags = dict(seeds=args.seeds, seed_base=args.seed_base, n=args.n)
    if hasattr(args, "variant"):
        flags.update(t_h=args.th, models=args.variant, lambda_i=args.lambda_i,
                     lambda_f=args.lambda_f, grid=args.grid, jobs=args.jobs)
    flags.update(extra or {})
    return cfgmod.apply_overrides(cp, **flags)


def _check_model(spec):
    try:
        train, _ = load_task_for_seed(spec.dataset, spec.seeds[0])
    except (ValueError, RuntimeError) as exc:
        raise DataError(f"dataset {spec.dataset.name}: {exc}") from None
    try:
        build_model(spec.model, spec.n, train.X.shape[1], spec.seeds[0])
    except ValueError as exc:
        raise cfgmod.ConfigError(f"{spec.model.label}: {exc}") from None
    return train


def _execute(spec, jobs):
    try:
        return run_experiment(spec, jobs=jobs)
    except (RuntimeError, SingularReadoutError, FloatingPointError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"{spec.model.label} n={spec.n}: {exc}") from None


def _jobs(cp):
    return int(cfgmod.experiment_options(cp).get("jobs", 1))


def cmd_gen_data(args):
    cp = _load(args)
    if args.dataset:
        if not cp.has_section("experiment"):
            cp.add_section("experiment")
        cp.set("experiment", "dataset", args.dataset)
    spec = cfgmod.experiment_spec(cp, cfgmod.models(cp)[0])
    _effective(args, cp)
    name = spec.dataset.name
    seeds = spec.seeds if name == "narma" else spec.seeds[:1]
    for seed in seeds:
        try:
            train, test = load_task_for_seed(spec.dataset, seed)
        except (ValueError, RuntimeError) as exc:
            raise DataError(f"dataset {name}: {exc}") from None
        stem = f"{name}_seed{seed}" if name == "narma" else name
        for part, seq in (("train", train), ("test", test)):
            path = os.path.join(args.out, f"{stem}_{part}")
            _write(path + ".csv", rio.sequence_csv(seq))
            rio.write_sequence_cache(seq, path + ".bin")
            log.info("wrote %s.csv/.bin (%d rows)", path, len(seq))
    return EXIT_OK


def _result_files(args, results, stem):
    text = format_table(results, _timestamp(args))
    _write(os.path.join(args.out, f"{stem}.csv"), text)
    _write(os.path.join(args.out, f"{stem}.jsonl"),
           "".join(r.to_record() + "\n" for r in results))
    sys.stdout.write(text)


def cmd_run(args):
    cp = _load(args)
    specs = [cfgmod.experiment_spec(cp, kind) for kind in cfgmod.models(cp)]
    _effective(args, cp)
    trains = [_check_model(s) for s in specs]
    results = []
    for spec, train in zip(specs, trains):
        res = _execute(spec, _jobs(cp))
        results.append(res)
        log.info("%s n=%d: mean NRMSE %.6g over %d seeds", spec.model.label, spec.n,
                 res.mean, res.seed_count)
        if not args.no_snapshot:
            seed = spec.seeds[0]
            final = spec
            if res.best_grid_point:
                final = apply_point(spec, res.best_grid_point)
            model, _ = prepare_model(final, seed, train)
            path = os.path.join(args.out, "snapshots",
                                f"{spec.model.label}_n{spec.n}_seed{seed}.snap")
            os.makedirs(os.path.dirname(path), exist_ok=True)
            rio.save_snapshot(model, path)
    _result_files(args, results, "results")
    return EXIT_OK


def cmd_sweep(args):
    cp = _load(args, {"values": args.values})
    kind = args.kind
    _, values, regimes = cfgmod.sweep_options(cp)
    kinds = cfgmod.models(cp)
    if kind == "lambda":
        kinds = [k for k in kinds if k != "ESN"]
        if not kinds:
            raise cfgmod.ConfigError("a lambda sweep needs at least one RNG variant")
    if kind == "units" and args.n is not None:
        raise cfgmod.ConfigError("use --values for the unit counts of a units sweep")
    if not values:
        if kind == "lambda":
            values = [None]
        else:
            raise cfgmod.ConfigError("sweep needs values (--values or [sweep] values)")
    try:
        values = [None if v is None else int(v) for v in values]
    except (TypeError, ValueError):
        raise cfgmod.ConfigError(f"sweep values must be integers: {values}") from None

    plan = []
    for model in kinds:
        for regime in (regimes if kind == "lambda" else [None]):
            for v in values:
                n = v if kind in ("units", "lambda") else None
                t_h = v if kind == "horizon" else None
                spec = cfgmod.experiment_spec(cp, model, n=n, t_h=t_h)
                if regime is not None:
                    pre = dict(spec.model.pretrain, lambda_i=regime[0], lambda_f=regime[1])
                    spec = replace(spec, model=replace(spec.model, pretrain=pre))
                plan.append(spec)
    if kind == "horizon" and plan and plan[0].dataset.name == "narma":
        raise cfgmod.ConfigError("NARMA has no prediction horizon")
    _effective(args, cp)
    for spec in plan:
        _check_model(spec)
    results = []
    for spec in plan:
        res = _execute(spec, _jobs(cp))
        log.info("%s n=%d t_h=%s: mean NRMSE %.6g", spec.model.label, spec.n,
                 spec.dataset.t_h, res.mean)
        results.append(res)
    _result_files(args, results, f"sweep_{kind}")
    return EXIT_OK


RING_DEFAULTS = {"n": 100, "iters": 100000, "seeds": 10, "seed_base": 0, "lambda_i": 8.0,
                 "lambda_f": 0.1, "epsilon_i": 0.5, "epsilon_f": 0.005, "checkpoints": 10}


def cmd_demo_ring(args):
    cp = cfgmod.load_config(args.config) if args.config else cfgmod.new_config()
    if not cp.has_section("ring"):
        cp.add_section("ring")
    flags = {"n": args.n, "iters": args.iters, "seeds": args.seeds, "seed_base": args.seed_base,
             "lambda_i": args.lambda_i, "lambda_f": args.lambda_f}
    for key, value in RING_DEFAULTS.items():
        if flags.get(key) is not None:
            cp.set("ring", key, str(flags[key]))
        elif not cp.has_option("ring", key):
            cp.set("ring", key, str(value))
    opts = {k: cfgmod.parse_value(v) for k, v in cp.items("ring")}
    unknown = set(opts) - set(RING_DEFAULTS)
    if unknown:
        raise cfgmod.ConfigError(f"unknown [ring] keys {sorted(unknown)}")
    _effective(args, cp)
    buf = _io.StringIO()
    ts = _timestamp(args)
    if ts:
        buf.write(f"# generated {ts}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("seed", "iteration", "coverage", "energy"))
    ring = RingDataset()
    base = int(opts["seed_base"])
    try:
        for seed in range(base, base + int(opts["seeds"])):
            _, rows = ring_demo(int(opts["n"]), int(opts["iters"]), float(opts["lambda_i"]),
                                float(opts["lambda_f"]), float(opts["epsilon_i"]),
                                float(opts["epsilon_f"]), ring, seed, int(opts["checkpoints"]))
            for it, cov, energy in rows:
                w.writerow((seed, it, repr(float(cov)), repr(float(energy))))
    except (TypeError, ValueError) as exc:
        raise cfgmod.ConfigError(str(exc)) from None
    _write(os.path.join(args.out, "ring.csv"), buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


COMMANDS = {"gen-data": cmd_gen_data, "run": cmd_run, "sweep": cmd_sweep,
            "demo-ring": cmd_demo_ring}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    log.info("kernel backend: %s", kernels.BACKEND)
    try:
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](args)
    except cfgmod.ConfigError as exc:
        print(f"rngrc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, rio.FormatError, OSError) as exc:
        print(f"rngrc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"rngrc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
