"""Experiment protocol: NRMSE, seeded repeats, grid search and sweeps.

One repeat for one seed runs:

1. generate (or reuse) the task, split 10000/2000 and rescale to [-1, 1];
2. initialize the reservoir and, for RNG variants, pre-train on the training
   inputs;
3. harvest training states from a zero state and fit the ridge readout on
   the rows after the washout;
4. reset, replay the last ``replay`` training inputs, then feed the test span
   and score NRMSE after the washout.
"""

from __future__ import annotations

import csv
import functools
import io
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from rngrc import datasets
from rngrc.esn import EsnParams, EsnReservoir, esn_init, esn_run
from rngrc.readout import StateTargetPair, ridge_fit, ridge_predict
from rngrc.rng import RngParams, RngTrainConfig, RngVariant, rng_init, rng_pretrain, rng_run

logger = logging.getLogger(__name__)

ESN = "ESN"
ESN_KEYS = ("radius", "sparsity", "gamma", "input_scaling", "input_bias")
RNG_KEYS = ("alpha", "beta", "beta_masked", "gamma", "eta")
PRETRAIN_KEYS = ("epsilon_i", "epsilon_f", "lambda_i", "lambda_f", "passes")
TABLE_HEADER = ("dataset", "variant", "n", "t_h", "lambda_i", "lambda_f",
                "seed_count", "nrmse_mean", "nrmse_var", "best_grid_point")


class UndefinedNrmseError(ValueError):
    """The target has zero variance after the washout."""


def nrmse(predicted, actual, washout=0):
    """``sqrt(sum (p - y)^2 / (K' var(y)))`` over the K' post-washout steps,
    with the population variance of the post-washout targets.
    """
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    y = np.asarray(actual, dtype=np.float64).reshape(-1)
    if p.shape != y.shape:
        raise ValueError("predicted and actual differ in length")
    if not 0 <= washout < y.shape[0]:
        raise ValueError("washout must lie in [0, K)")
    p, y = p[washout:], y[washout:]
    var = float(np.var(y))
    if var == 0.0:
        raise UndefinedNrmseError("NRMSE is undefined for a constant target")
    return math.sqrt(float(np.sum((p - y) ** 2)) / (y.shape[0] * var))


@dataclass
class DatasetSpec:
    name: str = "narma"
    train_len: int = 10000
    test_len: int = 2000
    params: dict = field(default_factory=dict)

    @property
    def t_h(self):
        return self.params.get("t_h") if self.name != "narma" else None


@dataclass
class ModelSpec:
    """``kind`` is ``"ESN"`` or an RNG variant label such as ``"M-RNG-IRM"``."""

    kind: str = ESN
    params: dict = field(default_factory=dict)
    pretrain: dict = field(default_factory=dict)

    @property
    def is_esn(self):
        return self.kind.upper() == ESN

    @property
    def variant(self):
        return None if self.is_esn else RngVariant.parse(self.kind)

    @property
    def label(self):
        return ESN if self.is_esn else self.variant.label


@dataclass
class ExperimentSpec:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    n: int = 100
    washout: int = 100
    seeds: tuple = tuple(range(50))
    mu: float = 1e-6
    bias: bool = False
    washout_fit: bool = True
    replay: int = 100
    grid: dict = field(default_factory=dict)
    grid_seeds: int = 5
    validation_len: int = 2000

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not 0 <= self.washout < self.dataset.test_len:
            raise ValueError("washout must be shorter than the test span")

    def to_dict(self):
        return asdict(self)


@dataclass
class RunResult:
    nrmse: dict
    mean: float
    var: float
    dataset: str = ""
    variant: str = ""
    n: int = 0
    t_h: object = None
    lambda_i: object = None
    lambda_f: object = None
    best_grid_point: object = None
    failures: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def seed_count(self):
        return len(self.nrmse)

    @property
    def se(self):
        """Standard error of the mean across seeds."""
        vals = np.array(list(self.nrmse.values()))
        if vals.size < 2:
            return 0.0
        return float(np.std(vals, ddof=1) / math.sqrt(vals.size))

    def interval(self, k=2.0):
        return self.mean - k * self.se, self.mean + k * self.se

    def to_record(self):
        """Canonical JSON text; identical specs give identical records."""
        rec = asdict(self)
        rec["nrmse"] = {str(k): v for k, v in sorted(self.nrmse.items())}
        rec["failures"] = {str(k): v for k, v in sorted(self.failures.items())}
        return json.dumps(rec, sort_keys=True, default=_jsonable)

    def table_row(self):
        def blank(v):
            return "" if v is None else v
        grid = "" if self.best_grid_point is None else json.dumps(
            self.best_grid_point, sort_keys=True, separators=(",", ":"))
        return (self.dataset, self.variant, self.n, blank(self.t_h), blank(self.lambda_i),
                blank(self.lambda_f), self.seed_count, repr(self.mean), repr(self.var), grid)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _freeze(d):
    return tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in d.items()))


@functools.lru_cache(maxsize=16)
def _cached_task(name, train_len, test_len, frozen):
    return datasets.load_task(name, train_len, test_len, **dict(frozen))


def load_task_for_seed(ds, seed):
    """Train/test pair for one repeat. Only NARMA depends on the seed."""
    params = dict(ds.params)
    if ds.name == "narma":
        params["seed"] = _substream(seed, 0)
        return datasets.load_task(ds.name, ds.train_len, ds.test_len, **params)
    return _cached_task(ds.name, ds.train_len, ds.test_len, _freeze(params))


def _substream(seed, tag):
    return int(np.random.SeedSequence([seed, tag]).generate_state(1)[0])


def build_model(model, n, d, seed):
    if model.is_esn:
        known = {k: v for k, v in model.params.items() if k in ESN_KEYS}
        return esn_init(EsnParams(n=n, d=d, **known), _substream(seed, 1))
    unknown = set(model.params) - set(RNG_KEYS)
    if unknown:
        raise ValueError(f"unsupported RNG parameters {sorted(unknown)}; RNG input scaling is fixed")
    return rng_init(n, d, RngParams(**model.params), model.variant, _substream(seed, 1))


def _states(model, inputs):
    if isinstance(model, EsnReservoir):
        return esn_run(model, inputs)
    return rng_run(model, inputs)


def prepare_model(spec, seed, train):
    """Initialized (and, for RNG, pre-trained) reservoir plus reservoir info."""
    model = build_model(spec.model, spec.n, train.X.shape[1], seed)
    info = {}
    if spec.model.is_esn:
        info["radius_scaled"] = model.meta["radius_scaled"]
        info["radius_sparse"] = model.meta["radius_sparse"]
    else:
        rng_pretrain(model, train.X, RngTrainConfig(**spec.model.pretrain))
        info["masked"] = int(model.mask.sum())
    return model, info


def evaluate_split(spec, seed, train, test):
    """One repeat on an explicit train/test pair; returns (nrmse, info)."""
    model, info = prepare_model(spec, seed, train)
    V = _states(model, train.X)
    if not np.all(np.isfinite(V)):
        raise FloatingPointError("non-finite reservoir states")
    washout = spec.washout if spec.washout_fit else 0
    readout = ridge_fit(StateTargetPair(V, train.y, min(washout, V.shape[0] - 1)),
                        spec.mu, spec.bias)
    replay = train.X[train.X.shape[0] - min(spec.replay, train.X.shape[0]):]
    V_test = _states(model, np.vstack([replay, test.X]))[replay.shape[0]:]
    pred = ridge_predict(readout, V_test)
    score = nrmse(pred, test.y, spec.washout)
    info["w_out"] = readout.w_out.tolist()
    return score, info


_RECOVERABLE = (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError)


def _one_seed(args):
    spec, seed, validation = args
    try:
        train, test = load_task_for_seed(spec.dataset, seed)
        if validation:
            cut = train.X.shape[0] - spec.validation_len
            if cut <= spec.washout:
                raise ValueError("training span too short for validation holdout")
            test = datasets.LabeledSequence(train.X[cut:], train.y[cut:], train.meta)
            train = datasets.LabeledSequence(train.X[:cut], train.y[:cut], train.meta)
        score, info = evaluate_split(spec, seed, train, test)
        if not math.isfinite(score):
            raise FloatingPointError("non-finite NRMSE")
        return seed, score, info, None
    except _RECOVERABLE as exc:
        logger.warning("seed %d failed: %s", seed, exc)
        return seed, None, None, f"{type(exc).__name__}: {exc}"


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _aggregate(spec, outcomes, best=None):
    outcomes = sorted(outcomes, key=lambda o: o[0])
    scores = {seed: s for seed, s, _, _ in outcomes if s is not None}
    failures = {seed: err for seed, _, _, err in outcomes if err is not None}
    if not scores:
        raise RuntimeError(f"all {len(outcomes)} seeds failed: {next(iter(failures.values()))}")
    vals = np.array([scores[k] for k in sorted(scores)])
    mean = float(np.mean(vals))
    var = float(np.mean((vals - mean) ** 2))
    infos = [info for _, s, info, _ in outcomes if s is not None]
    meta = {}
    for key in ("radius_scaled", "radius_sparse", "masked"):
        got = [i[key] for i in infos if key in i]
        if got:
            meta[key + "_mean"] = float(np.mean(got))
    meta["w_out"] = {str(seed): info["w_out"] for seed, s, info, _ in outcomes if s is not None}
    lam_i = lam_f = None
    if not spec.model.is_esn:
        cfg = RngTrainConfig(**spec.model.pretrain)
        lam_i, lam_f = cfg.lambda_i, cfg.lambda_f
    return RunResult(scores, mean, var, spec.dataset.name, spec.model.label, spec.n,
                     spec.dataset.t_h, lam_i, lam_f, best, failures, meta)


def run_repeats(spec, seeds=None, validation=False, jobs=1):
    """Run ``spec`` for each seed without grid search."""
    seeds = spec.seeds if seeds is None else tuple(seeds)
    return _aggregate(spec, _map(_one_seed, [(spec, s, validation) for s in seeds], jobs))


def apply_point(spec, point):
    """Copy of ``spec`` with grid values substituted (``mu``, pretrain or model keys)."""
    model_params = dict(spec.model.params)
    pretrain = dict(spec.model.pretrain)
    top = {}
    for key, value in point.items():
        if key in ("mu", "bias"):
            top[key] = value
        elif key in PRETRAIN_KEYS:
            pretrain[key] = value
        elif key in (ESN_KEYS if spec.model.is_esn else RNG_KEYS):
            model_params[key] = value
        else:
            raise ValueError(f"grid key {key!r} does not apply to {spec.model.label}")
    model = replace(spec.model, params=model_params, pretrain=pretrain)
    return replace(spec, model=model, grid={}, **top)


def grid_points(grid):
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def grid_search(spec, jobs=1):
    """Pick the grid point with the lowest mean validation NRMSE.

    Validation holds out the last ``validation_len`` training steps and uses the
    first ``grid_seeds`` seeds. Points whose every seed fails score ``inf``.
    Returns ``(best_point, {point_json: validation RunResult or None})``.
    """
    if not spec.grid:
        raise ValueError("grid search needs a non-empty grid")
    if not spec.model.is_esn and "input_scaling" in spec.grid:
        raise ValueError("RNG input scaling is fixed at 1.0 and cannot be searched")
    seeds = spec.seeds[:spec.grid_seeds]
    best, best_score, table = None, math.inf, {}
    for point in grid_points(spec.grid):
        key = json.dumps(point, sort_keys=True)
        try:
            res = run_repeats(apply_point(spec, point), seeds, validation=True, jobs=jobs)
            score = res.mean
        except _RECOVERABLE as exc:
            logger.info("grid point %s rejected: %s", key, exc)
            res, score = None, math.inf
        table[key] = res
        if score < best_score:
            best, best_score = point, score
    if best is None:
        raise RuntimeError("every grid point failed validation")
    return best, table


def run_experiment(spec, jobs=1):
    """Full protocol over ``spec.seeds``; grid search first if ``spec.grid`` is set."""
    if spec.grid:
        best, _ = grid_search(spec, jobs)
        result = run_repeats(apply_point(spec, best), jobs=jobs)
        result.best_grid_point = best
        return result
    return run_repeats(spec, jobs=jobs)


def sweep_units(spec, n_values, jobs=1):
    if not n_values:
        raise ValueError("empty sweep")
    return [run_experiment(replace(spec, n=int(n)), jobs) for n in n_values]


def sweep_horizon(spec, t_h_values, jobs=1):
    if not t_h_values:
        raise ValueError("empty sweep")
    if spec.dataset.name == "narma":
        raise ValueError("NARMA has no prediction horizon")
    return [run_experiment(replace(spec, dataset=replace(
        spec.dataset, params=dict(spec.dataset.params, t_h=int(t)))), jobs)
        for t in t_h_values]


LAMBDA_REGIMES = ((50.0, 0.01), (1.0, 1.0), (0.0, 0.0))


def sweep_lambda(spec, regimes=LAMBDA_REGIMES, n_values=None, jobs=1):
    """RNG runs under each ``(lambda_i, lambda_f)`` regime, optionally per ``n``."""
    if spec.model.is_esn:
        raise ValueError("lambda sweeps apply to RNG variants only")
    if not regimes:
        raise ValueError("empty sweep")
    rows = []
    for lam_i, lam_f in regimes:
        pre = dict(spec.model.pretrain, lambda_i=float(lam_i), lambda_f=float(lam_f))
        s = replace(spec, model=replace(spec.model, pretrain=pre))
        rows.extend(sweep_units(s, n_values or [spec.n], jobs))
    return rows


def format_table(results, timestamp=None):
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {timestamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for r in results:
        w.writerow(r.table_row())
    return buf.getvalue()
