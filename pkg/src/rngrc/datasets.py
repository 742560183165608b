"""Benchmark sequences: NARMA-n, Mackey-Glass and Lorenz.

Every generator returns a :class:`LabeledSequence` whose ``meta`` dict holds
the generator name and all parameters needed to regenerate it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from rngrc import kernels

logger = logging.getLogger(__name__)


@dataclass
class LabeledSequence:
    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim == 1:
            self.X = self.X.reshape(-1, 1)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y must have the same length")

    def __len__(self):
        return self.y.shape[0]

    @property
    def columns(self):
        return list(self.meta.get("columns", [f"x{j}" for j in range(self.X.shape[1])] + ["y"]))


@dataclass(frozen=True)
class NarmaParams:
    order: int = 10
    alpha: float = 0.3
    beta: float = 0.05
    gamma: float = 1.5
    delta: float = 0.1
    seed: int = 0


@dataclass(frozen=True)
class MackeyGlassParams:
    a: float = 0.2
    b: float = 0.1
    tau: float = 17.0
    exponent: float = 10.0
    dt: float = 0.1
    stride: float = 1.0
    t_h: int = 20
    warmup: float = 1000.0
    x0: float = 1.2

    @property
    def chaotic(self):
        return self.tau > 16.8


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.01
    stride: float = 0.02
    t_h: int = 2
    warmup: float = 10.0
    x0: tuple = (1.0, 1.0, 1.0)


_DIVERGENCE = 10.0
_MAX_REGENERATIONS = 100


def _narma_target(x, p):
    n = p.order
    K = x.shape[0]
    y = np.zeros(K)
    for t in range(n, K):
        y[t] = (p.alpha * y[t - 1] + p.beta * y[t - 1] * y[t - n:t].sum()
                + p.gamma * x[t - n] * x[t - 1] + p.delta)
        if not abs(y[t]) <= _DIVERGENCE:
            return None
    return y


def gen_narma(p, length, inputs=None):
    """NARMA-``order`` system driven by uniform [0, 0.5] input (or ``inputs``).

    The target is zero for the first ``order`` steps. A diverging draw is
    replaced by the draw of the next seed.
    """
    if length <= p.order:
        raise ValueError(f"length must exceed the NARMA order ({p.order})")
    seed = p.seed
    regenerations = 0
    while True:
        if inputs is None:
            x = np.random.default_rng(seed).uniform(0.0, 0.5, length)
        else:
            x = np.asarray(inputs, dtype=np.float64).reshape(-1)[:length]
            if x.shape[0] != length:
                raise ValueError("forced input is shorter than length")
        y = _narma_target(x, p)
        if y is not None:
            break
        if inputs is not None:
            raise ValueError("NARMA target diverged for the forced input")
        regenerations += 1
        if regenerations > _MAX_REGENERATIONS:
            raise RuntimeError("NARMA diverged for every regenerated seed")
        logger.warning("NARMA diverged for seed %d, regenerating with seed %d", seed, seed + 1)
        seed += 1
    meta = {"generator": "narma", **asdict(p), "length": length,
            "seed_used": seed, "regenerations": regenerations,
            "columns": ["x", "y"]}
    return LabeledSequence(x.reshape(-1, 1), y, meta)


def _steps(span, dt, what):
    steps = span / dt
    k = int(round(steps))
    if k < 0 or not math.isclose(k, steps, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"{what} ({span}) must be a whole number of steps of dt={dt}")
    return k


def gen_mackey_glass(p, length):
    """Mackey-Glass series sampled every ``stride`` time units after ``warmup``.

    Input is ``x(t)``; the target is ``x(t + t_h)`` in samples.
    """
    if not p.dt > 0:
        raise ValueError("dt must be positive")
    if not p.tau > 0:
        raise ValueError("tau must be positive")
    if p.t_h < 0:
        raise ValueError("t_h must be non-negative")
    stride = _steps(p.stride, p.dt, "stride")
    if stride < 1:
        raise ValueError("stride must be at least one step")
    _steps(p.tau, p.dt, "tau")
    skip = _steps(p.warmup, p.dt, "warmup")
    series = kernels.mackey_glass(p.a, p.b, p.tau, p.exponent, p.dt, p.x0,
                                  length + p.t_h, skip, stride)
    meta = {"generator": "mackey_glass", **asdict(p), "length": length,
            "chaotic": p.chaotic, "columns": ["x", "y"]}
    return LabeledSequence(series[:length].reshape(-1, 1), series[p.t_h:p.t_h + length], meta)


def lorenz_trajectory(p, n_samples):
    if not p.dt > 0:
        raise ValueError("dt must be positive")
    stride = _steps(p.stride, p.dt, "stride")
    if stride < 1:
        raise ValueError("stride must be at least one step")
    skip = _steps(p.warmup, p.dt, "warmup")
    return kernels.lorenz(p.sigma, p.rho, p.beta, p.dt, tuple(float(c) for c in p.x0),
                          n_samples, skip, stride)


def gen_lorenz(p, length):
    """Lorenz trajectory as input; target ``sigma (x2 - x1)`` ``t_h`` samples ahead."""
    if p.t_h < 0:
        raise ValueError("t_h must be non-negative")
    traj = lorenz_trajectory(p, length + p.t_h)
    deriv = p.sigma * (traj[:, 1] - traj[:, 0])
    meta = {"generator": "lorenz", **asdict(p), "length": length,
            "columns": ["x1", "x2", "x3", "y"]}
    meta["x0"] = list(p.x0)
    return LabeledSequence(traj[:length], deriv[p.t_h:p.t_h + length], meta)


def _span(col):
    lo, hi = float(np.min(col)), float(np.max(col))
    return lo, hi - lo


def _forward(a, lo, span):
    # 2 (a - lo) / span - 1 hits -1 and 1 exactly at the extremes
    a = np.asarray(a, dtype=np.float64)
    if span == 0:
        return np.zeros_like(a)
    return 2.0 * (a - lo) / span - 1.0


def rescale_sequences(train, test):
    """Map every input column and the target affinely onto [-1, 1].

    Min and max are taken over train and test together; the same map is
    applied to both. Constant columns map to 0. The per-column minimum and
    span land in ``meta["rescale"]``.
    """
    if len(train) == 0 and len(test) == 0:
        raise ValueError("nothing to rescale")
    X = np.vstack([train.X, test.X])
    y = np.concatenate([train.y, test.y])
    x_maps = [_span(X[:, j]) for j in range(X.shape[1])]
    y_map = _span(y)
    for j, (_, span) in enumerate(x_maps):
        if span == 0:
            logger.warning("input column %d is constant; mapped to 0", j)
    if y_map[1] == 0:
        logger.warning("target is constant; mapped to 0")
    coeffs = {"x_min": [m[0] for m in x_maps], "x_span": [m[1] for m in x_maps],
              "y_min": y_map[0], "y_span": y_map[1]}

    def apply(seq):
        Xs = np.column_stack([_forward(seq.X[:, j], *x_maps[j]) for j in range(seq.X.shape[1])])
        return LabeledSequence(Xs.reshape(seq.X.shape), _forward(seq.y, *y_map),
                               dict(seq.meta, rescale=coeffs))

    return apply(train), apply(test)


def _backward(a, lo, span):
    if span == 0:
        return np.full_like(a, np.nan)
    return (a + 1.0) * span / 2.0 + lo


def inverse_rescale(seq):
    """Undo :func:`rescale_sequences` (constant columns come back as NaN)."""
    c = seq.meta["rescale"]
    X = np.column_stack([_backward(seq.X[:, j], lo, sp)
                         for j, (lo, sp) in enumerate(zip(c["x_min"], c["x_span"]))])
    y = _backward(seq.y, c["y_min"], c["y_span"])
    meta = {k: v for k, v in seq.meta.items() if k != "rescale"}
    return LabeledSequence(X.reshape(seq.X.shape), y, meta)


def split(seq, train_len=10000, test_len=2000):
    """Contiguous prefix of ``train_len`` and the following ``test_len`` steps."""
    if train_len < 1 or test_len < 0:
        raise ValueError("invalid split lengths")
    if len(seq) < train_len + test_len:
        raise ValueError(f"sequence of length {len(seq)} is shorter than {train_len}+{test_len}")
    end = train_len + test_len
    part = lambda a, b, name: LabeledSequence(seq.X[a:b], seq.y[a:b], dict(seq.meta, split=name))
    return part(0, train_len, "train"), part(train_len, end, "test")


GENERATORS = {"narma": (NarmaParams, gen_narma),
              "mackey_glass": (MackeyGlassParams, gen_mackey_glass),
              "lorenz": (LorenzParams, gen_lorenz)}


def make_params(name, **kwargs):
    """Build the parameter dataclass for generator ``name``, ignoring unknown keys."""
    if name not in GENERATORS:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(GENERATORS)}")
    cls = GENERATORS[name][0]
    known = set(cls.__dataclass_fields__)
    return cls(**{k: v for k, v in kwargs.items() if k in known})


def load_task(name, train_len=10000, test_len=2000, **kwargs):
    """Generate, split and rescale one benchmark task."""
    params = make_params(name, **kwargs)
    seq = GENERATORS[name][1](params, train_len + test_len)
    return rescale_sequences(*split(seq, train_len, test_len))
