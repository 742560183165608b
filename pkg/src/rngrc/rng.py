"""Recursive Neural Gas reservoirs.

Each unit carries an input reference vector ``w_in[i]`` and a recurrent
reference vector ``w_rec[i]``. Its activation is a Gaussian RBF of the
distances to the current input and the previous state, followed by leaky
integration. A fraction of units can be masked from the input.

The six variants differ only in how unsupervised pre-training ranks and
moves the reference vectors:

========== ===================== =============================================
variant     unmasked units        masked units
========== ===================== =============================================
RNG_IR      separate in/rec NG    (none)
RNG_J       joint-space NG        (none)
M_RNG_IR    separate in/rec NG    share the rec-space ranking, ``beta_m = beta``
M_RNG_J     joint-space NG        share the joint ranking with no input block
M_RNG_IRM   separate in/rec NG    own NG in rec space, step ``sqrt(beta_m)``
M_RNG_JM    joint-space NG        own NG in rec space, step ``sqrt(beta_m)``
========== ===================== =============================================
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from rngrc import kernels
from rngrc.ng import Schedule

JOINT = 1
MASKED = 2
SEPARATE = 4


class RngVariant(enum.IntEnum):
    RNG_IR = 0
    RNG_J = JOINT
    M_RNG_IR = MASKED
    M_RNG_J = MASKED | JOINT
    M_RNG_IRM = MASKED | SEPARATE
    M_RNG_JM = MASKED | SEPARATE | JOINT

    @property
    def masked(self):
        return bool(self & MASKED)

    @property
    def joint(self):
        return bool(self & JOINT)

    @property
    def label(self):
        return self.name.replace("_", "-")

    @classmethod
    def parse(cls, text):
        key = str(text).strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown RNG variant {text!r}") from None


@dataclass(frozen=True)
class RngParams:
    """RBF precisions, leak rate and masked fraction."""

    alpha: float = 10.0
    beta: float = 1.0
    beta_masked: float = 1.0
    gamma: float = 1.0
    eta: float = 0.0

    def validate(self):
        if not (self.alpha > 0 and self.beta > 0 and self.beta_masked > 0):
            raise ValueError("alpha, beta and beta_masked must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 <= self.eta <= 1:
            raise ValueError("eta must lie in [0, 1]")


@dataclass(frozen=True)
class RngTrainConfig:
    """Pre-training schedules; ``passes`` full sweeps over the input sequence."""

    epsilon_i: float = 0.1
    epsilon_f: float = 0.001
    lambda_i: float = 50.0
    lambda_f: float = 0.01
    passes: int = 1

    def schedules(self, total_iters):
        return (Schedule(self.epsilon_i, self.epsilon_f, total_iters),
                Schedule(self.lambda_i, self.lambda_f, total_iters))


@dataclass
class RngReservoir:
    w_in: np.ndarray
    w_rec: np.ndarray
    mask: np.ndarray
    params: RngParams
    variant: RngVariant
    state: np.ndarray

    @property
    def n(self):
        return self.w_rec.shape[0]

    @property
    def d(self):
        return self.w_in.shape[1]

    def reset(self):
        self.state = np.zeros(self.n)

    def copy(self):
        return RngReservoir(self.w_in.copy(), self.w_rec.copy(), self.mask.copy(),
                            self.params, self.variant, self.state.copy())


def _effective_params(params, variant):
    if not variant.masked:
        return replace(params, eta=0.0, beta_masked=params.beta)
    if not variant & SEPARATE:
        # masked units share the unmasked units' rec or joint space
        return replace(params, beta_masked=params.beta)
    return params


def rng_init(n, d, params, variant, seed):
    """Random reservoir: ``w_in`` uniform in [-1, 1], ``w_rec`` in [0, 1], zero state.

    The first ``round(eta * n)`` indices of a seeded permutation are masked.
    Unmasked variants ignore ``eta``; shared-space masked variants use
    ``beta_masked = beta``.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    variant = RngVariant(variant)
    params = _effective_params(params, variant)
    params.validate()
    n_masked = int(round(params.eta * n))
    if n_masked >= n:
        raise ValueError(f"eta={params.eta} masks all {n} units; at least one must see the input")
    rng = np.random.default_rng(seed)
    w_in = rng.uniform(-1.0, 1.0, (n, d))
    w_rec = rng.uniform(0.0, 1.0, (n, n))
    mask = np.zeros(n, dtype=bool)
    mask[rng.permutation(n)[:n_masked]] = True
    return RngReservoir(w_in, w_rec, mask, params, variant, np.zeros(n))


def _as_inputs(r, inputs):
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if r.d == 1 else x.reshape(1, -1)
    if x.shape[1] != r.d:
        raise ValueError(f"inputs have dimension {x.shape[1]}, reservoir expects {r.d}")
    return np.ascontiguousarray(x)


def _dims(r, x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != r.d:
        raise ValueError(f"input has dimension {x.shape[0]}, reservoir expects {r.d}")
    return x


def transfer(r, x, v_prev):
    """Pre-integration activation of every unit for input ``x`` and state ``v_prev``."""
    p = r.params
    din = np.sum((r.w_in - x) ** 2, axis=1)
    drec = np.sum((r.w_rec - v_prev) ** 2, axis=1)
    return np.where(r.mask, np.exp(-(p.beta_masked * drec)),
                    np.exp(-(p.alpha * din + p.beta * drec)))


def rng_activate(r, x):
    """Advance the reservoir one step; returns (and stores) the new state."""
    x = _dims(r, x)
    g = r.params.gamma
    r.state = (1.0 - g) * r.state + g * transfer(r, x, r.state)
    return r.state


def joint_embed(r, x, v_prev):
    """``[sqrt(alpha) x ; sqrt(beta) v_prev]``."""
    x = _dims(r, x)
    v_prev = np.asarray(v_prev, dtype=np.float64).reshape(-1)
    if v_prev.shape[0] != r.n:
        raise ValueError("state has the wrong dimension")
    return np.concatenate([math.sqrt(r.params.alpha) * x, math.sqrt(r.params.beta) * v_prev])


def joint_units(r):
    """Unit reference vectors in the joint space, one row per unit."""
    return np.hstack([math.sqrt(r.params.alpha) * r.w_in, math.sqrt(r.params.beta) * r.w_rec])


def rng_train_step(r, x, v_prev, epsilon, lam):
    """Single unsupervised update of the reference vectors for the pair
    ``(x(t), v(t-1))``, dispatched on the reservoir variant. Mutates ``r``;
    the state is left untouched.
    """
    x = _dims(r, x)
    v_prev = np.ascontiguousarray(v_prev, dtype=np.float64).reshape(-1)
    if v_prev.shape[0] != r.n:
        raise ValueError("state has the wrong dimension")
    p = r.params
    scratch = v_prev.copy()
    kernels.rng_pretrain(r.w_in, r.w_rec, r.mask.view(np.uint8), p.alpha, p.beta,
                         p.beta_masked, p.gamma, int(RngVariant(r.variant)),
                         x.reshape(1, -1), np.array([float(epsilon)]),
                         np.array([float(lam)]), scratch)
    return r


def rng_pretrain(r, inputs, cfg):
    """Pre-train ``r`` in place on ``inputs`` and return it.

    The state starts from zero; at each step the activation is computed and
    then the units move toward ``(x(t), v(t-1))``. The state is reset to zero
    afterwards.
    """
    x = _as_inputs(r, inputs)
    if x.shape[0] == 0:
        raise ValueError("pre-training needs a non-empty input sequence")
    if cfg.passes < 0:
        raise ValueError("passes must be non-negative")
    if cfg.passes == 0:
        return r
    feed = np.ascontiguousarray(np.tile(x, (cfg.passes, 1)))
    eps, lam = cfg.schedules(feed.shape[0])
    p = r.params
    r.reset()
    kernels.rng_pretrain(r.w_in, r.w_rec, r.mask.view(np.uint8), p.alpha, p.beta,
                         p.beta_masked, p.gamma, int(r.variant), feed,
                         eps.values(), lam.values(), r.state)
    r.reset()
    return r


def rng_run(r, inputs, reset=True):
    """State matrix (K, n) from feeding ``inputs`` with frozen reference vectors."""
    if reset:
        r.reset()
    x = _as_inputs(r, inputs)
    if x.shape[0] == 0:
        return np.empty((0, r.n))
    p = r.params
    return kernels.rng_run(r.w_in, r.w_rec, r.mask.view(np.uint8), p.alpha, p.beta,
                           p.beta_masked, p.gamma, x, r.state)
