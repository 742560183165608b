"""Echo State Network reservoir."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EsnParams:
    n: int = 100
    d: int = 1
    radius: float = 0.9
    sparsity: float = 0.0
    gamma: float = 1.0
    input_scaling: float = 1.0
    input_bias: float = 0.0

    def validate(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if not self.radius > 0:
            raise ValueError("spectral radius must be positive")
        if not 0 <= self.sparsity < 1:
            raise ValueError("sparsity must lie in [0, 1)")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not self.input_scaling > 0:
            raise ValueError("input_scaling must be positive")
        if self.input_bias < 0:
            raise ValueError("input_bias must be non-negative")


@dataclass
class EsnReservoir:
    w_in: np.ndarray
    w_rec: np.ndarray
    params: EsnParams
    state: np.ndarray
    meta: dict = field(default_factory=dict)
    bias: np.ndarray = None

    def __post_init__(self):
        if self.bias is None:
            self.bias = np.zeros(self.w_rec.shape[0])

    @property
    def n(self):
        return self.w_rec.shape[0]

    @property
    def d(self):
        return self.w_in.shape[1]

    def reset(self):
        self.state = np.zeros(self.n)

    def copy(self):
        return EsnReservoir(self.w_in.copy(), self.w_rec.copy(), self.params,
                            self.state.copy(), dict(self.meta), self.bias.copy())


def _power_radius(m, max_iter=1000, tol=1e-10, seed=0):
    # Power iteration tracking growth over two steps so that a dominant
    # complex-conjugate pair (rotation in a plane) still yields its modulus.
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m.shape[0])
    x /= np.linalg.norm(x)
    prev = None
    est = 0.0
    for _ in range(max_iter):
        y = m @ x
        z = m @ y
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        est = np.sqrt(nz)
        if prev is not None and abs(est - prev) <= tol * max(est, 1e-300):
            break
        prev = est
        x = z / nz
    return float(est)


def spectral_radius(m, method="eig"):
    """Largest absolute eigenvalue of a square matrix.

    ``method="eig"`` uses LAPACK eigenvalues. ``method="power"`` runs a
    two-step power iteration; it is exact only when one eigenvalue modulus
    dominates, and is kept as an independent cross-check.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("spectral radius needs a square matrix")
    if m.size == 0:
        return 0.0
    if method == "eig":
        return float(np.max(np.abs(np.linalg.eigvals(m))))
    if method == "power":
        return _power_radius(m)
    raise ValueError(f"unknown method {method!r}")


def esn_init(params, seed):
    """Uniform [-0.5, 0.5] weights, recurrent matrix rescaled to ``params.radius``,
    then both matrices sparsified and the input matrix scaled.

    With ``input_bias > 0`` each unit also receives a constant drive drawn
    uniformly from ``input_bias * [-0.5, 0.5]``, drawn last so the other
    weights do not depend on it.
    """
    params.validate()
    ss = np.random.SeedSequence(seed)
    redraws = 0
    while True:
        rng = np.random.default_rng(ss)
        w_in = rng.uniform(-0.5, 0.5, (params.n, params.d))
        w_rec = rng.uniform(-0.5, 0.5, (params.n, params.n))
        rho = spectral_radius(w_rec)
        if rho > 0:
            break
        redraws += 1
        logger.warning("degenerate recurrent draw (radius 0), redrawing")
        ss = ss.spawn(1)[0]
    w_rec *= params.radius / rho
    rho_scaled = spectral_radius(w_rec)
    if params.sparsity > 0:
        w_in[rng.random(w_in.shape) < params.sparsity] = 0.0
        w_rec[rng.random(w_rec.shape) < params.sparsity] = 0.0
    w_in *= params.input_scaling
    bias = np.zeros(params.n)
    if params.input_bias > 0:
        bias = params.input_bias * rng.uniform(-0.5, 0.5, params.n)
    meta = {"radius_scaled": rho_scaled, "redraws": redraws}
    meta["radius_sparse"] = spectral_radius(w_rec) if params.sparsity > 0 else rho_scaled
    return EsnReservoir(w_in, w_rec, params, np.zeros(params.n), meta, bias)


def esn_activate(r, x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != r.d:
        raise ValueError(f"input has dimension {x.shape[0]}, reservoir expects {r.d}")
    g = r.params.gamma
    r.state = (1.0 - g) * r.state + g * np.tanh(r.w_in @ x + r.bias + r.w_rec @ r.state)
    return r.state


def esn_run(r, inputs, reset=True):
    """State matrix (K, n) for the input sequence."""
    if reset:
        r.reset()
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1) if r.d == 1 else x.reshape(1, -1)
    if x.shape[1] != r.d:
        raise ValueError(f"inputs have dimension {x.shape[1]}, reservoir expects {r.d}")
    K = x.shape[0]
    out = np.empty((K, r.n))
    drive = x @ r.w_in.T + r.bias
    g = r.params.gamma
    v = r.state
    w_rec = r.w_rec
    for t in range(K):
        v = (1.0 - g) * v + g * np.tanh(drive[t] + w_rec @ v)
        out[t] = v
    r.state = v.copy()
    return out
