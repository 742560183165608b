"""Linear ridge readout on harvested reservoir states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg


class SingularReadoutError(np.linalg.LinAlgError):
    """Normal equations are singular; a positive ``mu`` is required."""


@dataclass
class StateTargetPair:
    """Time-aligned states ``V`` (K, n) and targets ``y`` (K,) or (K, m)."""

    V: np.ndarray
    y: np.ndarray
    washout: int = 0

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.V.ndim != 2:
            raise ValueError("V must be a (K, n) matrix")
        if self.y.shape[0] != self.V.shape[0]:
            raise ValueError("V and y must have the same number of rows")
        if not 0 <= self.washout < self.V.shape[0]:
            raise ValueError("washout must lie in [0, K)")

    def trimmed(self):
        return self.V[self.washout:], self.y[self.washout:]


@dataclass
class RidgeReadout:
    w_out: np.ndarray
    mu: float
    bias: bool = False

    @property
    def n(self):
        return self.w_out.shape[0] - int(self.bias)


def _design(V, bias):
    if bias:
        return np.hstack([V, np.ones((V.shape[0], 1))])
    return V


def ridge_fit(data, mu, bias=False):
    """Solve ``(V^T V + mu I) w = V^T y`` on the post-washout rows.

    ``bias=True`` appends a constant-one column to the states; it is
    regularized like every other weight.
    """
    if mu < 0:
        raise ValueError("mu must be non-negative")
    V, y = data.trimmed()
    A = _design(V, bias)
    gram = A.T @ A
    if mu:
        gram[np.diag_indices_from(gram)] += mu
    rhs = A.T @ y
    if not mu and np.linalg.matrix_rank(A) < A.shape[1]:
        raise SingularReadoutError("states are rank deficient; use mu > 0")
    try:
        factor = linalg.cho_factor(gram, lower=False, check_finite=True)
    except linalg.LinAlgError:
        raise SingularReadoutError(
            "state Gram matrix is not positive definite; use mu > 0") from None
    w = linalg.cho_solve(factor, rhs)
    if not np.all(np.isfinite(w)):
        raise SingularReadoutError("ridge solve produced non-finite weights; use mu > 0")
    return RidgeReadout(w, float(mu), bias)


def ridge_predict(readout, V):
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[1] != readout.n:
        raise ValueError(f"states have {V.shape[-1]} columns, readout expects {readout.n}")
    return _design(V, readout.bias) @ readout.w_out


def ridge_loss(readout, data):
    """``0.5 |A w - y|^2 + 0.5 mu |w|^2`` over the post-washout rows."""
    V, y = data.trimmed()
    resid = ridge_predict(readout, V) - y
    return 0.5 * float(np.sum(resid ** 2)) + 0.5 * readout.mu * float(np.sum(readout.w_out ** 2))
