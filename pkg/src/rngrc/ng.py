"""Plain Neural Gas: ranking, neighborhood kernel, updates and schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rngrc import kernels


@dataclass(frozen=True)
class Schedule:
    """Exponential interpolation from ``initial`` to ``final`` over ``total_iters``.

    ``initial == final`` gives a constant schedule, which may be 0 (used for
    the K-means limit of the neighborhood range).
    """

    initial: float
    final: float
    total_iters: int

    def __post_init__(self):
        if self.total_iters < 0:
            raise ValueError("total_iters must be non-negative")
        if self.initial != self.final and (self.initial <= 0 or self.final <= 0):
            raise ValueError("decaying schedules need positive endpoints")
        if self.initial < 0 or self.final < 0:
            raise ValueError("schedule endpoints must be non-negative")

    def value(self, t):
        if t < 0 or t > self.total_iters:
            raise ValueError(f"iteration {t} outside [0, {self.total_iters}]")
        if self.initial == self.final:
            return float(self.initial)
        if t == self.total_iters:
            return float(self.final)
        return self.initial * (self.final / self.initial) ** (t / self.total_iters)

    def values(self):
        """Values for t = 0 .. total_iters - 1, one per training iteration."""
        T = self.total_iters
        if self.initial == self.final or T == 0:
            return np.full(T, float(self.initial))
        t = np.arange(T, dtype=np.float64)
        return self.initial * (self.final / self.initial) ** (t / T)


def schedule_value(s, t):
    return s.value(t)


@dataclass
class GasUnits:
    """Codebook of ``n`` reference vectors in R^d, stored as an (n, d) array."""

    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.array(self.vectors, dtype=np.float64, ndmin=2, copy=True)
        if self.vectors.ndim != 2 or self.vectors.shape[0] < 1:
            raise ValueError("need at least one reference vector")
        self.vectors = np.ascontiguousarray(self.vectors)

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def d(self):
        return self.vectors.shape[1]

    def copy(self):
        return GasUnits(self.vectors.copy())


@dataclass(frozen=True)
class NgTrainConfig:
    epsilon: Schedule
    lam: Schedule

    def __post_init__(self):
        if self.epsilon.total_iters != self.lam.total_iters:
            raise ValueError("epsilon and lambda schedules must share total_iters")

    @property
    def total_iters(self):
        return self.epsilon.total_iters


def _check_point(units, x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != units.d:
        raise ValueError(f"input has dimension {x.shape[0]}, units have {units.d}")
    return x


def rank(units, x):
    """Number of units strictly closer to ``x`` than each unit (ties share a rank)."""
    x = _check_point(units, x)
    dist = np.sum((units.vectors - x) ** 2, axis=1)
    return np.searchsorted(np.sort(dist), dist, side="left")


def h_lambda(k, lam):
    """Neighborhood weight: Kronecker delta at ``lam == 0``, else ``exp(-k/lam)``."""
    k = np.asarray(k)
    if np.any(k < 0):
        raise ValueError("rank must be non-negative")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if lam == 0:
        out = (k == 0).astype(np.float64)
    else:
        out = np.exp(-k / lam)
    return out if out.ndim else float(out)


def ng_update_step(units, x, epsilon, lam):
    """Move every unit toward ``x`` by ``epsilon * h_lambda(rank)``; returns new units."""
    x = _check_point(units, x)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    coef = epsilon * h_lambda(rank(units, x), lam)
    w = units.vectors
    return GasUnits(w + coef[:, None] * (x - w))


def _draw(sampler, rng, size):
    if hasattr(sampler, "sample"):
        return sampler.sample(rng, size)
    data = np.asarray(sampler, dtype=np.float64)
    return data[rng.integers(0, data.shape[0], size=size)]


def ng_train(units, sampler, cfg, seed):
    """Train a copy of ``units`` for ``cfg.total_iters`` single-sample steps.

    ``sampler`` is either an object with ``sample(rng, size)`` or an array of
    points drawn from uniformly with replacement.
    """
    trained = units.copy()
    T = cfg.total_iters
    if T == 0:
        return trained
    rng = np.random.default_rng(seed)
    samples = np.ascontiguousarray(_draw(sampler, rng, T), dtype=np.float64)
    if samples.shape != (T, units.d):
        raise ValueError(f"sampler produced shape {samples.shape}, expected {(T, units.d)}")
    kernels.ng_train(trained.vectors, samples, cfg.epsilon.values(), cfg.lam.values())
    return trained


def ng_energy(units, sample, lam):
    """Empirical NG energy on a finite sample.

    Mean over points of ``sum_i h(k_i(x)) |x - w_i|^2``, divided by
    ``2 * C_lambda`` where ``C_lambda = sum_{i<n} h(i)``.
    """
    sample = np.asarray(sample, dtype=np.float64)
    if sample.ndim == 1:
        sample = sample.reshape(-1, units.d)
    if sample.shape[0] == 0:
        raise ValueError("energy needs a non-empty sample")
    if sample.shape[1] != units.d:
        raise ValueError("sample dimension does not match units")
    c_lam = float(np.sum(h_lambda(np.arange(units.n), lam)))
    dist = np.sum((sample[:, None, :] - units.vectors[None, :, :]) ** 2, axis=2)
    ordered = np.sort(dist, axis=1)
    ranks = np.stack([np.searchsorted(ordered[j], dist[j], side="left")
                      for j in range(dist.shape[0])])
    weighted = h_lambda(ranks, lam) * dist
    return float(np.mean(np.sum(weighted, axis=1)) / (2.0 * c_lam))


@dataclass(frozen=True)
class RingDataset:
    """Uniform distribution over an annulus."""

    inner_radius: float = 0.7
    outer_radius: float = 1.0
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError("need 0 < inner_radius < outer_radius")

    def sample(self, rng, size):
        # area-uniform: r^2 uniform between the squared radii
        r2 = rng.uniform(self.inner_radius ** 2, self.outer_radius ** 2, size)
        theta = rng.uniform(0.0, 2.0 * math.pi, size)
        r = np.sqrt(r2)
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        return pts + np.asarray(self.center)

    def contains(self, points):
        radius = np.linalg.norm(np.atleast_2d(points) - np.asarray(self.center), axis=1)
        return (radius >= self.inner_radius) & (radius <= self.outer_radius)


def disc_init(n, radius, seed, center=(0.0, 0.0)):
    """``n`` units uniform over a disc, as the starting codebook of the ring demo."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    return GasUnits(np.column_stack([r * np.cos(theta), r * np.sin(theta)]) + np.asarray(center))


def ring_coverage(units, ring):
    """Fraction of units lying inside the ring support."""
    if units.d != 2:
        raise ValueError("ring coverage is defined for 2-D units")
    return float(np.mean(ring.contains(units.vectors)))


def ring_demo(n_units=100, total_iters=100_000, lambda_i=8.0, lambda_f=0.1,
              epsilon_i=0.5, epsilon_f=0.005, ring=None, seed=0,
              checkpoints=10, eval_size=2000):
    """Train a gas on the ring and record (iteration, coverage, energy) rows.

    Training is split into ``checkpoints`` equal chunks that continue the same
    schedules; energy uses the current lambda on a fixed held-out sample.
    """
    ring = ring or RingDataset()
    seeds = np.random.SeedSequence(seed).spawn(3)
    units = disc_init(n_units, ring.outer_radius, seeds[0], ring.center)
    eval_pts = ring.sample(np.random.default_rng(seeds[1]), eval_size)
    eps = Schedule(epsilon_i, epsilon_f, total_iters)
    lam = Schedule(lambda_i, lambda_f, total_iters)
    rng = np.random.default_rng(seeds[2])
    samples = ring.sample(rng, total_iters)
    eps_v, lam_v = eps.values(), lam.values()
    bounds = np.linspace(0, total_iters, checkpoints + 1).astype(int)
    rows = [(0, ring_coverage(units, ring), ng_energy(units, eval_pts, lam.value(0)))]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        kernels.ng_train(units.vectors, samples[lo:hi], eps_v[lo:hi], lam_v[lo:hi])
        rows.append((int(hi), ring_coverage(units, ring), ng_energy(units, eval_pts, lam.value(int(hi)))))
    return units, rows
