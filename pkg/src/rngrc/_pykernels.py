"""Pure-Python (numpy) versions of the compiled inner loops.

Signatures and in-place semantics match :mod:`rngrc._ckernels`. Results agree
to rounding; summation order inside distance computations differs.
"""

import math

import numpy as np

JOINT_MASK = 1
SEPARATE_MASK = 4


def _ranks(dist):
    ordered = np.sort(dist)
    return np.searchsorted(ordered, dist, side="left")


def _h(ranks, lam):
    if lam == 0.0:
        return (ranks == 0).astype(np.float64)
    return np.exp(-ranks.astype(np.float64) / lam)


def ng_train(w, samples, eps, lam):
    for t in range(samples.shape[0]):
        x = samples[t]
        diff = x - w
        dist = np.einsum("ij,ij->i", diff, diff)
        coef = eps[t] * _h(_ranks(dist), lam[t])
        w += coef[:, None] * diff


def _distances(w_in, w_rec, mask, x, v):
    din = w_in - x
    din = np.einsum("ij,ij->i", din, din)
    din[mask] = 0.0
    drec = w_rec - v
    drec = np.einsum("ij,ij->i", drec, drec)
    return din, drec


def _activate(mask, din, drec, alpha, beta, beta_m, gamma, vprev):
    act = np.where(mask, np.exp(-(beta_m * drec)), np.exp(-(alpha * din + beta * drec)))
    return (1.0 - gamma) * vprev + gamma * act


def rng_run(w_in, w_rec, mask, alpha, beta, beta_m, gamma, inputs, v):
    mask = np.asarray(mask, dtype=bool)
    out = np.empty((inputs.shape[0], w_rec.shape[0]))
    for t in range(inputs.shape[0]):
        din, drec = _distances(w_in, w_rec, mask, inputs[t], v)
        v[:] = _activate(mask, din, drec, alpha, beta, beta_m, gamma, v)
        out[t] = v
    return out


def _update(w, rows, ranks, target, scale, lam):
    coef = scale * _h(ranks, lam)
    w[rows] += coef[:, None] * (target - w[rows])


def rng_pretrain(w_in, w_rec, mask, alpha, beta, beta_m, gamma, variant,
                 inputs, eps, lam, v):
    mask = np.asarray(mask, dtype=bool)
    joint = bool(variant & JOINT_MASK)
    separate = bool(variant & SEPARATE_MASK)
    sa, sb, sbm = math.sqrt(alpha), math.sqrt(beta), math.sqrt(beta_m)
    unmasked = np.flatnonzero(~mask)
    masked = np.flatnonzero(mask)
    every = np.arange(w_rec.shape[0])
    for t in range(inputs.shape[0]):
        x = inputs[t]
        vprev = v.copy()
        din, drec = _distances(w_in, w_rec, mask, x, vprev)
        v[:] = _activate(mask, din, drec, alpha, beta, beta_m, gamma, vprev)
        e, lm = eps[t], lam[t]
        if e == 0.0:
            continue
        if not joint:
            _update(w_in, unmasked, _ranks(din[unmasked]), x, e * sa, lm)
            rec_rows = unmasked if separate else every
            _update(w_rec, rec_rows, _ranks(drec[rec_rows]), vprev, e * sb, lm)
        else:
            djoint = np.where(mask, beta * drec, alpha * din + beta * drec)
            rows = unmasked if separate else every
            ranks = _ranks(djoint[rows])
            keep = ~mask[rows]
            _update(w_in, rows[keep], ranks[keep], x, e, lm)
            _update(w_rec, rows, ranks, vprev, e, lm)
        if separate and masked.size:
            _update(w_rec, masked, _ranks(drec[masked]), vprev, e * sbm, lm)


def _mg_rhs(x, xd, a, b, p):
    return a * xd / (1.0 + xd ** p) - b * x


def mackey_glass(a, b, tau, p, dt, x0, n_samples, skip_steps, stride, hermite=True):
    lag = int(tau / dt + 0.5)
    total = skip_steps + (n_samples - 1) * stride + 1
    size = lag + 1
    xs = [0.0] * size
    fs = [0.0] * size
    out = np.empty(n_samples)
    x = float(x0)
    s = 0
    for i in range(total):
        if i >= skip_steps and (i - skip_steps) % stride == 0:
            out[s] = x
            s += 1
        if i == total - 1:
            break
        j0 = i - lag
        j1 = j0 + 1
        if j0 >= 0:
            xd0, fd0 = xs[j0 % size], fs[j0 % size]
        else:
            xd0, fd0 = x0, 0.0
        k1 = _mg_rhs(x, xd0, a, b, p)
        xs[i % size] = x
        fs[i % size] = k1
        # history slope is 0 up to and including t = 0 from the left
        if j1 >= 1:
            xd1, fd1 = xs[j1 % size], fs[j1 % size]
        else:
            xd1, fd1 = x0, 0.0
        xmid = 0.5 * (xd0 + xd1)
        if hermite:
            xmid += 0.125 * dt * (fd0 - fd1)
        k2 = _mg_rhs(x + 0.5 * dt * k1, xmid, a, b, p)
        k3 = _mg_rhs(x + 0.5 * dt * k2, xmid, a, b, p)
        k4 = _mg_rhs(x + dt * k3, xd1, a, b, p)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return out


def _lorenz_rhs(s, sigma, rho, beta):
    return (sigma * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2])


def lorenz(sigma, rho, beta, dt, x0, n_samples, skip_steps, stride):
    total = skip_steps + (n_samples - 1) * stride + 1
    out = np.empty((n_samples, 3))
    st = tuple(float(c) for c in x0)
    s = 0
    for i in range(total):
        if i >= skip_steps and (i - skip_steps) % stride == 0:
            out[s] = st
            s += 1
        if i == total - 1:
            break
        k1 = _lorenz_rhs(st, sigma, rho, beta)
        k2 = _lorenz_rhs(tuple(st[j] + 0.5 * dt * k1[j] for j in range(3)), sigma, rho, beta)
        k3 = _lorenz_rhs(tuple(st[j] + 0.5 * dt * k2[j] for j in range(3)), sigma, rho, beta)
        k4 = _lorenz_rhs(tuple(st[j] + dt * k3[j] for j in range(3)), sigma, rho, beta)
        st = tuple(st[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                   for j in range(3))
    return out
