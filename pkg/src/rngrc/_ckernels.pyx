# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a pure-Python twin with the same signature in
:mod:`rngrc._pykernels`; :mod:`rngrc.kernels` picks one at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, pow
from libc.stdlib cimport qsort, malloc, free

cnp.import_array()

# variant code bits, mirrored in rngrc.rng.RngVariant
cdef enum:
    JOINT_MASK = 1
    SEPARATE_MASK = 4


cdef int _cmp_double(const void* a, const void* b) noexcept nogil:
    cdef double da = (<double*>a)[0]
    cdef double db = (<double*>b)[0]
    if da < db:
        return -1
    if da > db:
        return 1
    return 0


cdef void _ranks(const double* dist, const Py_ssize_t* idx, Py_ssize_t m,
                 double* scratch, Py_ssize_t* out) noexcept nogil:
    # out[j] = #{l : dist[idx[l]] < dist[idx[j]]}
    cdef Py_ssize_t j, lo, hi, mid
    cdef double key
    for j in range(m):
        scratch[j] = dist[idx[j]]
    qsort(scratch, m, sizeof(double), _cmp_double)
    for j in range(m):
        key = dist[idx[j]]
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) >> 1
            if scratch[mid] < key:
                lo = mid + 1
            else:
                hi = mid
        out[j] = lo


cdef inline double _h(Py_ssize_t k, double lam) noexcept nogil:
    if lam == 0.0:
        return 1.0 if k == 0 else 0.0
    return exp(-(<double>k) / lam)


def ng_train(double[:, ::1] w, const double[:, ::1] samples,
             const double[::1] eps, const double[::1] lam):
    """Run one Neural Gas update per sample row, in place on ``w``."""
    cdef Py_ssize_t n = w.shape[0], d = w.shape[1], T = samples.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double acc, diff, coef
    cdef double* dist = <double*>malloc(n * sizeof(double))
    cdef double* scratch = <double*>malloc(n * sizeof(double))
    cdef Py_ssize_t* idx = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* rk = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    if dist == NULL or scratch == NULL or idx == NULL or rk == NULL:
        free(dist); free(scratch); free(idx); free(rk)
        raise MemoryError()
    with nogil:
        for i in range(n):
            idx[i] = i
        for t in range(T):
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    diff = samples[t, j] - w[i, j]
                    acc = acc + diff * diff
                dist[i] = acc
            _ranks(dist, idx, n, scratch, rk)
            for i in range(n):
                coef = eps[t] * _h(rk[i], lam[t])
                if coef != 0.0:
                    for j in range(d):
                        w[i, j] = w[i, j] + coef * (samples[t, j] - w[i, j])
    free(dist); free(scratch); free(idx); free(rk)


cdef void _distances(const double[:, ::1] w_in, const double[:, ::1] w_rec,
                     const unsigned char[::1] mask, const double* x,
                     const double* v, double* din, double* drec) noexcept nogil:
    cdef Py_ssize_t n = w_rec.shape[0], d = w_in.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, diff
    for i in range(n):
        acc = 0.0
        if not mask[i]:
            for j in range(d):
                diff = w_in[i, j] - x[j]
                acc = acc + diff * diff
        din[i] = acc
        acc = 0.0
        for j in range(n):
            diff = w_rec[i, j] - v[j]
            acc = acc + diff * diff
        drec[i] = acc


cdef void _activate(const unsigned char[::1] mask, const double* din,
                    const double* drec, double alpha, double beta,
                    double beta_m, double gamma, const double* vprev,
                    double* vout, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double act
    for i in range(n):
        if mask[i]:
            act = exp(-(beta_m * drec[i]))
        else:
            act = exp(-(alpha * din[i] + beta * drec[i]))
        vout[i] = (1.0 - gamma) * vprev[i] + gamma * act


def rng_run(const double[:, ::1] w_in, const double[:, ::1] w_rec,
            const unsigned char[::1] mask, double alpha, double beta,
            double beta_m, double gamma, const double[:, ::1] inputs,
            double[::1] v):
    """Feed ``inputs`` through frozen units; ``v`` holds the running state."""
    cdef Py_ssize_t n = w_rec.shape[0], K = inputs.shape[0]
    cdef Py_ssize_t t, i
    out = np.empty((K, n), dtype=np.float64)
    cdef double[:, ::1] V = out
    cdef double* din = <double*>malloc(n * sizeof(double))
    cdef double* drec = <double*>malloc(n * sizeof(double))
    if din == NULL or drec == NULL:
        free(din); free(drec)
        raise MemoryError()
    with nogil:
        for t in range(K):
            _distances(w_in, w_rec, mask, &inputs[t, 0], &v[0], din, drec)
            _activate(mask, din, drec, alpha, beta, beta_m, gamma, &v[0], &V[t, 0], n)
            for i in range(n):
                v[i] = V[t, i]
    free(din); free(drec)
    return out


cdef void _update_rows(double[:, ::1] w, const Py_ssize_t* idx, Py_ssize_t m,
                       const Py_ssize_t* rk, const double* target,
                       double scale, double lam) noexcept nogil:
    cdef Py_ssize_t j, l, i
    cdef Py_ssize_t cols = w.shape[1]
    cdef double coef
    for j in range(m):
        coef = scale * _h(rk[j], lam)
        if coef != 0.0:
            i = idx[j]
            for l in range(cols):
                w[i, l] = w[i, l] + coef * (target[l] - w[i, l])


def rng_pretrain(double[:, ::1] w_in, double[:, ::1] w_rec,
                 const unsigned char[::1] mask, double alpha, double beta,
                 double beta_m, double gamma, int variant,
                 const double[:, ::1] inputs, const double[::1] eps,
                 const double[::1] lam, double[::1] v):
    """Interleaved activation and unsupervised update, in place.

    ``inputs`` row t is used at schedule step t; callers tile the sequence for
    multiple passes.
    """
    cdef Py_ssize_t n = w_rec.shape[0], d = w_in.shape[1], T = inputs.shape[0]
    cdef Py_ssize_t t, i, nu = 0, nm = 0
    cdef bint joint = (variant & JOINT_MASK) != 0
    cdef bint separate = (variant & SEPARATE_MASK) != 0
    cdef double sa = sqrt(alpha), sb = sqrt(beta), sbm = sqrt(beta_m)
    cdef double e, lm
    cdef double* din = <double*>malloc(n * sizeof(double))
    cdef double* drec = <double*>malloc(n * sizeof(double))
    cdef double* djoint = <double*>malloc(n * sizeof(double))
    cdef double* vprev = <double*>malloc(n * sizeof(double))
    cdef double* scratch = <double*>malloc(n * sizeof(double))
    cdef Py_ssize_t* idx_all = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* idx_u = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* idx_m = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* rk = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    if (din == NULL or drec == NULL or djoint == NULL or vprev == NULL or
            scratch == NULL or idx_all == NULL or idx_u == NULL or
            idx_m == NULL or rk == NULL):
        free(din); free(drec); free(djoint); free(vprev); free(scratch)
        free(idx_all); free(idx_u); free(idx_m); free(rk)
        raise MemoryError()
    with nogil:
        for i in range(n):
            idx_all[i] = i
            if mask[i]:
                idx_m[nm] = i
                nm = nm + 1
            else:
                idx_u[nu] = i
                nu = nu + 1
        for t in range(T):
            e = eps[t]
            lm = lam[t]
            for i in range(n):
                vprev[i] = v[i]
            _distances(w_in, w_rec, mask, &inputs[t, 0], vprev, din, drec)
            _activate(mask, din, drec, alpha, beta, beta_m, gamma, vprev, &v[0], n)
            if e == 0.0:
                continue
            if not joint:
                _ranks(din, idx_u, nu, scratch, rk)
                _update_rows(w_in, idx_u, nu, rk, &inputs[t, 0], e * sa, lm)
                if separate:
                    _ranks(drec, idx_u, nu, scratch, rk)
                    _update_rows(w_rec, idx_u, nu, rk, vprev, e * sb, lm)
                else:
                    _ranks(drec, idx_all, n, scratch, rk)
                    _update_rows(w_rec, idx_all, n, rk, vprev, e * sb, lm)
            else:
                for i in range(n):
                    if mask[i]:
                        djoint[i] = beta * drec[i]
                    else:
                        djoint[i] = alpha * din[i] + beta * drec[i]
                if separate:
                    _ranks(djoint, idx_u, nu, scratch, rk)
                    _update_rows(w_in, idx_u, nu, rk, &inputs[t, 0], e, lm)
                    _update_rows(w_rec, idx_u, nu, rk, vprev, e, lm)
                else:
                    _ranks(djoint, idx_all, n, scratch, rk)
                    # masked rows have no input block; compact ranks per block
                    _joint_shared_update(w_in, w_rec, mask, rk, &inputs[t, 0],
                                         vprev, e, lm)
            if separate and nm > 0:
                _ranks(drec, idx_m, nm, scratch, rk)
                _update_rows(w_rec, idx_m, nm, rk, vprev, e * sbm, lm)
    free(din); free(drec); free(djoint); free(vprev); free(scratch)
    free(idx_all); free(idx_u); free(idx_m); free(rk)


cdef void _joint_shared_update(double[:, ::1] w_in, double[:, ::1] w_rec,
                               const unsigned char[::1] mask,
                               const Py_ssize_t* rk, const double* x,
                               const double* v, double e,
                               double lam) noexcept nogil:
    cdef Py_ssize_t n = w_rec.shape[0], d = w_in.shape[1]
    cdef Py_ssize_t i, l
    cdef double coef
    for i in range(n):
        coef = e * _h(rk[i], lam)
        if coef != 0.0:
            if not mask[i]:
                for l in range(d):
                    w_in[i, l] = w_in[i, l] + coef * (x[l] - w_in[i, l])
            for l in range(n):
                w_rec[i, l] = w_rec[i, l] + coef * (v[l] - w_rec[i, l])


cdef inline double _mg_rhs(double x, double xd, double a, double b,
                           double p) noexcept nogil:
    return a * xd / (1.0 + pow(xd, p)) - b * x


def mackey_glass(double a, double b, double tau, double p, double dt,
                 double x0, Py_ssize_t n_samples, Py_ssize_t skip_steps,
                 Py_ssize_t stride, bint hermite=True):
    """RK4 on the delay equation with constant history ``x0``.

    Returns ``n_samples`` values taken every ``stride`` steps after
    ``skip_steps`` warmup steps. The delay must be a whole number of steps.
    Half-step delay values come from cubic Hermite interpolation of the
    stored values and slopes, or linear interpolation if ``hermite`` is off.
    """
    cdef Py_ssize_t lag = <Py_ssize_t>(tau / dt + 0.5)
    cdef Py_ssize_t total = skip_steps + (n_samples - 1) * stride + 1
    cdef Py_ssize_t size = lag + 1
    cdef Py_ssize_t i, j0, j1, s = 0
    out = np.empty(n_samples, dtype=np.float64)
    cdef double[::1] o = out
    xs_arr = np.empty(size, dtype=np.float64)
    fs_arr = np.empty(size, dtype=np.float64)
    cdef double[::1] xs = xs_arr
    cdef double[::1] fs = fs_arr
    cdef double x = x0, xd0, xd1, fd0, fd1, xmid, k1, k2, k3, k4
    with nogil:
        for i in range(total):
            if i >= skip_steps and (i - skip_steps) % stride == 0:
                o[s] = x
                s = s + 1
            if i == total - 1:
                break
            j0 = i - lag
            j1 = j0 + 1
            if j0 >= 0:
                xd0 = xs[j0 % size]
                fd0 = fs[j0 % size]
            else:
                xd0 = x0
                fd0 = 0.0
            k1 = _mg_rhs(x, xd0, a, b, p)
            # slot of step i - lag - 1 is free once k1 is known
            xs[i % size] = x
            fs[i % size] = k1
            # history slope is 0 up to and including t = 0 from the left
            if j1 >= 1:
                xd1 = xs[j1 % size]
                fd1 = fs[j1 % size]
            else:
                xd1 = x0
                fd1 = 0.0
            if hermite:
                xmid = 0.5 * (xd0 + xd1) + 0.125 * dt * (fd0 - fd1)
            else:
                xmid = 0.5 * (xd0 + xd1)
            k2 = _mg_rhs(x + 0.5 * dt * k1, xmid, a, b, p)
            k3 = _mg_rhs(x + 0.5 * dt * k2, xmid, a, b, p)
            k4 = _mg_rhs(x + dt * k3, xd1, a, b, p)
            x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return out


cdef inline void _lorenz_rhs(const double* s, double sigma, double rho,
                             double beta, double* out) noexcept nogil:
    out[0] = sigma * (s[1] - s[0])
    out[1] = s[0] * (rho - s[2]) - s[1]
    out[2] = s[0] * s[1] - beta * s[2]


def lorenz(double sigma, double rho, double beta, double dt, x0,
           Py_ssize_t n_samples, Py_ssize_t skip_steps, Py_ssize_t stride):
    """Classic RK4 Lorenz trajectory, sampled like :func:`mackey_glass`."""
    cdef Py_ssize_t total = skip_steps + (n_samples - 1) * stride + 1
    cdef Py_ssize_t i, j, s = 0
    out = np.empty((n_samples, 3), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double st[3]
    cdef double tmp[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    st[0] = x0[0]; st[1] = x0[1]; st[2] = x0[2]
    with nogil:
        for i in range(total):
            if i >= skip_steps and (i - skip_steps) % stride == 0:
                for j in range(3):
                    o[s, j] = st[j]
                s = s + 1
            if i == total - 1:
                break
            _lorenz_rhs(st, sigma, rho, beta, k1)
            for j in range(3):
                tmp[j] = st[j] + 0.5 * dt * k1[j]
            _lorenz_rhs(tmp, sigma, rho, beta, k2)
            for j in range(3):
                tmp[j] = st[j] + 0.5 * dt * k2[j]
            _lorenz_rhs(tmp, sigma, rho, beta, k3)
            for j in range(3):
                tmp[j] = st[j] + dt * k3[j]
            _lorenz_rhs(tmp, sigma, rho, beta, k4)
            for j in range(3):
                st[j] = st[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    return out
