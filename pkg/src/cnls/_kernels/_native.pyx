# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: Thomas tridiagonal solve, the radial stencil, the
fused penalized-density evaluation, and the shooting integrator. Semantics
mirror cnls._kernels.reference exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

SHOOT_RAN_OUT = 0
SHOOT_CROSSED = 1
SHOOT_TURNED = 2
SHOOT_FLOORED = 3

cdef double _FLOOR = 1e-250
cdef double _BLOWUP = 1e6


def tridiag_solve(cnp.ndarray[cnp.float64_t, ndim=1] dl,
                  cnp.ndarray[cnp.float64_t, ndim=1] d,
                  cnp.ndarray[cnp.float64_t, ndim=1] du,
                  cnp.ndarray[cnp.float64_t, ndim=1] rhs):
    """Thomas algorithm (no pivoting; the shifted operators are strictly
    diagonally dominant)."""
    cdef Py_ssize_t n = d.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cp = np.empty(n - 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.empty(n)
    cdef Py_ssize_t i
    cdef double m
    cp[0] = du[0] / d[0]
    x[0] = rhs[0] / d[0]
    for i in range(1, n):
        m = d[i] - dl[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = du[i] / m
        x[i] = (rhs[i] - dl[i - 1] * x[i - 1]) / m
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


def radial_laplacian(cnp.ndarray[cnp.float64_t, ndim=1] f, double h):
    cdef Py_ssize_t n = f.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double h2 = h * h
    cdef Py_ssize_t i
    cdef double r
    out[0] = 2.0 * (f[1] - f[0]) / h2
    for i in range(1, n - 1):
        r = (i + 1) * h
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2 \
            + (f[i + 1] - f[i - 1]) / (r * h)
    out[n - 1] = (-2.0 * f[n - 1] + f[n - 2]) / h2 \
        - f[n - 2] / ((n * h) * h)
    return out


def truncated_quartic(cnp.ndarray[cnp.float64_t, ndim=1] r,
                      cnp.ndarray[cnp.uint8_t, ndim=1, cast=True] inside,
                      cnp.ndarray[cnp.float64_t, ndim=1] u,
                      cnp.ndarray[cnp.float64_t, ndim=1] v,
                      double mu1, double mu2, double beta, double eps):
    cdef Py_ssize_t n = r.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] G = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gu = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gv = np.empty(n)
    cdef Py_ssize_t i
    cdef double u2, v2, F, fu, fv, gamma, sqF, scale, ri
    for i in range(n):
        u2 = u[i] * u[i]
        v2 = v[i] * v[i]
        F = 0.25 * (mu1 * u2 * u2 + 2.0 * beta * u2 * v2 + mu2 * v2 * v2)
        fu = mu1 * u2 * u[i] + beta * u[i] * v2
        fv = mu2 * v2 * v[i] + beta * u2 * v[i]
        if not inside[i]:
            ri = r[i] if r[i] > 1.0 + 1e-12 else 1.0 + 1e-12
            gamma = eps * eps / (ri * ri * log(ri))
            if F > 0.25 * gamma * gamma:
                sqF = sqrt(F)
                G[i] = gamma * sqF - 0.25 * gamma * gamma
                scale = gamma / (2.0 * sqF)
                gu[i] = fu * scale
                gv[i] = fv * scale
                continue
        G[i] = F
        gu[i] = fu
        gv[i] = fv
    return G, gu, gv


def rk4_shoot(double s0, double coeff, double mu, double dr, long n_steps,
              bint record):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr = None
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_arr = None
    if record:
        w_arr = np.zeros(n_steps + 1)
        p_arr = np.zeros(n_steps + 1)

    cdef double c2 = (coeff * s0 - mu * (s0 * s0 * s0)) / 6.0
    cdef double c4 = (coeff - 3.0 * mu * s0 * s0) * c2 / 20.0
    cdef double r = dr
    cdef double rr = r * r
    cdef double w = s0 + c2 * rr + c4 * (rr * rr)
    cdef double p = 2.0 * c2 * r + 4.0 * c4 * (rr * r)
    if record:
        w_arr[0] = s0
        w_arr[1] = w
        p_arr[1] = p

    cdef int status = SHOOT_RAN_OUT
    cdef long k = 1
    cdef bint hit = False
    cdef double r2, w2, p2, w3, p3, r4, w4, p4
    cdef double k1w, k1p, k2w, k2p, k3w, k3p, k4w, k4p
    for k in range(1, n_steps):
        r = k * dr
        k1w = p
        k1p = coeff * w - mu * (w * w * w) - 2.0 * p / r
        r2 = r + 0.5 * dr
        w2 = w + 0.5 * dr * k1w
        p2 = p + 0.5 * dr * k1p
        k2w = p2
        k2p = coeff * w2 - mu * (w2 * w2 * w2) - 2.0 * p2 / r2
        w3 = w + 0.5 * dr * k2w
        p3 = p + 0.5 * dr * k2p
        k3w = p3
        k3p = coeff * w3 - mu * (w3 * w3 * w3) - 2.0 * p3 / r2
        r4 = r + dr
        w4 = w + dr * k3w
        p4 = p + dr * k3p
        k4w = p4
        k4p = coeff * w4 - mu * (w4 * w4 * w4) - 2.0 * p4 / r4
        w = w + dr / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        p = p + dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        if record:
            w_arr[k + 1] = w
            p_arr[k + 1] = p
        if w <= 0.0:
            status = SHOOT_CROSSED
            k += 1
            hit = True
            break
        if p > 0.0 or w > _BLOWUP:
            status = SHOOT_TURNED
            k += 1
            hit = True
            break
        if w < _FLOOR:
            status = SHOOT_FLOORED
            k += 1
            hit = True
            break
    if not hit:
        k = n_steps
        if p + sqrt(coeff) * w > 0.0:
            status = SHOOT_TURNED

    return status, k, w_arr, p_arr
