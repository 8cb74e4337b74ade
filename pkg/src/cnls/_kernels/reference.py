"""Pure numpy/scipy implementations of the hot kernels.

These are the fallback backend: every function here has an exact counterpart
in the compiled module ``cnls._kernels._native``. Semantics must match; the
parity test suite compares the two backends element-wise.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_banded

# rk4_shoot termination codes (shared with the native backend)
SHOOT_RAN_OUT = 0      # reached the last step still positive and falling
SHOOT_CROSSED = 1      # profile crossed zero: initial height too large
SHOOT_TURNED = 2       # profile turned upward or blew up: height too small
SHOOT_FLOORED = 3      # decayed below the floor: effectively converged tail

_FLOOR = 1e-250
_BLOWUP = 1e6


def tridiag_solve(dl: np.ndarray, d: np.ndarray, du: np.ndarray,
                  rhs: np.ndarray) -> np.ndarray:
    """Solve a tridiagonal system with sub/main/super diagonals dl, d, du."""
    n = d.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = du
    ab[1, :] = d
    ab[2, :-1] = dl
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def radial_laplacian(f: np.ndarray, h: float) -> np.ndarray:
    """Second-order stencil for f'' + (2/r) f' on nodes r_k = k h, k = 1..n.

    The origin is handled by an even reflection through r = 0 (the ghost value
    cancels exactly at the first node, leaving 2 (f_2 - f_1)/h^2); beyond r_max
    the value is taken to be zero (Dirichlet truncation).
    """
    n = f.shape[0]
    out = np.empty_like(f)
    h2 = h * h
    r = np.arange(1, n + 1) * h
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h2 \
        + (f[2:] - f[:-2]) / (r[1:-1] * h)
    out[0] = 2.0 * (f[1] - f[0]) / h2
    out[-1] = (-2.0 * f[-1] + f[-2]) / h2 - f[-2] / (r[-1] * h)
    return out


def truncated_quartic(r: np.ndarray, inside: np.ndarray, u: np.ndarray,
                      v: np.ndarray, mu1: float, mu2: float, beta: float,
                      eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched truncated interaction density and its (u, v) gradient.

    Inside the concentration region the density is the plain quartic
    F = (mu1 u^4 + 2 beta u^2 v^2 + mu2 v^4)/4. Outside, wherever F exceeds a
    quarter of the squared penalty weight g(r) = eps^2/(r^2 log r), it is
    flattened to g sqrt(F) - g^2/4, with the matching one-sided gradient.
    """
    u2 = u * u
    v2 = v * v
    F = 0.25 * (mu1 * u2 * u2 + 2.0 * beta * u2 * v2 + mu2 * v2 * v2)
    fu = mu1 * u2 * u + beta * u * v2
    fv = mu2 * v2 * v + beta * u2 * v
    outside = ~inside
    if not np.any(outside):
        return F, fu, fv
    G = F.copy()
    gu = fu.copy()
    gv = fv.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(outside, eps * eps / (r * r * np.log(np.maximum(r, 1.0 + 1e-12))), 0.0)
    flat = outside & (F > 0.25 * gamma * gamma)
    if np.any(flat):
        gf = gamma[flat]
        sqF = np.sqrt(F[flat])
        G[flat] = gf * sqF - 0.25 * gf * gf
        scale = gf / (2.0 * sqF)
        gu[flat] = fu[flat] * scale
        gv[flat] = fv[flat] * scale
    return G, gu, gv


def rk4_shoot(s0: float, coeff: float, mu: float, dr: float, n_steps: int,
              record: bool) -> tuple[int, int, np.ndarray | None, np.ndarray | None]:
    """Integrate w'' + (2/r) w' = coeff w - mu w^3 from w(0) = s0, w'(0) = 0.

    Fixed-step RK4 started at r = dr from the fourth-order Taylor expansion
    about the origin. Returns (status, k_stop, w, p) where w[k], p[k] hold the
    value and derivative at r = k dr (only when record is true) and k_stop is
    the index of the last computed step.
    """
    w_arr = np.zeros(n_steps + 1) if record else None
    p_arr = np.zeros(n_steps + 1) if record else None

    # powers written as explicit products in the same order as the compiled
    # backend, so the two trajectories agree bit for bit
    c2 = (coeff * s0 - mu * (s0 * s0 * s0)) / 6.0
    c4 = (coeff - 3.0 * mu * s0 * s0) * c2 / 20.0
    r = dr
    rr = r * r
    w = s0 + c2 * rr + c4 * (rr * rr)
    p = 2.0 * c2 * r + 4.0 * c4 * (rr * r)
    if record:
        w_arr[0] = s0
        w_arr[1] = w
        p_arr[1] = p

    status = SHOOT_RAN_OUT
    k = 1
    for k in range(1, n_steps):
        r = k * dr
        # RK4 on (w, p); rhs of p is coeff w - mu w^3 - 2 p / r
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
            break
        if p > 0.0 or w > _BLOWUP:
            status = SHOOT_TURNED
            k += 1
            break
        if w < _FLOOR:
            status = SHOOT_FLOORED
            k += 1
            break
    else:
        k = n_steps
        # no event: classify by the asymptotic direction p + sqrt(coeff) w
        if p + math.sqrt(coeff) * w > 0.0:
            status = SHOOT_TURNED

    return status, k, w_arr, p_arr
