"""Least-energy vector states of the constant-coefficient system

    -Lap u + a u = mu1 u^3 + beta u v^2
    -Lap v + b v = mu2 v^3 + beta v u^2,   u, v > 0, decaying,

computed by minimizing the scale-invariant Nehari quotient

    E(u, v) = A(u, v)^2 / (4 B(u, v)),

where A is the quadratic form (gradient + potential terms) and B the quartic
form. The quotient is minimized by preconditioned gradient descent with an
Armijo line search and a positivity clamp; the final iterate, rescaled onto
the Nehari manifold by the fibering maximizer t* = sqrt(A/B), is polished by
a damped banded Newton iteration on the Euler-Lagrange system, which drives
the nodal defect to the requested tolerance and makes the Nehari and energy
identities exact to rounding.

Discrete structure: the quadratic form uses the plain r^2-weighted node sum,
under which the radial stencil is exactly self-adjoint, so the discrete
quotient is an exact Lagrangian of the stencil equations. Radial grids are
scale-adapted (r_max proportional to 1/sqrt(min(a, b))), which makes discrete
problems exactly equivalent under the canonical rescaling
u(x) -> sqrt(s) u(sqrt(s) x).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import (AdmissibilityError, ConfigurationError, ConvergenceError,
                     DegenerateCandidateError)
from .grids import (FieldPair, Grid, RadialGrid, ScalarField, grad_norm_sq,
                    inv_r_sq_integral, laplacian_values, make_shift_solver,
                    quad_weights)
from .model import CouplingParams, pointwise_coupling_threshold
from .shooting import scalar_ground_energy, unit_energy

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000
COLLAPSE_RATIO = 1e-8
_DESCENT_CUT = 1e-5     # preconditioned residual at which Newton takes over


DEFAULT_R_BASE = 15.0


def default_grid(a_val: float, b_val: float, n: int = 2048,
                 r_base: float = DEFAULT_R_BASE) -> RadialGrid:
    """Scale-adapted radial grid: r_max = r_base / sqrt(min(a, b)).

    The default r_base trades boundary smallness (~1e-8 of the peak at the
    truncation radius) for stencil accuracy at the pinned node count; the
    discrete-vs-continuum energy gap at n = 2048 is ~6e-5 relative.
    """
    return RadialGrid(r_base / math.sqrt(min(a_val, b_val)), n)


@dataclass(eq=False)
class LimitProblem:
    """Frozen-coefficient problem data on a fixed grid."""

    a_val: float
    b_val: float
    params: CouplingParams
    grid: Grid

    def __post_init__(self):
        if self.a_val <= 0.0 or self.b_val <= 0.0:
            raise ConfigurationError("frozen coefficients must be positive")

    def coupling_threshold(self) -> float:
        return pointwise_coupling_threshold(self.params, self.a_val, self.b_val)


@dataclass(eq=False)
class GroundState:
    """Converged least-energy state and its diagnostics."""

    fields: FieldPair
    energy: float
    residual: float          # max-norm nodal defect of the EL system
    iterations: int
    decay_fit: tuple         # (C2, C3) of the exponential envelope fit
    problem: LimitProblem
    semitrivial: tuple       # scalar energies of the two one-component states
    strict_vector: bool      # energy < min(semitrivial) - margin
    collapsed: bool          # one component degenerated to ~0
    hardy_margin: float
    monotone: bool

    def summary(self) -> dict:
        return {
            "a": self.problem.a_val, "b": self.problem.b_val,
            "mu1": self.problem.params.mu1, "mu2": self.problem.params.mu2,
            "beta": self.problem.params.beta,
            "energy": self.energy, "residual": self.residual,
            "iterations": self.iterations,
            "decay_fit": {"C2": self.decay_fit[0], "C3": self.decay_fit[1]},
            "semitrivial": list(self.semitrivial),
            "strict_vector": self.strict_vector,
            "collapsed": self.collapsed,
            "hardy_margin": self.hardy_margin,
            "radially_monotone": self.monotone,
        }


# ---------------------------------------------------------------------------
# quadratic / quartic forms and the fibering map
# ---------------------------------------------------------------------------

def quadratic_part(p: LimitProblem, w: FieldPair) -> float:
    """A(u, v) = int |grad u|^2 + a u^2 + |grad v|^2 + b v^2 (plain weights)."""
    q = quad_weights(p.grid)
    u, v = w.u.values, w.v.values
    lap_u = laplacian_values(p.grid, u)
    lap_v = laplacian_values(p.grid, v)
    return float(np.sum(q * (-lap_u * u + p.a_val * u * u
                             - lap_v * v + p.b_val * v * v)))


def quartic_part(p: LimitProblem, w: FieldPair) -> float:
    """B(u, v) = int mu1 u^4 + 2 beta u^2 v^2 + mu2 v^4 (plain weights)."""
    q = quad_weights(p.grid)
    u2 = w.u.values ** 2
    v2 = w.v.values ** 2
    c = p.params
    return float(np.sum(q * (c.mu1 * u2 * u2 + 2.0 * c.beta * u2 * v2
                             + c.mu2 * v2 * v2)))


def fiber_scale(p: LimitProblem, w: FieldPair) -> float:
    """The unique maximizer t* = sqrt(A/B) of t -> (t^2/2) A - (t^4/4) B."""
    B = quartic_part(p, w)
    if B <= 0.0:
        raise DegenerateCandidateError("candidate has zero quartic mass")
    A = quadratic_part(p, w)
    return math.sqrt(A / B)


def nehari_energy(p: LimitProblem, w: FieldPair) -> float:
    """Scale-invariant energy A^2/(4B); equals the functional value at the
    fiber-rescaled representative."""
    B = quartic_part(p, w)
    if B <= 0.0:
        raise DegenerateCandidateError("candidate has zero quartic mass")
    A = quadratic_part(p, w)
    return A * A / (4.0 * B)


def functional_value(p: LimitProblem, w: FieldPair) -> float:
    """The raw action (1/2) A - (1/4) B at w (no rescaling)."""
    return 0.5 * quadratic_part(p, w) - 0.25 * quartic_part(p, w)


# ---------------------------------------------------------------------------
# solver pieces
# ---------------------------------------------------------------------------

def gaussian_init(p: LimitProblem) -> FieldPair:
    """Default seed: both components the same Gaussian, amplitude set by the
    coupling balance sqrt(max(a, b) / beta)."""
    if isinstance(p.grid, RadialGrid):
        bump = np.exp(-0.5 * p.grid.r ** 2)
    else:
        bump = np.exp(-0.5 * p.grid.radii() ** 2)
    amp = math.sqrt(max(p.a_val, p.b_val) / max(p.params.beta, 1e-12))
    return FieldPair(ScalarField(p.grid, amp * bump),
                     ScalarField(p.grid, amp * bump.copy()))


def _cubic_terms(c: CouplingParams, u: np.ndarray, v: np.ndarray):
    cu = c.mu1 * u ** 3 + c.beta * u * v * v
    cv = c.mu2 * v ** 3 + c.beta * u * u * v
    return cu, cv


def el_defect(p: LimitProblem, u: np.ndarray, v: np.ndarray) -> float:
    """Max-norm nodal defect of the Euler-Lagrange system at (u, v)."""
    cu, cv = _cubic_terms(p.params, u, v)
    ru = -laplacian_values(p.grid, u) + p.a_val * u - cu
    rv = -laplacian_values(p.grid, v) + p.b_val * v - cv
    return max(float(np.abs(ru).max()), float(np.abs(rv).max()))


def _quotient_descent(p: LimitProblem, u, v, cut, max_iter):
    """Preconditioned descent on the Nehari quotient. Returns the iterate,
    the iteration count and the last preconditioned residual."""
    solve_a = make_shift_solver(p.grid, p.a_val)
    solve_b = make_shift_solver(p.grid, p.b_val)
    pair = FieldPair(ScalarField(p.grid, u), ScalarField(p.grid, v))
    E = nehari_energy(p, pair)
    step = 1.0
    res = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        A = quadratic_part(p, pair)
        B = quartic_part(p, pair)
        s = A / B
        cu, cv = _cubic_terms(p.params, pair.u.values, pair.v.values)
        du = pair.u.values - s * solve_a(cu)
        dv = pair.v.values - s * solve_b(cv)
        scale = max(float(np.abs(pair.u.values).max()),
                    float(np.abs(pair.v.values).max()), 1e-300)
        res = max(float(np.abs(du).max()), float(np.abs(dv).max())) / scale
        if res <= cut:
            break
        dir_pair = FieldPair(ScalarField(p.grid, du), ScalarField(p.grid, dv))
        slope = (A / B) * quadratic_part(p, dir_pair)
        step = min(1.0, step * 2.0)
        accepted = False
        while step > 1e-14:
            u_try = np.maximum(pair.u.values - step * du, 0.0)
            v_try = np.maximum(pair.v.values - step * dv, 0.0)
            trial = FieldPair(ScalarField(p.grid, u_try),
                              ScalarField(p.grid, v_try))
            if quartic_part(p, trial) > 0.0:
                E_try = nehari_energy(p, trial)
                if E_try <= E - 1e-4 * step * slope:
                    pair = trial
                    E = E_try
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            log.debug("descent stalled at iteration %d (res %.3e)", it, res)
            break
    return pair, it, res


def _assemble_newton_band(p: LimitProblem, u, v, a_arr, b_arr):
    """Banded Jacobian of the coupled EL system, interleaved unknowns."""
    n = u.shape[0]
    grid = p.grid
    h2 = grid.h * grid.h
    r = grid.r
    c = p.params
    m = 2 * n
    ab = np.zeros((5, m))
    # diagonal
    ab[2, 0::2] = 2.0 / h2 + a_arr - 3.0 * c.mu1 * u * u - c.beta * v * v
    ab[2, 1::2] = 2.0 / h2 + b_arr - 3.0 * c.mu2 * v * v - c.beta * u * u
    # u <-> v coupling at one node (offsets +-1)
    cross = -2.0 * c.beta * u * v
    ab[1, 1::2] = cross          # A[2i, 2i+1]
    ab[3, 0:-1:2] = cross        # A[2i+1, 2i]
    # Laplacian neighbors (offsets +-2)
    sup = np.empty(n - 1)
    sup[0] = -2.0 / h2
    sup[1:] = -1.0 / h2 - 1.0 / (r[1:-1] * grid.h)
    sub = -1.0 / h2 + 1.0 / (r[1:] * grid.h)
    ab[0, 2::2] = sup            # A[2i, 2i+2] for rows u_i
    ab[0, 3::2] = sup            # rows v_i
    ab[4, 0:-2:2] = sub          # A[2i+2, 2i]
    ab[4, 1:-2:2] = sub
    return ab


def _newton_polish(p: LimitProblem, u, v, tol, max_steps=40):
    """Damped Newton on the EL system (radial grids). Returns fields, defect,
    and the number of steps taken."""
    a_arr = np.full_like(u, p.a_val)
    b_arr = np.full_like(v, p.b_val)
    defect = el_defect(p, u, v)
    steps = 0
    for steps in range(1, max_steps + 1):
        if defect <= tol:
            steps -= 1
            break
        cu, cv = _cubic_terms(p.params, u, v)
        ru = -laplacian_values(p.grid, u) + p.a_val * u - cu
        rv = -laplacian_values(p.grid, v) + p.b_val * v - cv
        rhs = np.empty(2 * u.shape[0])
        rhs[0::2] = ru
        rhs[1::2] = rv
        ab = _assemble_newton_band(p, u, v, a_arr, b_arr)
        try:
            delta = solve_banded((2, 2), ab, rhs, check_finite=False)
        except np.linalg.LinAlgError:
            log.warning("newton jacobian singular; keeping descent iterate")
            break
        damp = 1.0
        improved = False
        while damp > 1e-6:
            u_try = u - damp * delta[0::2]
            v_try = v - damp * delta[1::2]
            d_try = el_defect(p, u_try, v_try)
            if d_try < defect:
                u, v, defect = u_try, v_try, d_try
                improved = True
                break
            damp *= 0.5
        if not improved:
            break
    return u, v, defect, steps


def _decay_window(grid: RadialGrid, values: np.ndarray):
    peak = float(values.max())
    lo, hi = 1e-10 * peak, 1e-2 * peak
    mask = (values >= lo) & (values <= hi) & (grid.r > grid.r[np.argmax(values)])
    return mask


def fit_decay_envelope(grid: RadialGrid, values: np.ndarray
                       ) -> tuple[float, float, float]:
    """Fit values <= C2 exp(-C3 r) on the window where values lie in
    [1e-10, 1e-2] of the peak. The rate comes from least squares on the log;
    the prefactor is then lifted so the envelope touches the data from above.
    Returns (C2, C3, r_squared)."""
    mask = _decay_window(grid, values)
    if mask.sum() < 8:
        raise ConfigurationError(
            "decay window is empty; enlarge the grid or refine it")
    r = grid.r[mask]
    y = np.log(values[mask])
    slope, intercept = np.polyfit(r, y, 1)
    pred = slope * r + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    c3 = -slope
    log_c2 = float(np.max(y + c3 * r))
    return math.exp(log_c2), c3, r2


def decay_fit_limit(gs: GroundState) -> tuple[float, float]:
    """(C2, C3) for the converged state: u + v <= C2 exp(-C3 r) on the fit
    window, with the bound checked node by node at 5% slack."""
    grid = gs.problem.grid
    if not isinstance(grid, RadialGrid):
        raise ConfigurationError("decay fit needs a radial grid")
    omega = gs.fields.u.values + gs.fields.v.values
    c2, c3, _ = fit_decay_envelope(grid, omega)
    mask = _decay_window(grid, omega)
    bound = 1.05 * c2 * np.exp(-c3 * grid.r[mask])
    if np.any(omega[mask] > bound):
        raise ConvergenceError("decay envelope violated on its own fit window")
    return c2, c3


def semitrivial_energies(p: LimitProblem) -> tuple[float, float]:
    """Least energies of the two one-component states, via the scaling law
    applied to the cached unit oracle value."""
    e1 = unit_energy()
    return (math.sqrt(p.a_val) / p.params.mu1 * e1,
            math.sqrt(p.b_val) / p.params.mu2 * e1)


def _radially_monotone(values: np.ndarray, tol: float = 1e-8) -> bool:
    peak = float(values.max())
    return bool(np.all(np.diff(values) <= tol * max(peak, 1e-300)))


def minimize_nehari(p: LimitProblem, init: FieldPair | None = None,
                    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                    enforce_vector_regime: bool = True) -> GroundState:
    """Compute the least-energy state of the frozen-coefficient system.

    With ``enforce_vector_regime`` the coupling must exceed the frozen-value
    threshold (the regime in which the positive vector ground state exists);
    pass False for deliberate one-component (semitrivial) solves.
    """
    if enforce_vector_regime:
        thr = p.coupling_threshold()
        if not p.params.beta > thr:
            raise AdmissibilityError(
                f"beta={p.params.beta} is not above the coupling threshold "
                f"{thr:.6g}; only semitrivial solves are defined here")
    if init is None:
        init = gaussian_init(p)
    u0 = np.maximum(init.u.values, 0.0)
    v0 = np.maximum(init.v.values, 0.0)
    if enforce_vector_regime and (u0.max() == 0.0 or v0.max() == 0.0):
        raise DegenerateCandidateError("vector solve needs both components nonzero")

    pair, iters, res_pre = _quotient_descent(p, u0, v0, _DESCENT_CUT, max_iter)
    if res_pre > math.sqrt(_DESCENT_CUT):
        raise ConvergenceError(
            f"descent failed to reach the Newton basin (residual {res_pre:.3e})",
            residual=res_pre)

    # rescale onto the Nehari manifold, then polish the nodal system
    t_star = fiber_scale(p, pair)
    u = t_star * pair.u.values
    v = t_star * pair.v.values
    if isinstance(p.grid, RadialGrid):
        u, v, defect, nsteps = _newton_polish(p, u, v, tol)
    else:
        defect = el_defect(p, u, v)
        nsteps = 0
        log.warning("cartesian grid: no Newton polish, defect %.3e", defect)
    if isinstance(p.grid, RadialGrid) and defect > tol:
        raise ConvergenceError(
            f"Euler-Lagrange defect {defect:.3e} above tolerance {tol:.1e}",
            residual=defect)

    if min(u.min(), v.min()) < -1e-10 * max(u.max(), v.max()):
        raise ConvergenceError("polished state lost positivity")
    u = np.maximum(u, 0.0)
    v = np.maximum(v, 0.0)

    fields = FieldPair(ScalarField(p.grid, u), ScalarField(p.grid, v))
    energy = nehari_energy(p, fields)

    u_max, v_max = float(u.max()), float(v.max())
    collapsed = (u_max < COLLAPSE_RATIO * v_max) or (v_max < COLLAPSE_RATIO * u_max)
    if collapsed and enforce_vector_regime:
        log.warning("one component collapsed: the strict vector inequality "
                    "failed numerically at beta=%.4g", p.params.beta)

    semis = semitrivial_energies(p)
    # a collapsed state is one of the semitrivial branches; its energy can
    # undershoot the oracle value by discretization bias, so it never counts
    strict = (not collapsed) and energy < min(semis) - 1e-9
    if enforce_vector_regime and not collapsed and not strict:
        log.warning("vector energy %.8g does not undercut the semitrivial pair "
                    "%.8g/%.8g", energy, *semis)

    omega = u + v
    if isinstance(p.grid, RadialGrid):
        try:
            c2, c3, _ = fit_decay_envelope(p.grid, omega)
        except ConfigurationError:
            c2 = c3 = float("nan")
        monotone = (_radially_monotone(u) and _radially_monotone(v))
    else:
        c2 = c3 = float("nan")
        monotone = True

    hardy = (grad_norm_sq(ScalarField(p.grid, omega))
             - 0.25 * inv_r_sq_integral(p.grid, omega * omega))

    return GroundState(
        fields=fields, energy=energy, residual=defect,
        iterations=iters + nsteps, decay_fit=(c2, c3), problem=p,
        semitrivial=semis, strict_vector=strict, collapsed=collapsed,
        hardy_margin=hardy, monotone=monotone)


def scalar_restricted_energy(a_val: float, mu: float, grid: Grid,
                             beta_dummy: float = 0.0) -> float:
    """Energy of the one-component state computed with the descent solver
    (the oracle-equivalence route: compare with the shooting energy)."""
    params = CouplingParams(mu1=mu, mu2=mu, beta=beta_dummy)
    p = LimitProblem(a_val, a_val, params, grid)
    if isinstance(grid, RadialGrid):
        bump = np.exp(-0.5 * grid.r ** 2) * math.sqrt(a_val / mu)
    else:
        bump = np.exp(-0.5 * grid.radii() ** 2) * math.sqrt(a_val / mu)
    init = FieldPair(ScalarField(grid, bump),
                     ScalarField(grid, np.zeros_like(bump)))
    gs = minimize_nehari(p, init, enforce_vector_regime=False)
    return gs.energy


def oracle_equivalence_gap(a_val: float, mu: float, grid: Grid) -> float:
    """Relative gap between the descent route and the shooting oracle."""
    e_descent = scalar_restricted_energy(a_val, mu, grid)
    e_oracle = scalar_ground_energy(a_val, mu)
    return abs(e_descent - e_oracle) / e_oracle
