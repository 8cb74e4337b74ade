"""Post-hoc verification battery: the Hardy inequality margin, the
three-tier decay envelopes of the rescaled solutions (inner exponential,
inverse-scale band, logarithmic-power tail), and the final physical-scale
envelope with fitted constants.

All envelope constants are fitted (slope by least squares on the log of the
data, prefactor lifted so the envelope touches from above) and then asserted
pointwise with 5% multiplicative slack. The fits restrict to values above
1e-12 to stay clear of the floating-point floor. What the battery certifies
is existence of admissible constants that work uniformly across the whole
eps ladder, which is the quantifier structure of the decay statements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .grids import (RadialGrid, ScalarField, grad_norm_sq, inv_r_sq_integral)
from .epssolver import EpsSolution
from .model import DomainSpec

FIT_FLOOR = 1e-12
SLACK = 1.05


def hardy_check(f: ScalarField) -> float:
    """Margin of the Hardy inequality: int |grad f|^2 - (1/4) int f^2/|x|^2.

    Nonnegative up to quadrature noise for any field vanishing at the outer
    boundary; the assertion form used throughout allows -1e-8 times the
    gradient term as slack.
    """
    grad = grad_norm_sq(f)
    quarter = 0.25 * inv_r_sq_integral(f.grid, f.values * f.values)
    return grad - quarter


def hardy_ok(f: ScalarField) -> bool:
    return hardy_check(f) >= -1e-8 * grad_norm_sq(f)


@dataclass(eq=False)
class DecayFit:
    """One envelope fit: tier tag, constants, window, fit quality, and the
    violation count under 5% slack (zero for a passing fit)."""

    tier: str                    # inner_exp | band_exp | tail_log
    rate: float                  # c (absent -> nan)
    prefactor: float             # C
    window: tuple
    r_squared: float
    violations: int
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def summary(self) -> dict:
        return {"tier": self.tier, "rate": self.rate,
                "prefactor": self.prefactor, "window": list(self.window),
                "r_squared": self.r_squared, "violations": self.violations,
                **self.extras}


def _touching_line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope, intercept lifted to touch the data from above,
    and the R^2 of the plain fit. y is log-data."""
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    lifted = float(np.max(y - slope * x))
    return float(slope), lifted, r2


def decay_inner(sol: EpsSolution, domain: DomainSpec) -> DecayFit:
    """Inner tier: the summed profile under C exp(-c dist(x, boundary of the
    fattened region union the maximum point)) on the 3-delta fattening."""
    p = sol.problem
    grid = p.grid
    if not isinstance(grid, RadialGrid):
        raise ConfigurationError("decay battery needs radial solutions")
    r_region = (domain.rho1 + 3.0 * domain.delta) / p.eps
    if r_region > grid.r_max + grid.h:
        raise DomainError("3-delta fattening is not resolved by the grid")
    omega = sol.fields.u.values + sol.fields.v.values
    r_x = float(sol.x_eps[0])
    inside = grid.r <= r_region
    dist = np.minimum(np.abs(grid.r - r_x), r_region - grid.r)[inside]
    vals = omega[inside]
    mask = vals > FIT_FLOOR
    if mask.sum() < 8:
        raise DomainError("inner decay window is empty")
    slope, intercept, r2 = _touching_line_fit(dist[mask], np.log(vals[mask]))
    c = -slope
    envelope = SLACK * np.exp(intercept + slope * dist[mask])
    violations = int(np.sum(vals[mask] > envelope))
    return DecayFit(tier="inner_exp", rate=c, prefactor=math.exp(intercept),
                    window=(0.0, float(r_region)), r_squared=r2,
                    violations=violations)


def band_max(sol: EpsSolution, domain: DomainSpec) -> float:
    """Maximum of the summed profile over the band
    delta/eps <= |x - x_eps| <= 2 R2/eps (single-solution record)."""
    p = sol.problem
    grid = p.grid
    r_x = float(sol.x_eps[0])
    lo = domain.delta / p.eps
    hi = 2.0 * p.r2 / p.eps
    sep = np.abs(grid.r - r_x)
    mask = (sep >= lo) & (sep <= hi)
    if not mask.any():
        raise DomainError("band not covered by the grid")
    omega = sol.fields.u.values + sol.fields.v.values
    return float(omega[mask].max())


def decay_band(solutions: list[EpsSolution], domain: DomainSpec) -> DecayFit:
    """Band tier: across the ladder, the band maxima obey C exp(-c/eps);
    linearity of their logs in 1/eps is asserted with R^2 >= 0.9."""
    if len(solutions) < 3:
        raise ConfigurationError("band fit needs at least three ladder entries")
    inv_eps = np.array([1.0 / s.problem.eps for s in solutions])
    maxima = np.array([band_max(s, domain) for s in solutions])
    mask = maxima > FIT_FLOOR
    if mask.sum() < 3:
        raise DomainError("band maxima sit below the fit floor")
    slope, intercept, r2 = _touching_line_fit(inv_eps[mask], np.log(maxima[mask]))
    c = -slope
    envelope = SLACK * np.exp(intercept + slope * inv_eps[mask])
    violations = int(np.sum(maxima[mask] > envelope))
    strictly_decreasing = bool(np.all(np.diff(maxima[np.argsort(inv_eps)]) < 0.0))
    return DecayFit(tier="band_exp", rate=c, prefactor=math.exp(intercept),
                    window=(float(inv_eps.min()), float(inv_eps.max())),
                    r_squared=r2, violations=violations,
                    extras={"band_maxima": maxima.tolist(),
                            "strictly_decreasing": strictly_decreasing})


def _physical_envelope(r_phys: np.ndarray, eps: float, c: float, C: float,
                       alpha: float) -> np.ndarray:
    """The physical-scale envelope
    C exp(-(c/eps) s/(1+s)) (1+s)^{-1} log(2+s)^{-alpha} at s = |x - x_phys|."""
    s = r_phys
    return (C * np.exp(-(c / eps) * s / (1.0 + s)) / (1.0 + s)
            / np.log(2.0 + s) ** alpha)


def min_envelope_prefactor(sol: EpsSolution, alpha: float, c: float) -> float:
    """Smallest prefactor making the physical-scale envelope hold for this
    solution (used to pick one constant for the whole ladder)."""
    p = sol.problem
    omega = sol.fields.u.values + sol.fields.v.values
    s = p.eps * np.abs(p.grid.r - float(sol.x_eps[0]))
    base = _physical_envelope(s, p.eps, c, 1.0, alpha)
    mask = omega > 0.0
    return float(np.max(omega[mask] / base[mask]))


def decay_tail(sol: EpsSolution, alpha: float, band_fit: DecayFit,
               prefactor: float | None = None) -> DecayFit:
    """Tail tier with the final rescaled envelope.

    First checks the raw tail bound: omega |x| (log|x|)^alpha stays below the
    band constants' C exp(-c/eps) beyond the comparison radius. Then checks
    the physical-scale envelope at every node (both components summed), with
    the given uniform prefactor (fitted across the ladder when absent).
    """
    if alpha <= 0.0:
        raise ConfigurationError("alpha must be positive")
    p = sol.problem
    grid = p.grid
    c = band_fit.rate
    tail = grid.r > p.r2 / p.eps
    if not tail.any():
        raise DomainError("tail region not covered by the grid")
    omega = sol.fields.u.values + sol.fields.v.values
    r_t = grid.r[tail]
    weighted = omega[tail] * r_t * np.log(r_t) ** alpha
    bound = SLACK * band_fit.prefactor * math.exp(-c / p.eps)
    tail_violations = int(np.sum(weighted > bound))

    C = prefactor if prefactor is not None else min_envelope_prefactor(sol, alpha, c)
    s = p.eps * np.abs(grid.r - float(sol.x_eps[0]))
    envelope = SLACK * _physical_envelope(s, p.eps, c, C, alpha)
    env_violations = int(np.sum(omega > envelope))
    return DecayFit(tier="tail_log", rate=c, prefactor=C,
                    window=(float(r_t.min()), float(grid.r_max)),
                    r_squared=band_fit.r_squared,
                    violations=tail_violations + env_violations,
                    extras={"alpha": alpha,
                            "tail_violations": tail_violations,
                            "envelope_violations": env_violations,
                            "tail_bound": bound,
                            "tail_weighted_max": float(weighted.max())
                            if weighted.size else 0.0})


def truncation_consistency(sol: EpsSolution, tol: float = 1e-6) -> bool:
    """True exactly when the penalization never fired and the solution's
    defect against the original system is within tolerance: the statement
    "the rescaled pair solves the original problem"."""
    from .epssolver import truncation_report

    rep = truncation_report(sol.problem, sol, tol=tol)
    return bool(rep["original_equation_solved"])


def run_battery(solutions: list[EpsSolution], domain: DomainSpec,
                alphas=(0.6, 1.0)) -> dict:
    """Full battery on a ladder of solutions (sorted largest eps first).

    Fits the band tier across the ladder, runs the inner tier per solution,
    and checks each alpha's tail/envelope with one uniform prefactor across
    all entries. Returns a report dict ready for serialization.
    """
    solutions = sorted(solutions, key=lambda s: -s.problem.eps)
    band = decay_band(solutions, domain)
    inner = [decay_inner(s, domain) for s in solutions]
    tails = {}
    for alpha in alphas:
        C = max(min_envelope_prefactor(s, alpha, band.rate) for s in solutions)
        tails[alpha] = [decay_tail(s, alpha, band, prefactor=C)
                        for s in solutions]
    hardy = [{"eps": s.problem.eps,
              "margin": s.hardy_margin,
              "ok": bool(s.hardy_margin >= -1e-8 * grad_norm_sq(
                  ScalarField(s.problem.grid,
                              s.fields.u.values + s.fields.v.values)))}
             for s in solutions]
    report = {
        "band": band.summary(),
        "inner": [f.summary() | {"eps": s.problem.eps}
                  for f, s in zip(inner, solutions)],
        "tails": {str(a): [f.summary() | {"eps": s.problem.eps}
                           for f, s in zip(fits, solutions)]
                  for a, fits in tails.items()},
        "hardy": hardy,
        "truncation_consistent": [
            {"eps": s.problem.eps, "ok": truncation_consistency(s)}
            for s in solutions],
        "all_tiers_pass": bool(
            band.passed
            and all(f.passed for f in inner)
            and all(f.passed for fits in tails.values() for f in fits)),
    }
    return report


def decay_profile_rows(sol: EpsSolution, band_fit: DecayFit,
                       alpha: float = 1.0,
                       prefactor: float | None = None) -> list[tuple]:
    """(distance, omega, envelope) rows for plotting, physical scale."""
    p = sol.problem
    omega = sol.fields.u.values + sol.fields.v.values
    s = p.eps * np.abs(p.grid.r - float(sol.x_eps[0]))
    C = prefactor if prefactor is not None else min_envelope_prefactor(
        sol, alpha, band_fit.rate)
    env = _physical_envelope(s, p.eps, band_fit.rate, C, alpha)
    return [(float(si), float(oi), float(ei))
            for si, oi, ei in zip(s, omega, env)]
