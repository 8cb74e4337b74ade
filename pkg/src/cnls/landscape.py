"""Energy landscape over the concentration region: sample the least energy
of the frozen-coefficient problem on a raster of O, extract the minimizing
set, and check that the interior minimum strictly undercuts the boundary.

The landscape energy depends on the sample point only through the frozen
coefficient pair (a(P), b(P)), so solves are cached on that pair quantized
to 1e-12. On radially symmetric potentials this collapses the raster to a
few hundred distinct solves.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, ConvergenceError
from .limit import LimitProblem, default_grid, minimize_nehari
from .model import CouplingParams, DomainSpec, PotentialSpec

log = logging.getLogger(__name__)

MIN_SET_REL_TOL = 1e-6
_QUANTUM = 1e-12


def _quantize(a_val: float, b_val: float) -> tuple[int, int]:
    return int(round(a_val / _QUANTUM)), int(round(b_val / _QUANTUM))


@dataclass(eq=False)
class LandscapeMap:
    """Sampled energy landscape with the minimizing set and the
    interior-vs-boundary verdict."""

    points: np.ndarray          # (m, 3) interior sample coordinates
    a_vals: np.ndarray
    b_vals: np.ndarray
    energies: np.ndarray
    boundary_points: np.ndarray
    boundary_energies: np.ndarray
    spacing: float
    m0: float = field(init=False)
    minimizing_set: np.ndarray = field(init=False)
    interior_min_strict: bool = field(init=False)
    boundary_margin: float = field(init=False)
    degenerate_flat: bool = field(init=False)

    def __post_init__(self):
        self.m0 = float(self.energies.min())
        sel = self.energies <= self.m0 * (1.0 + MIN_SET_REL_TOL)
        self.minimizing_set = self.points[sel]
        bmin = float(self.boundary_energies.min())
        self.boundary_margin = bmin - self.m0
        self.interior_min_strict = self.boundary_margin > 0.0
        spread = float(self.energies.max()) - self.m0
        self.degenerate_flat = spread <= self.m0 * MIN_SET_REL_TOL
        if self.degenerate_flat:
            log.info("flat landscape: every interior sample is minimizing")

    def nearest_minimizer(self, point) -> np.ndarray:
        d = np.linalg.norm(self.minimizing_set - np.asarray(point), axis=1)
        return self.minimizing_set[int(np.argmin(d))]

    def dist_to_minimizing_set(self, point) -> float:
        return float(np.linalg.norm(self.minimizing_set - np.asarray(point),
                                    axis=1).min())

    def summary(self) -> dict:
        return {
            "m0": self.m0,
            "minimizing_set": self.minimizing_set.tolist(),
            "interior_min_strict": self.interior_min_strict,
            "boundary_margin": self.boundary_margin,
            "boundary_min": self.m0 + self.boundary_margin,
            "degenerate_flat": self.degenerate_flat,
            "spacing": self.spacing,
            "n_interior_samples": int(self.points.shape[0]),
            "n_boundary_samples": int(self.boundary_points.shape[0]),
        }


def _solve_pair(args):
    a_val, b_val, params, n, r_base = args
    grid = default_grid(a_val, b_val, n, r_base)
    gs = minimize_nehari(LimitProblem(a_val, b_val, params, grid))
    return gs.energy


def landscape_energy(a_val: float, b_val: float, params: CouplingParams,
                     n: int = 1024, r_base: float | None = None) -> float:
    """One frozen-coefficient least-energy solve (cold start, fixed seed)."""
    from .limit import DEFAULT_R_BASE
    rb = DEFAULT_R_BASE if r_base is None else r_base
    return _solve_pair((a_val, b_val, params, n, rb))


def scan_landscape(domain: DomainSpec, pots: PotentialSpec,
                   params: CouplingParams, spacing: float | None = None,
                   grid_n: int = 1024, workers: int = 1,
                   beta0: float | None = None) -> LandscapeMap:
    """Sample the landscape on a raster of O plus its boundary sphere.

    Requires the coupling to exceed the threshold over the working region
    (pass it in ``beta0`` if already computed; it is recomputed otherwise).
    Solve failures abort the scan with the failing sample point attached.
    """
    from .limit import DEFAULT_R_BASE
    from .model import coupling_threshold

    if beta0 is None:
        beta0, _ = coupling_threshold(params, pots, domain.lam)
    if not params.beta > beta0:
        raise AdmissibilityError(
            f"beta={params.beta} must exceed the coupling threshold {beta0:.6g}")
    if spacing is None:
        spacing = domain.rho0 / 16.0
    if spacing <= 0.0:
        raise AdmissibilityError("spacing must be positive")

    interior = domain.region_o.raster(spacing, closure=False)
    boundary = domain.region_o.boundary_points(spacing)
    a_int, b_int = pots.evaluate(interior)
    a_bnd, b_bnd = pots.evaluate(boundary)

    keys = [_quantize(a, b) for a, b in zip(np.concatenate([a_int, a_bnd]),
                                            np.concatenate([b_int, b_bnd]))]
    vals = np.concatenate([a_int, a_bnd]), np.concatenate([b_int, b_bnd])
    distinct: dict[tuple[int, int], tuple[float, float]] = {}
    for key, a, b in zip(keys, vals[0], vals[1]):
        distinct.setdefault(key, (float(a), float(b)))

    ordered = sorted(distinct.items())
    job_args = [(a, b, params, grid_n, DEFAULT_R_BASE) for _, (a, b) in ordered]
    cache: dict[tuple[int, int], float] = {}
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                energies = list(pool.map(_solve_pair, job_args, chunksize=8))
        else:
            energies = [_solve_pair(a) for a in job_args]
    except ConvergenceError as exc:
        raise ConvergenceError(f"landscape scan aborted: {exc}",
                               residual=getattr(exc, "residual", None)) from exc
    for (key, _), energy in zip(ordered, energies):
        cache[key] = energy

    m_int = np.array([cache[_quantize(a, b)] for a, b in zip(a_int, b_int)])
    m_bnd = np.array([cache[_quantize(a, b)] for a, b in zip(a_bnd, b_bnd)])

    lmap = LandscapeMap(points=interior, a_vals=a_int, b_vals=b_int,
                        energies=m_int, boundary_points=boundary,
                        boundary_energies=m_bnd, spacing=spacing)
    _validate_separation(domain, lmap)
    return lmap


def _validate_separation(domain: DomainSpec, lmap: LandscapeMap) -> None:
    """Minimizers must keep a 5 delta margin from the complement of O;
    shrink delta with a warning when the scan says otherwise."""
    if lmap.degenerate_flat:
        return
    d = domain.region_o.radius - np.linalg.norm(lmap.minimizing_set, axis=1).max()
    if d < 5.0 * domain.delta:
        new_delta = d / 5.0 * 0.999
        log.warning("minimizing set sits %.4g from the boundary of O; "
                    "shrinking delta from %.4g to %.4g", d, domain.delta,
                    new_delta)
        domain.delta = new_delta


def minimizing_set(lmap: LandscapeMap) -> np.ndarray:
    """Interior samples within relative tolerance 1e-6 of the minimum."""
    return lmap.minimizing_set


def check_interior_min(lmap: LandscapeMap, pots: PotentialSpec | None = None
                       ) -> dict:
    """Verdict on the strict interior minimum, with the margin, plus the
    constant-offset sufficient condition (a = b + C: compare the infima of a
    inside and on the boundary) and its implication cross-check."""
    out = {
        "interior_min_strict": lmap.interior_min_strict,
        "margin": lmap.boundary_margin,
    }
    if pots is not None:
        offs_int = lmap.a_vals - lmap.b_vals
        if np.ptp(offs_int) <= 1e-10 and float(offs_int[0]) >= 0.0:
            a_bnd, _ = pots.evaluate(lmap.boundary_points)
            cond = float(lmap.a_vals.min()) < float(a_bnd.min())
            out["offset_form"] = True
            out["sufficient_condition"] = cond
            out["implication_ok"] = (not cond) or lmap.interior_min_strict
        else:
            out["offset_form"] = False
    return out
