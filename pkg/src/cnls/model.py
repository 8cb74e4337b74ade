"""Problem data: coupling parameters, admissible potential families, the
coupling threshold, the concentration domain, and the penalized interaction
machinery used by the semiclassical solver.

Admissibility of a potential pair (a, b) means:

* (nonnegativity)  a, b continuous and >= 0 everywhere;
* (slow decay)     liminf of a(x) |x|^2 log|x| at infinity is positive, and
                   the same for b (checked by sampling along rays);
* (positive core)  a, b are bounded below by positive constants on the
                   closure of the bounded working region Lambda.

Checks are sampling-based, not symbolic: each builtin family's closed form is
documented in the README and the checks certify the assumptions at the
sampled resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, ConfigurationError, DomainError

__all__ = [
    "CouplingParams", "PotentialSpec", "DomainSpec", "TruncationParams",
    "coupling_threshold", "quartic_density", "quartic_density_grad",
    "penalty_weight", "truncated_density", "truncated_density_grad",
    "truncated_quartic_batch", "eps_upper_limit", "radial_well", "two_well",
    "vanishing_point", "constant_potentials",
]


@dataclass(frozen=True)
class CouplingParams:
    """Self-interaction strengths mu1, mu2 > 0 and the coupling beta."""

    mu1: float
    mu2: float
    beta: float

    def __post_init__(self):
        if self.mu1 <= 0.0 or self.mu2 <= 0.0:
            raise ConfigurationError("mu1 and mu2 must be positive")


# ---------------------------------------------------------------------------
# potential families
# ---------------------------------------------------------------------------

def _envelope(r2: np.ndarray, scale: float) -> np.ndarray:
    # ~ scale^2/(|x|^2 * 2 log|x|) at infinity, ~1 near the origin
    s = r2 / (scale * scale)
    return 1.0 / ((1.0 + s) * np.log(math.e + s))


@dataclass(eq=False)
class PotentialSpec:
    """A potential pair (a, b) with admissibility metadata.

    ``family`` is one of radial_well, two_well, vanishing_point, constant.
    The evaluator maps an (m, 3) array of points to the pair of value arrays.
    ``a_offset`` adds a constant to a (the special case a = b + C).
    """

    family: str
    a_infinity: float = 1.0
    depths: tuple = (0.5,)
    widths: tuple = (2.0,)
    centers: tuple = ((0.0, 0.0, 0.0),)
    envelope_scale: float = 20.0
    constant_values: tuple = (1.0, 1.0)
    vanish_center: tuple = (9.0, 0.0, 0.0)
    a_offset: float = 0.0
    radial: bool = field(init=False)

    def __post_init__(self):
        if self.family not in ("radial_well", "two_well", "vanishing_point",
                               "constant"):
            raise ConfigurationError(f"unknown potential family {self.family!r}")
        if self.family == "two_well" and len(self.centers) != 2:
            raise ConfigurationError("two_well needs exactly two centers")
        if self.a_infinity <= 0.0:
            raise ConfigurationError("tail amplitude must be positive")
        centered = all(abs(c) < 1e-15 for cen in self.centers for c in cen)
        self.radial = (
            self.family == "constant"
            or (self.family == "radial_well" and centered))

    # -- evaluation -------------------------------------------------------

    def _base(self, pts: np.ndarray) -> np.ndarray:
        """The b profile at the given (m, 3) points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r2 = np.sum(pts * pts, axis=1)
        if self.family == "constant":
            return np.full(pts.shape[0], float(self.constant_values[1]))
        num = np.full(pts.shape[0], self.a_infinity)
        for depth, width, center in zip(self.depths, self.widths, self.centers):
            d2 = np.sum((pts - np.asarray(center)) ** 2, axis=1)
            num = num - depth * np.exp(-d2 / (width * width))
        vals = num * _envelope(r2, self.envelope_scale)
        if self.family == "vanishing_point":
            z2 = np.sum((pts - np.asarray(self.vanish_center)) ** 2, axis=1)
            vals = vals * z2 / (1.0 + z2)
        return vals

    def evaluate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(a, b) at an (m, 3) array of points."""
        b = self._base(pts)
        if self.family == "constant":
            a = np.full_like(b, float(self.constant_values[0]))
        else:
            a = b + self.a_offset
        return a, b

    def evaluate_radii(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if not self.radial:
            raise DomainError("potential pair is not radially symmetric")
        r = np.asarray(r, dtype=float)
        pts = np.zeros((r.size, 3))
        pts[:, 0] = r.ravel()
        a, b = self.evaluate(pts)
        return a.reshape(r.shape), b.reshape(r.shape)

    # -- admissibility ----------------------------------------------------

    def check_nonnegative(self, sample_pts: np.ndarray) -> None:
        a, b = self.evaluate(sample_pts)
        if a.min() < -1e-12 or b.min() < -1e-12:
            raise AdmissibilityError("potential pair takes negative values")

    def tail_liminf(self, r_lo: float = 50.0, r_hi: float = 1e4,
                    n_radii: int = 400, n_dirs: int = 32) -> float:
        """Sampled lower bound of min(a, b) |x|^2 log|x| on far rays."""
        radii = np.geomspace(r_lo, r_hi, n_radii)
        dirs = _fibonacci_sphere(n_dirs)
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        a, b = self.evaluate(pts)
        r = np.repeat(radii, n_dirs)
        vals = np.minimum(a, b) * r * r * np.log(r)
        return float(vals.min())

    def check_slow_decay(self) -> float:
        lim = self.tail_liminf()
        if not lim > 1e-9:
            raise AdmissibilityError(
                f"sampled tail liminf of a|x|^2 log|x| is {lim:.3e}, not positive")
        return lim

    def core_infimum(self, lam_region: "Ball", spacing: float) -> tuple[float, float]:
        """(a0, b0): sampled infima over the closed working region."""
        pts = lam_region.raster(spacing, closure=True)
        a, b = self.evaluate(pts)
        a0, b0 = float(a.min()), float(b.min())
        if a0 <= 0.0 or b0 <= 0.0:
            raise AdmissibilityError(
                "potential vanishes on the working region (positive core violated)")
        return a0, b0


def radial_well(a_infinity=1.0, depth=0.5, width=2.0, center=(0.0, 0.0, 0.0),
                envelope_scale=20.0, a_offset=0.0) -> PotentialSpec:
    return PotentialSpec("radial_well", a_infinity=a_infinity, depths=(depth,),
                         widths=(width,), centers=(tuple(center),),
                         envelope_scale=envelope_scale, a_offset=a_offset)


def two_well(a_infinity=1.0, depths=(0.5, 0.3), widths=(0.8, 0.8),
             centers=((-1.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
             envelope_scale=20.0, a_offset=0.0) -> PotentialSpec:
    return PotentialSpec("two_well", a_infinity=a_infinity, depths=tuple(depths),
                         widths=tuple(widths),
                         centers=tuple(tuple(c) for c in centers),
                         envelope_scale=envelope_scale, a_offset=a_offset)


def vanishing_point(a_infinity=1.0, depth=0.5, width=2.0,
                    vanish_center=(9.0, 0.0, 0.0), envelope_scale=20.0,
                    a_offset=0.0) -> PotentialSpec:
    return PotentialSpec("vanishing_point", a_infinity=a_infinity,
                         depths=(depth,), widths=(width,),
                         centers=((0.0, 0.0, 0.0),),
                         envelope_scale=envelope_scale,
                         vanish_center=tuple(vanish_center), a_offset=a_offset)


def constant_potentials(a_value=1.0, b_value=1.0) -> PotentialSpec:
    return PotentialSpec("constant", constant_values=(a_value, b_value))


def _fibonacci_sphere(n: int) -> np.ndarray:
    """n roughly equidistributed unit vectors (deterministic)."""
    i = np.arange(n) + 0.5
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        d2 = np.sum((pts - np.asarray(self.center)) ** 2, axis=1)
        return d2 <= self.radius * self.radius

    def raster(self, spacing: float, closure: bool = False) -> np.ndarray:
        """Cartesian raster of the ball (closure=True adds boundary shells)."""
        if spacing <= 0.0:
            raise ConfigurationError("spacing must be positive")
        m = int(math.floor(self.radius / spacing))
        axis = np.arange(-m, m + 1) * spacing
        X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
        pts = pts + np.asarray(self.center)
        pts = pts[self.contains(pts)]
        if closure:
            n_sphere = max(64, int(4.0 * math.pi * self.radius ** 2 / spacing ** 2))
            shell = self.center + self.radius * _fibonacci_sphere(n_sphere)
            pts = np.concatenate([pts, shell], axis=0)
        return pts

    def boundary_points(self, spacing: float) -> np.ndarray:
        n_sphere = max(64, int(4.0 * math.pi * self.radius ** 2 / spacing ** 2))
        return np.asarray(self.center) + self.radius * _fibonacci_sphere(n_sphere)


@dataclass(eq=False)
class DomainSpec:
    """Working region Lambda, concentration region O, and the margin delta.

    O must be a ball (or typically is) sandwiched between two balls of radii
    rho0 <= rho1 about the origin; for a ball O both radii coincide. delta
    defaults to rho0/8. The separation of the landscape minimizers from the
    complement of O (at least 5 delta) can only be validated after a
    landscape scan; potential lower bounds on the 5 delta fattening of O are
    validated here.
    """

    lam: Ball
    region_o: Ball
    delta: float | None = None
    rho0: float = field(init=False)
    rho1: float = field(init=False)

    def __post_init__(self):
        if np.linalg.norm(self.region_o.center) > 1e-12:
            raise ConfigurationError("concentration region must be centered at 0")
        self.rho0 = self.region_o.radius
        self.rho1 = self.region_o.radius
        if self.delta is None:
            self.delta = self.rho0 / 8.0
        if not 0.0 < self.delta < self.rho0:
            raise ConfigurationError("delta must lie in (0, rho0)")
        if self.region_o.radius > self.lam.radius + 1e-12:
            raise ConfigurationError("concentration region must sit inside Lambda")

    def contains_o(self, pts: np.ndarray) -> np.ndarray:
        return self.region_o.contains(pts)

    def check_core_margin(self, pots: PotentialSpec, a0: float, b0: float,
                          spacing: float) -> None:
        """Potentials must stay above half their core infima on the 5 delta
        fattening of O."""
        fat = Ball(self.region_o.center, self.region_o.radius + 5.0 * self.delta)
        pts = fat.raster(spacing, closure=True)
        a, b = pots.evaluate(pts)
        if a.min() < 0.5 * a0 - 1e-12 or b.min() < 0.5 * b0 - 1e-12:
            raise AdmissibilityError(
                "potential dips below half its core infimum on the fattened "
                "concentration region")


# ---------------------------------------------------------------------------
# coupling threshold
# ---------------------------------------------------------------------------

def coupling_threshold(params: CouplingParams, pots: PotentialSpec,
                       lam_region: Ball, spacing: float | None = None
                       ) -> tuple[float, float]:
    """Threshold value of the coupling above which the vector ground state
    exists: max(mu1, mu2) times the largest of a/b, b/a over the closed
    working region. Returns (threshold, sampling spacing used)."""
    if spacing is None:
        spacing = lam_region.radius / 24.0
    pts = lam_region.raster(spacing, closure=True)
    a, b = pots.evaluate(pts)
    if a.min() <= 0.0 or b.min() <= 0.0:
        raise AdmissibilityError(
            "potential vanishes on the working region; threshold undefined")
    ratio = np.maximum(a / b, b / a)
    return max(params.mu1, params.mu2) * float(ratio.max()), spacing


def pointwise_coupling_threshold(params: CouplingParams, a_val: float,
                                 b_val: float) -> float:
    """Threshold for a frozen-coefficient problem (single-point region)."""
    if a_val <= 0.0 or b_val <= 0.0:
        raise AdmissibilityError("frozen coefficients must be positive")
    return max(params.mu1, params.mu2) * max(a_val / b_val, b_val / a_val)


# ---------------------------------------------------------------------------
# interaction densities
# ---------------------------------------------------------------------------

def quartic_density(s, t, params: CouplingParams):
    """(mu1 s^4 + 2 beta s^2 t^2 + mu2 t^4) / 4."""
    s2 = np.asarray(s, dtype=float) ** 2
    t2 = np.asarray(t, dtype=float) ** 2
    out = 0.25 * (params.mu1 * s2 * s2 + 2.0 * params.beta * s2 * t2
                  + params.mu2 * t2 * t2)
    return float(out) if np.isscalar(s) and np.isscalar(t) else out


def quartic_density_grad(s, t, params: CouplingParams):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    gs = params.mu1 * s ** 3 + params.beta * s * t * t
    gt = params.mu2 * t ** 3 + params.beta * s * s * t
    return gs, gt


@dataclass(frozen=True)
class TruncationParams:
    """Semiclassical parameter eps plus its domain, validated against the
    upper limit eps_1 defined by sqrt(beta) eps_1^2 / log(rho0/eps_1) = 1/8."""

    eps: float
    domain: DomainSpec
    beta: float

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ConfigurationError("eps must be positive")
        rho0 = self.domain.rho0
        if self.eps >= rho0:
            raise ConfigurationError(
                "eps must be below rho0 so the penalty weight is defined")
        limit = eps_upper_limit(self.beta, rho0)
        if self.eps >= limit:
            raise ConfigurationError(
                f"eps={self.eps} is not below the admissible limit {limit:.6g}")


def eps_upper_limit(beta: float, rho0: float) -> float:
    """Solve sqrt(beta) e^2 / log(rho0/e) = 1/8 for e by bisection.

    The map is strictly increasing on (0, rho0) and blows up at rho0, so the
    root exists and is unique.
    """
    if beta <= 0.0 or rho0 <= 0.0:
        raise ConfigurationError("beta and rho0 must be positive")
    sb = math.sqrt(beta)

    def phi(e: float) -> float:
        return sb * e * e / math.log(rho0 / e)

    lo, hi = rho0 * 1e-12, rho0 * (1.0 - 1e-9)
    if phi(lo) >= 0.125:
        raise ConfigurationError("no admissible eps below rho0")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) < 0.125:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * rho0:
            break
    return 0.5 * (lo + hi)


def penalty_weight(t, trunc: TruncationParams):
    """eps^2 / (t^2 log t) for radii t at or beyond rho0/eps."""
    t_arr = np.asarray(t, dtype=float)
    t_min = trunc.domain.rho0 / trunc.eps
    if np.any(t_arr < t_min * (1.0 - 1e-12)):
        raise DomainError(
            f"penalty weight is defined only for radii >= rho0/eps = {t_min:.6g}")
    out = trunc.eps ** 2 / (t_arr * t_arr * np.log(t_arr))
    return float(out) if np.isscalar(t) else out


def _point_radius_and_inside(x, trunc: TruncationParams) -> tuple[float, bool]:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == 1:
        r = abs(float(x[0]))
        inside = r <= trunc.domain.rho1 / trunc.eps
    else:
        r = float(np.linalg.norm(x))
        inside = bool(trunc.domain.contains_o(trunc.eps * x.reshape(1, 3))[0])
    return r, inside


def truncated_density(x, s: float, t: float, params: CouplingParams,
                      trunc: TruncationParams) -> float:
    """Penalized interaction density at one rescaled point x.

    Inside the rescaled concentration region this is the plain quartic
    density; outside, values above a quarter of the squared penalty weight
    are flattened to weight*sqrt(F) - weight^2/4 (continuously, in value and
    gradient, across the switch surface).
    """
    F = quartic_density(s, t, params)
    r, inside = _point_radius_and_inside(x, trunc)
    if inside:
        return F
    g = penalty_weight(r, trunc)
    if F <= 0.25 * g * g:
        return F
    return g * math.sqrt(F) - 0.25 * g * g


def truncated_density_grad(x, s: float, t: float, params: CouplingParams,
                           trunc: TruncationParams) -> tuple[float, float]:
    F = quartic_density(s, t, params)
    gs, gt = quartic_density_grad(s, t, params)
    r, inside = _point_radius_and_inside(x, trunc)
    if inside:
        return float(gs), float(gt)
    g = penalty_weight(r, trunc)
    if F <= 0.25 * g * g:
        return float(gs), float(gt)
    scale = g / (2.0 * math.sqrt(F))
    return float(gs) * scale, float(gt) * scale


def truncated_quartic_batch(r: np.ndarray, inside: np.ndarray, u: np.ndarray,
                            v: np.ndarray, params: CouplingParams,
                            eps: float):
    """Vectorized density + gradient over a whole grid (hot path)."""
    from . import _kernels

    return _kernels.truncated_quartic(r, inside, u, v, params.mu1, params.mu2,
                                      params.beta, eps)
