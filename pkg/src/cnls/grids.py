"""Discretization substrate: radial and 3D Cartesian grids with the
differential operators, quadratures and geometric queries used by every
solver in the package.

Space dimension is fixed at 3. The radial grid discretizes radially symmetric
functions on nodes r_k = k h, k = 1..n (the origin is not a node; symmetry
supplies the boundary condition there). Both grids truncate space with a
homogeneous Dirichlet condition: values beyond the last node / the box faces
are treated as zero. Every converged field is expected to have decayed to
numerical noise at the boundary; ``boundary_ratio`` reports how well a field
meets that.

Radial quadrature is a corrected trapezoid (Gregory) rule on g(r) = 4 pi r^2 f:
the value at r = 0 is quadratically extrapolated and the h^2/12
endpoint-derivative correction is applied. The rule is exact for cubics in r
(hence exact for constant fields) and handles integrands as singular as
f ~ r^{-2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DomainError

_MIN_RADIAL_N = 64
_MIN_CART_N = 32
FOUR_PI = 4.0 * math.pi


@dataclass(eq=False)
class RadialGrid:
    """Uniform radial grid on (0, r_max] with n nodes at r_k = k h."""

    r_max: float
    n: int
    h: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < _MIN_RADIAL_N:
            raise ConfigurationError(
                f"radial grid needs at least {_MIN_RADIAL_N} nodes, got {self.n}")
        if self.r_max <= 0.0:
            raise ConfigurationError("r_max must be positive")
        self.h = self.r_max / self.n
        self.r = np.arange(1, self.n + 1, dtype=float) * self.h

    @property
    def kind(self) -> str:
        return "radial"

    def describe(self) -> dict:
        return {"kind": "radial", "n": self.n, "r_max": self.r_max}


@dataclass(eq=False)
class CartesianGrid3:
    """Cube [-half_width, half_width]^3 sampled at n_per_axis cell centers."""

    half_width: float
    n_per_axis: int
    h: float = field(init=False)
    axis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_per_axis < _MIN_CART_N:
            raise ConfigurationError(
                f"cartesian grid needs at least {_MIN_CART_N} nodes per axis, "
                f"got {self.n_per_axis}")
        if self.half_width <= 0.0:
            raise ConfigurationError("half_width must be positive")
        self.h = 2.0 * self.half_width / self.n_per_axis
        self.axis = -self.half_width + (np.arange(self.n_per_axis) + 0.5) * self.h

    @property
    def kind(self) -> str:
        return "cartesian"

    def describe(self) -> dict:
        return {"kind": "cartesian", "n": self.n_per_axis,
                "half_width": self.half_width}

    def points(self) -> np.ndarray:
        """All node coordinates, shape (n^3, 3), C-ordered to match values."""
        X, Y, Z = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def radii(self) -> np.ndarray:
        X, Y, Z = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.sqrt(X * X + Y * Y + Z * Z)


Grid = RadialGrid | CartesianGrid3


@dataclass
class ScalarField:
    """Real field sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = _value_shape(self.grid)
        if self.values.shape != expected:
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("field contains non-finite values")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class FieldPair:
    """A (u, v) pair sharing one grid."""

    u: ScalarField
    v: ScalarField

    def __post_init__(self):
        if self.u.grid is not self.v.grid \
                and self.u.grid.describe() != self.v.grid.describe():
            raise ConfigurationError("field pair components live on different grids")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def copy(self) -> "FieldPair":
        return FieldPair(self.u.copy(), self.v.copy())


def _value_shape(grid: Grid) -> tuple:
    if isinstance(grid, RadialGrid):
        return (grid.n,)
    return (grid.n_per_axis,) * 3


def constant_field(grid: Grid, value: float = 0.0) -> ScalarField:
    return ScalarField(grid, np.full(_value_shape(grid), float(value)))


# ---------------------------------------------------------------------------
# differential operators
# ---------------------------------------------------------------------------

def laplacian_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    if isinstance(grid, RadialGrid):
        return _kernels.radial_laplacian(values, grid.h)
    return _cartesian_laplacian(values, grid.h)


def laplacian(f: ScalarField) -> ScalarField:
    """Discrete Laplacian with the grid's boundary conventions."""
    return ScalarField(f.grid, laplacian_values(f.grid, f.values))


def _cartesian_laplacian(v: np.ndarray, h: float) -> np.ndarray:
    out = -6.0 * v.copy()
    out[:-1, :, :] += v[1:, :, :]
    out[1:, :, :] += v[:-1, :, :]
    out[:, :-1, :] += v[:, 1:, :]
    out[:, 1:, :] += v[:, :-1, :]
    out[:, :, :-1] += v[:, :, 1:]
    out[:, :, 1:] += v[:, :, :-1]
    out /= h * h
    return out


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _gregory_line_integral(g: np.ndarray, h: float) -> float:
    """Corrected trapezoid integral of g over [0, n h], nodes at r = k h, k>=1.

    The origin value is extrapolated quadratically; the trapezoid sum gets the
    Euler-Maclaurin h^2/12 endpoint-derivative correction (one-sided stencils),
    which makes the rule exact for cubic polynomials.
    """
    g0 = 3.0 * (g[0] - g[1]) + g[2]
    trap = h * (0.5 * g0 + float(np.sum(g[:-1])) + 0.5 * g[-1])
    d0 = (-3.0 * g0 + 4.0 * g[0] - g[1]) / (2.0 * h)
    dn = (3.0 * g[-1] - 4.0 * g[-2] + g[-3]) / (2.0 * h)
    return trap - h * h / 12.0 * (dn - d0)


def integrate_values(grid: Grid, values: np.ndarray) -> float:
    if isinstance(grid, RadialGrid):
        return FOUR_PI * _gregory_line_integral(values * grid.r * grid.r, grid.h)
    return float(np.sum(values)) * grid.h ** 3


def quad_weights(grid: Grid) -> np.ndarray:
    """Plain positive quadrature weights (no endpoint corrections).

    Radial: 4 pi h r_k^2. Under these weights the radial Laplacian stencil is
    exactly self-adjoint and negative definite (diag(r^2) L is symmetric),
    which the variational solvers rely on: their discrete energies are exact
    Lagrangians of the stencil equations. Cartesian: the cell volume h^3.
    """
    if isinstance(grid, RadialGrid):
        return FOUR_PI * grid.h * grid.r * grid.r
    return np.full((grid.n_per_axis,) * 3, grid.h ** 3)


def integrate(f: ScalarField) -> float:
    """Integral of f over the truncated copy of R^3 the grid represents."""
    return integrate_values(f.grid, f.values)


def grad_norm_sq_values(grid: Grid, values: np.ndarray) -> float:
    if isinstance(grid, RadialGrid):
        f = values
        n = grid.n
        h = grid.h
        d = np.empty(n + 1)
        # segment [0, h] uses the even-reflection ghost, last segment the
        # Dirichlet zero beyond r_max
        d[0] = (f[1] - f[0]) / (3.0 * h)
        d[1:n] = (f[1:] - f[:-1]) / h
        d[n] = -f[-1] / h
        mids = (np.arange(n + 1) + 0.5) * h
        return FOUR_PI * h * float(np.sum(d * d * mids * mids))
    h = grid.h
    total = 0.0
    for ax in range(3):
        v = np.moveaxis(values, ax, 0)
        diffs = np.diff(v, axis=0)
        total += float(np.sum(diffs * diffs))
        total += float(np.sum(v[0] ** 2)) + float(np.sum(v[-1] ** 2))
    return total * h  # (diff/h)^2 * h^3


def grad_norm_sq(f: ScalarField) -> float:
    """Dirichlet energy of f: the integral of the squared gradient."""
    return grad_norm_sq_values(f.grid, f.values)


def inv_r_sq_integral(grid: Grid, values: np.ndarray) -> float:
    """Integral of values / |x|^2, needed by the Hardy inequality check."""
    if isinstance(grid, RadialGrid):
        # the r^2 volume weight cancels the singular factor exactly
        return FOUR_PI * _gregory_line_integral(values, grid.h)
    r2 = grid.radii() ** 2
    return float(np.sum(values / r2)) * grid.h ** 3


def boundary_ratio(f: ScalarField) -> float:
    """Largest boundary magnitude relative to the field's max magnitude."""
    v = np.abs(f.values)
    peak = float(v.max())
    if peak == 0.0:
        return 0.0
    if isinstance(f.grid, RadialGrid):
        edge = float(v[-1])
    else:
        edge = max(float(v[0].max()), float(v[-1].max()),
                   float(v[:, 0].max()), float(v[:, -1].max()),
                   float(v[:, :, 0].max()), float(v[:, :, -1].max()))
    return edge / peak


# ---------------------------------------------------------------------------
# geometric queries
# ---------------------------------------------------------------------------

def dist_to_set(grid: Grid, region) -> ScalarField:
    """Per-node Euclidean distance to the nearest node inside ``region``.

    ``region`` is a predicate: on a radial grid it receives the node radii,
    on a Cartesian grid an (m, 3) array of node coordinates; it returns a
    boolean mask. Exact for radial shells; the Cartesian path runs the exact
    separable squared-distance transform axis by axis.
    """
    if isinstance(grid, RadialGrid):
        mask = np.asarray(region(grid.r), dtype=bool)
        if not mask.any():
            raise DomainError("region is empty on this grid")
        radii = grid.r[mask]
        idx = np.searchsorted(radii, grid.r)
        idx_lo = np.clip(idx - 1, 0, radii.size - 1)
        idx_hi = np.clip(idx, 0, radii.size - 1)
        d = np.minimum(np.abs(grid.r - radii[idx_lo]),
                       np.abs(grid.r - radii[idx_hi]))
        return ScalarField(grid, d)

    pts = grid.points()
    mask = np.asarray(region(pts), dtype=bool).reshape((grid.n_per_axis,) * 3)
    if not mask.any():
        raise DomainError("region is empty on this grid")
    sq = _separable_sq_distance(mask, grid.h)
    return ScalarField(grid, np.sqrt(sq))


def _separable_sq_distance(mask: np.ndarray, h: float) -> np.ndarray:
    """Exact squared Euclidean distance transform, one axis at a time."""
    n = mask.shape[0]
    big = 1e300
    d = np.where(mask, 0.0, big)
    offsets = (np.arange(n)[:, None] - np.arange(n)[None, :]).astype(float)
    sq_off = (offsets * h) ** 2  # sq_off[j, i] = ((j - i) h)^2
    for ax in range(3):
        d = np.moveaxis(d, ax, -1)
        shape = d.shape
        lines = d.reshape(-1, n)
        out = np.empty_like(lines)
        chunk = max(1, (1 << 22) // (n * n))
        for start in range(0, lines.shape[0], chunk):
            block = lines[start:start + chunk]  # (c, n)
            # candidate[j, i] = block[:, j] + sq_off[j, i]
            cand = block[:, :, None] + sq_off[None, :, :]
            out[start:start + chunk] = cand.min(axis=1)
        d = np.moveaxis(out.reshape(shape), -1, ax)
    return d


# ---------------------------------------------------------------------------
# shifted inverse operators (preconditioners)
# ---------------------------------------------------------------------------

def make_shift_solver(grid: Grid, shift):
    """Return a solver for (-Laplacian + shift) x = b on the grid.

    ``shift`` may be a positive scalar or a per-node positive array. The
    radial path factors the tridiagonal system once per call via a banded
    solve; the Cartesian path diagonalizes the 7-point Dirichlet Laplacian
    with type-I sine transforms (constant shift only: an array shift is
    replaced by its mean, which is all the descent preconditioner needs).
    """
    if isinstance(grid, RadialGrid):
        n = grid.n
        h = grid.h
        h2 = h * h
        r = grid.r
        shift_arr = np.broadcast_to(np.asarray(shift, dtype=float), (n,)).copy()
        if np.any(shift_arr <= 0.0):
            raise ConfigurationError("shift must be positive for the banded solver")
        diag = 2.0 / h2 + shift_arr
        sub = (-1.0 / h2 + 1.0 / (r[1:] * h))
        sup = np.empty(n - 1)
        sup[0] = -2.0 / h2
        sup[1:] = -1.0 / h2 - 1.0 / (r[1:-1] * h)

        def solve(rhs: np.ndarray) -> np.ndarray:
            return _kernels.tridiag_solve(sub, diag, sup, rhs)

        return solve

    from scipy.fft import dstn, idstn

    n = grid.n_per_axis
    h = grid.h
    mean_shift = float(np.mean(shift))
    if mean_shift <= 0.0:
        raise ConfigurationError("shift must be positive for the DST solver")
    k = np.arange(1, n + 1)
    lam1 = (2.0 - 2.0 * np.cos(k * math.pi / (n + 1))) / (h * h)
    lam = lam1[:, None, None] + lam1[None, :, None] + lam1[None, None, :]

    def solve(rhs: np.ndarray) -> np.ndarray:
        coeffs = dstn(rhs, type=1)
        coeffs /= lam + mean_shift
        return idstn(coeffs, type=1)

    return solve
