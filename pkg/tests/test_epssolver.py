"""Penalized semiclassical solver."""

import math

import numpy as np
import pytest

from cnls.errors import (ConfigurationError, DegenerateCandidateError)
from cnls.grids import FieldPair, ScalarField, quad_weights
from cnls.epssolver import (build_eps_problem, eps_defect, fiber_max_scale,
                            gaussian_eps_init, in_candidate_set,
                            penalized_energy, penalty_balance_ok,
                            profile_error, tail_condition_radius,
                            truncation_report, untruncated_defect,
                            weighted_norm_sq)
from cnls.model import (Ball, CouplingParams, DomainSpec, quartic_density,
                        radial_well)

PARAMS = CouplingParams(1.0, 1.0, 2.0)


@pytest.fixture(scope="module")
def dom():
    return DomainSpec(lam=Ball((0, 0, 0), 4.5), region_o=Ball((0, 0, 0), 3.5))


@pytest.fixture(scope="module")
def prob(dom):
    return build_eps_problem(radial_well(), dom, PARAMS, 0.3)


def _pair(grid, u, v):
    return FieldPair(ScalarField(grid, u), ScalarField(grid, v))


def test_problem_geometry(prob, dom):
    assert prob.grid.r_max >= 2.0 * prob.r2 / prob.eps
    assert prob.r2 > prob.r1
    assert prob.r1 >= dom.rho1
    assert prob.inside_o.sum() > 0
    # rescaled potential actually sampled at eps x
    a_direct, _ = radial_well().evaluate_radii(prob.eps * prob.grid.r[:5])
    assert np.allclose(prob.a_eps[:5], a_direct)


def test_tail_condition_radius(dom):
    r1, c = tail_condition_radius(radial_well(), dom)
    assert c > 0.0
    pots = radial_well()
    radii = np.geomspace(r1, 1e4, 500)
    a, b = pots.evaluate_radii(radii)
    assert np.all(np.minimum(a, b) * radii ** 2 * np.log(radii) >= c * 0.999)


def test_memory_guard(dom):
    with pytest.raises(ConfigurationError):
        build_eps_problem(radial_well(), dom, PARAMS, 0.35, h=1e-5)


def test_eps_out_of_range(dom):
    with pytest.raises(ConfigurationError):
        build_eps_problem(radial_well(), dom, PARAMS, 0.44)   # above the limit


def test_penalized_energy_zero(prob):
    z = _pair(prob.grid, np.zeros(prob.grid.n), np.zeros(prob.grid.n))
    assert penalized_energy(prob, z) == 0.0


def test_penalized_energy_inside_support(prob):
    # fields supported inside the region: the penalization is invisible
    r = prob.grid.r
    cutoff = prob.domain.rho1 / prob.eps * 0.5
    u = np.where(r < cutoff, np.exp(-(r / 2) ** 2), 0.0)
    w = _pair(prob.grid, u, 0.5 * u)
    q = quad_weights(prob.grid)
    F = quartic_density(u, 0.5 * u, PARAMS)
    expect = 0.5 * weighted_norm_sq(prob, u, 0.5 * u) - float(np.sum(q * F))
    assert penalized_energy(prob, w) == pytest.approx(expect, rel=1e-12)


def test_penalized_energy_dominates_plain(prob):
    # J >= quadratic/2 - int F for arbitrary fields (density dominated)
    rng = np.random.default_rng(3)
    r = prob.grid.r
    u = np.abs(np.exp(-0.05 * r) * rng.uniform(0.0, 1.0, prob.grid.n))
    v = np.abs(np.exp(-0.04 * r) * rng.uniform(0.0, 1.0, prob.grid.n))
    w = _pair(prob.grid, u, v)
    q = quad_weights(prob.grid)
    F = quartic_density(u, v, PARAMS)
    plain = 0.5 * weighted_norm_sq(prob, u, v) - float(np.sum(q * F))
    assert penalized_energy(prob, w) >= plain - 1e-10


def test_fiber_closed_form_vs_bisection(prob):
    # inside-supported candidate: closed form applies
    r = prob.grid.r
    cutoff = prob.domain.rho1 / prob.eps * 0.5
    u = np.where(r < cutoff, np.exp(-(r / 1.5) ** 2), 0.0)
    w = _pair(prob.grid, u, u.copy())
    t = fiber_max_scale(prob, w)
    q = quad_weights(prob.grid)
    F = quartic_density(u, u, PARAMS)
    closed = math.sqrt(weighted_norm_sq(prob, u, u) / (4.0 * float(np.sum(q * F))))
    assert t == pytest.approx(closed, rel=1e-8)
    # analytic ray stationarity at the returned scale: t psi(t) = dJ/dt
    from cnls.epssolver import _fiber_psi
    norm_sq = weighted_norm_sq(prob, u, u)
    psi = _fiber_psi(prob, u, u, q, norm_sq, t)
    j = lambda tt: penalized_energy(prob, _pair(prob.grid, tt * u, tt * u))
    assert abs(t * psi) <= 1e-10 * abs(j(t)) / t
    # finite differences agree at their own noise floor
    h = 1e-5 * t
    dj = (j(t + h) - j(t - h)) / (2 * h)
    assert abs(dj) <= 1e-6 * max(abs(j(t)), 1.0)
    # doubling the candidate halves the maximizer
    assert fiber_max_scale(prob, _pair(prob.grid, 2 * u, 2 * u)) == \
        pytest.approx(t / 2.0, rel=1e-8)


def test_fiber_flattened_branch(prob):
    # a candidate with a fat exterior tail: the bisection path must engage
    # and still satisfy ray stationarity
    r = prob.grid.r
    u = 2.0 * np.exp(-0.02 * r)
    w = _pair(prob.grid, u, 0.3 * u)
    t = fiber_max_scale(prob, w)
    j = lambda tt: penalized_energy(prob, _pair(prob.grid, tt * u, tt * 0.3 * u))
    h = 1e-6 * t
    dj = (j(t + h) - j(t - h)) / (2 * h)
    assert abs(dj) <= 1e-8 * (abs(j(t)) / t + 1.0)


def test_candidate_set_requirement(prob):
    r = prob.grid.r
    outside_only = np.where(r > prob.domain.rho1 / prob.eps * 1.5,
                            np.exp(-0.01 * r), 0.0)
    w = _pair(prob.grid, outside_only, np.zeros_like(outside_only))
    assert not in_candidate_set(prob, w)
    with pytest.raises(DegenerateCandidateError):
        fiber_max_scale(prob, w)


def test_solved_ladder_entries(std_ladder, std_config):
    rows = [r for r in std_ladder if not r["failed"]]
    assert len(rows) == len(std_config.eps_ladder)
    for row in rows:
        sol = row["solution"]
        assert sol.level > 0.0
        assert abs(sol.fiber_at_solution - 1.0) <= 1e-6
        assert sol.residual <= std_config.solver_tol
        assert sol.peak_value >= sol.peak_floor
        assert sol.penalty_balance_ok
        u = sol.fields.u.values
        v = sol.fields.v.values
        assert u.min() >= 0.0 and v.min() >= 0.0
        assert sol.x_eps[0] <= sol.problem.domain.rho1 / sol.problem.eps
        # maximum point attains the regional maximum
        omega = u + v
        k = np.nonzero(sol.problem.inside_o)[0]
        assert sol.peak_value == pytest.approx(float(omega[k].max()), rel=1e-14)


def test_warm_start_and_report(std_ladder):
    row = [r for r in std_ladder if r["eps"] == 0.1][0]
    sol = row["solution"]
    rep = truncation_report(sol.problem, sol)
    assert rep["active_fraction"] == 0.0
    assert rep["original_equation_solved"]
    assert rep["untruncated_residual"] <= 1e-6
    # untruncated and penalized defects agree when nothing is flattened
    raw = untruncated_defect(sol.problem, sol.fields.u.values,
                             sol.fields.v.values)
    pen = eps_defect(sol.problem, sol.fields.u.values, sol.fields.v.values)
    assert raw == pytest.approx(pen, rel=1e-10, abs=1e-14)


def test_series_columns(std_ladder, std_config):
    eps_col = [r["eps"] for r in std_ladder]
    assert eps_col == sorted(eps_col, reverse=True)
    dist = [r["dist_to_min_set"] for r in std_ladder]
    assert all(d2 <= d1 + 1e-12 for d1, d2 in zip(dist, dist[1:]))
    gaps = [r["level_gap"] for r in std_ladder]
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
    prof = [r["profile_error"] for r in std_ladder]
    assert all(p2 < p1 for p1, p2 in zip(prof, prof[1:]))


def test_profile_error_spacing_guard(std_ladder):
    row = std_ladder[0]
    sol = row["solution"]
    from cnls.limit import LimitProblem, default_grid, minimize_nehari
    gs_fine = minimize_nehari(LimitProblem(0.5, 0.5, PARAMS,
                                           default_grid(0.5, 0.5, n=1024)))
    with pytest.raises(ConfigurationError):
        profile_error(sol, gs_fine)


def test_gaussian_init_admissible(prob):
    init = gaussian_eps_init(prob)
    assert in_candidate_set(prob, init)
    assert penalty_balance_ok(prob, init.u.values, init.v.values)
