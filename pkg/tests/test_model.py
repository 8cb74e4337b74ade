"""Problem data: potential families, the coupling threshold, and the
penalized interaction machinery."""

import math

import numpy as np
import pytest

from cnls.errors import (AdmissibilityError, ConfigurationError, DomainError)
from cnls.model import (Ball, CouplingParams, DomainSpec,
                        TruncationParams, constant_potentials,
                        coupling_threshold, eps_upper_limit, penalty_weight,
                        pointwise_coupling_threshold, quartic_density,
                        quartic_density_grad, radial_well, truncated_density,
                        truncated_density_grad, two_well, vanishing_point)


@pytest.fixture(scope="module")
def domain():
    return DomainSpec(lam=Ball((0, 0, 0), 4.5), region_o=Ball((0, 0, 0), 3.5))


@pytest.fixture(scope="module")
def trunc(domain):
    return TruncationParams(eps=0.2, domain=domain, beta=2.0)


PARAMS = CouplingParams(1.0, 1.0, 2.0)


# -- coupling threshold -------------------------------------------------------

def test_threshold_equal_potentials(domain):
    thr, _ = coupling_threshold(CouplingParams(1.0, 1.0, 2.0), radial_well(),
                                domain.lam)
    assert thr == pytest.approx(1.0, abs=1e-12)


def test_threshold_ratio_case(domain):
    # frozen values a=2, b=1: largest ratio 2, max mu 3 -> threshold 6
    pots = constant_potentials(2.0, 1.0)
    thr, _ = coupling_threshold(CouplingParams(2.0, 3.0, 10.0), pots, domain.lam)
    assert thr == pytest.approx(6.0, abs=1e-12)
    assert pointwise_coupling_threshold(CouplingParams(2.0, 3.0, 10.0), 2.0, 1.0) \
        == pytest.approx(6.0)


def test_threshold_scale_invariance(domain):
    thr1, _ = coupling_threshold(PARAMS, constant_potentials(1.5, 0.6), domain.lam)
    thr2, _ = coupling_threshold(PARAMS, constant_potentials(3.0, 1.2), domain.lam)
    assert thr1 == pytest.approx(thr2, rel=1e-12)


def test_threshold_vanishing_error(domain):
    pots = constant_potentials(1.0, 1.0)
    pots.constant_values = (0.0, 1.0)
    with pytest.raises(AdmissibilityError):
        coupling_threshold(PARAMS, pots, domain.lam)


# -- quartic density ----------------------------------------------------------

def test_quartic_density_values():
    assert quartic_density(0.0, 0.0, PARAMS) == 0.0
    p1 = CouplingParams(1.0, 1.0, 1.0)
    assert quartic_density(1.0, 1.0, p1) == pytest.approx(1.0)
    p2 = CouplingParams(2.0, 4.0, 3.0)
    assert quartic_density(1.0, 2.0, p2) == pytest.approx(22.5)


def test_quartic_density_even():
    rng = np.random.default_rng(11)
    for _ in range(50):
        s, t = rng.uniform(-3, 3, 2)
        assert quartic_density(s, t, PARAMS) == pytest.approx(
            quartic_density(-s, t, PARAMS))
        assert quartic_density(s, t, PARAMS) == pytest.approx(
            quartic_density(s, -t, PARAMS))
        assert quartic_density(s, t, PARAMS) >= 0.0


# -- penalty weight -----------------------------------------------------------

def test_penalty_weight_values(trunc):
    eps = trunc.eps
    val = penalty_weight(18.0, trunc)
    assert val == pytest.approx(eps ** 2 / (18.0 ** 2 * math.log(18.0)))
    # direct check of the quoted numbers at eps = 0.1
    d2 = DomainSpec(lam=Ball((0, 0, 0), 2.0), region_o=Ball((0, 0, 0), 0.9))
    t2 = TruncationParams(eps=0.1, domain=d2, beta=2.0)
    assert penalty_weight(10.0, t2) == pytest.approx(0.01 / (100.0 * math.log(10.0)))
    ratio = penalty_weight(10.0, t2) / penalty_weight(100.0, t2)
    assert ratio == pytest.approx(100.0 * math.log(100.0) / math.log(10.0))


def test_penalty_weight_eps_scaling(domain):
    t1 = TruncationParams(eps=0.1, domain=domain, beta=2.0)
    t2 = TruncationParams(eps=0.2, domain=domain, beta=2.0)
    assert penalty_weight(40.0, t2) == pytest.approx(4.0 * penalty_weight(40.0, t1))


def test_penalty_weight_domain_error(trunc):
    with pytest.raises(DomainError):
        penalty_weight(trunc.domain.rho0 / trunc.eps * 0.9, trunc)


def test_penalty_weight_monotone(trunc):
    t0 = trunc.domain.rho0 / trunc.eps
    ts = np.linspace(t0, t0 * 50, 500)
    vals = penalty_weight(ts, trunc)
    assert np.all(np.diff(vals) < 0.0)


# -- eps upper limit ----------------------------------------------------------

def test_eps_upper_limit_defining_equation():
    beta, rho0 = 2.0, 3.5
    e1 = eps_upper_limit(beta, rho0)
    assert math.sqrt(beta) * e1 ** 2 / math.log(rho0 / e1) == pytest.approx(0.125,
                                                                            rel=1e-10)
    # monotone dependence: larger beta shrinks the limit
    assert eps_upper_limit(4.0, rho0) < e1


def test_truncation_params_validation(domain):
    limit = eps_upper_limit(2.0, domain.rho0)
    with pytest.raises(ConfigurationError):
        TruncationParams(eps=limit * 1.01, domain=domain, beta=2.0)
    with pytest.raises(ConfigurationError):
        TruncationParams(eps=-0.1, domain=domain, beta=2.0)
    TruncationParams(eps=limit * 0.99, domain=domain, beta=2.0)


# -- truncated density --------------------------------------------------------

def test_truncated_density_zero(trunc):
    for x in ([0.0, 0.0, 0.0], [30.0, 0.0, 0.0]):
        assert truncated_density(x, 0.0, 0.0, PARAMS, trunc) == 0.0
        assert truncated_density_grad(x, 0.0, 0.0, PARAMS, trunc) == (0.0, 0.0)


def test_truncated_density_inside_is_plain(trunc):
    x = [0.5 / trunc.eps, 0.0, 0.0]   # deep inside the rescaled region
    s, t = 1.3, 0.4
    assert truncated_density(x, s, t, PARAMS, trunc) == pytest.approx(
        quartic_density(s, t, PARAMS))
    gs, gt = truncated_density_grad(x, s, t, PARAMS, trunc)
    es, et = quartic_density_grad(s, t, PARAMS)
    assert (gs, gt) == pytest.approx((es, et))


def test_truncated_density_switch_continuity(trunc):
    # pick (s, t) = c (1, 1) with the plain density exactly at the threshold
    r = 1.2 * trunc.domain.rho1 / trunc.eps
    x = [r, 0.0, 0.0]
    g = penalty_weight(r, trunc)
    csum = PARAMS.mu1 + 2.0 * PARAMS.beta + PARAMS.mu2
    c = (g * g / csum) ** 0.25
    F_at = quartic_density(c, c, PARAMS)
    assert F_at == pytest.approx(0.25 * g * g, rel=1e-12)
    flattened = g * math.sqrt(F_at) - 0.25 * g * g
    assert truncated_density(x, c, c, PARAMS, trunc) == pytest.approx(F_at, rel=1e-12)
    assert flattened == pytest.approx(F_at, rel=1e-12)
    # gradient continuity across the switch
    lo = truncated_density_grad(x, c * (1 - 1e-7), c * (1 - 1e-7), PARAMS, trunc)
    hi = truncated_density_grad(x, c * (1 + 1e-7), c * (1 + 1e-7), PARAMS, trunc)
    assert lo == pytest.approx(hi, rel=1e-5)


def test_truncated_density_dominated(trunc):
    # flattened branch stays below the plain quartic everywhere
    rng = np.random.default_rng(23)
    for _ in range(300):
        r = rng.uniform(0.1, 60.0) / trunc.eps
        s, t = rng.uniform(0.0, 3.0, 2)
        val = truncated_density([r, 0.0, 0.0], s, t, PARAMS, trunc)
        assert val <= quartic_density(s, t, PARAMS) + 1e-14


def test_truncated_density_homogeneity_inside(trunc):
    # inside the region the gradient pairing is four times the density
    rng = np.random.default_rng(29)
    for _ in range(100):
        s, t = rng.uniform(0.0, 3.0, 2)
        x = [rng.uniform(0.0, trunc.domain.rho1 / trunc.eps * 0.99), 0.0, 0.0]
        G = truncated_density(x, s, t, PARAMS, trunc)
        gs, gt = truncated_density_grad(x, s, t, PARAMS, trunc)
        assert gs * s + gt * t == pytest.approx(4.0 * G, rel=1e-12, abs=1e-12)


def test_truncated_density_outside_bounds(trunc):
    # outside: 2 G <= grad.(s,t) <= sqrt(beta) weight (s^2 + t^2)
    rng = np.random.default_rng(31)
    sqb = math.sqrt(PARAMS.beta)
    r_min = trunc.domain.rho1 / trunc.eps
    for _ in range(300):
        r = rng.uniform(r_min * 1.001, r_min * 30)
        s, t = rng.uniform(0.0, 5.0, 2)
        G = truncated_density([r, 0.0, 0.0], s, t, PARAMS, trunc)
        gs, gt = truncated_density_grad([r, 0.0, 0.0], s, t, PARAMS, trunc)
        pair = gs * s + gt * t
        assert pair >= 2.0 * G - 1e-12
        assert pair <= sqb * penalty_weight(r, trunc) * (s * s + t * t) + 1e-12


def test_fiber_monotonicity(trunc):
    # (1/t) d/dt G(x, t s, t t) nondecreasing in t, sampled
    rng = np.random.default_rng(37)
    r_min = trunc.domain.rho1 / trunc.eps
    for _ in range(60):
        r = rng.uniform(0.2, 3.0) * r_min
        s, t = rng.uniform(0.1, 2.0, 2)
        ts = np.geomspace(0.05, 20.0, 40)
        vals = []
        for tt in ts:
            gs, gt = truncated_density_grad([r, 0.0, 0.0], tt * s, tt * t,
                                            PARAMS, trunc)
            vals.append((gs * s + gt * t) / tt)
        assert np.all(np.diff(vals) >= -1e-10 * np.abs(vals[1:]))


def test_grad_matches_finite_differences(trunc):
    rng = np.random.default_rng(41)
    r_min = trunc.domain.rho1 / trunc.eps
    checked = 0
    for _ in range(200):
        r = rng.uniform(0.2, 4.0) * r_min
        s, t = rng.uniform(0.2, 2.5, 2)
        x = [r, 0.0, 0.0]
        g = penalty_weight(r, trunc) if r >= trunc.domain.rho0 / trunc.eps else None
        F = quartic_density(s, t, PARAMS)
        if g is not None and abs(F - 0.25 * g * g) < 0.05 * max(F, 1e-12):
            continue   # stay away from the switch surface
        eps_fd = 1e-6 * max(s, t)
        gs, gt = truncated_density_grad(x, s, t, PARAMS, trunc)
        fd_s = (truncated_density(x, s + eps_fd, t, PARAMS, trunc)
                - truncated_density(x, s - eps_fd, t, PARAMS, trunc)) / (2 * eps_fd)
        fd_t = (truncated_density(x, s, t + eps_fd, PARAMS, trunc)
                - truncated_density(x, s, t - eps_fd, PARAMS, trunc)) / (2 * eps_fd)
        scale = max(abs(gs), abs(gt), 1e-9)
        assert abs(gs - fd_s) < 1e-6 * scale + 1e-9
        assert abs(gt - fd_t) < 1e-6 * scale + 1e-9
        checked += 1
    assert checked > 100


# -- potential families -------------------------------------------------------

@pytest.mark.parametrize("pots", [radial_well(), two_well(),
                                  vanishing_point(), constant_potentials()])
def test_families_admissible(pots, domain):
    lam = domain.lam if pots.family != "two_well" else Ball((0, 0, 0), 3.0)
    pts = lam.raster(lam.radius / 16.0, closure=True)
    pots.check_nonnegative(pts)
    assert pots.check_slow_decay() > 0.0
    a0, b0 = pots.core_infimum(lam, lam.radius / 16.0)
    assert a0 > 0.0 and b0 > 0.0


def test_radial_well_shape():
    pots = radial_well()
    r = np.linspace(0.0, 3.5, 200)
    a, b = pots.evaluate_radii(r)
    assert np.array_equal(a, b)
    assert np.argmin(a) == 0              # minimum at the origin
    assert a[0] == pytest.approx(0.5, abs=1e-12)
    assert a[-1] > 0.9                    # well boundary well above the dip


def test_vanishing_point_attains_zero():
    pots = vanishing_point()
    z = np.asarray(pots.vanish_center).reshape(1, 3)
    a, b = pots.evaluate(z)
    assert a[0] == 0.0 and b[0] == 0.0     # infimum zero is attained...
    a0, b0 = pots.core_infimum(Ball((0, 0, 0), 4.5), 0.2)
    assert a0 > 0.0                        # ...but not on the working region


def test_two_well_depths():
    pots = two_well()
    pts = np.array([[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    a, _ = pots.evaluate(pts)
    assert a[0] < a[1]                     # deeper well is lower


def test_offset_pair():
    pots = radial_well(a_offset=0.5)
    r = np.linspace(0.0, 5.0, 50)
    a, b = pots.evaluate_radii(r)
    assert np.allclose(a - b, 0.5)


def test_domain_spec_validation():
    with pytest.raises(ConfigurationError):
        DomainSpec(lam=Ball((0, 0, 0), 2.0), region_o=Ball((0, 0, 0), 3.0))
    dom = DomainSpec(lam=Ball((0, 0, 0), 4.5), region_o=Ball((0, 0, 0), 3.5))
    assert dom.delta == pytest.approx(3.5 / 8.0)
    a0, b0 = radial_well().core_infimum(dom.lam, 0.2)
    dom.check_core_margin(radial_well(), a0, b0, 0.2)
