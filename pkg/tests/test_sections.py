import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sci_integrate

from tomostab import specfun
from tomostab.bodies import (analytic_reference, ball, cube, ellipsoid, perturbed_ball,
                             volume)
from tomostab.config import DEFAULT, Settings, cached_grid
from tomostab.sections import (CERTIFIED, NOT_CERTIFIED, intersection_certificate,
                               polytope_section, radon_direct, radon_direct_many,
                               radon_multiplier, radon_multipliers, radon_spectral,
                               route_agreement, section_direct, section_function,
                               section_route, verify_bp_separation, verify_bp_stability,
                               verify_corollary_n4)
from tomostab.sphere import apply_multiplier_at, sample

from conftest import random_units, unit


# -- Radon transform ---------------------------------------------------------

def test_radon_direct_examples():
    one = lambda u: np.ones(len(u))
    u3sq = lambda u: u[:, 2] ** 2
    assert radon_direct(one, unit([0.2, -0.4, 1.0])) == pytest.approx(2 * math.pi, rel=1e-13)
    assert abs(radon_direct(u3sq, np.array([0.0, 0.0, 1.0]))) < 1e-15
    ref = sci_integrate.quad(lambda t: math.sin(t) ** 2, 0, 2 * math.pi)[0]
    assert radon_direct(u3sq, np.array([1.0, 0.0, 0.0])) == pytest.approx(ref, rel=1e-12)
    assert ref == pytest.approx(math.pi)


def test_radon_multiplier_examples():
    assert radon_multiplier(3, 0) == pytest.approx(2 * math.pi)
    assert radon_multiplier(3, 2) == pytest.approx(-math.pi)
    assert radon_multiplier(4, 0) == pytest.approx(4 * math.pi)
    # circle: two-point transform, |S^0| = 2
    assert radon_multiplier(2, 0) == 2.0 and radon_multiplier(2, 2) == -2.0
    # the harmonic u_3^2 - 1/3 at e_3 under both routes
    assert 2 * math.pi / 3 + (-math.pi) * (1 - 1 / 3) == pytest.approx(0.0, abs=1e-15)
    f = sample(cached_grid(3, 16), lambda u: u[:, 2] ** 2)
    assert abs(apply_multiplier_at(f, radon_multipliers(3, 4), np.array([[0, 0, 1.0]]))[0]) < 1e-12


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_radon_multipliers_match_funk_hecke_integral(n):
    """c_{n,k} against a 1-D Funk-Hecke oracle: |S^{n-2}| P_k(0) for the Legendre-type P_k."""
    nu = (n - 2) / 2
    for k in range(0, 13, 2):
        # C_k^{nu}(0) in closed form
        c0 = (-1) ** (k // 2) * math.gamma(k // 2 + nu) / (math.gamma(nu) * math.factorial(k // 2))
        ref = specfun.sphere_surface_area(n - 1) * c0 / specfun.gegenbauer_at_one(k, nu)
        assert radon_multiplier(n, k) == pytest.approx(ref, rel=1e-12)


def test_radon_two_point_transform_circle():
    g = cached_grid(2, 32)
    f = sample(g, lambda u: np.exp(u[:, 0] ** 2) + u[:, 0] ** 2 * u[:, 1] ** 2)
    xi = random_units(np.random.default_rng(0), 20, 2)
    perp = np.stack([-xi[:, 1], xi[:, 0]], axis=1)
    direct = 2 * f.evaluator(perp)
    spec = apply_multiplier_at(f, radon_multipliers(2, 30), xi)
    assert np.allclose(spec, direct, atol=1e-10)


def _even_field(rng, n):
    A = rng.normal(size=(n, n)) * 0.6
    A = A + A.T
    b = rng.normal(size=n)
    return lambda u: np.exp(np.einsum("ij,jk,ik->i", u, A, u)) + (u @ b) ** 2


@pytest.mark.parametrize("n, res, sub_res", [(3, 16, 64), (4, 12, 24)])
def test_self_duality(n, res, sub_res):
    rng = np.random.default_rng(n)
    g = cached_grid(n, res)
    for _ in range(3):
        f, h = _even_field(rng, n), _even_field(rng, n)
        Rf = radon_direct_many(f, g.nodes, sub_res)
        Rh = radon_direct_many(h, g.nodes, sub_res)
        lhs = g.weights @ (Rf * h(g.nodes))
        rhs = g.weights @ (f(g.nodes) * Rh)
        assert abs(lhs - rhs) <= 1e-5 * abs(rhs)


@given(seed=st.integers(0, 10_000))
def test_radon_positivity(seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=3)
    f = lambda u: (u @ c) ** 2 * np.abs(u[:, 0])
    vals = radon_direct_many(f, random_units(rng, 30, 3), 32)
    assert np.all(vals >= 0)


def _random_smooth(rng, n):
    if rng.random() < 0.5:
        return ellipsoid(rng.uniform(0.85, 1.2, size=n))
    return perturbed_ball(n, float(rng.uniform(0.02, 0.2)), int(rng.choice([2, 4])),
                          direction=rng.normal(size=n))


@pytest.mark.parametrize("n", [3, 4])
def test_route_agreement_random_bodies(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(5):
        assert route_agreement(_random_smooth(rng, n)) <= 1e-3


def test_radon_spectral_vs_direct_on_grid():
    g = cached_grid(3, 20)
    f = sample(g, lambda u: 1 / (1 + 0.4 * u[:, 0] ** 2 + 0.2 * u[:, 2] ** 2))
    spec = radon_spectral(f, 18).values
    idx = np.arange(0, g.size, 37)
    direct = radon_direct_many(f.evaluator, g.nodes[idx], 128)
    assert np.abs(spec[idx] - direct).max() < 1e-6


# -- section functions --------------------------------------------------------

def test_section_function_examples():
    assert np.allclose(section_function(ball(3)).values, math.pi, rtol=1e-12)
    E = ellipsoid([1, 2, 3])
    assert section_direct(E, np.array([[0, 0, 1.0]]))[0] == pytest.approx(2 * math.pi, rel=1e-10)
    assert section_direct(cube(4), np.array([[1.0, 0, 0, 0]]))[0] == pytest.approx(8.0, rel=1e-12)


def test_ellipsoid_sections_against_closed_form():
    rng = np.random.default_rng(5)
    for n in (3, 4):
        E = ellipsoid(rng.uniform(0.8, 1.25, n))
        xi = random_units(rng, 25, n)
        ref = np.array([analytic_reference(E, "section", x) for x in xi])
        assert np.allclose(section_direct(E, xi), ref, rtol=1e-8)
        sf = section_function(E, DEFAULT, "spectral")
        ref_grid = np.array([analytic_reference(E, "section", x) for x in sf.grid.nodes[::50]])
        assert np.allclose(sf.values[::50], ref_grid, rtol=1e-5)


def test_polytope_sections_exact():
    # diagonal slice of the unit square / cube: known closed forms
    assert polytope_section(cube(3), unit([1, 1, 0])[None])[0] == pytest.approx(4 * math.sqrt(2))
    assert polytope_section(cube(3), unit([1, 1, 1])[None])[0] == pytest.approx(3 * math.sqrt(3))
    # quadrature of rho^{n-1} converges to the same value
    xi = random_units(np.random.default_rng(2), 5, 4)
    quad = radon_direct_many(lambda u: cube(4).radial(u) ** 3, xi, 256) / 3
    assert np.allclose(polytope_section(cube(4), xi), quad, rtol=2e-3)


def test_auto_route_choice():
    assert section_route(ball(4)) == "spectral"
    assert section_route(ellipsoid([1, 2, 3])) == "direct"  # slow harmonic decay
    assert section_route(cube(3)) == "direct"


@given(t=st.floats(0.3, 3.0))
def test_section_scale_equivariance(t):
    for K in (ellipsoid([1, 1.2, 0.9]), cube(3)):
        a = section_function(K).values
        b = section_function(K.scaled(t)).values
        assert np.allclose(b, t ** 2 * a, rtol=1e-8)


# -- certificates -------------------------------------------------------------

def test_ball_certificate_density_constant():
    c = intersection_certificate(ball(3))
    assert c.verdict == CERTIFIED
    assert np.allclose(c.density.values, 1 / (2 * math.pi), rtol=1e-10)


def test_cube4_certified_by_shortcut_and_computation():
    c = intersection_certificate(cube(4))
    assert c.verdict == CERTIFIED and c.shortcut
    assert not any(f.startswith("computed-verdict") for f in c.flags)
    assert all(v["verdict"] == CERTIFIED for v in c.by_lmax.values())


def test_cube5_certified_not_and_stable():
    c = intersection_certificate(cube(5))
    assert c.verdict == NOT_CERTIFIED
    assert set(c.by_lmax) == {16, 20}
    assert all(v["verdict"] == NOT_CERTIFIED for v in c.by_lmax.values())


def test_cube5_negative_near_axes_matches_oracle_sign():
    """Independent oracle: the true density at e_1 is -2/pi^4 (parallel-section formula)."""
    from tomostab.sections import inverse_radon_entries
    from tomostab.sphere import spectrum
    oracle = -2 / math.pi ** 4
    f = sample(DEFAULT.grid(5, 4), cube(5).radial)
    sp = spectrum(f, 20)
    for L in (16, 20):
        g_axis = sp.combine_at(inverse_radon_entries(5, L), np.eye(5)[:1], 0.8)[0]
        assert np.sign(g_axis) == np.sign(oracle)


def test_smooth_convex_bodies_certified_in_n5():
    for K in (ball(5), ellipsoid([1, 1.2, 0.9, 1.1, 0.95]), perturbed_ball(5, 0.1, 2)):
        assert intersection_certificate(K).verdict == CERTIFIED


# -- verifiers ----------------------------------------------------------------

def test_bp_stability_concentric_balls():
    d = 0.1
    r = verify_bp_stability(ball(3, 1 + d), ball(3))
    eps = math.pi * (2 * d + d * d)
    gap = (4 * math.pi / 3) ** (2 / 3) * ((1 + d) ** 2 - 1)
    assert r.epsilon == pytest.approx(eps, abs=1e-10)
    assert round(eps, 4) == 0.6597 and round(gap, 4) == 0.5457
    assert r.margin == pytest.approx(eps - gap, abs=1e-4)
    assert r.passed and r.hypothesis_met


def test_bp_stability_identity_case():
    K = ellipsoid([1, 1.1, 0.9])
    r = verify_bp_stability(K, K)
    assert r.epsilon == 0.0 and abs(r.margin) < 1e-12 and r.passed


def test_bp_stability_ellipsoid_vs_ball_resolution_stable():
    K, L = ellipsoid([1, 1.2, 0.9, 1.1]), ball(4, 1.05)
    a = verify_bp_stability(K, L)
    b = verify_bp_stability(K, L, Settings(resolution=24))
    assert a.passed and b.passed
    assert abs(a.margin - b.margin) <= 1e-3


def test_bp_separation_nested_balls_r4():
    rr = 0.8
    rep = verify_bp_separation(ball(4, rr), ball(4))
    eps = 4 * math.pi / 3 * (1 - rr ** 3)  # omega_3 (1 - r^3)
    c = math.sqrt(2 * math.pi / 5) * rr * (2 / math.pi ** 2) ** 0.25 / rr
    assert rep.epsilon == pytest.approx(eps, rel=1e-10)
    assert rep.constant == pytest.approx(c, rel=1e-10)
    vol = math.pi ** 2 / 2
    margin = vol ** 0.75 * (1 - rr ** 3) - c * eps
    assert rep.margin == pytest.approx(margin, abs=1e-9)
    assert rep.passed and rep.hypothesis_met


def test_bp_separation_unmet_when_equal():
    rep = verify_bp_separation(ball(4), ball(4))
    assert not rep.hypothesis_met and "eps<=0" in rep.flags


def test_bp_separation_pipeline_pair():
    rep = verify_bp_separation(ellipsoid([1, 1, 1.1]).scaled(0.9), ball(3, 1.15))
    assert rep.hypothesis_met and rep.passed and rep.margin > 0


def test_corollary_examples():
    r = verify_corollary_n4(ball(3), ball(3, 1.1))
    assert r.lhs == pytest.approx(0.545689, abs=1e-6) and r.rhs == pytest.approx(0.659734, abs=1e-6)
    assert r.passed
    r = verify_corollary_n4(cube(3), cube(3))
    assert r.lhs == 0 and r.rhs == 0 and r.passed
    a = verify_corollary_n4(cube(4), ball(4, 1.2))
    b = verify_corollary_n4(cube(4), ball(4, 1.2), Settings(resolution=20))
    assert a.passed and b.passed and abs(a.margin - b.margin) <= 1e-3
    with pytest.raises(ValueError):
        verify_corollary_n4(ball(5), ball(5))


def test_busemann_petty_affirmative_case():
    """S_K <= S_L with K an intersection body forces Vol(K) <= Vol(L)."""
    K, L = ellipsoid([1.0, 0.9, 0.95]), ball(3, 1.0)
    sK, sL = section_function(K, DEFAULT, "direct"), section_function(L, DEFAULT, "direct")
    assert (sK - sL).max() <= 0
    assert volume(K) <= volume(L)
    assert verify_bp_stability(K, L).epsilon == 0.0


def test_mismatched_dimensions_rejected():
    with pytest.raises(ValueError):
        verify_bp_stability(ball(3), ball(4))
