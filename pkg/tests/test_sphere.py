import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sci_integrate
from scipy.special import gammaln

from tomostab import specfun
from tomostab.sphere import (apply_multiplier, apply_multiplier_at, build_grid, integrate,
                             multiplier, project_degree, project_degree_direct, sample,
                             spectrum, subsphere_quadrature)
from tomostab.sections import radon_multipliers

from conftest import random_units, unit


def monomial_integral(alpha):
    """Exact integral of prod u_i^{a_i} over S^{n-1} (all a_i even)."""
    alpha = np.asarray(alpha)
    if np.any(alpha % 2):
        return 0.0
    b = (alpha + 1) / 2.0
    return 2.0 * math.exp(gammaln(b).sum() - gammaln(b.sum()))


def test_circle_grid():
    g = build_grid(2, 64)
    assert g.size == 128
    assert np.allclose(g.weights, g.weights[0])
    assert g.weights.sum() == pytest.approx(2 * math.pi, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_grid_invariants(n):
    g = build_grid(n, 8)
    assert np.abs(np.linalg.norm(g.nodes, axis=1) - 1).max() < 1e-12
    assert g.weights.sum() == pytest.approx(specfun.sphere_surface_area(n), rel=1e-8)
    assert np.all(g.weights > 0)
    assert np.abs(g.nodes[g.antipode] + g.nodes).max() < 1e-14
    assert np.array_equal(g.weights[g.antipode], g.weights)
    assert len(g.half) * 2 == g.size


def test_grid_examples():
    assert build_grid(3, 16).weights.sum() == pytest.approx(4 * math.pi, rel=1e-8)
    g = build_grid(4, 16)
    assert integrate(sample(g, lambda u: u[:, 0] ** 2)) == pytest.approx(math.pi ** 2 / 2, rel=1e-6)


@pytest.mark.parametrize("n", [1, 7])
def test_grid_rejects_dimension(n):
    with pytest.raises(ValueError):
        build_grid(n, 8)


def test_grid_rejects_low_resolution():
    with pytest.raises(ValueError):
        build_grid(3, 3)


@given(n=st.integers(3, 5), data=st.data())
def test_quadrature_exact_for_monomials(n, data):
    res = 8
    total = data.draw(st.integers(0, 2 * res - 1))
    alpha = [0] * n
    for _ in range(total):
        alpha[data.draw(st.integers(0, n - 1))] += 1
    g = build_grid(n, res)
    f = sample(g, lambda u: np.prod(u ** np.array(alpha), axis=1))
    assert integrate(f) == pytest.approx(monomial_integral(alpha), abs=1e-12)


def test_integrate_examples():
    g = build_grid(3, 32)
    assert integrate(sample(g, lambda u: np.ones(len(u)))) == pytest.approx(4 * math.pi, rel=1e-13)
    assert integrate(sample(g, lambda u: u[:, 2] ** 2)) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    # 1-D oracle: 2 pi * int_0^pi |cos t| sin t dt
    ref = 2 * math.pi * sci_integrate.quad(lambda t: abs(math.cos(t)) * math.sin(t), 0, math.pi,
                                           points=[math.pi / 2])[0]
    assert ref == pytest.approx(2 * math.pi)
    got = integrate(sample(build_grid(3, 256), lambda u: np.abs(u[:, 0])))
    assert got == pytest.approx(ref, rel=1e-4)


def test_subsphere_examples():
    q = subsphere_quadrature(np.array([0.0, 0.0, 1.0]), 24)
    assert q.weights.sum() == pytest.approx(2 * math.pi, rel=1e-12)
    assert np.abs(q.nodes[:, 2]).max() < 1e-14
    for xi in random_units(np.random.default_rng(1), 5, 4):
        q = subsphere_quadrature(xi, 12)
        assert q.weights.sum() == pytest.approx(4 * math.pi, rel=1e-8)
        assert np.abs(q.nodes @ xi).max() < 1e-12
    xi = unit([1, 1, 1])
    q = subsphere_quadrature(xi, 8)
    assert np.abs(q.basis @ xi).max() < 1e-12
    assert np.allclose(q.basis @ q.basis.T, np.eye(2), atol=1e-12)


def test_subsphere_requires_unit_vector():
    with pytest.raises(ValueError):
        subsphere_quadrature(np.array([0.0, 0.0, 2.0]))


def test_project_degree_examples():
    g = build_grid(3, 16)
    one = sample(g, lambda u: np.ones(len(u)))
    assert np.allclose(project_degree(one, 0).values, 1.0, atol=1e-12)
    assert np.abs(project_degree(one, 2).values).max() < 1e-8
    f = sample(g, lambda u: u[:, 2] ** 2)
    assert np.allclose(project_degree(f, 2).values, g.nodes[:, 2] ** 2 - 1 / 3, atol=1e-12)


def test_project_degree_rejects_odd():
    g = build_grid(3, 8)
    with pytest.raises(ValueError):
        project_degree(sample(g, lambda u: u[:, 0] ** 2), 3)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_projection_idempotent_and_orthogonal(n):
    g = build_grid(n, 12)
    f = sample(g, lambda u: np.exp(u[:, 0] * u[:, -1]) + u[:, 0] ** 4)
    h = sample(g, lambda u: np.cos(u[:, 0] + 2 * u[:, 1] ** 2))
    p2 = project_degree(f, 2, 8)
    assert np.allclose(project_degree(p2, 2, 8).values, p2.values, atol=1e-6)
    for j, k in ((0, 2), (2, 4), (4, 6)):
        a, b = project_degree(f, j, 8), project_degree(h, k, 8)
        assert abs(integrate(a * b)) < 1e-7


@pytest.mark.parametrize("n", [3, 4])
def test_grid_projection_matches_funk_hecke_sum(n):
    """Separable projector vs the defining kernel sum, evaluated off the tensor structure."""
    g = build_grid(n, 10)
    f = sample(g, lambda u: (1 + 0.3 * u[:, 0] ** 2) ** -1.5)
    for k in (0, 2, 4, 6):
        idx = np.arange(0, g.size, max(1, g.size // 40))
        direct = project_degree_direct(f, k, g.nodes[idx])
        assert np.allclose(project_degree(f, k, 8).values[idx], direct, atol=1e-11)


def test_decomposition_completeness_ellipsoid():
    axes = np.array([0.8, 1.25, 1.0, 1.1])
    g = build_grid(4, 20)
    rho3 = lambda u: (((u / axes) ** 2).sum(axis=1)) ** -1.5
    f = sample(g, rho3)
    recon = apply_multiplier(f, multiplier(4, 16, lambda k: 1.0))
    assert np.abs(recon.values - f.values).max() / np.abs(f.values).max() <= 1e-4


def test_apply_multiplier_examples():
    g = build_grid(3, 16)
    one = sample(g, lambda u: np.ones(len(u)))
    assert np.allclose(apply_multiplier(one, radon_multipliers(3, 8)).values, 2 * math.pi)
    f = sample(g, lambda u: u[:, 2] ** 2)
    at_pole = apply_multiplier_at(f, radon_multipliers(3, 8), np.array([[0.0, 0.0, 1.0]]))
    assert abs(at_pole[0]) < 1e-12


@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_apply_multiplier_linear(a, b):
    g = build_grid(3, 10)
    f = sample(g, lambda u: u[:, 0] ** 2 * u[:, 1] ** 2)
    h = sample(g, lambda u: np.exp(u[:, 2] ** 2))
    m = multiplier(3, 8, lambda k: 1.0 / (1 + k))
    lhs = apply_multiplier(a * f + b * h, m).values
    rhs = a * apply_multiplier(f, m).values + b * apply_multiplier(h, m).values
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + abs(a) + abs(b)))


def test_off_grid_combination_matches_on_grid():
    g = build_grid(4, 12)
    f = sample(g, lambda u: 1 / (1 + 0.5 * u[:, 1] ** 2))
    sp = spectrum(f, 10)
    entries = [1.0 / (k + 1) for k in range(0, 11, 2)]
    idx = np.arange(0, g.size, 97)
    assert np.allclose(sp.combine_at(entries, g.nodes[idx]), sp.combine(entries)[idx], atol=1e-11)


def test_spectrum_rejects_lmax_above_grid():
    g = build_grid(3, 8)
    with pytest.raises(ValueError):
        spectrum(sample(g, lambda u: u[:, 0] ** 2), 10)
