import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh_tridiagonal

from hypmaps.geometry import (
    TWO_PI, annuli, build_grid, face_gradient, gradient_norm, integrate, k_sigma, l2_inner, lp_norm,
    mode_laplacian, negative_mode_laplacian, node_gradient, operator_with_potential,
)


def independent_lowest(r_max, n, m):
    """Stand-alone assembly of the same finite-volume pencil (oracle)."""
    f = np.linspace(0, r_max, n + 1)
    r = 0.5 * (f[1:] + f[:-1])
    w = np.cosh(f[1:]) - np.cosh(f[:-1])
    c = np.sinh(f[1:-1]) / np.diff(r)
    d = np.zeros(n)
    d[:-1] += c
    d[1:] += c
    d[-1] += np.sinh(f[-1]) / (f[-1] - r[-1])
    d += w * m * m / np.sinh(r) ** 2
    s = 1 / np.sqrt(w)
    return eigh_tridiagonal(d * s * s, -c * s[:-1] * s[1:], select="i", select_range=(0, 0))[0][0]


def test_grid_basic_invariants():
    g = build_grid(20.0, 400)
    assert g.n == 400 and g.faces[0] == 0.0 and g.faces[-1] == 20.0
    assert np.all(g.weights > 0)
    assert math.isclose(np.sum(g.weights), math.cosh(20.0) - 1.0, rel_tol=1e-12)
    assert np.all(np.diff(g.nodes) > 0)


def test_graded_grid_resolves_core():
    g = build_grid(20.0, 400, "graded")
    assert g.faces[1] < build_grid(20.0, 400).faces[1]
    assert math.isclose(g.faces[-1], 20.0)


@pytest.mark.parametrize("bad", [dict(r_max=-1.0, n=100), dict(r_max=10.0, n=4), dict(r_max=10.0, n=100, scheme="x")])
def test_grid_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        build_grid(**bad)


def test_refine_doubles_cells():
    g = build_grid(10.0, 100)
    assert g.refine(2).n == 200 and g.refine(2).r_max == 10.0


def test_area_integral():
    g = build_grid(5.0, 200)
    assert math.isclose(integrate(g, np.ones(g.n)).real, TWO_PI * (math.cosh(5.0) - 1), rel_tol=1e-12)


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_lowest_eigenvalue_matches_independent_assembly(m):
    g = build_grid(20.0, 1000)
    mu = negative_mode_laplacian(g, m).eigen(1)[0]
    assert math.isclose(mu, independent_lowest(20.0, 1000, m), rel_tol=1e-10)


def test_frozen_gap_value():
    # frozen from a converged run; continuum value on the disk of radius 20 exceeds 1/4
    mu = negative_mode_laplacian(build_grid(20.0, 1000), 0).eigen(1)[0]
    assert mu == pytest.approx(0.271676446452659, rel=1e-9)


def test_laplacian_second_order_on_gaussian():
    errs = []
    for n in (200, 400, 800):
        g = build_grid(8.0, n)
        r = g.nodes
        f = np.exp(-r * r)
        exact = (4 * r * r - 2) * f + (-2 * r * f) / np.tanh(r)
        approx = mode_laplacian(g, 0).apply(f, math.exp(-64.0))
        errs.append(np.max(np.abs(approx - exact)))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_operator_is_symmetric_in_weighted_inner_product(rng):
    g = build_grid(10.0, 100)
    op = negative_mode_laplacian(g, 2)
    f, h = rng.normal(size=g.n), rng.normal(size=g.n)
    assert math.isclose(l2_inner(g, op.apply(f), h).real, l2_inner(g, f, op.apply(h)).real, rel_tol=1e-10)


def test_solve_shifted_inverts(rng):
    g = build_grid(10.0, 150)
    op = negative_mode_laplacian(g, 1)
    x = rng.normal(size=g.n) + 1j * rng.normal(size=g.n)
    for alpha, beta in ((1.0, 0.3), (1.0, 0.5j)):
        rhs = alpha * x + beta * op.apply(x)
        assert np.allclose(op.solve_shifted(alpha, beta, rhs), x, atol=1e-9)


def test_potential_builder_matches_mode_laplacian():
    g = build_grid(10.0, 100)
    a = operator_with_potential(g, 4.0 / g.sinh_nodes**2).to_sparse().toarray()
    b = negative_mode_laplacian(g, 2).to_sparse().toarray()
    assert np.allclose(a, b)


def test_gradients_are_exact_on_linear_data():
    g = build_grid(4.0, 200)
    f = 3.0 * g.nodes
    assert np.allclose(face_gradient(g, f, 3.0 * 4.0), 3.0)
    assert np.allclose(node_gradient(g, f, 12.0, parity=-1), 3.0)


def test_gradient_norm_matches_quadratic_form(rng):
    g = build_grid(10.0, 200)
    f = rng.normal(size=g.n) * np.exp(-g.nodes)
    for m in (0, 2):
        q = l2_inner(g, negative_mode_laplacian(g, m).apply(f), f).real
        assert math.isclose(gradient_norm(g, f, m) ** 2, q, rel_tol=1e-10)


def test_lp_norm_special_cases():
    g = build_grid(3.0, 100)
    f = np.exp(-g.nodes)
    assert lp_norm(g, f, math.inf) == pytest.approx(np.max(f))
    with pytest.raises(ValueError):
        lp_norm(g, f, 0.5)


@settings(max_examples=25, deadline=None)
@given(c=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       p=st.sampled_from([1.0, 2.0, 4.0, 8.0 / 3.0, math.inf]))
def test_lp_norm_homogeneous(c, p):
    g = build_grid(5.0, 64)
    f = np.cos(g.nodes) * np.exp(-g.nodes)
    assert lp_norm(g, c * f, p) == pytest.approx(abs(c) * lp_norm(g, f, p), rel=1e-12, abs=1e-300)


@settings(max_examples=20, deadline=None)
@given(r_max=st.floats(1.0, 30.0), n=st.integers(16, 300))
def test_grid_weights_positive_and_exact(r_max, n):
    g = build_grid(r_max, n)
    assert np.all(g.weights > 0)
    assert math.isclose(np.sum(g.weights), math.cosh(r_max) - 1.0, rel_tol=1e-10)


def test_annuli_and_k_sigma():
    g = build_grid(20.0, 400)
    dec = annuli(g)
    assert np.all(dec.shell(0) == ((g.nodes >= 1) & (g.nodes < 2)))
    assert np.all(dec.ball(0) | dec.outside(0))
    assert k_sigma(1.0) == 0 and k_sigma(0.25) == 1 and k_sigma(1e-4) == 6
    with pytest.raises(ValueError):
        k_sigma(0.0)
