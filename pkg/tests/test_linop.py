import math

import numpy as np
import pytest

from hypmaps.geometry import build_grid, l2_inner
from hypmaps.linop import (
    QUARTER, critical_lambda, find_gap_eigenvalues, h1thr_norm, lowest_eigenvalue, lowest_spectrum, mode_operator,
    stability_certificate,
)
from hypmaps.frame import coulomb_frame
from hypmaps.target import HYPERBOLIC, SPHERE, harmonic_profile


def smooth(g, m, c):
    x = g.nodes / 8.0
    bump = np.where(x < 1, np.exp(-1.0 / np.clip(1 - x * x, 1e-300, None)), 0.0)
    return np.tanh(g.nodes) ** abs(m) * bump * (c[0] + c[1] * np.cos(g.nodes) + 1j * c[2] * np.cos(2 * g.nodes))


def test_H_symmetric(rng):
    g = build_grid(20.0, 300)
    op = mode_operator(HYPERBOLIC, 0.5, g, 1)
    f, h = smooth(g, 1, rng.normal(size=3)), smooth(g, 1, rng.normal(size=3))
    assert l2_inner(g, op.apply(f), h) == pytest.approx(l2_inner(g, f, op.apply(h)), rel=1e-10)


def test_Lstar_is_adjoint(rng):
    g = build_grid(20.0, 300)
    op = mode_operator(SPHERE, 1.0, g, 0)
    f = smooth(g, 0, rng.normal(size=3))
    h = rng.normal(size=g.n) + 1j * rng.normal(size=g.n)
    lhs = np.sum(g.face_weights * op.L_apply(f) * np.conj(h))
    rhs = np.sum(g.weights * f * np.conj(op.Lstar_apply(h)))
    assert lhs == pytest.approx(rhs, rel=1e-10)


@pytest.mark.parametrize("geom,lam,m", [(SPHERE, 1.0, 0), (HYPERBOLIC, 0.5, 1)])
def test_factorization_defect_converges(geom, lam, m, rng):
    c = rng.normal(size=3)
    d = [mode_operator(geom, lam, build_grid(20.0, n), m).factorization_defect(smooth(build_grid(20.0, n), m, c))
         for n in (500, 1000, 2000)]
    assert d[0] / d[1] > 3.0 and d[1] / d[2] > 3.0


def test_lambda_zero_reduces_to_laplacian():
    from hypmaps.geometry import negative_mode_laplacian

    g = build_grid(20.0, 400)
    for m in (0, 1, 2):
        assert lowest_eigenvalue(HYPERBOLIC, 0.0, g, m) == pytest.approx(
            negative_mode_laplacian(g, m).eigen(1)[0], rel=1e-10)


def test_strong_stability_hyperbolic():
    cert = stability_certificate(HYPERBOLIC, 0.5, build_grid(20.0, 1000), m_max=3)
    assert cert.weakly_stable and cert.strongly_stable
    assert cert.min_eigenvalue >= QUARTER - 0.01
    assert {r.m for r in cert.report} == set(range(-3, 4))
    with pytest.raises(ValueError):
        stability_certificate(HYPERBOLIC, 0.5, build_grid(20.0, 100), m_max=1)


def test_sphere_gap_eigenvalue_frozen():
    g = build_grid(20.0, 1000)
    found = find_gap_eigenvalues(SPHERE, [2.0], g, modes=(0,))
    assert len(found) == 1
    assert found[0].eigenvalue == pytest.approx(0.18222967357040137, rel=1e-8)
    assert abs(found[0].refined - found[0].eigenvalue) < 1e-3


def test_no_gap_eigenvalue_for_hyperbolic_target():
    assert find_gap_eigenvalues(HYPERBOLIC, [0.3, 0.6, 0.9], build_grid(20.0, 500)) == []


def test_critical_lambda_brackets_gap_onset():
    g = build_grid(20.0, 500)
    lam = critical_lambda(SPHERE, g, 0, 0.5, 2.0, tol=1e-2)
    assert lowest_eigenvalue(SPHERE, lam * 0.97, g, 0) > lowest_eigenvalue(SPHERE, lam * 1.03, g, 0)
    assert 0.5 < lam < 2.0
    with pytest.raises(ValueError):
        critical_lambda(SPHERE, g, 0, 2.0, 5.0)


def test_lowest_spectrum_report_fields():
    g = build_grid(20.0, 400)
    rep = lowest_spectrum(mode_operator(HYPERBOLIC, 0.3, g, 0), k=3)
    assert len(rep.lowest_eigenvalues) == 3 and rep.gap_eigenvalues == ()
    assert rep.resonance_quotient > 0 and rep.residual < 1e-6
    with pytest.raises(ValueError):
        lowest_spectrum(mode_operator(HYPERBOLIC, 0.3, g, 0), k=0)


def test_h1thr_norm_positive_and_homogeneous(rng):
    g = build_grid(20.0, 300)
    fc = coulomb_frame(HYPERBOLIC, harmonic_profile(HYPERBOLIC, 0.5, g))
    f = smooth(g, 1, rng.normal(size=3))
    a = h1thr_norm(g, fc, f, 1)
    assert a > 0 and math.isclose(h1thr_norm(g, fc, 3j * f, 1), 3 * a, rel_tol=1e-12)
