import numpy as np
import pytest

from hypmaps.caloric import (
    GaugeCalculus, TerminalToleranceError, build_caloric_gauge, caloric_s_grid, check_curvature_identity,
    coulomb_background, covariant_heat_psi_s, covariant_heat_w, covariant_schrodinger_psi_s,
    equations_of_motion_residuals, heat_flow_trajectory, heat_tension_residual, per_s_table, radial_derivative,
    reconstruct, refined_heat_psi_s_residual, refined_heat_psi_s_rhs, refined_heat_w_residual, refined_heat_w_rhs,
    refined_schrodinger_psi_s_residual, refined_schrodinger_psi_s_rhs, required_s_max, s_derivative, window_mask,
)
from hypmaps.flows import bump, discrete_harmonic_state, perturb
from hypmaps.geometry import build_grid
from hypmaps.target import HYPERBOLIC, SPHERE


@pytest.fixture(scope="module")
def gauge():
    g = build_grid(20.0, 200)
    base = discrete_harmonic_state(HYPERBOLIC, 0.5, g)
    u = perturb(base, g.nodes * np.exp(-g.nodes**2 / 8) * (1 + 0.5j), 5e-2)
    s = caloric_s_grid(80.0, 1e-4, 2**0.25)
    return base, build_caloric_gauge(heat_flow_trajectory(u, s, 0.1), base=base)


def test_derivatives_exact_on_quadratics():
    g = build_grid(5.0, 100)
    f = g.nodes**2
    d = radial_derivative(g, f, parity=1)
    assert np.allclose(d, 2 * g.nodes, atol=1e-10)
    s = np.array([0.0, 0.1, 0.3, 0.7, 1.5])
    vals = (s**2)[:, None] * np.ones((1, 3))
    assert np.allclose(s_derivative(s, vals), 2 * s[:, None], atol=1e-12)


def test_s_grid_starts_at_zero():
    s = caloric_s_grid(10.0, 1e-3, 2.0)
    assert s[0] == 0.0 and s[1] == 1e-3 and s[-1] >= 10.0 - 1e-9
    assert required_s_max(1e-2, 0.25, 1e-8) == pytest.approx(4 * np.log(1e6))


def test_gauge_frame_is_orthonormal_tangent(gauge):
    _, gt = gauge
    assert gt.orthonormality_defect() < 1e-12
    assert gt.tangency_defect() < 1e-12


def test_gauge_is_caloric(gauge):
    _, gt = gauge
    assert np.max(np.abs(gt.A_s)) < 1e-5


def test_curvature_and_tension_identities(gauge):
    _, gt = gauge
    c = check_curvature_identity(gt)
    assert max(c.values()) < 5e-3
    assert heat_tension_residual(gt) < 1e-2


def test_reconstruction_matches_direct_fields(gauge):
    _, gt = gauge
    assert reconstruct(gt).mismatch(gt.grid) < 1e-2


def test_terminal_tolerance_enforced():
    g = build_grid(20.0, 100)
    base = discrete_harmonic_state(HYPERBOLIC, 0.5, g)
    u = perturb(base, g.nodes * np.exp(-g.nodes**2 / 8), 0.2)
    traj = heat_flow_trajectory(u, caloric_s_grid(1.0, 1e-3, 2.0), 0.1)
    with pytest.raises(TerminalToleranceError):
        build_caloric_gauge(traj, base=base, tol=1e-8)


def test_per_s_table_and_motion_report(gauge):
    _, gt = gauge
    tab = per_s_table(gt)
    assert tab.shape == (gt.s.size, 4)
    assert tab[-1, 1] < 1e-6 * tab[0, 1]
    rep = equations_of_motion_residuals(gt)
    assert rep.heat_psi_s < 5e-3 and rep.w_at_zero is None
    with pytest.raises(ValueError):
        equations_of_motion_residuals(gt, (gt, gt))


def test_window_mask_defaults():
    g = build_grid(20.0, 200)
    m = window_mask(g)
    assert g.nodes[m].min() >= 0.5 and g.nodes[m].max() <= 10.0


@pytest.mark.parametrize("geom,lam", [(HYPERBOLIC, 0.5), (SPHERE, 1.0)])
def test_refined_forms_vanish_at_harmonic_map(geom, lam, rng):
    g = build_grid(20.0, 200)
    gc = GaugeCalculus(g, geom.tau)
    bg = coulomb_background(geom, lam, g)
    zA = (np.zeros(g.n), np.zeros(g.n))
    zp = (np.zeros(g.n, complex), np.zeros(g.n, complex))
    ps = rng.normal(size=g.n) + 1j * rng.normal(size=g.n)
    w = rng.normal(size=g.n) + 1j * rng.normal(size=g.n)
    assert np.all(refined_heat_psi_s_rhs(gc, bg, ps, zA, zp) == 0)
    assert np.all(refined_heat_w_rhs(gc, bg, w, ps, zA, zp) == 0)
    assert np.all(refined_schrodinger_psi_s_rhs(gc, bg, ps, np.zeros(g.n), np.zeros(g.n), zA, zp) == 0)


def test_refined_and_covariant_forms_agree(rng):
    g = build_grid(20.0, 200)
    geom = HYPERBOLIC
    gc = GaugeCalculus(g, geom.tau)
    bg = coulomb_background(geom, 0.5, g)

    def rc():
        return (rng.normal(size=g.n) + 1j * rng.normal(size=g.n)) * bump(g.nodes, 5, 4)

    A = (bg.A[0] + rng.normal(size=g.n) * bump(g.nodes, 5, 4), bg.A[1] + rng.normal(size=g.n) * bump(g.nodes, 5, 4))
    psi = (bg.psi[0] + rc(), bg.psi[1] + rc())
    ps, dps, w, dw = rc(), rc(), rc(), rc()
    at = rng.normal(size=g.n)
    pairs = [
        (covariant_heat_psi_s(gc, ps, dps, A, psi), refined_heat_psi_s_residual(gc, bg, ps, dps, A, psi)),
        (covariant_heat_w(gc, w, dw, ps, A, psi), refined_heat_w_residual(gc, bg, w, dw, ps, A, psi)),
        (covariant_schrodinger_psi_s(gc, ps, dps, dw, at, A, psi),
         refined_schrodinger_psi_s_residual(gc, bg, ps, dps, dw, at, A, psi)),
    ]
    for cov, ref in pairs:
        assert np.max(np.abs(cov - ref)) <= 1e-12 * np.max(np.abs(cov))
