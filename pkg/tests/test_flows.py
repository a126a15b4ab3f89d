import math

import numpy as np
import pytest

from hypmaps.flows import (
    AmbientCalculus, discrete_harmonic_state, distance, frame_components, harmonic_state, hmhf_step,
    l2_distance, linear_schrodinger_evolve, linear_schrodinger_step, map_energy, perturb, polar_frame, run_hmhf,
    run_smap, smap_step, sponge_profile,
)
from hypmaps.geometry import build_grid, lp_norm
from hypmaps.linop import mode_operator
from hypmaps.target import HYPERBOLIC, SPHERE, closed_form_energy


def field(g):
    return g.nodes * np.exp(-g.nodes**2 / 8) * (1 + 0.5j)


@pytest.fixture(scope="module", params=[(HYPERBOLIC, 0.5), (SPHERE, 1.0)], ids=["h2", "s2"])
def setup(request):
    geom, lam = request.param
    g = build_grid(20.0, 200)
    return g, geom, lam, discrete_harmonic_state(geom, lam, g)


def test_polar_frame_orthonormal(setup):
    g, geom, lam, base = setup
    e1, e2 = polar_frame(geom, base.v)
    assert np.allclose(geom.inner(e1, e1), 1) and np.allclose(geom.inner(e2, e2), 1)
    assert np.allclose(geom.inner(e1, e2), 0, atol=1e-12) and np.allclose(geom.inner(e1, base.v), 0, atol=1e-12)
    assert np.allclose(geom.J(base.v, e1), e2, atol=1e-12)


def test_discrete_equilibrium_close_to_explicit_map(setup):
    g, geom, lam, base = setup
    exact = harmonic_state(geom, lam, g)
    assert distance(base, exact) < 1e-2
    assert map_energy(base) == pytest.approx(closed_form_energy(geom, lam, 20.0), rel=1e-2)
    calc = AmbientCalculus(g, geom)
    assert np.max(np.abs(calc.tension(base.v, base.v_rmax))) < 1e-8


def test_perturbation_roundtrip(setup):
    g, geom, lam, base = setup
    u = perturb(base, field(g), 1e-5)
    assert u.constraint_defect() < 1e-13
    assert np.allclose(frame_components(u, base) / 1e-5, field(g), atol=1e-4)


def test_heat_flow_energy_decreases_and_relaxes(setup):
    g, geom, lam, base = setup
    u = perturb(base, field(g), 1e-2)
    _, diag = run_hmhf(u, base, 0.05, 20.0, record_every=20)
    assert diag.energy_monotone()
    assert diag.l2_distance[-1] < 0.05 * diag.l2_distance[0]
    assert max(diag.constraint_defect) < 1e-12


def test_imex2_more_accurate_than_imex1():
    g = build_grid(20.0, 200)
    base = discrete_harmonic_state(HYPERBOLIC, 0.5, g)
    u = perturb(base, field(g), 5e-2)
    ref = u
    for _ in range(64):
        ref = hmhf_step(ref, 1.0 / 64, "imex2")
    errs = {}
    for scheme in ("imex1", "imex2"):
        x = u
        for _ in range(8):
            x = hmhf_step(x, 1.0 / 8, scheme)
        errs[scheme] = l2_distance(x, ref)
    assert errs["imex2"] < errs["imex1"]


def test_schroedinger_map_conserves_energy(setup):
    g, geom, lam, base = setup
    u = perturb(base, field(g), 1e-2)
    _, diag = run_smap(u, base, 1e-2, 1.0, record_every=10)
    assert diag.relative_energy_drift() < 1e-8
    assert max(diag.constraint_defect) < 1e-10


def test_smap_step_report():
    g = build_grid(20.0, 100)
    base = discrete_harmonic_state(HYPERBOLIC, 0.5, g)
    u = perturb(base, field(g), 1e-2)
    v, report = smap_step(u, 1e-2)
    assert v.t_or_s == pytest.approx(u.t_or_s + 1e-2)
    assert report is not None


def test_linear_schroedinger_unitary_and_absorbed():
    g = build_grid(20.0, 200)
    op = mode_operator(HYPERBOLIC, 0.5, g, 1)
    phi = field(g)
    out = linear_schrodinger_evolve(op, phi, 0.05, 100, every=100)
    assert len(out) == 2
    assert lp_norm(g, out[-1]) == pytest.approx(lp_norm(g, phi), rel=1e-10)
    damped = linear_schrodinger_evolve(op, phi, 0.05, 400, every=400, absorber=sponge_profile(g, 10.0, 2.0))
    assert lp_norm(g, damped[-1]) < lp_norm(g, phi)
    assert np.all(sponge_profile(g, 10.0)[g.nodes < 10.0] == 0)


def test_linear_step_matches_eigen_evolution():
    g = build_grid(20.0, 200)
    op = mode_operator(HYPERBOLIC, 0.5, g, 0)
    mu, vecs = op.H.eigen(1, vectors=True)
    phi = vecs[:, 0].astype(complex)
    out = phi
    for _ in range(100):
        out = linear_schrodinger_step(op, out, 0.01)
    assert np.allclose(out, np.exp(-1j * mu[0] * 1.0) * phi, atol=1e-5 * np.max(np.abs(phi)))
