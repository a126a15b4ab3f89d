import math

import numpy as np
import pytest

from hypmaps.frame import check_cauchy_riemann, check_coulomb, coulomb_frame, decay_constant
from hypmaps.geometry import build_grid
from hypmaps.target import (
    HYPERBOLIC, SPHERE, TargetGeometry, ambient_to_profile, closed_form_energy, energy, harmonic_profile,
    profile_to_ambient, target_from_name, tension_residual,
)

CASES = [(SPHERE, 1.0), (SPHERE, 3.0), (HYPERBOLIC, 0.5), (HYPERBOLIC, 0.9)]


def test_target_lookup_and_validation():
    assert target_from_name("S^2") is SPHERE and target_from_name("h2") is HYPERBOLIC
    with pytest.raises(ValueError):
        target_from_name("torus")
    with pytest.raises(ValueError):
        TargetGeometry(0)
    assert HYPERBOLIC.valid_lambda(0.99) and not HYPERBOLIC.valid_lambda(1.0)
    assert SPHERE.valid_lambda(50.0) and not SPHERE.valid_lambda(-1.0)
    with pytest.raises(ValueError):
        harmonic_profile(HYPERBOLIC, 1.5, build_grid(10.0, 50))


@pytest.mark.parametrize("geom,lam", CASES)
def test_ambient_roundtrip_and_constraint(geom, lam):
    g = build_grid(10.0, 200)
    rho = harmonic_profile(geom, lam, g).rho
    v = profile_to_ambient(geom, rho)
    assert np.allclose(geom.inner(v, v), geom.tau)
    assert np.allclose(ambient_to_profile(geom, v), rho)


@pytest.mark.parametrize("geom,lam", CASES)
def test_energy_converges_to_closed_form(geom, lam):
    errs = []
    for n in (250, 500, 1000):
        g = build_grid(20.0, n)
        prof = harmonic_profile(geom, lam, g)
        errs.append(abs(energy(geom, g, prof) - closed_form_energy(geom, lam, 20.0)))
    assert errs[-1] < 1e-3 * closed_form_energy(geom, lam, 20.0)
    assert errs[0] / errs[1] > 3.0


def test_closed_form_energy_values():
    assert closed_form_energy(SPHERE, 1.0) == pytest.approx(2 * math.pi)
    assert closed_form_energy(HYPERBOLIC, 0.5) == pytest.approx(4 * math.pi * 0.25 / 0.75)


@pytest.mark.parametrize("geom,lam", CASES)
def test_explicit_map_is_harmonic_to_second_order(geom, lam):
    res = [tension_residual(geom, build_grid(20.0, n), harmonic_profile(geom, lam, build_grid(20.0, n)))
           for n in (250, 500, 1000)]
    assert res[0] / res[1] > 3.0 and res[1] / res[2] > 3.0


def test_profile_csv(tmp_path):
    g = build_grid(5.0, 32)
    path = tmp_path / "p.csv"
    harmonic_profile(SPHERE, 1.0, g).to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "r,rho" and len(lines) == 33


@pytest.mark.parametrize("geom,lam", CASES)
def test_coulomb_and_cauchy_riemann_exact(geom, lam):
    g = build_grid(20.0, 500)
    fc = coulomb_frame(geom, harmonic_profile(geom, lam, g))
    assert check_coulomb(fc) < 1e-12
    assert check_cauchy_riemann(fc) < 1e-12
    assert np.allclose(fc.A_theta, geom.Sp(harmonic_profile(geom, lam, g).rho) - 1.0)


def test_cauchy_riemann_check_detects_violation():
    g = build_grid(20.0, 100)
    fc = coulomb_frame(HYPERBOLIC, harmonic_profile(HYPERBOLIC, 0.5, g))
    bad = fc.with_changes(psi2_radial=fc.psi2_radial + 1e-3)
    assert check_cauchy_riemann(bad) > 1e-4


def test_frame_coefficients_decay_exponentially():
    g = build_grid(20.0, 800)
    for geom, lam in CASES:
        fc = coulomb_frame(geom, harmonic_profile(geom, lam, g))
        assert math.isfinite(decay_constant(fc)) and decay_constant(fc) < 50.0


def test_frame_csv(tmp_path):
    g = build_grid(5.0, 16)
    path = tmp_path / "f.csv"
    coulomb_frame(SPHERE, harmonic_profile(SPHERE, 1.0, g)).to_csv(path)
    assert path.read_text().splitlines()[0] == "r,A_theta,p"
