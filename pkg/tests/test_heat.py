import math

import numpy as np
import pytest

from hypmaps.geometry import build_grid, lp_norm
from hypmaps.heat import (
    SemigroupStepper, decay_fit, decay_samples, geometric_s_grid, heat_apply, heat_stepper, heat_trajectory,
    log_grid, log_trapezoid_weights, lp_project, lp_projections, lp_resolution_error,
)


@pytest.fixture(scope="module")
def g():
    return build_grid(20.0, 400)


def data(g, m=0):
    return np.tanh(g.nodes) ** m * np.exp(-((g.nodes - 2.0) ** 2))


def test_grids():
    s = geometric_s_grid(1e-3, 1.0, 2.0)
    assert s[0] == 1e-3 and np.allclose(s[1:] / s[:-1], 2.0)
    with pytest.raises(ValueError):
        geometric_s_grid(1.0, 0.5)
    w = log_trapezoid_weights(log_grid(1e-2, 1e2, 9))
    assert math.isclose(np.sum(w), math.log(1e4))


@pytest.mark.parametrize("scheme", ["cn", "be"])
def test_time_stepping_converges_to_exact(g, scheme):
    exact = heat_apply(heat_stepper(g, 1, "exact"), data(g, 1), 1.0)
    errs = [lp_norm(g, heat_apply(heat_stepper(g, 1, scheme, h), data(g, 1), 1.0) - exact) for h in (0.1, 0.05)]
    order = math.log2(errs[0] / errs[1])
    assert order > (1.7 if scheme == "cn" else 0.9)


def test_semigroup_property(g):
    st = heat_stepper(g, 0, "exact")
    f = data(g)
    assert np.allclose(st.advance(st.advance(f, 0.3), 0.7), st.advance(f, 1.0), atol=1e-12)


def test_heat_contracts_l2(g):
    st = heat_stepper(g, 0, "cn")
    traj = heat_trajectory(st, data(g), [0.0, 0.5, 1.0, 2.0])
    norms = [lp_norm(g, u) for u in traj]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    with pytest.raises(ValueError):
        heat_trajectory(st, data(g), [1.0, 0.5])


def test_invalid_arguments(g):
    from hypmaps.geometry import negative_mode_laplacian

    with pytest.raises(ValueError):
        SemigroupStepper(negative_mode_laplacian(g), g, "rk4")
    with pytest.raises(ValueError):
        heat_stepper(g).advance(data(g), -1.0)
    with pytest.raises(ValueError):
        lp_project(heat_stepper(g), data(g), 0.0)


def test_lp_pieces_consistent(g):
    st = heat_stepper(g, 0, "exact")
    sig = [0.1, 1.0]
    geq, at = lp_projections(st, data(g), sig)
    for j, s in enumerate(sig):
        a, b = lp_project(st, data(g), s)
        assert np.allclose(a, geq[j]) and np.allclose(b, at[j])


@pytest.mark.parametrize("m", [0, 1, 2])
def test_lp_resolution_identity(g, m):
    err = lp_resolution_error(heat_stepper(g, m, "exact"), data(g, m), log_grid(1e-5, 1e3, 64))
    assert err < 0.02


def test_decay_fit_exact_exponential():
    s = np.linspace(0, 10, 11)
    fit = decay_fit(np.column_stack([s, 3.0 * np.exp(-0.4 * s)]))
    assert fit.rate == pytest.approx(0.4) and fit.count == 11
    with pytest.raises(ValueError):
        decay_fit([[0, 1], [1, 0.5]])
    with pytest.raises(ValueError):
        decay_fit(np.column_stack([s, -np.ones_like(s)]))


def test_decay_rate_matches_bottom_of_spectrum():
    g = build_grid(20.0, 400)
    st = heat_stepper(g, 0, "exact")
    mu = st.operator.eigen(1)[0]
    fit = decay_fit(decay_samples(st, data(g), np.linspace(100, 200, 11)))
    assert fit.rate == pytest.approx(mu, rel=1e-3)
