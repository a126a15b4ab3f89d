import math

import numpy as np
import pytest

from hypmaps.geometry import build_grid, lp_norm
from hypmaps.norms import (
    DEFAULT_PAIRS, NormConfig, admissible, inequality_suite, le_norm, le_star_norm, lebesgue_norm, mode_spectrum,
    poincare_ratio, s_norm, smooth_corpus, sobolev_norm, spacetime_pairing, strichartz_norm,
)

CFG = NormConfig(high_count=16, low_count=8)


@pytest.fixture(scope="module")
def grid():
    return build_grid(20.0, 200)


@pytest.fixture(scope="module")
def series(grid):
    r = grid.nodes
    times = np.linspace(0.0, 2.0, 21)
    u = np.exp(-r**2 / 4)[None, :] * np.exp(1j * times)[:, None]
    return times, u


def test_admissible_pairs():
    for p, q in DEFAULT_PAIRS:
        assert admissible(p, q)
    assert admissible(math.inf, 2.0)
    assert not admissible(2.0, math.inf)
    assert not admissible(1.0, 2.0)


def test_config_validation():
    with pytest.raises(ValueError):
        NormConfig(delta=0.3)
    with pytest.raises(ValueError):
        NormConfig(delta=0.0)
    cfg = NormConfig()
    assert cfg.sigma_high[0] == pytest.approx(cfg.sigma_min) and cfg.sigma_high[-1] == pytest.approx(0.5)
    assert cfg.sigma_low[0] == pytest.approx(0.125) and cfg.sigma_low[-1] == pytest.approx(4.0)
    assert cfg.weight(0.5) == pytest.approx(0.5 ** -cfg.delta)
    assert cfg.weight(3.0) == 1.0


def test_spectrum_roundtrip(grid):
    spec = mode_spectrum(grid, 1)
    f = grid.nodes * np.exp(-grid.nodes**2)
    assert np.allclose(spec.synthesize(spec.coefficients(f)), f, atol=1e-12)
    assert np.all(spec.mu > 0)
    assert sobolev_norm(grid, f, 0.0, 1) == pytest.approx(lp_norm(grid, f), rel=1e-10)
    assert sobolev_norm(grid, f, 1.0, 1) > sobolev_norm(grid, f, 0.0, 1)


def test_zero_and_homogeneity(grid, series):
    times, u = series
    assert le_norm(grid, 0 * u, times, 0, CFG) == 0.0
    assert le_star_norm(grid, 0 * u, times, 0, CFG) == 0.0
    a = le_norm(grid, u, times, 0, CFG)
    assert le_norm(grid, -3j * u, times, 0, CFG) == pytest.approx(3 * a, rel=1e-12)
    b = le_star_norm(grid, u, times, 0, CFG)
    assert le_star_norm(grid, 2 * u, times, 0, CFG) == pytest.approx(2 * b, rel=1e-12)


def test_time_scaling_of_stationary_field(grid):
    f = np.exp(-grid.nodes**2 / 4)
    t1 = np.linspace(0, 1, 11)
    t2 = np.linspace(0, 2, 21)
    u1 = np.tile(f, (11, 1))
    u2 = np.tile(f, (21, 1))
    assert le_norm(grid, u2, t2, 0, CFG) / le_norm(grid, u1, t1, 0, CFG) == pytest.approx(math.sqrt(2), rel=1e-2)
    assert le_star_norm(grid, u2, t2, 0, CFG) / le_star_norm(grid, u1, t1, 0, CFG) == pytest.approx(
        math.sqrt(2), rel=1e-2)


def test_monotone_in_interval(grid, series):
    times, u = series
    assert le_norm(grid, u[:11], times[:11], 0, CFG) <= le_norm(grid, u, times, 0, CFG)


def test_duality_sanity(grid, rng):
    times = np.linspace(0, 1, 11)
    corpus = smooth_corpus(grid, 0, 4, seed=3)
    for k in range(3):
        v = np.outer(np.cos(times + k), corpus[k])
        F = np.outer(np.sin(2 * times), corpus[k + 1])
        pair = abs(spacetime_pairing(grid, F, v, times))
        assert pair <= 1.5 * le_star_norm(grid, F, times, 0, CFG) * le_norm(grid, v, times, 0, CFG)


def test_strichartz_of_eigen_evolution(grid):
    spec = mode_spectrum(grid, 0)
    phi = spec.vectors[:, 3] / lp_norm(grid, spec.vectors[:, 3])
    times = np.linspace(0, 5, 51)
    u = np.exp(-1j * spec.mu[3] * times)[:, None] * phi[None, :]
    assert lebesgue_norm(grid, u, times, math.inf, 2.0) == pytest.approx(1.0, rel=1e-12)
    assert lebesgue_norm(grid, u, times, 2.0, 2.0) == pytest.approx(math.sqrt(5.0), rel=1e-12)
    assert strichartz_norm(grid, u, times) >= 1.0
    with pytest.raises(ValueError):
        strichartz_norm(grid, u, times, [(2.0, math.inf)])


def test_series_validation(grid):
    with pytest.raises(ValueError):
        le_norm(grid, np.zeros((3, grid.n)), [0.0, 0.1, 0.5], 0, CFG)
    with pytest.raises(ValueError):
        le_norm(grid, np.zeros((3, grid.n + 1)), [0.0, 0.1, 0.2], 0, CFG)


def test_s_norm_basics(grid, series):
    times, u = series
    s = np.array([0.1, 0.2, 0.4])
    fam = np.stack([u, u, u])
    a = s_norm(grid, fam, s, times, 0, CFG)
    assert a > 0
    assert s_norm(grid, 2 * fam, s, times, 0, CFG) == pytest.approx(2 * a, rel=1e-12)
    assert s_norm(grid, fam, s, times, 1, CFG) > a
    with pytest.raises(ValueError):
        s_norm(grid, fam, s[::-1], times, 0, CFG)


def test_corpus_is_nested_and_poincare_holds(grid):
    small = smooth_corpus(grid, 1, 5, seed=7)
    big = smooth_corpus(grid, 1, 10, seed=7)
    assert np.array_equal(small, big[:5])
    assert max(poincare_ratio(grid, f, 1) for f in big) <= 2.0


def test_inequality_suite_quick():
    rep = inequality_suite(build_grid(20.0, 200), modes=(0, 1), count=10)
    assert rep.passed, rep.failures()
    assert rep.constant("poincare", 0) <= 2.0
    assert len(rep.to_csv_rows()) == len(rep.rows)
