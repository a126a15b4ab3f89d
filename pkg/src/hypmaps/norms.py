"""Discrete dispersive norms on equivariant modes and a functional-inequality harness.

Fields are complex radial profiles ``f(r)`` standing for ``f(r) e^{i m theta}``.
Time series are arrays of shape ``(nt, n)`` sampled on a uniform time grid.
Littlewood-Paley pieces use the heat semigroup of ``Delta_m`` through a full
eigendecomposition, so everything here is intended for desk-size grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .geometry import (
    TWO_PI,
    AnnulusDecomposition,
    RadialGrid,
    annuli,
    build_grid,
    gradient_norm,
    k_sigma,
    lp_norm,
    negative_mode_laplacian,
)
from .heat import log_grid, log_trapezoid_weights

DEFAULT_PAIRS = ((math.inf, 2.0), (4.0, 4.0), (8.0 / 3.0, 8.0 / 3.0))
MAX_SPECTRAL_N = 4000


def admissible(p: float, q: float) -> bool:
    """Schroedinger admissibility on the two-dimensional hyperbolic plane."""
    a, b = 1.0 / p, 1.0 / q
    if a == 0.0 and b == 0.5:
        return True
    return 0.0 < a < 0.5 and 0.0 < b < 0.5 and 2.0 * a >= 1.0 - 2.0 * b


@dataclass(frozen=True)
class NormConfig:
    """Discretization choices for the LE, LE* and 𝒮 norms.

    ``sigma_high`` samples ``(0, 1/2]`` (truncated at ``sigma_min``) and
    ``sigma_low`` samples ``[1/8, 4]``; both integrals in ``d sigma / sigma``
    use log-trapezoid weights.
    """

    delta: float = 0.1
    sigma_min: float = 1e-4
    high_count: int = 48
    low_count: int = 24
    admissible_pairs: tuple = DEFAULT_PAIRS

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 0.25:
            raise ValueError("delta must lie in (0, 1/4)")
        if not 0.0 < self.sigma_min < 0.5:
            raise ValueError("sigma_min must lie in (0, 1/2)")
        if self.high_count < 2 or self.low_count < 2:
            raise ValueError("need at least two sigma nodes per band")
        for p, q in self.admissible_pairs:
            if not admissible(p, q):
                raise ValueError(f"pair ({p}, {q}) is not admissible")

    @property
    def sigma_high(self) -> np.ndarray:
        return log_grid(self.sigma_min, 0.5, self.high_count)

    @property
    def sigma_low(self) -> np.ndarray:
        return log_grid(0.125, 4.0, self.low_count)

    def weight(self, s) -> np.ndarray:
        """``m(s) = max(s^{-delta}, 1)``."""
        s = np.asarray(s, dtype=float)
        return np.maximum(s ** (-self.delta), 1.0)


# ----------------------------------------------------------------------------
# spectral calculus of -Delta_m
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Full eigensystem of ``-Delta_m`` with ``V^T W V = I``."""

    grid: RadialGrid
    m: int
    mu: np.ndarray
    vectors: np.ndarray

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Spectral coefficients along the last axis of ``f``."""
        return (np.asarray(f) * self.grid.weights) @ self.vectors

    def synthesize(self, c: np.ndarray) -> np.ndarray:
        return c @ self.vectors.T

    def apply(self, f: np.ndarray, g) -> np.ndarray:
        return self.synthesize(g(self.mu) * self.coefficients(f))


@lru_cache(maxsize=16)
def _spectrum_cached(grid: RadialGrid, m: int) -> ModeSpectrum:
    if grid.n > MAX_SPECTRAL_N:
        raise ValueError(f"spectral route limited to n <= {MAX_SPECTRAL_N}")
    d, e = negative_mode_laplacian(grid, m).symmetric_form()
    mu, u = eigh_tridiagonal(d, e)
    return ModeSpectrum(grid, m, mu, u / np.sqrt(grid.weights)[:, None])


def mode_spectrum(grid: RadialGrid, m: int = 0) -> ModeSpectrum:
    return _spectrum_cached(grid, abs(int(m)))


def sobolev_norm(grid: RadialGrid, f: np.ndarray, sigma: float, m: int = 0) -> float:
    """``||(1 - Delta_m)^{sigma/2} f||_2`` for real ``sigma`` (eigendecomposition, expensive)."""
    return lp_norm(grid, mode_spectrum(grid, m).apply(f, lambda mu: (1.0 + mu) ** (0.5 * sigma)))


# ----------------------------------------------------------------------------
# space-time pieces
# ----------------------------------------------------------------------------


def _check_series(grid: RadialGrid, u: np.ndarray, times: np.ndarray) -> None:
    if u.ndim != 2 or u.shape[1] != grid.n:
        raise ValueError("time series must have shape (nt, n)")
    if times.ndim != 1 or times.size != u.shape[0]:
        raise ValueError("times and samples are mismatched")
    if times.size < 2:
        raise ValueError("need at least two time samples")
    dt = np.diff(times)
    if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-8, atol=0.0):
        raise ValueError("times must be uniformly increasing")


def _time_weights(times: np.ndarray) -> np.ndarray:
    dt = times[1] - times[0]
    w = np.full(times.size, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def _masked_l2t2x(grid: RadialGrid, u: np.ndarray, tw: np.ndarray, mask, radial_weight=None) -> float:
    """``L^2_t L^2_x`` norm over ``mask`` of the series ``u`` (shape ``(..., nt, n)``)."""
    a = np.abs(u[..., mask]) ** 2
    w = grid.weights[mask]
    if radial_weight is not None:
        w = w * radial_weight[mask] ** 2
    per_t = TWO_PI * (a @ w)
    return np.sqrt(per_t @ tw)


@dataclass(frozen=True, eq=False)
class _Layout:
    """Annulus masks and radial weights used by the LE family."""

    grid: RadialGrid
    dec: AnnulusDecomposition
    window: np.ndarray

    def mask(self, m: np.ndarray) -> np.ndarray:
        return m & self.window


def _layout(grid: RadialGrid, r_window: float | None) -> _Layout:
    window = np.ones(grid.n, dtype=bool) if r_window is None else grid.nodes <= r_window
    return _Layout(grid, annuli(grid), window)


def _le_sigma(lay: _Layout, v: np.ndarray, tw: np.ndarray, sigma: float) -> float:
    g, dec = lay.grid, lay.dec
    k = k_sigma(sigma)
    out = sigma ** (-0.25) * _masked_l2t2x(g, v, tw, lay.mask(dec.ball(-k)))
    mid = [2.0 ** (-0.5 * l) * _masked_l2t2x(g, v, tw, lay.mask(dec.shell(l))) for l in range(-k, 0)]
    if mid:
        out += max(mid)
    out += _masked_l2t2x(g, v, tw, lay.mask(dec.outside(0)), g.nodes ** (-2.0))
    return float(out)


def _le_sigma_star(lay: _Layout, v: np.ndarray, tw: np.ndarray, sigma: float) -> float:
    g, dec = lay.grid, lay.dec
    k = k_sigma(sigma)
    out = sigma**0.25 * _masked_l2t2x(g, v, tw, lay.mask(dec.ball(-k)))
    out += sum(_masked_l2t2x(g, v, tw, lay.mask(dec.shell(l)), np.sqrt(g.nodes)) for l in range(-k, 0))
    out += _masked_l2t2x(g, v, tw, lay.mask(dec.outside(0)), g.nodes**2.0)
    return float(out)


def _le_low(lay: _Layout, v: np.ndarray, tw: np.ndarray) -> float:
    g = lay.grid
    return float(_masked_l2t2x(g, v, tw, lay.window, (1.0 + g.nodes**2) ** (-1.0)))


def _le_low_star(lay: _Layout, v: np.ndarray, tw: np.ndarray) -> float:
    g = lay.grid
    return float(_masked_l2t2x(g, v, tw, lay.window, 1.0 + g.nodes**2))


def _bands(u: np.ndarray, spec: ModeSpectrum, cfg: NormConfig):
    """Yield ``(sigma, weight, P_sigma u)`` then ``(sigma, weight, P_{>=sigma} u)`` pieces."""
    c = spec.coefficients(u)
    hi = cfg.sigma_high
    for s, w in zip(hi, log_trapezoid_weights(hi)):
        yield "high", s, w, spec.synthesize(s * spec.mu * np.exp(-s * spec.mu) * c)
    lo = cfg.sigma_low
    for s, w in zip(lo, log_trapezoid_weights(lo)):
        yield "low", s, w, spec.synthesize(np.exp(-s * spec.mu) * c)


def le_norm(grid: RadialGrid, u: np.ndarray, times, m: int = 0, config: NormConfig | None = None,
            r_window: float | None = None) -> float:
    """Local smoothing norm of the mode-``m`` series ``u`` over the sampled interval.

    ``r_window`` restricts all spatial integrals to ``r <= r_window`` (used to
    keep absorbing layers out of the measurement).
    """
    cfg = config or NormConfig()
    u = np.asarray(u)
    times = np.asarray(times, dtype=float)
    _check_series(grid, u, times)
    tw = _time_weights(times)
    lay = _layout(grid, r_window)
    total = 0.0
    for band, s, w, piece in _bands(u, mode_spectrum(grid, m), cfg):
        if band == "high":
            total += w * s ** (-0.5) * _le_sigma(lay, piece, tw, s) ** 2
        else:
            total += w * _le_low(lay, piece, tw) ** 2
    return math.sqrt(total)


def le_star_norm(grid: RadialGrid, F: np.ndarray, times, m: int = 0, config: NormConfig | None = None,
                 r_window: float | None = None) -> float:
    """Dual local smoothing norm of the mode-``m`` forcing series ``F``."""
    cfg = config or NormConfig()
    F = np.asarray(F)
    times = np.asarray(times, dtype=float)
    _check_series(grid, F, times)
    tw = _time_weights(times)
    lay = _layout(grid, r_window)
    total = 0.0
    for band, s, w, piece in _bands(F, mode_spectrum(grid, m), cfg):
        if band == "high":
            total += w * s**0.5 * _le_sigma_star(lay, piece, tw, s) ** 2
        else:
            total += w * _le_low_star(lay, piece, tw) ** 2
    return math.sqrt(total)


def lebesgue_norm(grid: RadialGrid, u: np.ndarray, times, p: float, q: float) -> float:
    """``L^p_t L^q_x`` with trapezoid time integration (``p = inf`` takes the max)."""
    u = np.asarray(u)
    times = np.asarray(times, dtype=float)
    _check_series(grid, u, times)
    spatial = np.array([lp_norm(grid, row, q) for row in u])
    if math.isinf(p):
        return float(np.max(spatial))
    return float((_time_weights(times) @ spatial**p) ** (1.0 / p))


def strichartz_norm(grid: RadialGrid, u: np.ndarray, times, pairs=DEFAULT_PAIRS) -> float:
    """Maximum of ``L^p_t L^q_x`` over the given admissible pairs."""
    for p, q in pairs:
        if not admissible(p, q):
            raise ValueError(f"pair ({p}, {q}) is not admissible")
    return max(lebesgue_norm(grid, u, times, p, q) for p, q in pairs)


def s_norm(grid: RadialGrid, family: np.ndarray, s_values, times, m: int = 0,
           config: NormConfig | None = None, r_window: float | None = None) -> float:
    """The 𝒮 norm of a heat-time family ``family[j] = v(s_j)`` of mode-``m`` series.

    Each slice contributes ``||m(s) s^{1/2} <v>||_{LE cap Str}`` for ``v`` and its
    angular derivative ``i m v``; the slices are combined in
    ``L^infty cap L^2`` of ``ds / s`` on the given geometric grid.
    """
    cfg = config or NormConfig()
    family = np.asarray(family)
    s_values = np.asarray(s_values, dtype=float)
    if family.ndim != 3 or family.shape[0] != s_values.size:
        raise ValueError("family must have shape (ns, nt, n) matching s_values")
    if np.any(s_values <= 0) or np.any(np.diff(s_values) <= 0):
        raise ValueError("s_values must be positive and increasing")
    per_s = np.empty(s_values.size)
    for j, (s, v) in enumerate(zip(s_values, family)):
        scaled = cfg.weight(s) * math.sqrt(s) * v
        one = le_norm(grid, scaled, times, m, cfg, r_window) + strichartz_norm(grid, scaled, times, cfg.admissible_pairs)
        per_s[j] = one * (1.0 + abs(m))
    l2 = math.sqrt(float(log_trapezoid_weights(s_values) @ per_s**2)) if s_values.size > 1 else 0.0
    return float(np.max(per_s) + l2)


def spacetime_pairing(grid: RadialGrid, F: np.ndarray, v: np.ndarray, times) -> complex:
    """``int int F conj(v) dx dt`` with trapezoid time weights."""
    times = np.asarray(times, dtype=float)
    _check_series(grid, np.asarray(F), times)
    per_t = TWO_PI * np.sum(grid.weights * np.asarray(F) * np.conj(v), axis=-1)
    return complex(_time_weights(times) @ per_t)


# ----------------------------------------------------------------------------
# inequality harness
# ----------------------------------------------------------------------------


def _bump(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def smooth_corpus(grid: RadialGrid, m: int, count: int, seed: int = 0, support: float | None = None) -> np.ndarray:
    """Randomized smooth compactly supported profiles vanishing like ``r^|m|`` at the origin."""
    rng = np.random.default_rng([seed, abs(m)])
    R = min(8.0, 0.5 * grid.r_max) if support is None else support
    r = grid.nodes
    out = np.empty((count, grid.n))
    for i in range(count):
        f = np.zeros(grid.n)
        for _ in range(int(rng.integers(1, 4))):
            width = rng.uniform(0.4, 0.5 * R)
            center = rng.uniform(0.0, R - width)
            f += rng.normal() * _bump((r - center) / width)
        if not np.any(f):
            f = _bump(r / R)
        out[i] = f * np.tanh(r) ** abs(m)
    return out


def poincare_ratio(grid: RadialGrid, f: np.ndarray, m: int) -> float:
    """``||f||_2 / ||grad f||_2``; the sharp bound on the hyperbolic plane is 2."""
    return lp_norm(grid, f) / gradient_norm(grid, f, m)


def gn_ratio(grid: RadialGrid, f: np.ndarray, m: int, s: float = 1.0) -> float:
    """``s^{1/2} ||f||_inf / ||<s Delta> f||_2`` with ``<x> = (1 + x^2)^{1/2}``."""
    g = mode_spectrum(grid, m).apply(f, lambda mu: np.sqrt(1.0 + (s * mu) ** 2))
    return math.sqrt(s) * float(np.max(np.abs(f))) / lp_norm(grid, g)


def radial_sobolev_ratio(grid: RadialGrid, f: np.ndarray, m: int) -> float:
    """``||sinh^{1/2}(r) f||_inf / (||<Omega> f||_2 ||grad <Omega> f||_2)^{1/2}``."""
    jap = math.sqrt(1.0 + m * m)
    lhs = float(np.max(np.sqrt(grid.sinh_nodes) * np.abs(f)))
    return lhs / (jap * math.sqrt(lp_norm(grid, f) * gradient_norm(grid, f, m)))


INEQUALITIES = {
    "poincare": poincare_ratio,
    "gagliardo_nirenberg": gn_ratio,
    "radial_sobolev": radial_sobolev_ratio,
}


@dataclass
class InequalityRow:
    inequality: str
    mode: int
    empirical_constant: float
    doubled_corpus_constant: float
    refined_grid_constant: float
    n: int
    r_max: float

    @property
    def corpus_change(self) -> float:
        return abs(self.doubled_corpus_constant / self.empirical_constant - 1.0)

    @property
    def refinement_change(self) -> float:
        return abs(self.refined_grid_constant / self.empirical_constant - 1.0)


@dataclass
class InequalityReport:
    rows: list = field(default_factory=list)
    tolerance: float = 0.2
    poincare_bound: float = 2.0

    def constant(self, name: str, mode: int) -> float:
        for row in self.rows:
            if row.inequality == name and row.mode == mode:
                return row.empirical_constant
        raise KeyError((name, mode))

    def failures(self) -> list[str]:
        bad = []
        for row in self.rows:
            tag = f"{row.inequality}[m={row.mode}]"
            if not math.isfinite(row.empirical_constant):
                bad.append(f"{tag}: non-finite constant")
            if row.corpus_change > self.tolerance:
                bad.append(f"{tag}: corpus doubling changed the constant by {row.corpus_change:.1%}")
            if row.refinement_change > self.tolerance:
                bad.append(f"{tag}: grid doubling changed the constant by {row.refinement_change:.1%}")
            if row.inequality == "poincare" and row.empirical_constant > self.poincare_bound + 1e-9:
                bad.append(f"{tag}: constant {row.empirical_constant:.6f} exceeds 2")
        return bad

    @property
    def passed(self) -> bool:
        return not self.failures()

    def to_csv_rows(self) -> list[tuple]:
        return [(r.inequality, r.mode, r.empirical_constant, r.n, r.r_max) for r in self.rows]


def _best_constant(grid: RadialGrid, name: str, m: int, count: int, seed: int) -> float:
    fn = INEQUALITIES[name]
    return max(fn(grid, f, m) for f in smooth_corpus(grid, m, count, seed))


def inequality_suite(grid: RadialGrid | None = None, modes=(0, 1, 2), count: int = 100,
                     seed: int = 0, tolerance: float = 0.2) -> InequalityReport:
    """Empirical best constants with corpus-doubling and grid-doubling stability checks."""
    if count < 1:
        raise ValueError("count must be positive")
    grid = grid or build_grid(20.0, 400)
    fine = grid.refine(2)
    report = InequalityReport(tolerance=tolerance)
    for name in INEQUALITIES:
        for m in modes:
            base = _best_constant(grid, name, m, count, seed)
            doubled = _best_constant(grid, name, m, 2 * count, seed)
            refined = _best_constant(fine, name, m, count, seed)
            report.rows.append(InequalityRow(name, m, base, doubled, refined, grid.n, grid.r_max))
    return report
