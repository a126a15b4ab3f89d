"""Linear heat semigroups ``e^{-sA}`` for a positive mode operator ``A``.

``A`` is either ``-Delta_m`` or a linearized operator ``H_m``.  Evolution is
by Crank-Nicolson with a backward-Euler start (two half steps), or by the
spectral decomposition of the discrete operator when ``scheme="exact"``.
Heat-flow Littlewood-Paley pieces are ``P_{>=sigma} f = e^{sigma Delta} f``
and ``P_sigma f = sigma (-Delta) e^{sigma Delta} f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import stats
from scipy.linalg import eigh_tridiagonal

from .geometry import RadialGrid, WeightedTridiag, lp_norm, negative_mode_laplacian

SCHEMES = ("cn", "be", "exact")


def geometric_s_grid(s_min: float = 1e-4, s_max: float = 1e2, q: float = 2 ** 0.125) -> np.ndarray:
    """Geometric sequence ``s_min q^j`` up to and including ``s_max``."""
    if not (0 < s_min < s_max and q > 1):
        raise ValueError("need 0 < s_min < s_max and q > 1")
    count = int(round(math.log(s_max / s_min) / math.log(q))) + 1
    return s_min * q ** np.arange(count)


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    return np.geomspace(lo, hi, count)


@dataclass(eq=False)
class SemigroupStepper:
    """Approximates ``e^{-sA}`` for a weighted tridiagonal ``A >= 0``.

    Parameters
    ----------
    operator : WeightedTridiag
        Positive operator, e.g. ``negative_mode_laplacian(grid, m)`` or ``ModeOperator.H``.
    grid : RadialGrid
    scheme : {"cn", "be", "exact"}
    max_step : float
        Largest time step used by the implicit schemes.
    """

    operator: WeightedTridiag
    grid: RadialGrid
    scheme: str = "cn"
    max_step: float = 0.05
    startup: int = 2
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")

    # -- spectral route -----------------------------------------------------
    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """All eigenpairs ``(mu, V)`` with ``V^T W V = I``."""
        d, e = self.operator.symmetric_form()
        mu, u = eigh_tridiagonal(d, e)
        return mu, u / np.sqrt(self.grid.weights)[:, None]

    def spectral_apply(self, f: np.ndarray, g) -> np.ndarray:
        """``g(A) f`` through the eigendecomposition."""
        mu, v = self.eigensystem
        c = v.T @ (self.grid.weights * f)
        return v @ (g(mu) * c)

    # -- time stepping ------------------------------------------------------
    def _be(self, f: np.ndarray, ds: float) -> np.ndarray:
        return self.operator.solve_shifted(1.0, ds, f)

    def _cn(self, f: np.ndarray, ds: float) -> np.ndarray:
        rhs = f - 0.5 * ds * self.operator.apply(f)
        return self.operator.solve_shifted(1.0, 0.5 * ds, rhs)

    def advance(self, f: np.ndarray, s: float, fresh: bool = True) -> np.ndarray:
        """Evolve by heat time ``s``.  ``fresh`` applies the damping start for rough data."""
        if s < 0:
            raise ValueError("heat time must be nonnegative")
        f = np.asarray(f)
        if s == 0:
            return f.copy()
        if self.scheme == "exact":
            return self.spectral_apply(f, lambda mu: np.exp(-s * mu))
        steps = max(1, math.ceil(s / self.max_step - 1e-12))
        ds = s / steps
        out = f
        if self.scheme == "be":
            for _ in range(steps):
                out = self._be(out, ds)
        else:
            k0 = 0
            if fresh and self.startup > 0:
                nstart = min(self.startup, 2 * steps)
                for _ in range(nstart):
                    out = self._be(out, 0.5 * ds)
                k0 = (nstart + 1) // 2
            for _ in range(k0, steps):
                out = self._cn(out, ds)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("linear solve produced non-finite values")
        return out


def heat_stepper(grid: RadialGrid, m: int = 0, scheme: str = "cn", max_step: float = 0.05) -> SemigroupStepper:
    """Stepper for ``e^{s Delta_m}``."""
    return SemigroupStepper(negative_mode_laplacian(grid, m), grid, scheme, max_step)


def heat_apply(stepper: SemigroupStepper, f: np.ndarray, s: float) -> np.ndarray:
    """``e^{-sA} f`` (``e^{s Delta} f`` when ``A = -Delta``)."""
    return stepper.advance(f, s)


def heat_trajectory(stepper: SemigroupStepper, f: np.ndarray, s_values) -> np.ndarray:
    """States at each of the increasing heat times ``s_values`` (sequential sweep)."""
    s_values = np.asarray(s_values, dtype=float)
    if np.any(np.diff(s_values) < 0) or s_values[0] < 0:
        raise ValueError("s_values must be nonnegative and increasing")
    out = np.empty((s_values.size,) + np.shape(f), dtype=np.result_type(f, float))
    cur = np.asarray(f)
    prev = 0.0
    for j, s in enumerate(s_values):
        cur = stepper.advance(cur, s - prev, fresh=(prev == 0.0))
        out[j] = cur
        prev = s
    return out


# ----------------------------------------------------------------------------
# Littlewood-Paley
# ----------------------------------------------------------------------------


def lp_project(stepper: SemigroupStepper, f: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """``(P_{>=sigma} f, P_sigma f)`` with ``P_sigma = sigma A e^{-sigma A}``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    geq = stepper.advance(f, sigma)
    return geq, sigma * stepper.operator.apply(geq)


def lp_projections(stepper: SemigroupStepper, f: np.ndarray, sigmas) -> tuple[np.ndarray, np.ndarray]:
    """``P_{>=sigma}`` and ``P_sigma`` for all increasing ``sigmas`` at once."""
    sigmas = np.asarray(sigmas, dtype=float)
    if stepper.scheme == "exact":
        mu, v = stepper.eigensystem
        c = v.T @ (stepper.grid.weights * np.asarray(f))
        e = np.exp(-np.outer(sigmas, mu))
        geq = (e * c) @ v.T
        at = (sigmas[:, None] * mu * e * c) @ v.T
        return geq, at
    geq = heat_trajectory(stepper, f, sigmas)
    at = np.stack([s * stepper.operator.apply(g) for s, g in zip(sigmas, geq)])
    return geq, at


def log_trapezoid_weights(sigmas: np.ndarray) -> np.ndarray:
    """Trapezoid weights for ``int g(sigma) d sigma / sigma`` on the given nodes."""
    x = np.log(np.asarray(sigmas, dtype=float))
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def lp_resolution_error(stepper: SemigroupStepper, f: np.ndarray, sigmas) -> float:
    """``||f - sum_j P_{sigma_j} f dlog sigma_j||_2 / ||f||_2``."""
    sigmas = np.asarray(sigmas, dtype=float)
    _, at = lp_projections(stepper, f, sigmas)
    recon = np.tensordot(log_trapezoid_weights(sigmas), at, axes=1)
    g = stepper.grid
    return lp_norm(g, f - recon) / lp_norm(g, f)


# ----------------------------------------------------------------------------
# decay fits
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    rate: float
    stderr: float
    intercept: float
    count: int


def decay_fit(samples) -> DecayFit:
    """Least-squares rate ``c`` in ``norm ~ C e^{-c s}`` from ``(s, norm)`` pairs."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
        raise ValueError("need at least 4 (s, norm) samples")
    s, y = arr[:, 0], arr[:, 1]
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("norms must be positive and finite")
    fit = stats.linregress(s, np.log(y))
    return DecayFit(-float(fit.slope), float(fit.stderr), float(fit.intercept), int(s.size))


def decay_samples(stepper: SemigroupStepper, f: np.ndarray, s_values, p: float = 2.0) -> np.ndarray:
    """``(s, ||e^{-sA} f||_p)`` rows along ``s_values``."""
    states = heat_trajectory(stepper, f, s_values)
    return np.column_stack([s_values, [lp_norm(stepper.grid, u, p) for u in states]])
