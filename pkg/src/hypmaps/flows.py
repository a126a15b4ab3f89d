"""Equivariant harmonic map heat flow and Schroedinger map flow in ambient form.

A 1-equivariant map is ``u(r, theta) = R_theta v(r)`` with ``R_theta`` the
rotation about the third axis, so only the half-plane section ``v(r)`` is
stored.  Its Laplacian acts as ``Delta_1`` on the first two components and as
``Delta_0`` on the third.  The map is pinned to the harmonic profile's value
at ``r_max`` by a Dirichlet condition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .geometry import TWO_PI, RadialGrid, WeightedTridiag, face_gradient, mode_laplacian
from .heat import DecayFit, decay_fit
from .linop import ModeOperator
from .target import (HarmonicProfile, TargetGeometry, ambient_energy, harmonic_profile,
                     profile_to_ambient)


class StepRejected(RuntimeError):
    """Raised when a step violates the constraint too strongly before projection."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MapState:
    """Ambient section ``v(r)`` of an equivariant map at evolution time ``t_or_s``."""

    t_or_s: float
    v: np.ndarray
    grid: RadialGrid
    geom: TargetGeometry
    v_rmax: np.ndarray

    def constraint_defect(self) -> float:
        return float(np.max(np.abs(self.geom.inner(self.v, self.v) - self.geom.tau)))


# ----------------------------------------------------------------------------
# discrete equivariant calculus
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class AmbientCalculus:
    """Laplacian and derived quantities for ambient equivariant fields on one grid."""

    grid: RadialGrid
    geom: TargetGeometry
    lap1: WeightedTridiag = field(init=False)
    lap0: WeightedTridiag = field(init=False)

    def __post_init__(self) -> None:
        self.lap1 = mode_laplacian(self.grid, 1)
        self.lap0 = mode_laplacian(self.grid, 0)

    def ops(self):
        return (self.lap1, self.lap1, self.lap0)

    def laplacian(self, v: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Discrete ``Delta u`` of ``u = R_theta v`` at ``theta = 0`` with Dirichlet data ``b``."""
        return np.stack([op.apply(v[:, c], b[c]) for c, op in enumerate(self.ops())], axis=1)

    def multiplier(self, v: np.ndarray, lap: np.ndarray) -> np.ndarray:
        """``-<Delta v, v>_eta``, the discrete ``|grad u|^2`` in the tension formula."""
        return -self.geom.inner(lap, v)

    def project(self, v: np.ndarray) -> np.ndarray:
        """Pointwise projection onto ``<v, v>_eta = tau``."""
        q = self.geom.tau * self.geom.inner(v, v)
        if np.any(q <= 0):
            raise StepRejected("state left the target model (non-positive normalisation)")
        out = v / np.sqrt(q)[:, None]
        if self.geom.tau == -1:
            out = out * np.sign(out[:, 2:3])
        return out

    def tension(self, v: np.ndarray, b: np.ndarray) -> np.ndarray:
        lap = self.laplacian(v, b)
        return lap + self.geom.tau * self.multiplier(v, lap)[:, None] * v

    def solve_shifted(self, alpha: float, beta: float, rhs: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Solve ``(alpha - beta Delta) x = rhs`` componentwise with Dirichlet data ``b``."""
        # Delta = -A with A the positive operator returned by negative_mode_laplacian
        return np.stack([op.solve_shifted(alpha, -beta, rhs[:, c], b[c])
                         for c, op in enumerate(self.ops())], axis=1)


# ----------------------------------------------------------------------------
# states
# ----------------------------------------------------------------------------


def harmonic_state(geom: TargetGeometry, lam: float, grid: RadialGrid) -> MapState:
    prof = harmonic_profile(geom, lam, grid)
    return MapState(0.0, profile_to_ambient(geom, prof.rho), grid, geom,
                    profile_to_ambient(geom, prof.rho_rmax))


def polar_frame(geom: TargetGeometry, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors ``E_rho`` and ``E_vartheta`` at points of the ``theta = 0`` section.

    ``E_rho = d v / d rho`` and ``E_vartheta = J(v) E_rho = (0, 1, 0)`` where
    ``rho`` is the polar distance from the pole ``(0, 0, 1)``.
    """
    v = np.atleast_2d(v)
    rho = np.arctan2(np.hypot(v[:, 0], v[:, 1]), v[:, 2]) if geom.tau == 1 else \
        np.arcsinh(np.hypot(v[:, 0], v[:, 1]))
    phi = np.arctan2(v[:, 1], v[:, 0])
    e_rho = np.stack([geom.Sp(rho) * np.cos(phi), geom.Sp(rho) * np.sin(phi), -geom.tau * geom.S(rho)], axis=1)
    e_th = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=1)
    return e_rho, e_th


def discrete_harmonic_state(geom: TargetGeometry, lam: float, grid: RadialGrid, tol: float = 1e-12,
                            ds: float = 0.5, max_steps: int = 5000) -> MapState:
    """Equilibrium of the discrete heat flow nearest to the sampled harmonic map.

    The closed-form profile satisfies the discrete equations only up to the
    truncation error; relaxing it with large implicit steps removes that
    error so that it is an exact fixed point of both flows.
    """
    state = harmonic_state(geom, lam, grid)
    calc = AmbientCalculus(grid, geom)
    for _ in range(max_steps):
        new = hmhf_step(state, ds, "imex1", calc)
        change = float(np.max(np.abs(new.v - state.v))) / ds
        state = new
        if change < tol:
            return replace(state, t_or_s=0.0)
    raise ConvergenceError(f"relaxation to the discrete harmonic map stalled at {change:.2e}")


def bump(r: np.ndarray, center: float = 3.0, width: float = 2.0) -> np.ndarray:
    """Smooth compactly supported bump on ``(center - width, center + width)``."""
    x = (np.asarray(r, dtype=float) - center) / width
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def perturb(state: MapState, field_values: np.ndarray, amplitude: float) -> MapState:
    """Add ``amplitude * Re/Im(field) * (E_rho, E_vartheta)`` and project back to the target.

    ``field_values`` is a complex radial array: the mode-1 frame coordinates
    of the perturbation in the Coulomb frame of the base state.
    """
    e_rho, e_th = polar_frame(state.geom, state.v)
    f = np.asarray(field_values)
    w = state.v + amplitude * (np.real(f)[:, None] * e_rho + np.imag(f)[:, None] * e_th)
    calc = AmbientCalculus(state.grid, state.geom)
    return replace(state, v=calc.project(w))


def frame_components(state: MapState, base: MapState) -> np.ndarray:
    """Complex Coulomb-frame coordinates of ``state.v - base.v`` (mode-1 radial part)."""
    e_rho, e_th = polar_frame(base.geom, base.v)
    d = state.v - base.v
    g = base.geom
    return g.inner(d, e_rho) + 1j * g.inner(d, e_th)


def distance(state: MapState, base: MapState) -> float:
    """``||v - Q||_{H^1} + ||v - Q||_{L^inf}`` with Euclidean ambient components."""
    g = state.grid
    d = state.v - base.v
    grad = face_gradient(g, d.T, 0.0).T
    radial = np.sum(g.face_weights * np.sum(grad**2, axis=1))
    angular = np.sum(g.weights * (d[:, 0] ** 2 + d[:, 1] ** 2) / g.sinh_nodes**2)
    l2 = np.sum(g.weights * np.sum(d**2, axis=1))
    return math.sqrt(TWO_PI * (l2 + radial + angular)) + float(np.max(np.sqrt(np.sum(d**2, axis=1))))


def l2_distance(state: MapState, base: MapState) -> float:
    d = state.v - base.v
    return math.sqrt(TWO_PI * float(np.sum(state.grid.weights * np.sum(d**2, axis=1))))


def map_energy(state: MapState) -> float:
    return ambient_energy(state.geom, state.grid, state.v, state.v_rmax)


# ----------------------------------------------------------------------------
# harmonic map heat flow
# ----------------------------------------------------------------------------

HMHF_SCHEMES = ("imex1", "imex2")


def _checked_project(calc: AmbientCalculus, w: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    defect = float(np.max(np.abs(calc.geom.inner(w, w) - calc.geom.tau)))
    if not np.isfinite(defect) or defect > tol:
        raise StepRejected(f"constraint defect {defect:.3e} before projection exceeds {tol:.1e}")
    return calc.project(w), defect


def hmhf_step(state: MapState, ds: float, scheme: str = "imex1", calc: AmbientCalculus | None = None,
              reject_tol: float = 1e-2) -> MapState:
    """One step of ``d_s u = Delta u + tau |grad u|^2 u`` followed by projection.

    ``imex1`` is linearly implicit Euler; ``imex2`` is a second-order
    predictor-corrector with Crank-Nicolson in the Laplacian.
    """
    if ds <= 0:
        raise ValueError("ds must be positive")
    if scheme not in HMHF_SCHEMES:
        raise ValueError(f"scheme must be one of {HMHF_SCHEMES}")
    calc = calc or AmbientCalculus(state.grid, state.geom)
    tau, v, b = state.geom.tau, state.v, state.v_rmax

    def nonlinear(x):
        lap = calc.laplacian(x, b)
        return tau * calc.multiplier(x, lap)[:, None] * x, lap

    nl, lap = nonlinear(v)
    if scheme == "imex1":
        w = calc.solve_shifted(1.0, ds, v + ds * nl, b)
    else:
        half = calc.solve_shifted(1.0, 0.5 * ds, v + 0.5 * ds * nl, b)
        half = calc.project(half)
        nl_half, _ = nonlinear(half)
        w = calc.solve_shifted(1.0, 0.5 * ds, v + 0.5 * ds * lap + ds * nl_half, b)
    w, _ = _checked_project(calc, w, reject_tol)
    return replace(state, t_or_s=state.t_or_s + ds, v=w)


# ----------------------------------------------------------------------------
# Schroedinger maps
# ----------------------------------------------------------------------------


def _cross_matrices(a: np.ndarray, tau: int) -> np.ndarray:
    """Matrices of ``x -> eta (a cross x)`` for each row of ``a``."""
    m = np.zeros(a.shape[:-1] + (3, 3))
    m[..., 0, 1], m[..., 0, 2] = -a[..., 2], a[..., 1]
    m[..., 1, 0], m[..., 1, 2] = a[..., 2], -a[..., 0]
    m[..., 2, 0], m[..., 2, 1] = -a[..., 1], a[..., 0]
    m[..., 2, :] *= tau
    return m


def _midpoint_matrix(calc: AmbientCalculus, a: np.ndarray, dt: float) -> np.ndarray:
    """Banded storage (5 sub/super-diagonals) of ``X -> X - dt/2 eta(a x Delta X)``."""
    g = calc.grid
    n = g.n
    ops = calc.ops()
    w = g.weights
    # entries of the discrete Laplacian W^{-1} K per component
    dmain = np.stack([op.diag / w for op in ops], axis=1)           # (n, 3)
    dup = np.stack([op.off / w[:-1] for op in ops], axis=1)          # (n-1, 3) row i, col i+1
    dlow = np.stack([op.off / w[1:] for op in ops], axis=1)          # (n-1, 3) row i+1, col i
    cm = _cross_matrices(a, calc.geom.tau)                           # (n, 3, 3)
    ab = np.zeros((11, 3 * n))
    rows = np.arange(3)
    for k, coef, lo in ((0, dmain, 0), (1, dup, 0), (-1, dlow, 1)):
        # block rows i (i from lo ...), block col i + k
        nb = coef.shape[0]
        blocks = -0.5 * dt * cm[lo:lo + nb] * coef[:, None, :]
        if k == 0:
            blocks = blocks + np.eye(3)
        i = np.arange(nb) + lo
        for r in rows:
            for c in rows:
                R = 3 * i + r
                C = 3 * (i + k) + c
                ab[5 + R - C, C] = blocks[:, r, c]
    return ab


def smap_step(state: MapState, dt: float, calc: AmbientCalculus | None = None, tol: float = 1e-10,
              max_iter: int = 50, _depth: int = 0) -> tuple[MapState, dict]:
    """Implicit-midpoint step of ``d_t v = eta (v x Delta v)`` with fixed-point iteration.

    The inner iteration freezes the midpoint ``a`` in the cross product and
    solves the remaining linear system exactly; it stops when successive
    iterates agree to ``tol``.  On failure the step is retried as two half
    steps.  Returns the new state and a report dictionary.
    """
    if dt == 0:
        raise ValueError("dt must be nonzero")
    calc = calc or AmbientCalculus(state.grid, state.geom)
    v, b = state.v, state.v_rmax
    g = calc.grid
    load = calc.laplacian(np.zeros_like(v), b)  # boundary contribution to Delta
    lap_v = calc.laplacian(v, b)
    x = v.copy()
    tau = state.geom.tau
    for it in range(1, max_iter + 1):
        a = 0.5 * (v + x)
        cm = _cross_matrices(a, tau)
        rhs = v + 0.5 * dt * np.einsum("nij,nj->ni", cm, lap_v + load)
        ab = _midpoint_matrix(calc, a, dt)
        xn = solve_banded((5, 5), ab, rhs.reshape(-1), check_finite=False).reshape(-1, 3)
        change = float(np.max(np.abs(xn - x)))
        x = xn
        if change < tol:
            break
    else:
        if _depth >= 6:
            raise ConvergenceError(f"midpoint iteration did not converge (dt={dt:g})")
        mid, r1 = smap_step(state, 0.5 * dt, calc, tol, max_iter, _depth + 1)
        out, r2 = smap_step(mid, 0.5 * dt, calc, tol, max_iter, _depth + 1)
        return out, {"iterations": r1["iterations"] + r2["iterations"], "halvings": 1 + r1["halvings"] + r2["halvings"],
                      "defect": max(r1["defect"], r2["defect"])}
    defect = float(np.max(np.abs(state.geom.inner(x, x) - tau)))
    x = calc.project(x)
    return replace(state, t_or_s=state.t_or_s + dt, v=x), {"iterations": it, "halvings": 0, "defect": defect}


# ----------------------------------------------------------------------------
# linear Schroedinger
# ----------------------------------------------------------------------------


def sponge_profile(grid: RadialGrid, start: float, strength: float = 1.0) -> np.ndarray:
    """Absorbing rate ``strength * ((r - start) / (r_max - start))^2`` beyond ``start``."""
    x = np.clip((grid.nodes - start) / (grid.r_max - start), 0.0, None)
    return strength * x * x


def linear_schrodinger_step(op: ModeOperator | WeightedTridiag, phi: np.ndarray, dt: float,
                            absorber: np.ndarray | None = None) -> np.ndarray:
    """Crank-Nicolson step of ``i d_t phi = H phi``.

    With ``absorber = Gamma >= 0`` the operator becomes ``H - i Gamma``, which
    damps outgoing waves near ``r_max``; without it the step is unitary in
    the weighted norm.
    """
    h = op.H if isinstance(op, ModeOperator) else op
    if absorber is not None:
        h = h.with_potential(-1j * np.asarray(absorber))
    phi = np.asarray(phi, dtype=complex)
    rhs = phi - 0.5j * dt * h.apply(phi)
    return h.solve_shifted(1.0, 0.5j * dt, rhs)


def linear_schrodinger_evolve(op, phi0: np.ndarray, dt: float, steps: int, every: int = 1,
                              absorber: np.ndarray | None = None) -> np.ndarray:
    """Samples ``phi(k dt)`` for ``k = 0, every, 2 every, ...`` up to ``steps``."""
    out = [np.asarray(phi0, dtype=complex)]
    phi = out[0]
    for k in range(1, steps + 1):
        phi = linear_schrodinger_step(op, phi, dt, absorber)
        if k % every == 0:
            out.append(phi)
    return np.array(out)


# ----------------------------------------------------------------------------
# runs and diagnostics
# ----------------------------------------------------------------------------


@dataclass
class FlowDiagnostics:
    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    distance: list = field(default_factory=list)
    l2_distance: list = field(default_factory=list)
    constraint_defect: list = field(default_factory=list)
    fit: DecayFit | None = None

    def record(self, state: MapState, base: MapState) -> None:
        self.times.append(state.t_or_s)
        self.energy.append(map_energy(state))
        self.distance.append(distance(state, base))
        self.l2_distance.append(l2_distance(state, base))
        self.constraint_defect.append(state.constraint_defect())

    def rows(self):
        return zip(self.times, self.energy, self.distance, self.constraint_defect)

    def energy_monotone(self, slack: float = 1e-12) -> bool:
        e = np.asarray(self.energy)
        return bool(np.all(np.diff(e) <= slack))

    def relative_energy_drift(self) -> float:
        e = np.asarray(self.energy)
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))

    def fit_decay(self, s_lo: float, s_hi: float = math.inf, use: str = "l2") -> DecayFit:
        t = np.asarray(self.times)
        y = np.asarray(self.l2_distance if use == "l2" else self.distance)
        sel = (t >= s_lo) & (t <= s_hi)
        self.fit = decay_fit(np.column_stack([t[sel], y[sel]]))
        return self.fit


def run_hmhf(state: MapState, base: MapState, ds: float, s_max: float, scheme: str = "imex1",
             record_every: int = 1) -> tuple[MapState, FlowDiagnostics]:
    calc = AmbientCalculus(state.grid, state.geom)
    diag = FlowDiagnostics()
    diag.record(state, base)
    steps = int(round(s_max / ds))
    for k in range(1, steps + 1):
        state = hmhf_step(state, ds, scheme, calc)
        if k % record_every == 0 or k == steps:
            diag.record(state, base)
    return state, diag


def run_smap(state: MapState, base: MapState, dt: float, t_max: float, record_every: int = 1,
             tol: float = 1e-10) -> tuple[MapState, FlowDiagnostics]:
    calc = AmbientCalculus(state.grid, state.geom)
    diag = FlowDiagnostics()
    diag.record(state, base)
    steps = int(round(t_max / dt))
    for k in range(1, steps + 1):
        state, _ = smap_step(state, dt, calc, tol)
        if k % record_every == 0 or k == steps:
            diag.record(state, base)
    return state, diag
