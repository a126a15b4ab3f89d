"""Caloric gauge along an equivariant harmonic map heat flow.

Given a heat-flow trajectory ``v(r, s)`` (section at ``theta = 0``), an
orthonormal tangent frame ``(eps1, eps2)`` is transported backwards in ``s``
with ``D_s eps = 0`` from a terminal frame at ``s_max``.  The full frame on the
disk is ``e_1 + i e_2 = e^{i theta} R_theta (eps1 + i eps2)``, so every gauge
field has the form ``e^{i theta} f(r, s)`` and only the radial parts are
stored:

    psi_mu = <d_mu u, e_1> + i <d_mu u, e_2>,  A_mu = <D_mu e_1, e_2>.

With this normalisation ``A_theta = <Omega eps1, eps2> - 1`` and the angular
covariant derivative of a mode field is ``i (1 + A_theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .frame import coulomb_frame
from .flows import AmbientCalculus, MapState, hmhf_step, polar_frame
from .geometry import TWO_PI, RadialGrid, mode_laplacian
from .target import TargetGeometry, harmonic_profile

ODD_V = (-1, -1, 1)      # parity of the ambient section under r -> -r
EVEN_FRAME = (1, 1, -1)  # parity of the transported frame vectors


# ----------------------------------------------------------------------------
# differentiation helpers
# ----------------------------------------------------------------------------


def radial_derivative(grid: RadialGrid, f: np.ndarray, parity: int = 1, boundary=None) -> np.ndarray:
    """Second-order derivative in ``r`` along the last axis.

    ``parity`` fixes the ghost value at ``-r_0``.  If ``boundary`` is given it
    is the value at ``r_max``; otherwise a one-sided stencil closes the grid.
    """
    f = np.asarray(f)
    r = grid.nodes
    n = r.size
    xl = np.concatenate(([-r[0]], r[:-1]))
    fl = np.concatenate((parity * f[..., :1], f[..., :-1]), axis=-1)
    if boundary is not None:
        xr = np.concatenate((r[1:], [grid.r_max]))
        fr = np.concatenate((f[..., 1:], np.broadcast_to(np.asarray(boundary)[..., None], f.shape[:-1] + (1,))), axis=-1)
    else:
        xr = np.concatenate((r[1:], [2 * r[-1] - r[-2]]))
        fr = np.concatenate((f[..., 1:], 2 * f[..., -1:] - f[..., -2:-1]), axis=-1)
    hl = r - xl
    hr = xr - r
    out = (hl**2 * fr - hr**2 * fl + (hr**2 - hl**2) * f) / (hl * hr * (hl + hr))
    if boundary is None:
        # second-order backward difference at the last node
        h1 = r[-1] - r[-2]
        h2 = r[-2] - r[-3]
        a = (2 * h1 + h2) / (h1 * (h1 + h2))
        b = -(h1 + h2) / (h1 * h2)
        c = h1 / (h2 * (h1 + h2))
        out[..., -1] = a * f[..., -1] + b * f[..., -2] + c * f[..., -3]
    return out


def s_derivative(s: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second-order derivative along axis 0 on the nonuniform grid ``s``."""
    f = np.asarray(f)
    out = np.empty_like(f)
    sh = (-1,) + (1,) * (f.ndim - 1)
    h0 = np.diff(s)
    hl = h0[:-1].reshape(sh)
    hr = h0[1:].reshape(sh)
    out[1:-1] = (hl**2 * f[2:] - hr**2 * f[:-2] + (hr**2 - hl**2) * f[1:-1]) / (hl * hr * (hl + hr))

    def one_sided(f0, f1, f2, h1, h2):
        return (-(2 * h1 + h2) / (h1 * (h1 + h2))) * f0 + ((h1 + h2) / (h1 * h2)) * f1 - (h1 / (h2 * (h1 + h2))) * f2

    out[0] = one_sided(f[0], f[1], f[2], h0[0], h0[1])
    out[-1] = -one_sided(f[-1], f[-2], f[-3], h0[-1], h0[-2])
    return out


def _vec_derivative(grid: RadialGrid, x: np.ndarray, parity, boundary=None) -> np.ndarray:
    """Radial derivative of a field of ambient vectors ``(..., n, 3)``."""
    comps = []
    for c in range(3):
        b = None if boundary is None else np.asarray(boundary)[..., c]
        comps.append(radial_derivative(grid, x[..., c], parity[c], b))
    return np.stack(comps, axis=-1)


def omega(v: np.ndarray) -> np.ndarray:
    """Infinitesimal rotation about the third axis, ``(-v2, v1, 0)``."""
    return np.stack([-v[..., 1], v[..., 0], np.zeros_like(v[..., 0])], axis=-1)


# ----------------------------------------------------------------------------
# heat-flow trajectories
# ----------------------------------------------------------------------------


def caloric_s_grid(s_max: float, s_min: float = 1e-4, q: float = 2 ** 0.125) -> np.ndarray:
    """``[0, s_min, s_min q, ...]`` ending exactly at ``s_max``."""
    count = max(2, int(math.ceil(math.log(s_max / s_min) / math.log(q))))
    s = s_min * q ** np.arange(count + 1)
    s = s[s < s_max * (1 - 1e-9)]
    return np.concatenate(([0.0], s, [s_max]))


@dataclass(frozen=True, eq=False)
class HeatFlowTrajectory:
    s: np.ndarray
    v: np.ndarray          # (N, n, 3)
    grid: RadialGrid
    geom: TargetGeometry
    v_rmax: np.ndarray

    def state(self, j: int) -> MapState:
        return MapState(float(self.s[j]), self.v[j], self.grid, self.geom, self.v_rmax)


def heat_flow_trajectory(state: MapState, s_grid: np.ndarray, ds_max: float = 0.05,
                         scheme: str = "imex2") -> HeatFlowTrajectory:
    """Evolve the harmonic map heat flow and sample it at ``s_grid`` (starting at 0)."""
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid[0] != 0 or np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must start at 0 and increase")
    calc = AmbientCalculus(state.grid, state.geom)
    out = np.empty((s_grid.size, state.grid.n, 3))
    out[0] = state.v
    cur = replace(state, t_or_s=0.0)
    for j in range(1, s_grid.size):
        span = s_grid[j] - s_grid[j - 1]
        k = max(1, math.ceil(span / ds_max - 1e-12))
        for _ in range(k):
            cur = hmhf_step(cur, span / k, scheme, calc)
        out[j] = cur.v
    return HeatFlowTrajectory(s_grid, out, state.grid, state.geom, state.v_rmax)


# ----------------------------------------------------------------------------
# gauge construction
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaugeTrajectory:
    """Caloric-gauge fields on ``s x r`` (radial parts at ``theta = 0``)."""

    s: np.ndarray
    grid: RadialGrid
    geom: TargetGeometry
    v: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    psi_s: np.ndarray
    psi_r: np.ndarray
    psi_theta: np.ndarray
    A_r: np.ndarray
    A_theta: np.ndarray
    A_s: np.ndarray
    v_rmax: np.ndarray

    @property
    def tau(self) -> int:
        return self.geom.tau

    def orthonormality_defect(self) -> float:
        g = self.geom
        d11 = np.abs(g.inner(self.e1, self.e1) - 1)
        d22 = np.abs(g.inner(self.e2, self.e2) - 1)
        d12 = np.abs(g.inner(self.e1, self.e2))
        return float(max(d11.max(), d22.max(), d12.max()))

    def tangency_defect(self) -> float:
        g = self.geom
        return float(max(np.abs(g.inner(self.e1, self.v)).max(), np.abs(g.inner(self.e2, self.v)).max()))


class TerminalToleranceError(RuntimeError):
    pass


def _transport_backward(geom: TargetGeometry, v: np.ndarray, terminal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``d_s eps = -tau <eps, d_s v> v`` backwards with the implicit midpoint rule."""
    tau = geom.tau
    alpha = 0.5 * tau
    e1 = np.empty_like(v)
    e1[-1] = terminal
    for j in range(v.shape[0] - 2, -1, -1):
        b = e1[j + 1]
        d = v[j] - v[j + 1]
        vm = 0.5 * (v[j] + v[j + 1])
        rhs = b - alpha * geom.inner(b, d)[:, None] * vm
        xd = geom.inner(rhs, d) / (1.0 + alpha * geom.inner(vm, d))
        x = rhs - alpha * xd[:, None] * vm
        # re-impose tangency and unit length
        x = x - tau * geom.inner(x, v[j])[:, None] * v[j]
        x = x / np.sqrt(geom.inner(x, x))[:, None]
        e1[j] = x
    e2 = geom.J(v, e1)
    return e1, e2


def tension_field(calc: AmbientCalculus, v: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Discrete ``d_s v`` of the heat flow: tangential part of the Laplacian."""
    return calc.tension(v, b)


def gauge_fields(geom: TargetGeometry, grid: RadialGrid, v: np.ndarray, v_rmax: np.ndarray,
                 e1: np.ndarray, e2: np.ndarray, calc: AmbientCalculus | None = None) -> dict:
    """Spatial gauge components for frames on an ``(..., n, 3)`` stack of sections."""
    calc = calc or AmbientCalculus(grid, geom)
    inner = geom.inner
    dv = _vec_derivative(grid, v, ODD_V, v_rmax)
    om = omega(v)
    de1 = _vec_derivative(grid, e1, EVEN_FRAME)
    if v.ndim == 2:
        ts = calc.tension(v, v_rmax)
    else:
        ts = np.stack([calc.tension(x, v_rmax) for x in v])
    return {
        "psi_r": inner(dv, e1) + 1j * inner(dv, e2),
        "psi_theta": inner(om, e1) + 1j * inner(om, e2),
        "psi_s": inner(ts, e1) + 1j * inner(ts, e2),
        "A_r": inner(de1, e2),
        "A_theta": inner(omega(e1), e2) - 1.0,
    }


def build_caloric_gauge(traj: HeatFlowTrajectory, terminal_frame: np.ndarray | None = None,
                        base: MapState | None = None, tol: float = 1e-8, rotation: float = 0.0) -> GaugeTrajectory:
    """Caloric gauge along ``traj`` normalised by a terminal frame at ``s_max``.

    ``terminal_frame`` defaults to ``E_rho`` of ``base`` (or of the final
    state).  If ``base`` is given the final state must be within ``tol`` of it
    in the sup norm.  ``rotation`` turns the terminal frame by a constant
    angle, which changes the gauge by a global phase.
    """
    geom, grid = traj.geom, traj.grid
    if base is not None:
        gap = float(np.max(np.abs(traj.v[-1] - base.v)))
        if gap > tol:
            raise TerminalToleranceError(
                f"heat flow not converged at s_max={traj.s[-1]:g}: sup distance {gap:.2e} > {tol:.1e}")
    if terminal_frame is None:
        ref = base.v if base is not None else traj.v[-1]
        e_rho, e_th = polar_frame(geom, ref)
        terminal_frame = math.cos(rotation) * e_rho + math.sin(rotation) * e_th
        # project onto the tangent plane of the actual final state
        x = terminal_frame - geom.tau * geom.inner(terminal_frame, traj.v[-1])[:, None] * traj.v[-1]
        terminal_frame = x / np.sqrt(geom.inner(x, x))[:, None]
    e1, e2 = _transport_backward(geom, traj.v, terminal_frame)
    calc = AmbientCalculus(grid, geom)
    flds = gauge_fields(geom, grid, traj.v, traj.v_rmax, e1, e2, calc)
    A_s = geom.inner(s_derivative(traj.s, e1), e2)
    return GaugeTrajectory(traj.s, grid, geom, traj.v, e1, e2, flds["psi_s"], flds["psi_r"],
                           flds["psi_theta"], flds["A_r"], flds["A_theta"], A_s, traj.v_rmax)


def required_s_max(initial_distance: float, rate: float, tol: float = 1e-8) -> float:
    """Heat time after which ``initial_distance * e^{-rate s}`` is below ``tol``."""
    return max(0.0, math.log(initial_distance / tol) / rate)


# ----------------------------------------------------------------------------
# residual norms
# ----------------------------------------------------------------------------


def window_mask(grid: RadialGrid, r_lo: float = 0.5, r_hi: float | None = None) -> np.ndarray:
    # Far out, the area weight sinh(r) magnifies absolute errors of size 1e-10
    # in fields that are themselves exponentially small, so the default window
    # stops at half the domain.
    r_hi = 0.5 * grid.r_max if r_hi is None else r_hi
    return (grid.nodes >= r_lo) & (grid.nodes <= r_hi)


def windowed_l2(grid: RadialGrid, f: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Weighted ``L^2`` norm over the masked nodes (last axis)."""
    return np.sqrt(TWO_PI * np.sum(grid.weights[mask] * np.abs(f[..., mask]) ** 2, axis=-1))


def a_s_residual(gt: GaugeTrajectory) -> float:
    return float(np.max(np.abs(gt.A_s)))


def check_curvature_identity(gt: GaugeTrajectory, tau: int | None = None, r_lo: float = 0.5,
                             r_hi: float | None = None) -> dict:
    """Residuals of ``d_s A_mu - d_mu A_s = tau Im(psi_s conj(psi_mu))`` for ``mu = r, theta``.

    Returns the maximum over interior ``s`` of the windowed ``L^2`` norm.
    """
    tau = gt.tau if tau is None else tau
    g = gt.grid
    mask = window_mask(g, r_lo, r_hi)
    ds_ar = s_derivative(gt.s, gt.A_r)
    ds_at = s_derivative(gt.s, gt.A_theta)
    dr_as = radial_derivative(g, gt.A_s, 1)
    res_r = ds_ar - dr_as - tau * np.imag(gt.psi_s * np.conj(gt.psi_r))
    res_t = ds_at - tau * np.imag(gt.psi_s * np.conj(gt.psi_theta))
    inner = slice(1, -1)
    return {"r": float(np.max(windowed_l2(g, res_r[inner], mask))),
            "theta": float(np.max(windowed_l2(g, res_t[inner], mask)))}


def heat_tension_residual(gt: GaugeTrajectory, r_lo: float = 0.5, r_hi: float | None = None) -> float:
    """Residual of ``psi_s = D^l psi_l`` (max over ``s`` of the windowed ``L^2`` norm)."""
    g = gt.grid
    mask = window_mask(g, r_lo, r_hi)
    sh = g.sinh_nodes
    div = radial_derivative(g, gt.psi_r, 1) + (np.cosh(g.nodes) / sh) * gt.psi_r
    rhs = div + 1j * gt.A_r * gt.psi_r + 1j * (1 + gt.A_theta) * gt.psi_theta / sh**2
    return float(np.max(windowed_l2(g, gt.psi_s - rhs, mask)))


def _trapezoid_tail(s: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``int_{s_j}^{s_max} f ds`` for every ``j`` (trapezoid rule)."""
    h = np.diff(s).reshape((-1,) + (1,) * (f.ndim - 1))
    pieces = 0.5 * h * (f[1:] + f[:-1])
    tail = np.zeros_like(f)
    tail[:-1] = np.cumsum(pieces[::-1], axis=0)[::-1]
    return tail


@dataclass(frozen=True)
class Reconstruction:
    A_ring: dict
    psi_ring: dict
    A_direct: dict
    psi_direct: dict

    def mismatch(self, grid: RadialGrid) -> float:
        """Largest relative ``L^2`` mismatch between integrated and direct fields."""
        worst = 0.0
        mask = np.ones(grid.n, dtype=bool)
        for a, b in ((self.A_ring, self.A_direct), (self.psi_ring, self.psi_direct)):
            for k in a:
                den = float(windowed_l2(grid, b[k], mask))
                num = float(windowed_l2(grid, a[k] - b[k], mask))
                if den > 0:
                    worst = max(worst, num / den)
                elif num > 0:
                    worst = math.inf
        return worst


def reconstruct(gt: GaugeTrajectory, s0_index: int = 0) -> Reconstruction:
    """Integrate ``A`` and ``psi`` back from ``s_max`` and compare with direct values at ``s0``."""
    g = gt.grid
    tau = gt.tau
    d_psi_s = radial_derivative(g, gt.psi_s, -1, boundary=0.0)
    integrands_A = {"r": -tau * np.imag(gt.psi_s * np.conj(gt.psi_r)),
                    "theta": -tau * np.imag(gt.psi_s * np.conj(gt.psi_theta))}
    integrands_psi = {"r": -(d_psi_s + 1j * gt.A_r * gt.psi_s),
                      "theta": -(1j * (1 + gt.A_theta) * gt.psi_s)}
    A_ring = {k: _trapezoid_tail(gt.s, f)[s0_index] for k, f in integrands_A.items()}
    psi_ring = {k: _trapezoid_tail(gt.s, f)[s0_index] for k, f in integrands_psi.items()}
    A_direct = {"r": gt.A_r[s0_index] - gt.A_r[-1], "theta": gt.A_theta[s0_index] - gt.A_theta[-1]}
    psi_direct = {"r": gt.psi_r[s0_index] - gt.psi_r[-1], "theta": gt.psi_theta[s0_index] - gt.psi_theta[-1]}
    return Reconstruction(A_ring, psi_ring, A_direct, psi_direct)


# ----------------------------------------------------------------------------
# covariant calculus for mode-1 gauge fields and the equations of motion
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class GaugeCalculus:
    """Discrete covariant operations on fields ``e^{i theta} f(r)``.

    Connections are pairs ``(A_r, A_theta)`` of coordinate components; index
    contractions use the inverse metric ``diag(1, sinh^{-2})``.
    """

    grid: RadialGrid
    tau: int
    lap1: object = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.lap1 = mode_laplacian(self.grid, 1)
        self.inv_s2 = 1.0 / self.grid.sinh_nodes**2
        self.coth = np.cosh(self.grid.nodes) / self.grid.sinh_nodes

    def dot(self, a: tuple, b: tuple) -> np.ndarray:
        """``a^k b_k`` without conjugation."""
        return a[0] * b[0] + a[1] * b[1] * self.inv_s2

    def grad(self, f: np.ndarray) -> tuple:
        """``(d_r f, d_theta f)`` for a mode-1 field vanishing at ``r_max``."""
        return (radial_derivative(self.grid, f, -1, boundary=0.0), 1j * f)

    def div(self, A: tuple) -> np.ndarray:
        """``nabla^k A_k`` for a rotation-invariant 1-form."""
        return radial_derivative(self.grid, A[0], 1) + self.coth * A[0]

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.lap1.apply(f)

    def cov_laplacian(self, f: np.ndarray, A: tuple) -> np.ndarray:
        """``D^k D_k f = Delta f + 2i A^k d_k f + i (div A) f - A^k A_k f``."""
        return (self.laplacian(f) + 2j * self.dot(A, self.grad(f)) + 1j * self.div(A) * f
                - self.dot(A, A) * f)

    def im_contract(self, psi: tuple, z: np.ndarray, phi: tuple) -> np.ndarray:
        """``i Im(psi^k conj(z)) phi_k``."""
        return 1j * (np.imag(psi[0] * np.conj(z)) * phi[0] + np.imag(psi[1] * np.conj(z)) * phi[1] * self.inv_s2)

    def H(self, f: np.ndarray, A_inf: tuple, p: np.ndarray) -> np.ndarray:
        """Linearized operator ``-(nabla + i A_inf)^2 - tau p^2``."""
        return -self.cov_laplacian(f, A_inf) - self.tau * p**2 * f


@dataclass(frozen=True, eq=False)
class Background:
    """Coulomb-frame data of the harmonic map used to split ``psi`` and ``A``."""

    A: tuple
    psi: tuple
    p: np.ndarray


def coulomb_background(geom: TargetGeometry, lam: float, grid: RadialGrid) -> Background:
    prof = harmonic_profile(geom, lam, grid)
    fc = coulomb_frame(geom, prof, grid)
    psi_r = fc.p.astype(complex)
    psi_theta = 1j * geom.S(prof.rho) + 0j
    return Background((np.zeros(grid.n), np.asarray(fc.A_theta)), (psi_r, psi_theta), np.asarray(fc.p))


# -- covariant residuals (left side minus right side) -------------------------


def covariant_heat_psi_s(gc: GaugeCalculus, psi_s, ds_psi_s, A, psi, A_s=0.0):
    """``(D_s - D^k D_k) psi_s + i tau Im(psi^k conj psi_s) psi_k``."""
    return (ds_psi_s + 1j * A_s * psi_s - gc.cov_laplacian(psi_s, A)
            + gc.tau * gc.im_contract(psi, psi_s, psi))


def covariant_heat_w(gc: GaugeCalculus, w, ds_w, psi_s, A, psi, A_s=0.0):
    """``(D_s - D^k D_k) w + i tau Im(psi^k conj w) psi_k - i tau psi^k psi_k conj psi_s``."""
    return (ds_w + 1j * A_s * w - gc.cov_laplacian(w, A) + gc.tau * gc.im_contract(psi, w, psi)
            - 1j * gc.tau * gc.dot(psi, psi) * np.conj(psi_s))


def covariant_schrodinger_psi_s(gc: GaugeCalculus, psi_s, dt_psi_s, ds_w, A_t, A, psi):
    """``(i D_t + D^k D_k) psi_s - i d_s w - i tau Im(psi^k conj psi_s) psi_k``."""
    return (1j * dt_psi_s - A_t * psi_s + gc.cov_laplacian(psi_s, A) - 1j * ds_w
            - gc.tau * gc.im_contract(psi, psi_s, psi))


# -- refined forms: right-hand sides with H split off ------------------------


def _split(bg: Background, A, psi):
    Ar = tuple(a - b for a, b in zip(A, bg.A))
    pr = tuple(a - b for a, b in zip(psi, bg.psi))
    return Ar, pr


def refined_heat_psi_s_rhs(gc: GaugeCalculus, bg: Background, psi_s, A_ring, psi_ring):
    """Right-hand side of ``(d_s + H) psi_s = ...`` in terms of ``(psi_ring, A_ring)``."""
    t = gc.tau
    return (t * gc.im_contract(psi_ring, psi_s, psi_ring) * -1  # i Im(psi_s conj(psi^k)) psi_k
            + t * (-gc.im_contract(psi_ring, psi_s, bg.psi))
            + t * (-gc.im_contract(bg.psi, psi_s, psi_ring))
            + 2j * gc.dot(A_ring, gc.grad(psi_s)) + 1j * gc.div(A_ring) * psi_s
            - gc.dot(A_ring, A_ring) * psi_s - 2 * gc.dot(bg.A, A_ring) * psi_s)


def refined_heat_w_rhs(gc: GaugeCalculus, bg: Background, w, psi_s, A_ring, psi_ring):
    """Right-hand side of ``(d_s + H) w = ...``."""
    t = gc.tau
    return (-t * gc.im_contract(psi_ring, w, psi_ring)
            - t * gc.im_contract(psi_ring, w, bg.psi)
            - t * gc.im_contract(bg.psi, w, psi_ring)
            + 2j * gc.dot(A_ring, gc.grad(w)) - 2 * gc.dot(bg.A, A_ring) * w
            + 1j * gc.div(A_ring) * w - gc.dot(A_ring, A_ring) * w
            + 1j * t * gc.dot(psi_ring, psi_ring) * np.conj(psi_s)
            + 2j * t * gc.dot(bg.psi, psi_ring) * np.conj(psi_s))


def refined_schrodinger_psi_s_rhs(gc: GaugeCalculus, bg: Background, psi_s, ds_w, A_t, A_ring, psi_ring):
    """Right-hand side of ``(i d_t - H) psi_s = ...``."""
    t = gc.tau
    return (1j * ds_w - 2j * gc.dot(A_ring, gc.grad(psi_s)) + 2 * gc.dot(bg.A, A_ring) * psi_s
            + t * gc.im_contract(bg.psi, psi_s, psi_ring) + t * gc.im_contract(psi_ring, psi_s, bg.psi)
            - 1j * gc.div(A_ring) * psi_s + gc.dot(A_ring, A_ring) * psi_s
            + t * gc.im_contract(psi_ring, psi_s, psi_ring) + A_t * psi_s)


def refined_heat_psi_s_residual(gc, bg, psi_s, ds_psi_s, A, psi):
    Ar, pr = _split(bg, A, psi)
    return ds_psi_s + gc.H(psi_s, bg.A, bg.p) - refined_heat_psi_s_rhs(gc, bg, psi_s, Ar, pr)


def refined_heat_w_residual(gc, bg, w, ds_w, psi_s, A, psi):
    Ar, pr = _split(bg, A, psi)
    return ds_w + gc.H(w, bg.A, bg.p) - refined_heat_w_rhs(gc, bg, w, psi_s, Ar, pr)


def refined_schrodinger_psi_s_residual(gc, bg, psi_s, dt_psi_s, ds_w, A_t, A, psi):
    Ar, pr = _split(bg, A, psi)
    return 1j * dt_psi_s - gc.H(psi_s, bg.A, bg.p) - refined_schrodinger_psi_s_rhs(gc, bg, psi_s, ds_w, A_t, Ar, pr)


# -- trajectory diagnostics --------------------------------------------------


@dataclass
class MotionReport:
    heat_psi_s: float
    heat_w: float | None = None
    schrodinger_psi_s: float | None = None
    w_at_zero: float | None = None
    w_at_zero_relative: float | None = None
    per_s: dict = field(default_factory=dict)


def equations_of_motion_residuals(gt: GaugeTrajectory, family: tuple | None = None, dt: float | None = None,
                                  r_lo: float = 0.5, r_hi: float | None = None) -> MotionReport:
    """Residuals of the caloric equations of motion along ``gt``.

    ``family = (gt_minus, gt_plus)`` are gauges built with the same terminal
    frame for the Schroedinger-map states at ``t - dt`` and ``t + dt``; they
    enable ``w = psi_t - i psi_s`` and the time-dependent equations.
    """
    g = gt.grid
    gc = GaugeCalculus(g, gt.tau)
    mask = window_mask(g, r_lo, r_hi)
    A = (gt.A_r, gt.A_theta)
    psi = (gt.psi_r, gt.psi_theta)
    ds_psi_s = s_derivative(gt.s, gt.psi_s)
    heat = np.array([windowed_l2(g, covariant_heat_psi_s(gc, gt.psi_s[j], ds_psi_s[j], (A[0][j], A[1][j]),
                                                         (psi[0][j], psi[1][j]), gt.A_s[j]), mask)
                     for j in range(1, gt.s.size - 1)])
    rep = MotionReport(float(np.max(heat)), per_s={"heat_psi_s": heat})
    if family is None:
        return rep
    if dt is None:
        raise ValueError("dt is required with a time family")
    minus, plus = family
    dv_t = (plus.v - minus.v) / (2 * dt)
    psi_t = gt.geom.inner(dv_t, gt.e1) + 1j * gt.geom.inner(dv_t, gt.e2)
    w = psi_t - 1j * gt.psi_s
    ds_w = s_derivative(gt.s, w)
    dt_psi_s = (plus.psi_s - minus.psi_s) / (2 * dt)
    A_t = gt.geom.inner((plus.e1 - minus.e1) / (2 * dt), gt.e2)
    hw, sp = [], []
    for j in range(1, gt.s.size - 1):
        Aj = (A[0][j], A[1][j])
        pj = (psi[0][j], psi[1][j])
        hw.append(windowed_l2(g, covariant_heat_w(gc, w[j], ds_w[j], gt.psi_s[j], Aj, pj, gt.A_s[j]), mask))
        sp.append(windowed_l2(g, covariant_schrodinger_psi_s(gc, gt.psi_s[j], dt_psi_s[j], ds_w[j], A_t[j], Aj, pj), mask))
    full = np.ones(g.n, dtype=bool)
    w0 = float(windowed_l2(g, w[0], full))
    scale = float(windowed_l2(g, gt.psi_s[0], full))
    rep.heat_w = float(np.max(hw))
    rep.schrodinger_psi_s = float(np.max(sp))
    rep.w_at_zero = w0
    rep.w_at_zero_relative = w0 / scale if scale > 0 else math.inf
    rep.per_s.update({"heat_w": np.array(hw), "schrodinger_psi_s": np.array(sp), "w_norm": windowed_l2(g, w, full)})
    return rep


def per_s_table(gt: GaugeTrajectory) -> np.ndarray:
    """Rows ``(s, ||psi_s||_2, ||A_ring||_inf, |A_s|_inf)`` with ``A_ring = A - A(s_max)``."""
    g = gt.grid
    full = np.ones(g.n, dtype=bool)
    ps = windowed_l2(g, gt.psi_s, full)
    ar = np.maximum(np.max(np.abs(gt.A_r - gt.A_r[-1]), axis=1),
                    np.max(np.abs(gt.A_theta - gt.A_theta[-1]), axis=1))
    return np.column_stack([gt.s, ps, ar, np.max(np.abs(gt.A_s), axis=1)])
