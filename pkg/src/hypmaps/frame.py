"""Coulomb frame along an equivariant harmonic map and its connection coefficients.

Along ``Q = (rho(r), theta)`` take ``e_1 = E_rho`` and ``e_2 = E_vartheta``,
the unit frame of polar coordinates on the target.  In this frame the radial
connection coefficient vanishes, the angular one is ``S'(rho) - 1`` once the
rotation of the domain frame is absorbed, and both derivative components have
modulus ``p = S(rho) / sinh r``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .geometry import RadialGrid
from .target import HarmonicProfile, TargetGeometry


@dataclass(frozen=True, eq=False)
class FrameCoefficients:
    """Radial samples of the Coulomb-frame coefficients at angle ``theta = 0``.

    ``A_theta`` is the coordinate component (bounded at the origin); the
    orthonormal-frame component is ``A_theta / sinh r``.  The derivative
    components at general angle are ``psi1_radial * e^{i theta}`` and
    ``psi2_radial * e^{i theta}``.
    """

    geom: TargetGeometry
    grid: RadialGrid
    A_r: np.ndarray
    A_theta: np.ndarray
    p: np.ndarray
    psi1_radial: np.ndarray
    psi2_radial: np.ndarray

    def psi1(self, theta: float) -> np.ndarray:
        return self.psi1_radial * np.exp(1j * theta)

    def psi2(self, theta: float) -> np.ndarray:
        return self.psi2_radial * np.exp(1j * theta)

    def with_changes(self, **kw) -> "FrameCoefficients":
        return replace(self, **kw)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "A_theta", "p"])
            for row in zip(self.grid.nodes, self.A_theta, self.p):
                w.writerow([repr(float(x)) for x in row])


def _frame_arrays(geom: TargetGeometry, grid: RadialGrid, rho: np.ndarray):
    a_theta = geom.Sp(rho) - 1.0
    p = geom.S(rho) / grid.sinh_nodes
    return a_theta, p


def coulomb_frame(geom: TargetGeometry, profile: HarmonicProfile, grid: RadialGrid | None = None) -> FrameCoefficients:
    """Coefficients ``A_r = 0``, ``A_theta = S'(Q) - 1``, ``psi_1 = p e^{i theta}``, ``psi_2 = i psi_1``."""
    grid = profile.grid if grid is None else grid
    rho = profile.rho if grid is profile.grid else geom.profile_value(profile.lam, grid.nodes)
    a_theta, p = _frame_arrays(geom, grid, rho)
    psi1 = p.astype(complex)
    psi2 = 1j * psi1
    for a in (a_theta, p, psi1, psi2):
        a.setflags(write=False)
    return FrameCoefficients(geom, grid, np.zeros(grid.n), a_theta, p, psi1, psi2)


def check_coulomb(coeffs: FrameCoefficients, grid: RadialGrid | None = None) -> float:
    """Max norm of the discrete divergence ``sinh^{-1} d_r(sinh A_r) + sinh^{-2} d_theta A_theta``.

    ``A_theta`` is stored without angular dependence, so its contribution is
    structurally zero; the radial part is a flux-form divergence with zero
    flux through ``r = 0``.
    """
    grid = coeffs.grid if grid is None else grid
    a = np.asarray(coeffs.A_r, dtype=float)
    if a.ndim != 1 or np.ndim(coeffs.A_theta) != 1:
        raise ValueError("frame coefficients must be radial arrays")
    face = np.empty(grid.n)
    face[:-1] = 0.5 * (a[1:] + a[:-1])
    face[-1] = a[-1]
    flux = np.sinh(grid.faces[1:]) * face
    div = np.diff(np.concatenate(([0.0], flux))) / grid.weights
    return float(np.max(np.abs(div)))


def check_cauchy_riemann(coeffs: FrameCoefficients) -> float:
    """Max deviation from ``psi_2 = i psi_1`` (equivalently ``psi_1 + i psi_2 = 0``)."""
    return float(np.max(np.abs(coeffs.psi2_radial - 1j * coeffs.psi1_radial), initial=0.0))


def decay_constant(coeffs: FrameCoefficients) -> float:
    """``max e^r (|A_theta| / sinh r + p)`` over the outer half of the grid."""
    g = coeffs.grid
    outer = g.nodes >= 0.5 * g.r_max
    r = g.nodes[outer]
    val = np.exp(r) * (np.abs(coeffs.A_theta[outer]) / np.sinh(r) + np.abs(coeffs.p[outer]))
    return float(np.max(val))
