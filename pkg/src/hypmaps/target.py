"""Target surfaces (round sphere and hyperbolic plane) and equivariant harmonic maps."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import (TWO_PI, RadialGrid, face_average, face_gradient, mode_laplacian,
                       negative_mode_laplacian)


@dataclass(frozen=True)
class TargetGeometry:
    """Rotationally symmetric target with metric ``d rho^2 + S(rho)^2 d vartheta^2``.

    ``tau = +1`` is the unit sphere (``S = sin``) and ``tau = -1`` the
    hyperbolic plane (``S = sinh``).  The ambient model lives in ``R^3`` with
    the form ``eta = diag(1, 1, tau)``, on which the surface is
    ``<v, v>_eta = tau``.
    """

    tau: int

    def __post_init__(self) -> None:
        if self.tau not in (1, -1):
            raise ValueError("tau must be +1 (sphere) or -1 (hyperbolic plane)")

    @property
    def name(self) -> str:
        return "s2" if self.tau == 1 else "h2"

    def S(self, rho):
        return np.sin(rho) if self.tau == 1 else np.sinh(rho)

    def Sp(self, rho):
        return np.cos(rho) if self.tau == 1 else np.cosh(rho)

    @property
    def eta(self) -> np.ndarray:
        return np.array([1.0, 1.0, float(self.tau)])

    def inner(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Ambient bilinear form along the last axis."""
        return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + self.tau * a[..., 2] * b[..., 2]

    def J(self, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Complex structure ``J(v) x = eta (v cross x)`` on the tangent plane at ``v``."""
        c = np.cross(v, x)
        c[..., 2] *= self.tau
        return c

    def valid_lambda(self, lam: float) -> bool:
        return lam >= 0 and (self.tau == 1 or lam < 1)

    def profile_value(self, lam: float, r):
        """Closed-form harmonic profile ``2 arctan(lam tanh(r/2))`` or its arctanh analogue."""
        t = lam * np.tanh(np.asarray(r, dtype=float) / 2)
        return 2 * np.arctan(t) if self.tau == 1 else 2 * np.arctanh(t)

    def boundary_value(self, lam: float) -> float:
        return float(2 * math.atan(lam) if self.tau == 1 else 2 * math.atanh(lam))


SPHERE = TargetGeometry(1)
HYPERBOLIC = TargetGeometry(-1)


def target_from_name(name: str) -> TargetGeometry:
    key = name.lower().replace("^", "")
    if key in ("s2", "sphere", "s"):
        return SPHERE
    if key in ("h2", "hyperbolic", "h"):
        return HYPERBOLIC
    raise ValueError(f"unknown target {name!r}; use 's2' or 'h2'")


@dataclass(frozen=True, eq=False)
class HarmonicProfile:
    """Samples of an equivariant harmonic map ``(r, theta) -> (rho(r), theta)``."""

    geom: TargetGeometry
    lam: float
    grid: RadialGrid
    rho: np.ndarray
    rho_rmax: float
    boundary_value: float

    def to_csv(self, path: str | Path) -> None:
        write_profile_csv(path, self.grid, self.rho)


def harmonic_profile(geom: TargetGeometry, lam: float, grid: RadialGrid) -> HarmonicProfile:
    """Sample the explicit harmonic map ``Q_lambda`` (sphere) or ``P_lambda`` (hyperbolic)."""
    lam = float(lam)
    if not geom.valid_lambda(lam):
        raise ValueError(f"lambda={lam} outside the admissible range for target {geom.name}")
    rho = geom.profile_value(lam, grid.nodes)
    rho.setflags(write=False)
    return HarmonicProfile(geom, lam, grid, rho, float(geom.profile_value(lam, grid.r_max)),
                           geom.boundary_value(lam))


def closed_form_energy(geom: TargetGeometry, lam: float, r_max: float = math.inf) -> float:
    """Energy of the harmonic profile on the disk of radius ``r_max``."""
    t = lam * (1.0 if math.isinf(r_max) else math.tanh(r_max / 2))
    return 4 * math.pi * t * t / (1 + geom.tau * t * t)


# ----------------------------------------------------------------------------
# ambient representation
# ----------------------------------------------------------------------------


def profile_to_ambient(geom: TargetGeometry, rho: np.ndarray) -> np.ndarray:
    """Ambient vector ``v(r)`` of the equivariant map at angle ``theta = 0``.

    The full map is ``R_theta v(r)`` with ``R_theta`` the rotation about the
    third axis.
    """
    rho = np.asarray(rho, dtype=float)
    return np.stack([geom.S(rho), np.zeros_like(rho), geom.Sp(rho)], axis=-1)


def ambient_to_profile(geom: TargetGeometry, v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`profile_to_ambient` for vectors in the ``theta = 0`` half-plane."""
    v = np.asarray(v, dtype=float)
    if geom.tau == 1:
        return np.arctan2(v[..., 0], v[..., 2])
    return np.arcsinh(v[..., 0])


# ----------------------------------------------------------------------------
# energy and tension
# ----------------------------------------------------------------------------


def profile_energy(geom: TargetGeometry, grid: RadialGrid, rho: np.ndarray, rho_rmax: float = 0.0) -> float:
    """Dirichlet energy ``pi * int (rho'^2 + S(rho)^2 / sinh^2 r) sinh r dr``."""
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)):
        raise ValueError("non-finite profile samples")
    g = face_gradient(grid, rho, rho_rmax)
    radial = np.sum(grid.face_weights * g * g)
    angular = np.sum(grid.weights * geom.S(rho) ** 2 / grid.sinh_nodes**2)
    return 0.5 * TWO_PI * float(radial + angular)


def ambient_energy(geom: TargetGeometry, grid: RadialGrid, v: np.ndarray, v_rmax: np.ndarray) -> float:
    """Dirichlet energy of an equivariant ambient field ``v`` (shape ``(n, 3)``).

    The radial term uses face differences with the Dirichlet value ``v_rmax``;
    the angular term is ``|Omega v|^2 / sinh^2 r = (v1^2 + v2^2) / sinh^2 r``.
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite map samples")
    d = face_gradient(grid, v.T, np.asarray(v_rmax)).T
    radial = np.sum(grid.face_weights * geom.inner(d, d))
    angular = np.sum(grid.weights * (v[:, 0] ** 2 + v[:, 1] ** 2) / grid.sinh_nodes**2)
    return 0.5 * TWO_PI * float(radial + angular)


def energy(geom: TargetGeometry, grid: RadialGrid, map_state) -> float:
    """Energy of a profile (``HarmonicProfile`` or 1-D array) or ambient field.

    Ambient input is an ``(n, 3)`` array, or an object exposing ``v`` and
    ``v_rmax`` attributes such as a flow state.
    """
    if isinstance(map_state, HarmonicProfile):
        return profile_energy(geom, grid, map_state.rho, map_state.rho_rmax)
    if hasattr(map_state, "v") and hasattr(map_state, "v_rmax"):
        return ambient_energy(geom, grid, map_state.v, map_state.v_rmax)
    arr = np.asarray(map_state, dtype=float)
    if arr.ndim == 1:
        return profile_energy(geom, grid, arr, 0.0)
    if arr.ndim == 2 and arr.shape[1] == 3:
        return ambient_energy(geom, grid, arr, profile_to_ambient(geom, 0.0))
    raise ValueError("map_state must be a profile or an (n, 3) ambient field")


def profile_tension(geom: TargetGeometry, grid: RadialGrid, rho: np.ndarray, rho_rmax: float) -> np.ndarray:
    """Pointwise ``rho'' + coth(r) rho' - S(rho) S'(rho) / sinh^2 r``.

    Written as ``Delta_1 rho + (rho - S S') / sinh^2`` so the singular parts of
    the two terms cancel analytically rather than numerically.
    """
    rho = np.asarray(rho, dtype=float)
    lap1 = mode_laplacian(grid, 1).apply(rho, rho_rmax)
    return lap1 + (rho - geom.S(rho) * geom.Sp(rho)) / grid.sinh_nodes**2


def tension_residual(geom: TargetGeometry, grid: RadialGrid, profile) -> float:
    """Weighted ``L^2`` norm of the discrete harmonic-map residual."""
    if isinstance(profile, HarmonicProfile):
        rho, b = profile.rho, profile.rho_rmax
    else:
        rho, b = np.asarray(profile, dtype=float), 0.0
    res = profile_tension(geom, grid, rho, b)
    return math.sqrt(TWO_PI * float(np.sum(grid.weights * res * res)))


def write_profile_csv(path: str | Path, grid: RadialGrid, rho: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "rho"])
        for r, x in zip(grid.nodes, rho):
            w.writerow([repr(float(r)), repr(float(x))])


__all__ = [
    "TargetGeometry", "SPHERE", "HYPERBOLIC", "target_from_name", "HarmonicProfile",
    "harmonic_profile", "closed_form_energy", "profile_to_ambient", "ambient_to_profile",
    "profile_energy", "ambient_energy", "energy", "profile_tension", "tension_residual",
    "write_profile_csv", "negative_mode_laplacian",
]
