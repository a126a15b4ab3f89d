"""Linearized operator about an equivariant harmonic map, mode by mode.

In the Coulomb frame the linearization acts on ``f(r) e^{i m theta}`` as

    H_m f = -f'' - coth(r) f' + V_m f,
    V_m   = (m + A_theta)^2 / sinh(r)^2 - tau p^2,

and factors as ``H_m = L_m^* L_m`` with ``L_m f = f' - a f`` where
``a = (m + A_theta) / sinh r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .frame import FrameCoefficients, coulomb_frame
from .geometry import TWO_PI, RadialGrid, WeightedTridiag, build_grid, face_gradient, operator_with_potential
from .target import HarmonicProfile, TargetGeometry, harmonic_profile

QUARTER = 0.25


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """Discrete ``H_m`` together with its first-order factor ``L_m``.

    ``L`` maps node values to the ``n`` faces at ``r > 0``; the adjoint with
    respect to the node weights ``W`` and face weights ``W_f`` is
    ``L^* = W^{-1} L^T W_f``.
    """

    m: int
    geom: TargetGeometry
    grid: RadialGrid
    H: WeightedTridiag
    L: sparse.csr_matrix
    potential: np.ndarray
    a_face: np.ndarray
    lam: float = 0.0

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.H.apply(f)

    def L_apply(self, f: np.ndarray) -> np.ndarray:
        return self.L @ f

    def Lstar_apply(self, g: np.ndarray) -> np.ndarray:
        return (self.L.T @ (self.grid.face_weights * g)) / self.grid.weights

    def LstarL_apply(self, f: np.ndarray) -> np.ndarray:
        return self.Lstar_apply(self.L_apply(f))

    def factorization_defect(self, f: np.ndarray) -> float:
        """``||(H_m - L_m^* L_m) f|| / ||f||`` in the weighted norm."""
        d = self.apply(f) - self.LstarL_apply(f)
        w = self.grid.weights
        return math.sqrt(np.sum(w * np.abs(d) ** 2) / np.sum(w * np.abs(f) ** 2))


def _profile_at(profile: HarmonicProfile, r: np.ndarray) -> np.ndarray:
    return profile.geom.profile_value(profile.lam, r)


def assemble_H(geom: TargetGeometry, profile: HarmonicProfile, coeffs: FrameCoefficients | None,
               grid: RadialGrid, m: int) -> ModeOperator:
    """Assemble ``H_m`` and ``L_m`` on ``grid`` for the harmonic map ``profile``."""
    m = int(m)
    if coeffs is None or coeffs.grid is not grid:
        coeffs = coulomb_frame(geom, profile, grid)
    potential = (m + coeffs.A_theta) ** 2 / grid.sinh_nodes**2 - geom.tau * coeffs.p**2
    H = operator_with_potential(grid, potential)
    # Bogomol'nyi factor on faces
    rf = grid.faces[1:]
    a_face = (m + geom.Sp(_profile_at(profile, rf)) - 1.0) / np.sinh(rf)
    h = grid.spacing
    n = grid.n
    main = -1.0 / h - 0.5 * a_face
    upper = 1.0 / h[:-1] - 0.5 * a_face[:-1]
    main[-1] = -1.0 / h[-1]  # outer face: ghost value -f_{n-1}, face value 0
    L = sparse.diags([main, upper], [0, 1], shape=(n, n), format="csr")
    return ModeOperator(m, geom, grid, H, L, potential, a_face, profile.lam)


def mode_operator(geom: TargetGeometry, lam: float, grid: RadialGrid, m: int) -> ModeOperator:
    """Convenience wrapper building profile and frame first."""
    prof = harmonic_profile(geom, lam, grid)
    return assemble_H(geom, prof, coulomb_frame(geom, prof, grid), grid, m)


# ----------------------------------------------------------------------------
# spectra
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumReport:
    m: int
    lam: float
    target: str
    lowest_eigenvalues: tuple[float, ...]
    gap_eigenvalues: tuple[float, ...]
    resonance_quotient: float
    residual: float
    n: int
    r_max: float
    margin: float = 0.01


class EigenSolverError(RuntimeError):
    pass


def eigen_residual(op: ModeOperator, vals: np.ndarray, vecs: np.ndarray) -> float:
    """Max over pairs of ``||K phi - mu W phi|| / (||W phi||)`` in the Euclidean norm."""
    worst = 0.0
    for mu, phi in zip(vals, vecs.T):
        r = op.H.stiffness_apply(phi) - mu * op.grid.weights * phi
        worst = max(worst, float(np.linalg.norm(r) / np.linalg.norm(op.grid.weights * phi)))
    return worst


def resonance_quotient(op: ModeOperator) -> float:
    """``inf <(H - 1/4) phi, phi> / ||(1 + r^2)^{-1/2} phi||^2`` over the discrete space."""
    w = op.grid.weights
    shifted = op.H.shifted(-QUARTER)
    mass = w / (1.0 + op.grid.nodes**2)
    return float(shifted.eigen(1, mass=mass)[0])


def lowest_spectrum(op: ModeOperator, k: int = 3, margin: float = 0.01) -> SpectrumReport:
    """Smallest ``k`` eigenvalues of the pencil ``(H_m, W)`` with residual check."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vals, vecs = op.H.eigen(k, vectors=True)
    res = eigen_residual(op, vals, vecs)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if not np.all(np.isfinite(vals)) or res > 1e-8 * scale * 1e4:
        raise EigenSolverError(f"tridiagonal eigensolver residual {res:.3e} too large (n={op.grid.n})")
    gap = tuple(float(v) for v in vals if 0.0 < v < QUARTER - margin)
    return SpectrumReport(op.m, op.lam, op.geom.name, tuple(float(v) for v in vals), gap,
                          resonance_quotient(op), res, op.grid.n, op.grid.r_max, margin)


@dataclass(frozen=True)
class StabilityCertificate:
    weakly_stable: bool
    strongly_stable: bool
    margin: float
    quotient_margin: float
    report: tuple[SpectrumReport, ...]

    @property
    def min_eigenvalue(self) -> float:
        return min(r.lowest_eigenvalues[0] for r in self.report)


def stability_certificate(geom: TargetGeometry, lam: float, grid: RadialGrid, m_max: int = 2,
                          margin: float = 0.01, quotient_margin: float = 0.0, k: int = 3) -> StabilityCertificate:
    """Weak and strong linearized stability, mode by mode for ``|m| <= m_max``.

    Weak stability asks for positive spectrum; strong stability asks for no
    eigenvalue below ``1/4 - margin`` and a positive threshold quotient.
    Modes ``-m`` are included because ``A_theta`` breaks the ``m -> -m``
    symmetry.
    """
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    prof = harmonic_profile(geom, lam, grid)
    coeffs = coulomb_frame(geom, prof, grid)
    reports = []
    for m in range(-m_max, m_max + 1):
        reports.append(lowest_spectrum(assemble_H(geom, prof, coeffs, grid, m), k, margin))
    lo = min(r.lowest_eigenvalues[0] for r in reports)
    weak = lo > 0.0
    strong = all(r.lowest_eigenvalues[0] >= QUARTER - margin and r.resonance_quotient > quotient_margin
                 for r in reports)
    return StabilityCertificate(weak, strong, margin, quotient_margin, tuple(reports))


def lowest_eigenvalue(geom: TargetGeometry, lam: float, grid: RadialGrid, m: int) -> float:
    return float(mode_operator(geom, lam, grid, m).H.eigen(1)[0])


@dataclass(frozen=True)
class GapEigenvalue:
    lam: float
    m: int
    eigenvalue: float
    refined: float
    n: int


def find_gap_eigenvalues(geom: TargetGeometry, lambdas, grid: RadialGrid, modes=(-2, -1, 0, 1, 2),
                         lower: float = 0.0, margin: float = 0.01) -> list[GapEigenvalue]:
    """Gap eigenvalues that persist after one grid doubling.

    An eigenvalue counts if it lies in ``(lower, 1/4 - 2 margin)`` on both
    ``grid`` and its refinement.
    """
    fine = grid.refine(2)
    found = []
    for lam in lambdas:
        for m in modes:
            mu = lowest_eigenvalue(geom, lam, grid, m)
            if not lower < mu < QUARTER - 2 * margin:
                continue
            mu2 = lowest_eigenvalue(geom, lam, fine, m)
            if lower < mu2 < QUARTER - 2 * margin:
                found.append(GapEigenvalue(float(lam), m, mu, mu2, grid.n))
    return found


def critical_lambda(geom: TargetGeometry, grid: RadialGrid, m: int, lo: float, hi: float,
                    threshold: float = QUARTER, tol: float = 1e-3) -> float:
    """Bisection for the smallest ``lambda`` where the mode-``m`` bottom drops below ``threshold``."""
    f = lambda lam: lowest_eigenvalue(geom, lam, grid, m) - threshold
    if f(lo) < 0 or f(hi) >= 0:
        raise ValueError("threshold not bracketed by [lo, hi]")
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------------------
# threshold-weighted H^1 norm
# ----------------------------------------------------------------------------


def h1thr_norm(grid: RadialGrid, coeffs: FrameCoefficients, phi: np.ndarray, m: int) -> float:
    """``||(D_r + 1/2) phi|| + ||sinh^{-1} D_theta phi|| + ||(1 + r)^{-1} phi||`` for ``phi e^{i m theta}``.

    ``D_r = d_r`` because ``A_r = 0``; the angular covariant derivative acts
    per mode as ``i (m + A_theta)``.  The radial term is evaluated on faces.
    """
    phi = np.asarray(phi)
    g = face_gradient(grid, phi)
    face_phi = np.empty_like(g)
    face_phi[:-1] = 0.5 * (phi[1:] + phi[:-1])
    face_phi[-1] = 0.0
    radial = TWO_PI * np.sum(grid.face_weights * np.abs(g + 0.5 * face_phi) ** 2)
    angular = TWO_PI * np.sum(grid.weights * np.abs((m + coeffs.A_theta) * phi) ** 2 / grid.sinh_nodes**2)
    weighted = TWO_PI * np.sum(grid.weights * np.abs(phi) ** 2 / (1 + grid.nodes) ** 2)
    return math.sqrt(radial) + math.sqrt(angular) + math.sqrt(weighted)
