"""Radial discretization of the hyperbolic plane in geodesic polar coordinates.

The metric is ``dr^2 + sinh(r)^2 dtheta^2``.  Fields are stored one angular
Fourier mode at a time, ``f(r) e^{i m theta}``, sampled at the centres of
radial cells.  Every second-order operator is assembled in flux form so that it
is exactly symmetric in the weighted inner product ``sum_i w_i f_i conj(g_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal, solve_banded, solveh_banded

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Cell-centred radial grid on ``(0, r_max]``.

    Attributes
    ----------
    r_max : float
        Outer geodesic radius, where a Dirichlet condition is imposed.
    n : int
        Number of cells (and nodes).
    scheme : str
        ``"uniform"`` or ``"graded"``.
    faces : ndarray, shape (n + 1,)
        Cell boundaries, ``faces[0] = 0`` and ``faces[-1] = r_max``.
    nodes : ndarray, shape (n,)
        Sample points inside each cell.
    weights : ndarray, shape (n,)
        Exact cell areas ``cosh(faces[i+1]) - cosh(faces[i])`` of the measure
        ``sinh r dr``.  The angular factor ``2 pi`` is applied separately.
    """

    r_max: float
    n: int
    scheme: str
    faces: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    # derived quantities used by every operator
    spacing: np.ndarray = field(init=False, repr=False)
    face_weights: np.ndarray = field(init=False, repr=False)
    sinh_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("faces", "nodes", "weights"):
            getattr(self, name).setflags(write=False)
        # distance between consecutive nodes, plus node-to-boundary distance
        spacing = np.empty(self.n)
        spacing[:-1] = np.diff(self.nodes)
        spacing[-1] = self.r_max - self.nodes[-1]
        # quadrature weight attached to each face value (sinh r dr on faces)
        fw = np.sinh(self.faces[1:]) * spacing
        sn = np.sinh(self.nodes)
        for arr in (spacing, fw, sn):
            arr.setflags(write=False)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "face_weights", fw)
        object.__setattr__(self, "sinh_nodes", sn)

    @property
    def face_points(self) -> np.ndarray:
        """Positions of the ``n`` faces carrying gradients (all faces except r = 0)."""
        return self.faces[1:]

    @property
    def face_coefficients(self) -> np.ndarray:
        """Flux coefficients ``sinh(r_face) / spacing`` for each of the ``n`` faces."""
        return np.sinh(self.faces[1:]) / self.spacing

    def refine(self, factor: int = 2) -> "RadialGrid":
        """Same domain and scheme with ``factor`` times as many cells."""
        return build_grid(self.r_max, self.n * factor, self.scheme, core=self._core)

    _core: float = field(default=0.01, repr=False, compare=False)


def _graded_faces(r_max: float, n: int, core: float) -> np.ndarray:
    # dr/dxi = K * min(r + core, 1): geometric growth near the origin, then uniform.
    xi = np.linspace(0.0, 1.0, 2 * n + 1)
    if r_max <= 1.0 - core:
        k = math.log((r_max + core) / core)
        r = core * np.expm1(k * xi)
    else:
        k = r_max - 1.0 + core + math.log(1.0 / core)
        xi1 = math.log(1.0 / core) / k
        r = np.where(xi < xi1, core * np.expm1(k * np.minimum(xi, xi1)), 1.0 - core + k * (xi - xi1))
    r[0] = 0.0
    r[-1] = r_max
    return r


def build_grid(r_max: float, n: int, scheme: str = "uniform", *, core: float = 0.01) -> RadialGrid:
    """Construct a cell-centred radial grid.

    ``scheme="graded"`` uses spacing proportional to ``min(r + core, 1)`` so
    that nodes cluster near the origin; nodes are then the images of the
    midpoints of the uniform computational cells.
    """
    if not (r_max > 0 and math.isfinite(r_max)):
        raise ValueError(f"r_max must be positive and finite, got {r_max!r}")
    if int(n) != n or n < 16:
        raise ValueError(f"n must be an integer >= 16, got {n!r}")
    n = int(n)
    if scheme == "uniform":
        faces = np.linspace(0.0, r_max, n + 1)
        nodes = 0.5 * (faces[1:] + faces[:-1])
    elif scheme == "graded":
        if not 0 < core < 1:
            raise ValueError("core must lie in (0, 1)")
        fine = _graded_faces(r_max, n, core)
        faces = fine[::2].copy()
        nodes = fine[1::2].copy()
    else:
        raise ValueError(f"unknown grid scheme {scheme!r}")
    # cosh(b) - cosh(a) = 2 sinh((a+b)/2) sinh((b-a)/2), stable for small cells
    weights = 2.0 * np.sinh(0.5 * (faces[1:] + faces[:-1])) * np.sinh(0.5 * np.diff(faces))
    g = RadialGrid(r_max=float(r_max), n=n, scheme=scheme, faces=faces, nodes=nodes, weights=weights)
    object.__setattr__(g, "_core", core)
    return g


# ----------------------------------------------------------------------------
# weighted symmetric tridiagonal operators
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightedTridiag:
    """Operator ``A f = W^{-1} (K f + b_coef * b * e_last)`` on a radial grid.

    ``K`` is real symmetric tridiagonal (``diag``, ``off``) and ``W`` is the
    diagonal matrix of quadrature weights, so ``A`` is self-adjoint for the
    weighted inner product.  ``b`` is an optional Dirichlet value at
    ``r_max``; ``boundary_coef`` is the matching load coefficient.
    """

    diag: np.ndarray
    off: np.ndarray
    weights: np.ndarray
    boundary_coef: float = 0.0

    @property
    def n(self) -> int:
        return self.diag.size

    def stiffness_apply(self, f: np.ndarray) -> np.ndarray:
        out = self.diag * f
        out[:-1] += self.off * f[1:]
        out[1:] += self.off * f[:-1]
        return out

    def apply(self, f: np.ndarray, boundary: float | complex = 0.0) -> np.ndarray:
        """Apply the operator to ``f`` (last axis is radial)."""
        f = np.asarray(f)
        if f.shape[-1] != self.n:
            raise ValueError(f"field length {f.shape[-1]} does not match operator size {self.n}")
        if f.ndim > 1:
            return np.stack([self.apply(row, boundary) for row in f.reshape(-1, self.n)]).reshape(f.shape)
        out = self.stiffness_apply(f)
        if boundary != 0:
            out = out.astype(np.result_type(out, boundary))
            out[-1] += self.boundary_coef * boundary
        return out / self.weights

    __call__ = apply

    def __add__(self, other: "WeightedTridiag") -> "WeightedTridiag":
        return WeightedTridiag(self.diag + other.diag, self.off + other.off, self.weights,
                               self.boundary_coef + other.boundary_coef)

    def scaled(self, c: float) -> "WeightedTridiag":
        return WeightedTridiag(c * self.diag, c * self.off, self.weights, c * self.boundary_coef)

    def shifted(self, c: float) -> "WeightedTridiag":
        """Operator ``A + c``."""
        return WeightedTridiag(self.diag + c * self.weights, self.off, self.weights, self.boundary_coef)

    def with_potential(self, v: np.ndarray) -> "WeightedTridiag":
        """Operator ``A + v`` for a multiplication operator ``v``."""
        return WeightedTridiag(self.diag + self.weights * v, self.off, self.weights, self.boundary_coef)

    def to_sparse(self) -> sparse.csr_matrix:
        """Matrix of ``A`` (not of ``K``) in CSR format."""
        k = sparse.diags([self.off, self.diag, self.off], [-1, 0, 1], format="csr")
        return sparse.diags(1.0 / self.weights) @ k

    def stiffness_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def symmetric_form(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of ``W^{-1/2} K W^{-1/2}``."""
        s = 1.0 / np.sqrt(self.weights)
        return self.diag * s * s, self.off * s[:-1] * s[1:]

    def solve_shifted(self, alpha: complex, beta: complex, rhs: np.ndarray,
                      boundary: complex = 0.0) -> np.ndarray:
        """Solve ``(alpha + beta A) x = rhs`` with Dirichlet value ``boundary``.

        Multiplied through by ``W`` the system is tridiagonal; the real
        symmetric positive definite case goes to a Cholesky banded solver.
        """
        rhs = np.asarray(rhs)
        b = self.weights * rhs
        if boundary != 0:
            b = b.astype(np.result_type(b, beta, boundary))
            b[-1] -= beta * self.boundary_coef * boundary
        d = alpha * self.weights + beta * self.diag
        o = beta * self.off
        if np.isrealobj(d) and np.isrealobj(o) and np.all(d[:-1] > 0):
            ab = np.empty((2, self.n))
            ab[0, 0] = 0.0
            ab[0, 1:] = o
            ab[1] = d
            try:
                return solveh_banded(ab, b, check_finite=False)
            except np.linalg.LinAlgError:
                pass
        ab = np.zeros((3, self.n), dtype=np.result_type(d, o))
        ab[0, 1:] = o
        ab[1] = d
        ab[2, :-1] = o
        return solve_banded((1, 1), ab, b, check_finite=False)

    def eigen(self, k: int, vectors: bool = False, mass: np.ndarray | None = None):
        """Smallest ``k`` eigenpairs of the pencil ``(K, M)`` with diagonal ``M``.

        ``M`` defaults to the quadrature weights.  Returns eigenvalues, and
        if requested eigenvectors normalised so that ``phi^T M phi = 1``.
        """
        m = self.weights if mass is None else np.asarray(mass, dtype=float)
        s = 1.0 / np.sqrt(m)
        d = self.diag * s * s
        e = self.off * s[:-1] * s[1:]
        k = min(int(k), self.n)
        if vectors:
            vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
            return vals, vecs * s[:, None]
        return eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, k - 1))


# ----------------------------------------------------------------------------
# mode operators
# ----------------------------------------------------------------------------


def _stiffness(grid: RadialGrid, potential: np.ndarray | None) -> WeightedTridiag:
    c = grid.face_coefficients
    diag = np.zeros(grid.n)
    diag[:-1] += c[:-1]
    diag[1:] += c[:-1]
    # outer Dirichlet face: ghost value 2b - f_{n-1} mirrored across r_max
    diag[-1] += c[-1]
    if potential is not None:
        diag += grid.weights * potential
    return WeightedTridiag(diag, -c[:-1].copy(), grid.weights, boundary_coef=-c[-1])


def negative_mode_laplacian(grid: RadialGrid, m: int = 0) -> WeightedTridiag:
    """Positive operator ``-Delta_m`` with Dirichlet data at ``r_max``.

    The flux through the face at ``r = 0`` vanishes because ``sinh 0 = 0``;
    this is the discrete regularity condition at the origin.
    """
    m = int(m)
    pot = None if m == 0 else (m * m) / grid.sinh_nodes**2
    return _stiffness(grid, pot)


def mode_laplacian(grid: RadialGrid, m: int = 0) -> WeightedTridiag:
    """Discrete ``Delta_m f = f'' + coth(r) f' - m^2 f / sinh(r)^2``."""
    return negative_mode_laplacian(grid, m).scaled(-1.0)


def operator_with_potential(grid: RadialGrid, potential: np.ndarray) -> WeightedTridiag:
    """``-d^2/dr^2 - coth(r) d/dr + potential`` in flux form."""
    return _stiffness(grid, np.asarray(potential, dtype=float))


def face_gradient(grid: RadialGrid, f: np.ndarray, boundary: complex = 0.0) -> np.ndarray:
    """Radial derivative of ``f`` on the ``n`` faces at ``r > 0``.

    The last entry uses the Dirichlet value ``boundary`` at ``r_max``.
    """
    f = np.asarray(f)
    g = np.empty(f.shape, dtype=np.result_type(f, boundary, float))
    g[..., :-1] = np.diff(f, axis=-1) / grid.spacing[:-1]
    g[..., -1] = (boundary - f[..., -1]) / grid.spacing[-1]
    return g


def face_average(grid: RadialGrid, f: np.ndarray, boundary: complex = 0.0) -> np.ndarray:
    """Values of ``f`` interpolated to the ``n`` faces at ``r > 0``."""
    f = np.asarray(f)
    out = np.empty(f.shape, dtype=np.result_type(f, boundary, float))
    out[..., :-1] = 0.5 * (f[..., 1:] + f[..., :-1])
    out[..., -1] = boundary
    return out


def node_gradient(grid: RadialGrid, f: np.ndarray, boundary: complex = 0.0, parity: int = 1) -> np.ndarray:
    """Second-order radial derivative at the nodes.

    Uses the three-point formula on the (possibly nonuniform) nodes, with a
    ghost value ``parity * f_0`` at ``-r_0`` (``parity = 1`` for even fields,
    ``-1`` for odd ones) and the mirrored Dirichlet ghost ``2 b - f_{n-1}`` at
    ``2 r_max - r_{n-1}``.
    """
    f = np.asarray(f)
    r = grid.nodes
    xl = np.concatenate(([-r[0]], r[:-1]))
    xr = np.concatenate((r[1:], [2 * grid.r_max - r[-1]]))
    fl = np.concatenate((parity * f[..., :1], f[..., :-1]), axis=-1)
    fr = np.concatenate((f[..., 1:], 2 * boundary - f[..., -1:]), axis=-1)
    hl = r - xl
    hr = xr - r
    return (hl**2 * fr - hr**2 * fl + (hr**2 - hl**2) * f) / (hl * hr * (hl + hr))


# ----------------------------------------------------------------------------
# integrals and norms
# ----------------------------------------------------------------------------


def _check_length(grid: RadialGrid, *arrays: np.ndarray) -> None:
    for a in arrays:
        if np.shape(a)[-1] != grid.n:
            raise ValueError(f"array of length {np.shape(a)[-1]} does not match grid with n={grid.n}")


def integrate(grid: RadialGrid, f: np.ndarray) -> complex:
    """Quadrature of ``int f dvol`` over the disk, including ``2 pi``."""
    _check_length(grid, f)
    return TWO_PI * np.sum(grid.weights * np.asarray(f), axis=-1)


def l2_inner(grid: RadialGrid, f: np.ndarray, g: np.ndarray) -> complex:
    """Weighted inner product ``int f conj(g) dvol`` of two mode fields."""
    _check_length(grid, f, g)
    return TWO_PI * np.sum(grid.weights * np.asarray(f) * np.conj(g), axis=-1)


def lp_norm(grid: RadialGrid, f: np.ndarray, p: float = 2.0) -> float:
    """``L^p`` norm of a mode field on the disk; ``p = inf`` gives ``max |f|``."""
    _check_length(grid, f)
    a = np.abs(np.asarray(f))
    if p == np.inf:
        return float(np.max(a, axis=-1)) if a.ndim == 1 else np.max(a, axis=-1)
    if p < 1:
        raise ValueError("p must lie in [1, inf]")
    # rescale by the maximum so that a**p neither underflows nor overflows
    scale = np.max(a, axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    out = safe[..., 0] * (TWO_PI * np.sum(grid.weights * (a / safe) ** p, axis=-1)) ** (1.0 / p)
    return float(out) if out.ndim == 0 else out


def gradient_norm(grid: RadialGrid, f: np.ndarray, m: int = 0, boundary: complex = 0.0) -> float:
    """``||grad f||_2`` for ``f e^{i m theta}``: radial part on faces plus angular part."""
    g = face_gradient(grid, f, boundary)
    radial = np.sum(grid.face_weights * np.abs(g) ** 2)
    angular = np.sum(grid.weights * (m * m) * np.abs(f) ** 2 / grid.sinh_nodes**2)
    return math.sqrt(TWO_PI * (radial + angular))


# ----------------------------------------------------------------------------
# dyadic annuli
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AnnulusDecomposition:
    """Dyadic shells ``A_l = {2^l <= r < 2^(l+1)}`` restricted to a grid."""

    grid: RadialGrid
    levels: tuple[int, ...]

    def shell(self, level: int) -> np.ndarray:
        r = self.grid.nodes
        return (r >= 2.0**level) & (r < 2.0 ** (level + 1))

    def ball(self, level: int) -> np.ndarray:
        """Mask of ``A_{<= level} = {r <= 2^level}``."""
        return self.grid.nodes <= 2.0**level

    def outside(self, level: int) -> np.ndarray:
        """Mask of ``A_{>= level} = {r >= 2^level}``."""
        return self.grid.nodes >= 2.0**level

    def index_range(self, level: int) -> tuple[int, int]:
        idx = np.flatnonzero(self.shell(level))
        if idx.size == 0:
            return (0, 0)
        return (int(idx[0]), int(idx[-1]) + 1)


def annuli(grid: RadialGrid) -> AnnulusDecomposition:
    lo = math.floor(math.log2(grid.nodes[0]))
    hi = math.floor(math.log2(grid.nodes[-1]))
    return AnnulusDecomposition(grid, tuple(range(lo, hi + 1)))


def k_sigma(sigma: float) -> int:
    """Dyadic frequency ``floor(log2(sigma^{-1/2}))`` attached to heat time ``sigma``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return math.floor(-0.5 * math.log2(sigma))
