"""Round-sphere geometry: volumes, Laplace spectra, quadrature and harmonic bases.

All Laplacians are the positive operator ``d*d``; on the unit sphere S^k the
degree-j harmonics have eigenvalue ``j (j + k - 1)``.

Grid node layout
----------------
Nodes are stored as unit vectors in R^{k+1}.  The polar axis is the FIRST
ambient coordinate, so functions of ``x[0]`` are zonal.

* k = 1: ``x = (cos a, sin a)`` with ``a = 2 pi i / M``, i = 0..M-1.
* k >= 2: ``x = (w, sqrt(1 - w^2) * y)`` where ``w`` runs over Gauss-Jacobi
  nodes (outer loop, ascending) and ``y`` over the S^{k-1} grid (inner loop).

Node ordering is therefore lexicographic in (polar index, sub-grid index),
which is what :func:`save_grid` writes and :func:`load_grid` expects.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np
from scipy.linalg import null_space
from scipy.special import roots_jacobi, roots_legendre

__all__ = [
    "QuadratureGrid",
    "SpectralBasis",
    "sphere_volume",
    "sphere_eigenvalue",
    "sphere_multiplicity",
    "gauss_grid",
    "zonal_grid",
    "harmonic_basis",
    "zonal_basis",
    "save_grid",
    "load_grid",
]

SUPPORTED_GRID_DIMS = (1, 2, 3)


def sphere_volume(k: int) -> float:
    """k-volume of the unit sphere S^k in R^{k+1}."""
    if k < 1:
        raise ValueError(f"sphere dimension must be >= 1, got {k}")
    return float(2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2))


def sphere_eigenvalue(k: int, j: int) -> float:
    if j < 0:
        raise ValueError(f"harmonic degree must be >= 0, got {j}")
    return float(j * (j + k - 1))


def _comb(n: int, r: int) -> int:
    return math.comb(n, r) if n >= 0 and r >= 0 else 0


def sphere_multiplicity(k: int, j: int) -> int:
    """Dimension of the space of degree-j spherical harmonics on S^k."""
    if j < 0:
        raise ValueError(f"harmonic degree must be >= 0, got {j}")
    if k < 1:
        raise ValueError(f"sphere dimension must be >= 1, got {k}")
    return _comb(j + k, k) - _comb(j + k - 2, k)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and weights on the unit sphere S^k.

    ``zonal`` grids carry one representative node per polar cosine; they are
    exact only for integrands that depend on ``x[0]`` alone.
    """

    k: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    zonal: bool = False

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != self.k + 1:
            raise ValueError(f"nodes must have shape (N, {self.k + 1})")
        if weights.shape != (nodes.shape[0],):
            raise ValueError("one weight per node required")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, values) -> float:
        """Integrate node values (last axis of ``values`` runs over nodes)."""
        return np.asarray(values) @ self.weights


def _polar_rule(k: int, npts: int):
    """Gauss rule for the pushforward of dσ(S^k) onto the polar cosine."""
    if k == 2:
        w, wt = roots_legendre(npts)
    else:
        a = (k - 2) / 2
        w, wt = roots_jacobi(npts, a, a)
    return w, wt


def gauss_grid(k: int, degree: int) -> QuadratureGrid:
    """Tensor Gauss grid on S^k exact for ambient polynomials of degree <= ``degree``."""
    if k not in SUPPORTED_GRID_DIMS:
        raise ValueError(f"numerical grids are supported for k in {SUPPORTED_GRID_DIMS}, got {k}")
    if degree < 2:
        raise ValueError(f"grid degree must be >= 2, got {degree}")
    nodes, weights = _gauss_nodes(k, degree)
    return QuadratureGrid(k, nodes, weights, degree)


def _gauss_nodes(k: int, degree: int):
    if k == 1:
        m = degree + 1
        a = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(a), np.sin(a)]), np.full(m, 2.0 * np.pi / m)
    w, wt = _polar_rule(k, degree // 2 + 1)
    sub_nodes, sub_weights = _gauss_nodes(k - 1, degree)
    r = np.sqrt(1.0 - w**2)
    nodes = np.concatenate(
        [np.column_stack([np.full(len(sub_nodes), wi), ri * sub_nodes]) for wi, ri in zip(w, r)]
    )
    weights = np.outer(wt, sub_weights).ravel()
    return nodes, weights


def zonal_grid(k: int, degree: int) -> QuadratureGrid:
    """Polar-only grid on S^k, exact for zonal polynomials of degree <= ``degree``."""
    if k not in (2, 3):
        raise ValueError(f"zonal grids are supported for k in (2, 3), got {k}")
    if degree < 2:
        raise ValueError(f"grid degree must be >= 2, got {degree}")
    w, wt = _polar_rule(k, degree // 2 + 1)
    nodes = np.zeros((len(w), k + 1))
    nodes[:, 0] = w
    nodes[:, 1] = np.sqrt(1.0 - w**2)
    return QuadratureGrid(k, nodes, wt * sphere_volume(k - 1), degree, zonal=True)


# --- ambient polynomials ---------------------------------------------------


def _monomial_exponents(dim: int, degree: int) -> np.ndarray:
    rows = []
    for combo in combinations_with_replacement(range(dim), degree):
        e = np.zeros(dim, dtype=int)
        for i in combo:
            e[i] += 1
        rows.append(e)
    return np.array(rows, dtype=int).reshape(-1, dim)


def _monomials(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


def _monomial_gradients(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Ambient gradients, shape (N, M, dim)."""
    n, dim = points.shape
    out = np.empty((n, len(exponents), dim))
    for i in range(dim):
        e = exponents.copy()
        e[:, i] = np.maximum(e[:, i] - 1, 0)
        out[:, :, i] = exponents[:, i] * _monomials(points, e)
    return out


def _euclidean_laplacian(dim: int, degree: int) -> np.ndarray:
    """Matrix of the flat Laplacian from degree-j to degree-(j-2) monomials."""
    src = _monomial_exponents(dim, degree)
    dst = _monomial_exponents(dim, degree - 2)
    index = {tuple(e): r for r, e in enumerate(dst)}
    mat = np.zeros((len(dst), len(src)))
    for c, e in enumerate(src):
        for i in range(dim):
            if e[i] >= 2:
                f = e.copy()
                f[i] -= 2
                mat[index[tuple(f)], c] += e[i] * (e[i] - 1)
    return mat


def _harmonic_coefficients(dim: int, degree: int) -> np.ndarray:
    """Basis (columns) of harmonic homogeneous polynomials in monomial coordinates."""
    n_mono = len(_monomial_exponents(dim, degree))
    if degree < 2:
        return np.eye(n_mono)
    return null_space(_euclidean_laplacian(dim, degree))


def _gegenbauer_coefficients(l: int, alpha: float) -> np.ndarray:
    """Power-series coefficients (ascending) of the Gegenbauer polynomial C_l^alpha."""
    prev = np.zeros(l + 1)
    prev[0] = 1.0
    if l == 0:
        return prev
    cur = np.zeros(l + 1)
    cur[1] = 2.0 * alpha
    for n in range(2, l + 1):
        nxt = np.zeros(l + 1)
        nxt[1:] += 2.0 * (n + alpha - 1) * cur[:-1]
        nxt -= (n + 2 * alpha - 2) * prev
        prev, cur = cur, nxt / n
    return cur


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Laplace eigenfunctions on S^k, orthonormal under the grid measure.

    Each basis function is stored as an ambient polynomial (``exponents`` x
    ``coefficients``) so it can be evaluated away from the grid; values and
    tangential gradients at the grid nodes are cached.
    """

    k: int
    grid: QuadratureGrid
    degrees: np.ndarray
    exponents: np.ndarray
    coefficients: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    zonal: bool = False
    positive_laplacian: bool = True

    @property
    def size(self) -> int:
        return len(self.degrees)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.degrees * (self.degrees + self.k - 1.0)

    @property
    def entries(self) -> list[tuple[float, int]]:
        """(eigenvalue, multiplicity in this basis) in nondecreasing order."""
        degs, counts = np.unique(self.degrees, return_counts=True)
        return [(sphere_eigenvalue(self.k, int(j)), int(m)) for j, m in zip(degs, counts)]

    def evaluate(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return _monomials(points, self.exponents) @ self.coefficients

    def gradient(self, points) -> np.ndarray:
        """Tangential gradients at unit-sphere points, shape (N, m, k+1)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        amb = np.einsum("nmd,mf->nfd", _monomial_gradients(points, self.exponents), self.coefficients)
        radial = np.einsum("nfd,nd->nf", amb, points)
        return amb - radial[:, :, None] * points[:, None, :]

    def gram(self) -> np.ndarray:
        return (self.values * self.grid.weights[:, None]).T @ self.values

    def index(self, degree: int) -> np.ndarray:
        return np.flatnonzero(self.degrees == degree)


def _finish_basis(k, grid, degrees, exponents, coeffs, zonal) -> SpectralBasis:
    vals = _monomials(grid.nodes, exponents) @ coeffs
    # orthonormalize each degree block under the grid measure
    degrees = np.asarray(degrees)
    for j in np.unique(degrees):
        idx = np.flatnonzero(degrees == j)
        block = vals[:, idx]
        gram = (block * grid.weights[:, None]).T @ block
        chol = np.linalg.cholesky(gram)
        transform = np.linalg.inv(chol).T
        coeffs[:, idx] = coeffs[:, idx] @ transform
        vals[:, idx] = block @ transform
    basis = SpectralBasis(k, grid, degrees, exponents, coeffs, vals, np.empty(0), zonal=zonal)
    object.__setattr__(basis, "gradients", basis.gradient(grid.nodes))
    return basis


def harmonic_basis(k: int, l_max: int, grid: QuadratureGrid) -> SpectralBasis:
    """All spherical harmonics on S^k of degree <= ``l_max``."""
    if grid.zonal:
        raise ValueError("full harmonic basis needs a full (non-zonal) grid")
    if grid.k != k:
        raise ValueError(f"grid is on S^{grid.k}, basis requested on S^{k}")
    if grid.exactness_degree < 2 * l_max:
        raise ValueError(
            f"grid exactness {grid.exactness_degree} < 2*l_max = {2 * l_max}; Gram matrix would be inexact"
        )
    dim = k + 1
    blocks = [(j, _monomial_exponents(dim, j), _harmonic_coefficients(dim, j)) for j in range(l_max + 1)]
    exponents = np.concatenate([e for _, e, _ in blocks])
    n_cols = sum(c.shape[1] for _, _, c in blocks)
    coeffs = np.zeros((len(exponents), n_cols))
    degrees = []
    r0 = c0 = 0
    for j, e, c in blocks:
        coeffs[r0:r0 + len(e), c0:c0 + c.shape[1]] = c
        degrees += [j] * c.shape[1]
        r0 += len(e)
        c0 += c.shape[1]
    return _finish_basis(k, grid, degrees, exponents, coeffs, zonal=False)


def zonal_basis(k: int, l_max: int, grid: QuadratureGrid) -> SpectralBasis:
    """Zonal harmonics ``C_l^{(k-1)/2}(x[0])``, l = 0..l_max, on S^k (k >= 2)."""
    if k < 2:
        raise ValueError("zonal harmonics need k >= 2")
    if grid.k != k:
        raise ValueError(f"grid is on S^{grid.k}, basis requested on S^{k}")
    if grid.exactness_degree < 2 * l_max:
        raise ValueError(
            f"grid exactness {grid.exactness_degree} < 2*l_max = {2 * l_max}; Gram matrix would be inexact"
        )
    exponents = np.zeros((l_max + 1, k + 1), dtype=int)
    exponents[:, 0] = np.arange(l_max + 1)
    coeffs = np.zeros((l_max + 1, l_max + 1))
    for l in range(l_max + 1):
        coeffs[: l + 1, l] = _gegenbauer_coefficients(l, (k - 1) / 2)
    return _finish_basis(k, grid, list(range(l_max + 1)), exponents, coeffs, zonal=True)


# --- grid cache --------------------------------------------------------------

GRID_FORMAT_VERSION = "v1"


def save_grid(grid: QuadratureGrid, path) -> None:
    """Write ``grid`` in the ``sphgrid v1`` text format (17 significant digits)."""
    lines = [f"sphgrid {GRID_FORMAT_VERSION} k={grid.k} degree={grid.exactness_degree}"]
    for x, w in zip(grid.nodes, grid.weights):
        lines.append(" ".join(f"{v:.17g}" for v in (*x, w)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_grid(path) -> QuadratureGrid:
    text = Path(path).read_text().splitlines()
    head = text[0].split()
    if len(head) != 4 or head[0] != "sphgrid" or head[1] != GRID_FORMAT_VERSION:
        raise ValueError(f"not a sphgrid {GRID_FORMAT_VERSION} file: {text[0]!r}")
    fields = dict(item.split("=") for item in head[2:])
    k, degree = int(fields["k"]), int(fields["degree"])
    data = np.array([[float(v) for v in line.split()] for line in text[1:] if line.strip()])
    if data.shape[1] != k + 2:
        raise ValueError(f"expected {k + 2} columns per row, got {data.shape[1]}")
    return QuadratureGrid(k, data[:, :-1], data[:, -1], degree)

