"""Normalized Einstein-Hilbert energy, Yamabe quotient and its Galerkin minimization.

Conformal metrics are written g~ = u^{p-2} g with p = 2n/(n-2); the quotient

    Q(u) = int (p+2)|grad u|^2 + s u^2  /  (int u^p)^{2/p}

equals the normalized energy of g~.  Trial functions live in a tensor basis
of Laplace eigenfunctions on S^k x S^l (zonal by default).
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .sphere import gauss_grid, harmonic_basis, zonal_basis, zonal_grid

log = logging.getLogger(__name__)

__all__ = [
    "PositivityError",
    "ProductSpace",
    "ProductFunction",
    "ConformalFactor",
    "EnergyReport",
    "TraceRow",
    "MinimizeResult",
    "eh_energy",
    "aubin_constant",
    "energy_report",
    "yamabe_quotient",
    "quotient_gradient",
    "yamabe_residual",
    "perturbation_energy",
    "expansion_coefficient",
    "minimize_quotient",
]

POSITIVITY_FLOOR = 1e-6


class PositivityError(ValueError):
    """A conformal factor is not strictly positive on the quadrature nodes."""


def eh_energy(fam: geo.ProductFamily) -> float:
    """Normalized Einstein-Hilbert energy s V^{2/n} of h_t (constant scalar curvature)."""
    return geo.scalar_curvature(fam) * geo.volume(fam) ** (2.0 / fam.n)


def aubin_constant(n: int) -> float:
    """Energy of the round unit n-sphere, the universal upper bound for Yamabe constants."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    return n * (n - 1) * math.pi * (2.0 * math.sqrt(math.pi) / math.gamma((n + 1) / 2)) ** (2.0 / n)


class ProductSpace:
    """Tensor-product grid and eigenbasis on (S^k x S^l, h_t).

    Functions are coefficient matrices ``C[a, b]`` against ``phi_a(x) psi_b(y)``
    where ``phi`` lives on the unit S^k and ``psi`` on the unit S^l; the factor
    has radius ``R = rho / sqrt(t)`` in h_t, which rescales its spectrum by
    ``1/R^2`` and its measure by ``R^l``.
    """

    def __init__(self, fam: geo.ProductFamily, l_max: int = 6, degree: int | None = None, zonal: bool = True):
        if fam.factor.kind != "sphere":
            raise ValueError("grid numerics need a round factor")
        if degree is None:
            degree = 4 * l_max
        self.family = fam
        self.l_max = l_max
        self.zonal = zonal
        self.p = fam.conformal_exponent
        need = math.ceil(self.p) * l_max
        if degree < max(need, 2):
            raise ValueError(f"grid degree {degree} < {need} needed to integrate u^p at l_max={l_max}")
        make_grid, make_basis = (zonal_grid, zonal_basis) if zonal else (gauss_grid, harmonic_basis)
        self.sphere_grid = make_grid(fam.k, degree)
        self.factor_grid = make_grid(fam.l, degree)
        self.sphere_basis = make_basis(fam.k, l_max, self.sphere_grid)
        self.factor_basis = make_basis(fam.l, l_max, self.factor_grid)
        self.radius = fam.factor_radius
        self.scalar = geo.scalar_curvature(fam)
        self.volume = geo.volume(fam)
        self.eigenvalues = (
            self.sphere_basis.eigenvalues[:, None] + self.factor_basis.eigenvalues[None, :] / self.radius**2
        )
        self.measure_scale = self.radius**fam.l
        self.weights = np.outer(self.sphere_grid.weights, self.factor_grid.weights) * self.measure_scale
        # exactness of int u^p for polynomial u
        self.exact_power = float(self.p).is_integer()

    @property
    def shape(self) -> tuple[int, int]:
        return self.sphere_basis.size, self.factor_basis.size

    @property
    def size(self) -> int:
        a, b = self.shape
        return a * b

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        return self.sphere_basis.values @ coeffs @ self.factor_basis.values.T

    def gradient_sq(self, coeffs: np.ndarray) -> np.ndarray:
        """|grad u|^2 in h_t at every product node."""
        A, B = self.sphere_basis, self.factor_basis
        out = np.zeros((self.sphere_grid.size, self.factor_grid.size))
        right = coeffs @ B.values.T
        for d in range(A.gradients.shape[2]):
            out += (A.gradients[:, :, d] @ right) ** 2
        left = A.values @ coeffs
        for d in range(B.gradients.shape[2]):
            out += (left @ B.gradients[:, :, d].T) ** 2 / self.radius**2
        return out

    def integrate(self, nodal: np.ndarray) -> float:
        return float(np.sum(nodal * self.weights))

    def project(self, fn) -> np.ndarray:
        """L^2 projection of ``fn(x, y)`` (x on unit S^k, y on unit S^l) onto the basis."""
        X = self.sphere_grid.nodes[:, None, :]
        Y = self.factor_grid.nodes[None, :, :]
        F = fn(X, Y) * np.ones((self.sphere_grid.size, self.factor_grid.size))
        Wx = self.sphere_grid.weights[:, None]
        Wy = self.factor_grid.weights[:, None]
        return (self.sphere_basis.values * Wx).T @ F @ (self.factor_basis.values * Wy)

    def function(self, coeffs) -> "ProductFunction":
        return ProductFunction(self, np.asarray(coeffs, dtype=float))

    def constant(self, c: float = 1.0) -> "ConformalFactor":
        return ConformalFactor(self, self.project(lambda x, y: c))

    def sphere_coordinate(self, index: int = 0) -> "ProductFunction":
        """The ambient coordinate x^{index+1} of the sphere factor, pulled back to the product."""
        if self.zonal and index != 0:
            raise ValueError("the zonal trial space only contains x^1")
        return self.function(self.project(lambda x, y: x[..., index]))


@dataclass(frozen=True, eq=False)
class ProductFunction:
    space: ProductSpace
    coeffs: np.ndarray
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.coeffs.shape != self.space.shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != basis shape {self.space.shape}")
        object.__setattr__(self, "values", self.space.values(self.coeffs))

    def __add__(self, other):
        if isinstance(other, ProductFunction):
            return ProductFunction(self.space, self.coeffs + other.coeffs)
        return ProductFunction(self.space, self.coeffs + self.space.project(lambda x, y: float(other)))

    __radd__ = __add__

    def __mul__(self, c: float):
        return ProductFunction(self.space, float(c) * self.coeffs)

    __rmul__ = __mul__

    def laplacian_values(self) -> np.ndarray:
        return self.space.values(self.space.eigenvalues * self.coeffs)

    def mean_square(self) -> float:
        return self.space.integrate(self.values**2) / self.space.volume

    def eigenvalue(self, rtol: float = 1e-9) -> float:
        """Common eigenvalue of every active basis component; raises if ``self`` is not an eigenfunction."""
        active = np.abs(self.coeffs) > 1e-12 * max(np.abs(self.coeffs).max(), 1e-300)
        lam = self.space.eigenvalues[active]
        if lam.size == 0 or np.ptp(lam) > rtol * max(1.0, lam.max()):
            raise ValueError("function is not a Laplace eigenfunction of the product")
        return float(lam.mean())

    def as_factor(self) -> "ConformalFactor":
        return ConformalFactor(self.space, self.coeffs)


@dataclass(frozen=True, eq=False)
class ConformalFactor(ProductFunction):
    """Positive u defining the conformal metric u^{p-2} h_t."""

    def __post_init__(self):
        super().__post_init__()
        lo = float(self.values.min())
        if not lo > 0:
            raise PositivityError(f"conformal factor has min node value {lo:.3e} <= 0")

    @property
    def p(self) -> float:
        return self.space.p


@dataclass(frozen=True)
class EnergyReport:
    energy: float
    volume: float
    scalar: float
    aubin_bound: float
    yamabe_quotient: float | None = None


def energy_report(fam: geo.ProductFamily, u: ConformalFactor | None = None) -> EnergyReport:
    return EnergyReport(
        energy=eh_energy(fam),
        volume=geo.volume(fam),
        scalar=geo.scalar_curvature(fam),
        aubin_bound=aubin_constant(fam.n),
        yamabe_quotient=None if u is None else yamabe_quotient(u),
    )


def _check_positive(u: ProductFunction) -> None:
    lo = float(u.values.min())
    if not lo > 0:
        raise PositivityError(f"conformal factor has min node value {lo:.3e} <= 0")


def yamabe_quotient(u: ProductFunction) -> float:
    """Normalized energy of u^{p-2} h_t by quadrature, gradients from exact evaluators."""
    _check_positive(u)
    sp = u.space
    p = sp.p
    num = sp.integrate((p + 2.0) * sp.gradient_sq(u.coeffs) + sp.scalar * u.values**2)
    den = sp.integrate(u.values**p)
    return num / den ** (2.0 / p)


def _spectral_parts(sp: ProductSpace, coeffs: np.ndarray):
    U = sp.values(coeffs)
    stiff = (sp.p + 2.0) * sp.eigenvalues + sp.scalar
    num = sp.measure_scale * float(np.sum(stiff * coeffs**2))
    den = sp.integrate(U**sp.p)
    return U, stiff, num, den


def quotient_gradient(sp: ProductSpace, coeffs: np.ndarray) -> tuple[float, np.ndarray]:
    """Quotient value and its gradient with respect to the coefficient matrix."""
    U, stiff, num, den = _spectral_parts(sp, coeffs)
    p = sp.p
    dnum = 2.0 * sp.measure_scale * stiff * coeffs
    wu = sp.weights * U ** (p - 1.0)
    dden = p * (sp.sphere_basis.values.T @ wu @ sp.factor_basis.values)
    q = num / den ** (2.0 / p)
    grad = den ** (-2.0 / p) * (dnum - (2.0 / p) * num * dden / den)
    return q, grad


def yamabe_residual(u: ProductFunction, target_scalar: float) -> float:
    """max over nodes of |(p+2) Lap u + s u - s~ u^{p-1}|."""
    _check_positive(u)
    sp = u.space
    lhs = (sp.p + 2.0) * u.laplacian_values() + sp.scalar * u.values
    return float(np.max(np.abs(lhs - target_scalar * u.values ** (sp.p - 1.0))))


def perturbation_energy(f: ProductFunction, tau: float) -> float:
    """Energy of the conformal metric (1 + tau f)^{p-2} h_t."""
    u = f * tau + 1.0
    return yamabe_quotient(u)


def expansion_coefficient(f: ProductFunction) -> float:
    """Analytic tau^2 coefficient of ``perturbation_energy(f, tau)`` for a mean-zero eigenfunction f."""
    sp = f.space
    fam = sp.family
    lam = f.eigenvalue()
    s, n = sp.scalar, fam.n
    return s * sp.volume ** (2.0 / n) * (-4.0 / (n - 2)) * (1.0 - lam * (n - 1) / s) * f.mean_square()


# --- Galerkin minimization ---------------------------------------------------


@dataclass(frozen=True)
class TraceRow:
    restart: int
    iter: int
    quotient: float
    step: float
    min_u: float


@dataclass
class MinimizeResult:
    estimate: float
    minimizer: ConformalFactor
    trace: list[TraceRow]
    restart_values: list[float | None]
    best_restart: int
    energy: float
    aubin_bound: float
    seed: int

    @property
    def gap(self) -> float:
        """eh_energy - estimate; positive means a conformal metric of lower energy was found."""
        return self.energy - self.estimate

    @property
    def aubin_gap(self) -> float:
        return self.aubin_bound - self.estimate


def _initial_points(sp: ProductSpace, restarts: int, seed: int) -> list[np.ndarray]:
    one = sp.project(lambda x, y: 1.0)
    starts = []
    for r in range(restarts):
        if r == 0:
            starts.append(one)
        elif r == 1:
            starts.append(sp.project(lambda x, y: 1.0 + 0.3 * x[..., 0]))
        else:
            rng = np.random.default_rng([seed, r])
            pert = rng.standard_normal(sp.shape)
            pert[0, 0] = 0.0
            amp = np.abs(sp.values(pert)).max()
            starts.append(one + 0.3 * pert / amp)
    return starts


def _descend(sp: ProductSpace, coeffs: np.ndarray, restart: int, max_iter: int, tol: float):
    """Preconditioned gradient descent with Armijo backtracking and positivity rejection."""
    rows: list[TraceRow] = []
    target = sp.volume
    stiff = (sp.p + 2.0) * sp.eigenvalues + sp.scalar
    q, grad = quotient_gradient(sp, coeffs)
    rows.append(TraceRow(restart, 0, q, 0.0, float(sp.values(coeffs).min())))
    step = 1.0
    for it in range(1, max_iter + 1):
        direction = -grad / (stiff * sp.measure_scale)
        slope = float(np.sum(grad * direction))
        if slope > -1e-300:
            break
        step = min(4.0 * step, 1e6)
        while step > 1e-14:
            trial = coeffs + step * direction
            U = sp.values(trial)
            if U.min() > POSITIVITY_FLOOR:
                q_new, grad_new = quotient_gradient(sp, trial)
                if q_new <= q + 1e-4 * step * slope:
                    break
            step *= 0.5
        else:
            break
        # projective gauge: int u^p = V
        scale = (target / sp.integrate(U**sp.p)) ** (1.0 / sp.p)
        coeffs = trial * scale
        grad_new = grad_new / scale
        decrease = q - q_new
        q, grad = q_new, grad_new
        rows.append(TraceRow(restart, it, q, step, float(U.min() * scale)))
        if decrease <= tol * 1e-3 * abs(q):
            break
    return coeffs, q, rows


def minimize_quotient(
    fam: geo.ProductFamily,
    l_max: int = 6,
    restarts: int = 8,
    seed: int = 42,
    tol: float = 1e-6,
    max_iter: int = 400,
    zonal: bool = True,
    degree: int | None = None,
    threads: int | None = None,
    space: ProductSpace | None = None,
    starts: list[np.ndarray] | None = None,
) -> MinimizeResult:
    """Multi-start Galerkin minimization of the Yamabe quotient in [h_t].

    The returned estimate is an upper bound on the Yamabe constant of the
    conformal class, never a certified value.  Default starting points are
    u = 1, u = 1 + 0.3 x^1 and seeded random perturbations of u = 1;
    ``starts`` replaces them with explicit coefficient matrices.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    sp = space if space is not None else ProductSpace(fam, l_max, degree, zonal)
    if starts is None:
        starts = _initial_points(sp, restarts, seed)
    restarts = len(starts)
    if threads is None:
        threads = int(os.environ.get("YAMABE_THREADS", "1") or 1)

    def run(r):
        c0 = starts[r]
        if sp.values(c0).min() <= POSITIVITY_FLOOR:
            log.warning("restart %d: initial point breaches positivity", r)
            return None
        return _descend(sp, c0, r, max_iter, tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, range(restarts)))
    else:
        outcomes = [run(r) for r in range(restarts)]

    values = [None if o is None else o[1] for o in outcomes]
    if all(v is None for v in values):
        raise PositivityError("every restart breached positivity")
    best = min((v, r) for r, v in enumerate(values) if v is not None)[1]
    trace = [row for o in outcomes if o is not None for row in o[2]]
    return MinimizeResult(
        estimate=values[best],
        minimizer=ConformalFactor(sp, outcomes[best][0]),
        trace=trace,
        restart_values=values,
        best_restart=best,
        energy=eh_energy(fam),
        aubin_bound=aubin_constant(fam.n),
        seed=seed,
    )
