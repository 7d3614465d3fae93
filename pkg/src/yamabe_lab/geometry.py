"""Closed-form geometry of the squeezed products h_t = g_unit + t^{-1} h on S^k x X^l.

The factor (X, h) is Einstein with Ricci = (k - 1) h.  Scaling h by 1/t
multiplies its Ricci eigenvalue (measured against the scaled metric) and its
Laplace spectrum by t, and its volume by t^{-l/2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .sphere import sphere_volume

__all__ = [
    "EinsteinFactor",
    "ProductFamily",
    "scalar_curvature",
    "ricci_block_eigenvalues",
    "rho_block_eigenvalues",
    "volume",
    "product_lambda1",
    "lichnerowicz_bound",
    "lichnerowicz_lower_bound",
]


@dataclass(frozen=True)
class EinsteinFactor:
    """Compact Einstein manifold (X^l, h) with Ric = einstein_constant * h."""

    dim: int
    einstein_constant: float
    volume: float
    lambda1: float
    kind: str = "abstract"
    radius: float | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("factor dimension must be >= 1")
        if self.volume <= 0 or self.lambda1 <= 0:
            raise ValueError("factor volume and lambda1 must be positive")
        if self.kind not in ("sphere", "abstract"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.kind == "sphere":
            rho = self.radius
            if rho is None or rho <= 0:
                raise ValueError("sphere factor needs a positive radius")
            expected = (
                (self.dim - 1) / rho**2,
                rho**self.dim * sphere_volume(self.dim),
                self.dim / rho**2,
            )
            for got, want in zip((self.einstein_constant, self.volume, self.lambda1), expected):
                if not math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-12):
                    raise ValueError("sphere factor data are not self-consistent")

    @classmethod
    def sphere(cls, dim: int, radius: float = 1.0) -> "EinsteinFactor":
        if dim < 1:
            raise ValueError("factor dimension must be >= 1")
        return cls(
            dim=dim,
            einstein_constant=(dim - 1) / radius**2,
            volume=radius**dim * sphere_volume(dim),
            lambda1=dim / radius**2,
            kind="sphere",
            radius=radius,
        )

    @classmethod
    def normalized_sphere(cls, dim: int, einstein_constant: float) -> "EinsteinFactor":
        """Round S^dim scaled so that Ric = einstein_constant * metric."""
        if dim < 2:
            raise ValueError("a round factor with positive Ricci curvature needs dim >= 2")
        radius = math.sqrt((dim - 1) / einstein_constant)
        return cls(
            dim=dim,
            einstein_constant=float(einstein_constant),
            volume=radius**dim * sphere_volume(dim),
            lambda1=dim * einstein_constant / (dim - 1),
            kind="sphere",
            radius=radius,
        )

    def describe(self) -> str:
        return "sphere" if self.kind == "sphere" else "abstract"


@dataclass(frozen=True)
class ProductFamily:
    """The metric h_t = g_unit + t^{-1} h on S^k x X^l."""

    k: int
    factor: EinsteinFactor
    t: float
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", self.k + self.factor.dim)
        if self.k < 2:
            raise ValueError(f"sphere factor dimension k must be >= 2, got {self.k}")
        if self.n < 3:
            raise ValueError(f"total dimension must be >= 3, got {self.n}")
        if not self.t >= 1:
            raise ValueError(f"t must be >= 1, got {self.t}")
        if not math.isclose(self.factor.einstein_constant, self.k - 1, rel_tol=1e-12):
            raise ValueError(
                f"factor Einstein constant must equal k-1 = {self.k - 1}, got {self.factor.einstein_constant}"
            )
        block_trace = self.k * (self.k - 1) + self.l * self.t * self.factor.einstein_constant
        if not math.isclose(block_trace, (self.k - 1) * (self.k + self.t * self.l), rel_tol=1e-12):
            raise AssertionError("block Ricci trace disagrees with closed-form scalar curvature")

    @property
    def l(self) -> int:
        return self.factor.dim

    @classmethod
    def spheres(cls, k: int, l: int, t: float) -> "ProductFamily":
        """S^k x S^l with the round factor normalized to Ricci curvature k - 1."""
        return cls(k, EinsteinFactor.normalized_sphere(l, k - 1), t)

    def with_t(self, t: float) -> "ProductFamily":
        return ProductFamily(self.k, self.factor, t)

    @property
    def factor_radius(self) -> float:
        """Radius of the round factor in the metric t^{-1} h."""
        if self.factor.kind != "sphere":
            raise ValueError("factor radius is only defined for round factors")
        return self.factor.radius / math.sqrt(self.t)

    @property
    def conformal_exponent(self) -> float:
        """p = 2n/(n-2)."""
        return 2.0 * self.n / (self.n - 2)

    def to_json(self) -> dict:
        return {"k": self.k, "l": self.l, "t": self.t, "factor": self.factor.describe()}

    @classmethod
    def from_json(cls, data: dict) -> "ProductFamily":
        if data.get("factor", "sphere") != "sphere":
            raise ValueError("only sphere factors can be rebuilt from JSON")
        return cls.spheres(int(data["k"]), int(data["l"]), float(data["t"]))


def scalar_curvature(fam: ProductFamily) -> float:
    return (fam.k - 1) * (fam.k + fam.t * fam.l)


def ricci_block_eigenvalues(fam: ProductFamily) -> tuple[float, float]:
    """Ricci eigenvalues of h_t on the sphere block and on the factor block."""
    return float(fam.k - 1), fam.t * fam.factor.einstein_constant


def rho_block_eigenvalues(fam: ProductFamily) -> tuple[float, float]:
    """Block eigenvalues of rho = Ric - s/(n-1) g."""
    shift = scalar_curvature(fam) / (fam.n - 1)
    a, b = ricci_block_eigenvalues(fam)
    return a - shift, b - shift


def volume(fam: ProductFamily) -> float:
    return sphere_volume(fam.k) * fam.factor.volume * fam.t ** (-fam.l / 2)


def product_lambda1(fam: ProductFamily) -> float:
    """Smallest positive eigenvalue of the product spectrum {lambda_sphere + t mu_factor}."""
    return min(float(fam.k), fam.t * fam.factor.lambda1)


def lichnerowicz_bound(n: int, ric_min: float) -> float:
    """Lichnerowicz: Ric >= ric_min g (ric_min > 0) on M^n forces lambda1 >= n ric_min / (n-1)."""
    return n * ric_min / (n - 1)


def lichnerowicz_lower_bound(fam: ProductFamily) -> float:
    return lichnerowicz_bound(fam.n, min(ricci_block_eigenvalues(fam)))
