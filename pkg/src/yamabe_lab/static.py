"""Static-potential identities on S^k x S^l with f = affine function of the sphere coordinates.

Points of the product are pairs ``(x, y)`` with ``x`` a unit vector in
R^{k+1} and ``y`` a vector of length ``R`` in R^{l+1}, R the factor radius in
h_t.  Tangent tensors are stored as symmetric ambient matrices of size
``(k+1) + (l+1)`` that vanish on the normal directions, so pointwise norms are
just the largest absolute eigenvalue.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry as geo
from .functional import ProductSpace, eh_energy
from .sphere import gauss_grid
from .threshold import critical_parameter

__all__ = [
    "StaticCandidate",
    "ResidualReport",
    "ZeroSetReport",
    "static_residual",
    "trace_identity",
    "hessian_identity",
    "geodesic_point",
    "geodesic_transport",
    "rayleigh_quotient",
    "zero_set_diagnostics",
    "cokernel_pairing",
    "cokernel_pairings",
    "upstairs_identification",
    "upstairs_scalar_curvature",
    "yamabe_operator_spread",
    "static_check",
]


def _projector(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Tangent projectors I - v v^T / radius^2 for a stack of points, shape (N, d, d)."""
    d = v.shape[-1]
    return np.eye(d) - np.einsum("ni,nj->nij", v, v) / radius**2


def _block(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, da, _ = a.shape
    db = b.shape[1]
    out = np.zeros((n, da + db, da + db))
    out[:, :da, :da] = a
    out[:, da:, da:] = b
    return out


def _tensor_norm(t: np.ndarray) -> np.ndarray:
    return np.abs(np.linalg.eigvalsh(t)).max(axis=-1)


@dataclass(frozen=True)
class StaticCandidate:
    """f(x, y) = direction . x + offset on (S^k x S^l, h_t)."""

    family: geo.ProductFamily
    direction: np.ndarray = field(default=None)
    offset: float = 0.0
    degree: int = 10

    def __post_init__(self):
        if self.family.factor.kind != "sphere":
            raise ValueError("static checks need a round factor")
        a = np.zeros(self.family.k + 1) if self.direction is None else np.asarray(self.direction, float)
        if self.direction is None:
            a[0] = 1.0
        if a.shape != (self.family.k + 1,):
            raise ValueError(f"direction must have length k+1 = {self.family.k + 1}")
        object.__setattr__(self, "direction", a)

    @classmethod
    def critical(cls, k: int, l: int, **kwargs) -> "StaticCandidate":
        """x^1 on the family at t = k/(k-1), where the factor has Einstein constant k."""
        return cls(geo.ProductFamily.spheres(k, l, critical_parameter(k)), **kwargs)

    @property
    def radius(self) -> float:
        return self.family.factor_radius

    @property
    def is_critical(self) -> bool:
        return math.isclose(self.family.t, critical_parameter(self.family.k), rel_tol=0, abs_tol=1e-12)

    # --- grids --------------------------------------------------------------

    def nodes(self):
        """Product quadrature nodes (X, Y, weights) flattened to (N, .)."""
        gx = gauss_grid(self.family.k, self.degree)
        gy = gauss_grid(self.family.l, self.degree)
        X = np.repeat(gx.nodes, gy.size, axis=0)
        Y = np.tile(gy.nodes, (gx.size, 1)) * self.radius
        W = np.outer(gx.weights, gy.weights).ravel() * self.radius**self.family.l
        return X, Y, W

    def sup_nodes(self):
        """Quadrature nodes plus the extrema of f (the poles +-direction), for sup norms."""
        X, Y, _ = self.nodes()
        a = self.direction
        if not np.any(a):
            return X, Y
        poles = np.array([a, -a]) / np.linalg.norm(a)
        gy = gauss_grid(self.family.l, self.degree).nodes * self.radius
        Xp = np.repeat(poles, len(gy), axis=0)
        Yp = np.tile(gy, (2, 1))
        return np.vstack([X, Xp]), np.vstack([Y, Yp])

    # --- exact evaluators ---------------------------------------------------

    def value(self, X, Y=None) -> np.ndarray:
        return np.atleast_2d(X) @ self.direction + self.offset

    def gradient(self, X, Y) -> np.ndarray:
        X, Y = np.atleast_2d(X), np.atleast_2d(Y)
        gx = self.direction - (X @ self.direction)[:, None] * X
        return np.hstack([gx, np.zeros_like(Y)])

    def hessian(self, X, Y) -> np.ndarray:
        """Hess f = -(direction . x) g_unit on the sphere block, 0 on the factor block."""
        X, Y = np.atleast_2d(X), np.atleast_2d(Y)
        hx = -(X @ self.direction)[:, None, None] * _projector(X)
        return _block(hx, np.zeros((len(Y), Y.shape[1], Y.shape[1])))

    def laplacian(self, X, Y) -> np.ndarray:
        """Positive Laplacian: minus the trace of the Hessian."""
        return -np.trace(self.hessian(X, Y), axis1=1, axis2=2)

    def metric(self, X, Y) -> np.ndarray:
        X, Y = np.atleast_2d(X), np.atleast_2d(Y)
        return _block(_projector(X), _projector(Y, self.radius))

    def ricci(self, X, Y) -> np.ndarray:
        X, Y = np.atleast_2d(X), np.atleast_2d(Y)
        a, b = geo.ricci_block_eigenvalues(self.family)
        return _block(a * _projector(X), b * _projector(Y, self.radius))

    def rho(self, X, Y) -> np.ndarray:
        shift = geo.scalar_curvature(self.family) / (self.family.n - 1)
        return self.ricci(X, Y) - shift * self.metric(X, Y)


@dataclass(frozen=True)
class ResidualReport:
    static_residual: float
    trace_residual: float
    hessian_residual: float
    rayleigh: float
    mean: float


def static_residual(cand: StaticCandidate) -> float:
    """sup over nodes of |(Lap f) g + Hess f - f Ric|."""
    X, Y = cand.sup_nodes()
    f = cand.value(X)
    lhs = cand.laplacian(X, Y)[:, None, None] * cand.metric(X, Y) + cand.hessian(X, Y) - f[:, None, None] * cand.ricci(X, Y)
    return float(_tensor_norm(lhs).max())


def trace_identity(cand: StaticCandidate) -> float:
    """sup over nodes of |Lap f - s/(n-1) f|."""
    X, Y = cand.sup_nodes()
    s = geo.scalar_curvature(cand.family)
    return float(np.abs(cand.laplacian(X, Y) - s / (cand.family.n - 1) * cand.value(X)).max())


def hessian_identity(cand: StaticCandidate) -> float:
    """sup over nodes of |Hess f - rho f|."""
    X, Y = cand.sup_nodes()
    diff = cand.hessian(X, Y) - cand.value(X)[:, None, None] * cand.rho(X, Y)
    return float(_tensor_norm(diff).max())


def rayleigh_quotient(cand: StaticCandidate) -> float:
    X, Y, W = cand.nodes()
    g = cand.gradient(X, Y)
    return float(W @ np.sum(g**2, axis=1) / (W @ cand.value(X) ** 2))


def mean_value(cand: StaticCandidate) -> float:
    X, _, W = cand.nodes()
    return float(W @ cand.value(X) / W.sum())


# --- geodesics -----------------------------------------------------------------


def _split(cand, v):
    v = np.asarray(v, float)
    k1 = cand.family.k + 1
    return v[:k1], v[k1:]


def _check_tangent(cand, x, y, v):
    vx, vy = _split(cand, v)
    if abs(np.linalg.norm(x) - 1) > 1e-12 or abs(np.linalg.norm(y) - cand.radius) > 1e-12:
        raise ValueError("base point is not on the product")
    if abs(vx @ x) > 1e-12 or abs(vy @ y) > 1e-12:
        raise ValueError("velocity is not tangent at the base point")
    speed = math.hypot(np.linalg.norm(vx), np.linalg.norm(vy))
    if abs(speed - 1.0) > 1e-12:
        raise ValueError(f"velocity must be unit speed, |v| = {speed!r}")
    return vx, vy


def _great_circle(p, v, s, radius):
    speed = np.linalg.norm(v)
    if speed == 0:
        return np.repeat(p[None, :], len(s), axis=0)
    ang = np.outer(speed * np.asarray(s) / radius, 1.0)
    return np.cos(ang) * p + np.sin(ang) * (radius * v / speed)


def geodesic_point(cand: StaticCandidate, x, y, v, s):
    """Exact geodesic of h_t through (x, y) with velocity v, evaluated at parameters s."""
    vx, vy = _split(cand, v)
    s = np.atleast_1d(s)
    return _great_circle(np.asarray(x, float), vx, s, 1.0), _great_circle(np.asarray(y, float), vy, s, cand.radius)


def _rk4(rhs, state, h, steps):
    out = [state]
    s = 0.0
    for _ in range(steps):
        k1 = rhs(s, state)
        k2 = rhs(s + h / 2, state + h / 2 * k1)
        k3 = rhs(s + h / 2, state + h / 2 * k2)
        k4 = rhs(s + h, state + h * k3)
        state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
        out.append(state)
    return np.array(out)


def geodesic_transport(cand: StaticCandidate, x, y, v, T: float = 2 * math.pi, steps: int = 1000) -> float:
    """Integrate f'' = rho(v, v) f along a unit-speed geodesic; max deviation from f(gamma(s))."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    vx, vy = _check_tangent(cand, x, y, v)
    h = T / steps
    a = cand.direction

    def rho_vv(s):
        gx, gy = geodesic_point(cand, x, y, v, s)
        # velocity of the exact geodesic at s, by transporting along the great circles
        dx = _great_circle_velocity(x, vx, s, 1.0)
        dy = _great_circle_velocity(y, vy, s, cand.radius)
        w = np.concatenate([dx, dy])
        return float(w @ cand.rho(gx, gy)[0] @ w)

    def rhs(s, state):
        return np.array([state[1], rho_vv(s) * state[0]])

    start = np.array([cand.value(x)[0], a @ vx])
    sol = _rk4(rhs, start, h, steps)
    gx, _ = geodesic_point(cand, x, y, v, h * np.arange(steps + 1))
    return float(np.abs(sol[:, 0] - cand.value(gx)).max())


def _great_circle_velocity(p, v, s, radius):
    speed = np.linalg.norm(v)
    if speed == 0:
        return np.zeros_like(p)
    ang = speed * s / radius
    return -np.sin(ang) * speed / radius * p + np.cos(ang) * v


def _integrate_geodesic(cand, x, y, v, T, steps):
    """RK4 on the ambient geodesic equations x'' = -|x'|^2 x, y'' = -|y'|^2 y / R^2."""
    k1 = len(x)
    R2 = cand.radius**2

    def rhs(s, z):
        px, py = z[:k1], z[k1:len(x) + len(y)]
        vx_, vy_ = z[len(x) + len(y):len(x) + len(y) + k1], z[len(x) + len(y) + k1:]
        ax = -(vx_ @ vx_) * px
        ay = -(vy_ @ vy_) * py / R2
        return np.concatenate([vx_, vy_, ax, ay])

    vx, vy = _split(cand, v)
    z0 = np.concatenate([x, y, vx, vy])
    sol = _rk4(rhs, z0, T / steps, steps)
    return sol[:, :k1], sol[:, k1:len(x) + len(y)]


@dataclass(frozen=True)
class ZeroSetReport:
    samples: int
    nonempty: bool
    grad_norm_min: float
    grad_norm_max: float
    grad_norm_deviation: float
    tangent_geodesic_drift: float


def zero_set_diagnostics(cand: StaticCandidate, samples: int = 100, seed: int = 0,
                         T: float = 2 * math.pi, steps: int = 1000) -> ZeroSetReport:
    """Sample Z = f^{-1}(0): |grad f| there, and confinement of geodesics tangent to Z."""
    X, Y, _ = cand.nodes()
    vals = cand.value(X)
    nonempty = bool(vals.min() < 0 < vals.max())
    a, b = cand.direction, cand.offset
    an = np.linalg.norm(a)
    if not nonempty or an == 0 or abs(b) >= an:
        return ZeroSetReport(samples, False, math.nan, math.nan, math.nan, math.nan)
    rng = np.random.default_rng(seed)
    e = a / an
    k1, l1 = cand.family.k + 1, cand.family.l + 1
    height = -b / an
    pts, vels = [], []
    for _ in range(samples):
        w = rng.standard_normal(k1)
        w -= (w @ e) * e
        w /= np.linalg.norm(w)
        x = height * e + math.sqrt(1 - height**2) * w
        y = rng.standard_normal(l1)
        y *= cand.radius / np.linalg.norm(y)
        # velocity tangent to Z: sphere part orthogonal to both e and x
        vx = rng.standard_normal(k1)
        for basis_vec in (e, w):
            vx -= (vx @ basis_vec) * basis_vec
        vy = rng.standard_normal(l1)
        vy -= (vy @ y) * y / cand.radius**2
        v = np.concatenate([vx, vy])
        pts.append((x, y))
        vels.append(v / np.linalg.norm(v))
    X0 = np.array([p[0] for p in pts])
    Y0 = np.array([p[1] for p in pts])
    norms = np.linalg.norm(cand.gradient(X0, Y0), axis=1)
    drift = 0.0
    for (x, y), v in zip(pts[: min(samples, 10)], vels):
        gx, _ = _integrate_geodesic(cand, x, y, v, T, steps)
        drift = max(drift, float(np.abs(cand.value(gx)).max()))
    return ZeroSetReport(
        samples=samples,
        nonempty=True,
        grad_norm_min=float(norms.min()),
        grad_norm_max=float(norms.max()),
        grad_norm_deviation=float(np.abs(norms - 1).max()),
        tangent_geodesic_drift=drift,
    )


# --- co-kernel of the linearized scalar curvature --------------------------------


def cokernel_pairings(cand: StaticCandidate, l_max: int = 4) -> np.ndarray:
    """int f ((n-1) Lap phi - s phi) for every product harmonic phi of bidegree <= l_max."""
    fam = cand.family
    sp = ProductSpace(fam, l_max=l_max, zonal=False)
    F = cand.value(sp.sphere_grid.nodes)[:, None] * np.ones(sp.factor_grid.size)
    proj = sp.sphere_basis.values.T @ (sp.weights * F) @ sp.factor_basis.values
    s = geo.scalar_curvature(fam)
    return ((fam.n - 1) * sp.eigenvalues - s) * proj


def cokernel_pairing(cand: StaticCandidate, sphere_index: int, factor_index: int, l_max: int = 4) -> float:
    return float(cokernel_pairings(cand, l_max)[sphere_index, factor_index])


# --- the upstairs Einstein manifold -----------------------------------------------


def _hyperspherical(angles):
    """Point of S^m from m angles (complex-safe)."""
    m = len(angles)
    out = []
    prod = 1.0
    for i in range(m):
        out.append(prod * np.cos(angles[i]))
        prod = prod * np.sin(angles[i])
    out.append(prod)
    return np.array(out)


def _pullback(embed, coords):
    """Pullback of the Euclidean metric through ``embed`` at ``coords``, Jacobian by complex step."""
    h = 1e-30
    cols = []
    for i in range(len(coords)):
        z = np.array(coords, dtype=complex)
        z[i] += 1j * h
        cols.append(np.imag(embed(z)) / h)
    J = np.array(cols).T
    return J.T @ J


def upstairs_identification(k: int, r, theta, angles=None) -> float:
    """Max component mismatch between g + f^2 dθ^2 (f = cos r) and the round S^{k+1} metric.

    Coordinates are (r, angles of S^{k-1}, θ) where r is the distance from the
    pole x^1 = 1 of S^k.  Unspecified S^{k-1} angles are sampled at three
    fixed values of the first angle.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    r, theta = np.broadcast_arrays(np.atleast_1d(r), np.atleast_1d(theta))
    if angles is None:
        angles = np.full(k - 2, 0.7)

    def downstairs(z):
        return np.concatenate([[np.cos(z[0])], np.sin(z[0]) * _hyperspherical(z[1:])])

    def upstairs(z):
        rr, th = z[0], z[-1]
        return np.concatenate(
            [[np.cos(rr) * np.cos(th), np.cos(rr) * np.sin(th)], np.sin(rr) * _hyperspherical(z[1:-1])]
        )

    worst = 0.0
    for ri, ti in zip(r.ravel(), theta.ravel()):
        for phi in (0.3, 1.9, 4.1):
            coords = np.concatenate([[ri, phi], angles, [ti]])
            g_hat = np.zeros((k + 1, k + 1))
            g_hat[:k, :k] = _pullback(downstairs, coords[:k])
            g_hat[k, k] = np.cos(ri) ** 2
            worst = max(worst, float(np.abs(g_hat - _pullback(upstairs, coords)).max()))
    return worst


def upstairs_scalar_curvature(k: int, l: int) -> float:
    """Scalar curvature of S^{k+1} x X^l with Einstein constant k on both factors."""
    return (k + 1) * k + k * l


def yamabe_operator_spread(fam: geo.ProductFamily, l_max: int = 1) -> float:
    """Spread across nodes of ((p+2) Lap u + s u) / u^{p-1} at u = 1."""
    sp = ProductSpace(fam, l_max=l_max, zonal=False)
    u = sp.constant()
    lap = sp.values(sp.eigenvalues * u.coeffs)
    op = ((sp.p + 2) * lap + sp.scalar * u.values) / u.values ** (sp.p - 1)
    return float(np.ptp(op))


# --- one-shot report ----------------------------------------------------------------


def static_check(k: int, l: int, t: float | None = None, l_max: int = 4, samples: int = 100) -> dict:
    """Run every static-potential diagnostic on x^1 over h_t (t defaults to k/(k-1))."""
    t = critical_parameter(k) if t is None else t
    fam = geo.ProductFamily.spheres(k, l, t)
    cand = StaticCandidate(fam)
    s = geo.scalar_curvature(fam)
    residuals = ResidualReport(
        static_residual=static_residual(cand),
        trace_residual=trace_identity(cand),
        hessian_residual=hessian_identity(cand),
        rayleigh=rayleigh_quotient(cand),
        mean=mean_value(cand),
    )
    zs = zero_set_diagnostics(cand, samples)
    x0, v0 = np.eye(k + 1)[0], np.eye(k + 1)[1]
    y0 = np.eye(l + 1)[0] * cand.radius
    transport = geodesic_transport(cand, x0, y0, np.concatenate([v0, np.zeros(l + 1)]))
    pairings = cokernel_pairings(cand, l_max)
    rs = np.linspace(0, np.pi, 10)
    ths = np.linspace(0, 2 * np.pi, 10)
    R, TH = np.meshgrid(rs, ths)
    static = max(residuals.static_residual, residuals.trace_residual, residuals.hessian_residual) <= 1e-8
    return {
        "family": fam.to_json(),
        "critical_t": critical_parameter(k),
        "scalar": s,
        "threshold": s / (fam.n - 1),
        "energy": eh_energy(fam),
        "residuals": asdict(residuals),
        "zero_set": asdict(zs),
        "geodesic_deviation": transport,
        "cokernel_max": float(np.abs(pairings).max()),
        "upstairs_mismatch": upstairs_identification(k, R, TH),
        "upstairs_scalar": upstairs_scalar_curvature(k, l),
        "scalar_spread": yamabe_operator_spread(fam),
        "status": "static" if static else "not static",
        "note": "-f is also a static potential; its upstairs Einstein manifold is not explored",
    }
