import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from yamabe_lab.geometry import (
    EinsteinFactor,
    ProductFamily,
    lichnerowicz_bound,
    lichnerowicz_lower_bound,
    product_lambda1,
    ricci_block_eigenvalues,
    rho_block_eigenvalues,
    scalar_curvature,
    volume,
)
from yamabe_lab.sphere import gauss_grid, harmonic_basis, sphere_volume


def fam(k=2, l=2, t=1.0):
    return ProductFamily.spheres(k, l, t)


def block_trace(f):
    a, b = ricci_block_eigenvalues(f)
    return f.k * a + f.l * b


def test_scalar_curvature_examples():
    assert scalar_curvature(fam(t=2)) == 6
    assert scalar_curvature(fam(t=1)) == 4
    assert scalar_curvature(fam(3, 3, 1)) == 12 == block_trace(fam(3, 3, 1))


def test_h2_factor_has_radius_one_over_root_two():
    assert fam(t=2).factor_radius == pytest.approx(1 / math.sqrt(2), rel=1e-15)


def test_ricci_blocks():
    assert ricci_block_eigenvalues(fam(t=2)) == (1, 2)
    a, b = ricci_block_eigenvalues(fam(3, 2, 1))
    assert a == b == 2
    assert ricci_block_eigenvalues(fam(t=1.5)) == (1, 1.5)
    assert block_trace(fam(t=1.5)) == 5 == scalar_curvature(fam(t=1.5))


def test_rho_blocks():
    assert rho_block_eigenvalues(fam(t=2)) == pytest.approx((-1, 0), abs=1e-15)
    a, b = rho_block_eigenvalues(fam(3, 3, 1))
    assert a == b == pytest.approx(2 - 12 / 5)
    assert rho_block_eigenvalues(fam(t=1.5)) == pytest.approx((1 - 5 / 3, 1.5 - 5 / 3), abs=1e-15)


def test_volume_examples():
    assert volume(fam(t=1)) == pytest.approx(16 * math.pi**2, rel=1e-14)
    assert volume(fam(t=2)) == pytest.approx(8 * math.pi**2, rel=1e-14)
    # unit S^3 x unit S^2
    assert sphere_volume(3) * EinsteinFactor.sphere(2).volume == pytest.approx(2 * math.pi**2 * 4 * math.pi)
    # with the factor normalized to Ric = 2 its radius is 1/sqrt(2)
    assert volume(fam(3, 2, 1)) == pytest.approx(2 * math.pi**2 * 2 * math.pi, rel=1e-14)


def test_volume_scaling_matches_grid_weights():
    k, l, t = 2, 2, 2.0
    f = fam(k, l, t)
    gx, gy = gauss_grid(k, 4), gauss_grid(l, 4)
    weights = np.outer(gx.weights, gy.weights) * f.factor_radius**l
    assert weights.sum() == pytest.approx(volume(f), rel=1e-13)


def test_lambda1():
    for t in np.linspace(1, 3, 9):
        assert product_lambda1(fam(t=t)) == 2
    assert product_lambda1(fam(t=1)) == 2
    with pytest.raises(ValueError, match="t must be >= 1"):
        fam(t=0.9)


def test_lichnerowicz():
    assert lichnerowicz_lower_bound(fam(t=1.7)) == pytest.approx(4 / 3)
    assert lichnerowicz_bound(5, 4) == 5  # the pure-sphere limit, Ric = (n-1) g
    assert lichnerowicz_bound(3, 2) == 3


@settings(max_examples=200, deadline=None)
@given(k=st.integers(2, 3), l=st.integers(2, 3), t=st.floats(1, 4))
def test_lichnerowicz_below_lambda1(k, l, t):
    f = fam(k, l, t)
    assert lichnerowicz_lower_bound(f) <= product_lambda1(f) + 1e-12


def test_trace_consistency_random_families():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        k, l = int(rng.integers(2, 4)), int(rng.integers(1, 4))
        t = float(rng.uniform(1, 4))
        factor = EinsteinFactor(l, k - 1, volume=1.0, lambda1=1.0)
        f = ProductFamily(k, factor, t)
        assert k * (k - 1) + l * t * (k - 1) == pytest.approx(scalar_curvature(f), rel=1e-14)
        assert block_trace(f) == pytest.approx(scalar_curvature(f), rel=1e-14)


@pytest.mark.parametrize("k, l", [(2, 2), (3, 2), (3, 3)])
def test_einstein_iff_t_is_one(k, l):
    for t in [1.0, 1 + 1e-9, 1.3, 2.0, 3.5]:
        a, b = ricci_block_eigenvalues(fam(k, l, t))
        assert (abs(a - b) <= 1e-12) == (t == 1.0)


@pytest.mark.parametrize("k, l", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_static_critical_coincidence(k, l):
    crit = k / (k - 1)
    assert rho_block_eigenvalues(fam(k, l, crit)) == pytest.approx((-1, 0), abs=1e-14)
    for t in (1.0, crit * 0.9, crit * 1.1):
        assert rho_block_eigenvalues(fam(k, l, t)) != pytest.approx((-1, 0), abs=1e-6)


def test_product_spectrum_from_grid_laplacian():
    # product eigenvalues l(l+1) + t m(m+1), sphere eigenvalues read off the grid Rayleigh quotients
    grid = gauss_grid(2, 8)
    basis = harmonic_basis(2, 3, grid)
    quotients = grid.integrate(np.sum(basis.gradients**2, axis=2).T) / grid.integrate(basis.values.T**2)
    for t in (1.0, 1.5, 2.0, 2.5):
        f = fam(t=t)
        prod = quotients[:, None] + quotients[None, :] / f.factor_radius**2
        positive = prod[prod > 1e-9]
        assert positive.min() == pytest.approx(product_lambda1(f), abs=1e-8)


def test_sphere_factor_consistency():
    with pytest.raises(ValueError):
        EinsteinFactor(2, 1.0, 4 * math.pi, 3.0, kind="sphere", radius=1.0)
    f = EinsteinFactor.normalized_sphere(3, 2.0)
    assert f.einstein_constant == pytest.approx(2.0)
    with pytest.raises(ValueError):
        ProductFamily(2, EinsteinFactor.sphere(2, 0.5), 1.0)


def test_json_roundtrip():
    f = fam(2, 2, 2.0)
    assert f.to_json() == {"k": 2, "l": 2, "t": 2.0, "factor": "sphere"}
    assert ProductFamily.from_json(f.to_json()) == f
