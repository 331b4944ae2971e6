import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavemap.errors import BadResolution, NonIntegrableWeight
from wavemap.grid import (build_grid, cumulative_weighted_integral, null_derivatives, radial_derivative,
                          radial_laplacian, tail_integral, weighted_integral)


def test_nodes():
    g = build_grid(0.5, 2.0)
    assert np.array_equal(g.r, [0.25, 0.75, 1.25, 1.75])
    assert build_grid(2.0 ** -8, 16).J == 4096
    with pytest.raises(BadResolution):
        build_grid(0.5, 2.1)
    with pytest.raises(BadResolution):
        build_grid(0.5, 2.0 - 1.5)
    with pytest.raises(ValueError):
        g.r[0] = 1.0


@given(st.integers(3, 12), st.integers(1, 6))
def test_grid_invariants(k, m):
    g = build_grid(2.0 ** -k, m)
    assert np.all(g.r > 0)
    assert np.all(np.diff(g.r) == g.dr)
    assert g.J * g.dr == g.r_max


def test_weighted_integral_examples():
    g = build_grid(1 / 3, 3.0)
    assert weighted_integral(g, np.ones(g.J)) == 3.0
    assert weighted_integral(g, np.zeros(g.J), -0.5) == 0
    # the r^(1/2) endpoint behaviour limits the midpoint rule to order 3/2
    errs = []
    for k in (5, 6, 7, 8):
        g = build_grid(2.0 ** -k, 1.0)
        err = abs(weighted_integral(g, g.r, -0.5) - 2 / 3)
        assert err <= g.dr ** 1.5
        errs.append(err)
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) > 1.45)
    with pytest.raises(NonIntegrableWeight):
        weighted_integral(g, g.r, -1)


def test_exact_weight_is_second_order_for_singular_weight():
    errs = []
    for k in (5, 6, 7):
        g = build_grid(2.0 ** -k, 8.0)
        f = np.exp(-g.r ** 2)
        errs.append(abs(weighted_integral(g, f, -0.9, exact_weight=True) - 0.5 * __import__("math").gamma(0.05)))
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) > 1.8)


def test_cumulative_and_tail():
    g = build_grid(2.0 ** -8, 2.0)
    cum = cumulative_weighted_integral(g, np.ones(g.J), 0.5)
    assert np.allclose(cum, g.r ** 1.5 / 1.5, atol=1e-14)
    tail = tail_integral(g, 2 * g.r)
    assert np.allclose(tail, 4 - g.r ** 2, atol=1e-4)


@pytest.mark.parametrize("f,exact", [(lambda r: r ** 2, lambda r: 4 + 0 * r), (lambda r: r ** 4, lambda r: 16 * r ** 2)])
def test_laplacian_examples(f, exact):
    errs = []
    for k in (4, 5, 6):
        g = build_grid(2.0 ** -k, 2.0)
        errs.append(np.max(np.abs(radial_laplacian(g, f(g.r)) - exact(g.r))))
    errs = np.array(errs)
    assert errs[-1] < 30 * 2.0 ** -12
    if errs[0] > 1e-10:
        assert np.all(np.log2(errs[:-1] / errs[1:]) > 1.8)


def test_laplacian_of_constant_is_zero():
    g = build_grid(0.1, 2.0)
    assert np.array_equal(radial_laplacian(g, np.full((g.J, 3), 0.7)), np.zeros((g.J, 3)))


def test_derivative_parity():
    g = build_grid(2.0 ** -6, 4.0)
    odd = radial_derivative(g, np.sin(g.r), parity=-1)
    even = radial_derivative(g, np.cos(g.r), parity=1)
    assert np.max(np.abs(odd - np.cos(g.r))) < 1e-3
    assert np.max(np.abs(even + np.sin(g.r))) < 1e-3


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_null_derivatives(a, b):
    fu, fv = null_derivatives(np.array([a]), np.array([b]))
    assert fu[0] == pytest.approx((a - b) / 2) and fv[0] == pytest.approx((a + b) / 2)
    fu, _ = null_derivatives(np.array([a]), np.array([a]))
    assert fu[0] == 0
    fu, fv = null_derivatives(np.array([0.0]), np.array([b]))
    assert fu[0] == -fv[0]
