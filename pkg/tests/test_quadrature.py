import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locfpca.errors import QuadratureError
from locfpca.quadrature import (
    adaptive_simpson,
    composite_gauss_legendre,
    gauss_legendre,
    sphere_area,
    sphere_rule,
)


def test_simpson_polynomial_exact():
    r = adaptive_simpson(lambda x: x**3 - 2 * x, 0.0, 2.0)
    assert r.value == pytest.approx(0.0, abs=1e-12)


def test_simpson_smooth():
    r = adaptive_simpson(math.exp, 0.0, 1.0, abs_tol=1e-13)
    assert r.value == pytest.approx(math.e - 1.0, abs=1e-12)


def test_simpson_budget_exhaustion_raises():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: math.sin(1.0 / x) if x else 0.0, 0.0, 1.0,
                         abs_tol=1e-15, max_evaluations=200)


@given(st.integers(1, 30))
def test_gauss_legendre_weights(n):
    x, w = gauss_legendre(n, 0.0, 3.0)
    assert w.sum() == pytest.approx(3.0, rel=1e-13)
    assert np.all((x > 0) & (x < 3))


def test_composite_rule_integrates_sqrt():
    x, w = composite_gauss_legendre(np.geomspace(1e-12, 1.0, 40), 16)
    assert float(w @ np.sqrt(x)) == pytest.approx(2.0 / 3.0, rel=1e-10)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_sphere_rule_weights_sum_to_area(m):
    pts, w = sphere_rule(m, 24)
    assert w.sum() == pytest.approx(sphere_area(m), rel=1e-12)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2))
def test_sphere_rule_second_moments(m, k):
    k = min(k, m - 1)
    pts, w = sphere_rule(m, 32)
    # mean of omega_k^2 over the unit sphere in R^m is 1/m
    assert float(w @ pts[:, k] ** 2) / w.sum() == pytest.approx(1.0 / m, rel=1e-10)
