"""Adaptive cubature engine."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hrbm.errors import InputError, QuadratureError
from hrbm.quadrature import CubatureResult, QuadratureConfig, integrate_2d


def test_default_box_and_tolerance():
    cfg = QuadratureConfig()
    assert cfg.box == (-8.0, 40.0, -40.0, 40.0)
    assert cfg.abs_tol == 1e-9


def test_config_validation():
    with pytest.raises(InputError):
        QuadratureConfig(abs_tol=0.0)
    with pytest.raises(InputError):
        QuadratureConfig(abs_tol=1e-6)  # above the 1e-8 ceiling
    with pytest.raises(InputError):
        QuadratureConfig(box=(1.0, 0.0, -1.0, 1.0))
    with pytest.raises(InputError):
        QuadratureConfig(box=(0.0, np.inf, -1.0, 1.0))


def test_enlarged_box():
    cfg = QuadratureConfig().enlarged(0.5)
    x_lo, x_hi, d_lo, d_hi = cfg.box
    assert (x_hi - x_lo) == pytest.approx(48.0 * 1.5)
    assert (d_hi - d_lo) == pytest.approx(80.0 * 1.5)


def test_polynomial_exact():
    cfg = QuadratureConfig(box=(0.0, 1.0, 0.0, 1.0), abs_tol=1e-9)
    res = integrate_2d(lambda x, d: x**3 * d**2, cfg)
    assert_allclose(res.value, 0.25 / 3.0, atol=1e-13)


def test_gaussian_bump():
    cfg = QuadratureConfig(box=(-10.0, 10.0, -10.0, 10.0), abs_tol=1e-9)
    res = integrate_2d(
        lambda x, d: np.exp(-0.5 * (x * x + d * d)) / (2 * math.pi), cfg
    )
    assert_allclose(res.value, 1.0, atol=1e-9)
    assert res.error_estimate <= 1e-9


def test_adaptivity_narrow_feature():
    # a sharp ridge the initial grid cannot see accurately
    cfg = QuadratureConfig(box=(-8.0, 8.0, -8.0, 8.0), abs_tol=1e-9)
    res = integrate_2d(
        lambda x, d: np.exp(-50.0 * x * x - 0.5 * d * d), cfg
    )
    exact = math.sqrt(math.pi / 50.0) * math.sqrt(2 * math.pi)
    assert_allclose(res.value, exact, atol=5e-9)


def test_refinement_cap_reports_estimate():
    cfg = QuadratureConfig(box=(-8.0, 8.0, -8.0, 8.0), abs_tol=1e-9, max_refinements=2)
    with pytest.raises(QuadratureError) as exc:
        integrate_2d(lambda x, d: np.exp(-50.0 * x * x - 0.5 * d * d), cfg)
    assert exc.value.error_estimate > 1e-9
    assert math.isfinite(exc.value.value)


def test_result_reports_counts():
    cfg = QuadratureConfig(box=(0.0, 1.0, 0.0, 1.0), abs_tol=1e-9)
    res = integrate_2d(lambda x, d: x * d, cfg)
    assert isinstance(res, CubatureResult)
    assert res.cells >= 16
    assert res.evaluations >= 16 * 225
