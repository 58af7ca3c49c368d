import numpy as np
import pytest

from hexcryst.domain import constants
from hexcryst.domain.constants import C6, CONSTANTS
from hexcryst.domain.errors import InvalidParameter


def test_c6_value():
    assert round(C6, 6) == 0.160375
    assert constants.cn(6) == pytest.approx(C6, rel=1e-15)


def test_cn_known_values():
    assert constants.cn(4) == pytest.approx(1.0 / 6.0)
    assert constants.cn(3) == pytest.approx(1.0 / (3.0 * np.sqrt(3.0)))


def test_cn_decreases_toward_disk():
    values = constants.cn(np.arange(3, 13))
    assert np.all(np.diff(values) < 0)
    assert values[-1] > 1.0 / (2.0 * np.pi)


def test_cn_rejects_small_n():
    with pytest.raises(InvalidParameter):
        constants.cn(2.5)


def test_kappa_is_slope_of_cn_at_six():
    h = 1e-5
    slope = (constants.cn(6 + h) - constants.cn(6 - h)) / (2 * h)
    assert CONSTANTS.kappa == pytest.approx(slope, rel=1e-6)


def test_cell_bound_at_unit_hexagon():
    assert constants.f(1.0, 6) == pytest.approx(3.0 * C6)
    assert constants.convexity_gap(1.0, 6) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(InvalidParameter):
        constants.f(-1.0, 6)


def test_volume_lambda_round_trip():
    assert constants.v_lambda(2.0 * C6) == pytest.approx(1.0)
    assert constants.v_lambda(constants.lambda_for_volume(60.0)) == pytest.approx(60.0)
    with pytest.raises(InvalidParameter):
        constants.v_lambda(0.0)


def test_hextrial_constant():
    assert constants.hextrial_constant() == pytest.approx(2 ** 2.5 * 3 ** 0.25 * C6)
    assert constants.hextrial_constant(0.1) == pytest.approx(1.1 * constants.hextrial_constant())


def test_hessian_determinant_is_positive():
    n = np.linspace(3.0, 12.0, 10)
    assert np.all(constants.hessian_det_g(0.5, n) > 0)


def test_derived_constants():
    assert CONSTANTS.a ** 2 * np.sqrt(3.0) / 2.0 == pytest.approx(1.0)
    assert CONSTANTS.D0 == pytest.approx(2.0 * np.sqrt(C6 / np.sqrt(CONSTANTS.m0) + CONSTANTS.R0 ** 2))
