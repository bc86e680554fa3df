import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from willmore.geometry import (
    SymMat2,
    Tilt,
    eig_sym2,
    eig_sym2_arr,
    inverse_shape_operator,
    norm_inf,
    normal,
    rho0,
    shape_operator,
    turning_angle,
)

finite = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)
mats = st.builds(SymMat2, finite, finite, finite)
tilts = st.builds(Tilt, finite, finite)


def test_eigenvalues_diagonal():
    t1, t2 = eig_sym2(SymMat2.diag(3.0, -1.0))
    assert t1 == pytest.approx(3.0)
    assert t2 == pytest.approx(-1.0)


def test_eigenvalues_rotation_invariant():
    # conjugate diag(2, 1) by a rotation and recover the spectrum
    c, s = math.cos(0.7), math.sin(0.7)
    r = np.array([[c, -s], [s, c]])
    m = r @ np.diag([2.0, 1.0]) @ r.T
    t1, t2 = eig_sym2(SymMat2.from_array(m))
    assert t1 == pytest.approx(2.0)
    assert t2 == pytest.approx(1.0)


@given(mats)
def test_eigenvalues_ordered_and_match_invariants(xi):
    t1, t2 = eig_sym2(xi)
    assert t1 >= t2
    assert t1 + t2 == pytest.approx(xi.trace(), abs=1e-9)
    assert t1 * t2 == pytest.approx(xi.det(), abs=1e-6 * max(1.0, xi.frobenius() ** 2))


@given(mats)
def test_rho0_between_operator_and_frobenius_bounds(xi):
    r = rho0(xi)
    assert r >= norm_inf(xi) - 1e-12
    assert r <= math.sqrt(2.0) * xi.frobenius() + 1e-12


def test_eig_array_kernel_matches_scalar():
    rng = np.random.default_rng(3)
    a11, a12, a22 = rng.normal(size=(3, 100))
    t1, t2 = eig_sym2_arr(a11, a12, a22)
    for k in range(100):
        s1, s2 = eig_sym2(SymMat2(a11[k], a12[k], a22[k]))
        assert t1[k] == pytest.approx(s1)
        assert t2[k] == pytest.approx(s2)


def test_normal_is_unit_and_downward():
    n = normal(Tilt(3.0, -4.0))
    assert n.n1 ** 2 + n.n2 ** 2 + n.n3 ** 2 == pytest.approx(1.0)
    assert n.n3 < 0.0


def test_shape_operator_flat_metric():
    # at zero tilt the shape operator is the Hessian itself
    xi = SymMat2(1.0, 0.5, -2.0)
    s = shape_operator(Tilt(0.0, 0.0), xi)
    assert s.as_array() == pytest.approx(xi.as_array())


def test_shape_operator_axis_tilt():
    # v = (t, 0): S = diag((1+t^2)^{-3/2}, (1+t^2)^{-1/2}) xi for diagonal xi
    t = 0.8
    xi = SymMat2.diag(1.0, 1.0)
    s = shape_operator(Tilt(t, 0.0), xi)
    assert s.a11 == pytest.approx((1.0 + t * t) ** -1.5)
    assert s.a22 == pytest.approx((1.0 + t * t) ** -0.5)
    assert s.a12 == pytest.approx(0.0, abs=1e-15)


@given(tilts, mats)
@settings(max_examples=200)
def test_shape_operator_linear_in_hessian(v, xi):
    s1 = shape_operator(v, xi).as_array()
    s2 = shape_operator(v, 2.0 * xi).as_array()
    assert s2 == pytest.approx(2.0 * s1, abs=1e-8 * max(1.0, np.abs(s1).max()))


@given(tilts, mats)
@settings(max_examples=200)
def test_inverse_shape_operator_roundtrip(v, s):
    xi = inverse_shape_operator(v, s)
    back = shape_operator(v, xi).as_array()
    scale = max(1.0, s.frobenius())
    assert back == pytest.approx(s.as_array(), abs=1e-8 * scale)


def test_turning_angle_symmetric_kink():
    # slopes +-1 along one axis: normals at 90 degrees
    assert turning_angle(Tilt(0.0, 1.0), Tilt(0.0, -1.0)) == pytest.approx(math.pi / 2)


def test_turning_angle_zero_for_equal_tilts():
    assert turning_angle(Tilt(0.3, 0.4), Tilt(0.3, 0.4)) == pytest.approx(0.0, abs=3e-8)
