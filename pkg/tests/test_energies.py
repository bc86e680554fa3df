import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from willmore.energies import (
    JumpDatum,
    Penalty,
    envelope_1d,
    f1d_raw,
    f_raw,
    g_lambda,
    h_lambda,
    G_density,
    G_inf_density,
    jump_cost,
    polyconvex_H,
)
from willmore.geometry import SymMat2, Tilt, shape_operator

lams = st.floats(min_value=0.1, max_value=1000.0)
entries = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)
mats = st.builds(SymMat2, entries, entries, entries)
tilts = st.builds(Tilt, st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))


def test_penalty_rejects_nonpositive():
    with pytest.raises(ValueError):
        Penalty(0.0)
    with pytest.raises(ValueError):
        Penalty(-1.0)


def test_f_raw_vanishes_only_at_flat_points():
    p = Penalty(4.0)
    assert f_raw(p, Tilt(0.5, 0.0), SymMat2.zero()) == 0.0
    # any bending pays at least the penalty floor
    val = f_raw(p, Tilt(0.0, 0.0), SymMat2.diag(1e-6, 0.0))
    assert val > p.sqrt_lam


def test_known_values_lambda4():
    p = Penalty(4.0)
    v = Tilt(0.0, 0.0)
    # diag(1,1): rho0 = 2 = sqrt(lambda), both branches give 3
    assert h_lambda(p, v, SymMat2.diag(1.0, 1.0)) == pytest.approx(3.0)
    assert f_raw(p, v, SymMat2.diag(1.0, 1.0)) == pytest.approx(3.0)
    # diag(1,0): det 0, low branch 2 rho0 = 2
    assert h_lambda(p, v, SymMat2.diag(1.0, 0.0)) == pytest.approx(2.0)
    assert f_raw(p, v, SymMat2.diag(1.0, 0.0)) == pytest.approx(2.5)


def test_lambda9_diag11_target():
    assert h_lambda(Penalty(9.0), Tilt(0.0, 0.0),
                    SymMat2.diag(1.0, 1.0)) == pytest.approx(10.0 / 3.0)


@given(lams, tilts, mats)
@settings(max_examples=500)
def test_envelope_sandwich(lam, v, xi):
    p = Penalty(lam)
    hl = h_lambda(p, v, xi)
    assert hl <= f_raw(p, v, xi) + 1e-12 * max(1.0, hl)
    assert hl >= G_inf_density(v, xi) - 1e-10 * max(1.0, hl)


@given(lams, mats)
@settings(max_examples=500)
def test_scaling_identity(lam, xi):
    p = Penalty(lam)
    lhs = g_lambda(p, xi)
    scaled = SymMat2(xi.a11 / p.sqrt_lam, xi.a12 / p.sqrt_lam, xi.a22 / p.sqrt_lam)
    rhs = p.sqrt_lam * g_lambda(Penalty(1.0), scaled)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_branch_continuity_on_the_interface():
    rng = np.random.default_rng(11)
    p = Penalty(7.0)
    for _ in range(200):
        xi = SymMat2(*rng.normal(size=3))
        t1, t2 = np.abs(np.linalg.eigvalsh(xi.as_array()))
        xi = (p.sqrt_lam / (t1 + t2)) * xi  # rho0 = sqrt(lambda) exactly
        low = 2.0 * (p.sqrt_lam - abs(xi.det()) / p.sqrt_lam)
        high = p.sqrt_lam + xi.frobenius() ** 2 / p.lam ** 0.5
        assert low == pytest.approx(high, abs=1e-10 * p.sqrt_lam)


def test_G_between_operator_norm_bounds():
    rng = np.random.default_rng(5)
    for _ in range(200):
        v = Tilt(*rng.normal(size=2))
        xi = SymMat2(*rng.normal(size=3))
        g = G_density(v, xi)
        gi = G_inf_density(v, xi)
        assert gi - 1e-12 <= g <= 2.0 * gi + 1e-12


def test_jump_datum_validation():
    with pytest.raises(ValueError, match="unit vector"):
        JumpDatum(a=Tilt(0.0, 1.0), b=Tilt(0.0, -1.0), nu=(0.0, 2.0))
    with pytest.raises(ValueError, match="ill-posed"):
        JumpDatum(a=Tilt(1.0, 1.0), b=Tilt(0.0, 0.0), nu=(0.0, 1.0))


def test_jump_cost_symmetric_kink_is_pi():
    j = JumpDatum(a=Tilt(0.0, 1.0), b=Tilt(0.0, -1.0), nu=(0.0, 1.0))
    assert jump_cost(j) == pytest.approx(math.pi)


def test_jump_cost_tilted_case():
    j = JumpDatum(a=Tilt(1.0, 1.0), b=Tilt(1.0, 0.0), nu=(0.0, 1.0))
    expected = 2.0 * math.sqrt(2.0) * math.acos(2.0 / math.sqrt(6.0))
    assert jump_cost(j) == pytest.approx(expected)
    assert expected == pytest.approx(1.7408, abs=2e-4)


def test_envelope_1d_shapes():
    p = Penalty(4.0)
    assert envelope_1d(p, 0.0) == 0.0
    assert envelope_1d(p, 1.0) == pytest.approx(4.0)  # 2 sqrt(4) * 1
    assert envelope_1d(p, 3.0) == pytest.approx(13.0)  # past the kink: 4 + 9
    assert f1d_raw(p, 1.0) == pytest.approx(5.0)
    assert envelope_1d(p, 1.0) <= f1d_raw(p, 1.0)


@given(st.floats(-10.0, 10.0), lams)
def test_envelope_1d_below_raw_and_even(kappa, lam):
    p = Penalty(lam)
    assert envelope_1d(p, kappa) <= f1d_raw(p, kappa) + 1e-12
    assert envelope_1d(p, kappa) == pytest.approx(envelope_1d(p, -kappa))


def test_polyconvex_H_matches_g1_on_diagonal():
    rng = np.random.default_rng(23)
    one = Penalty(1.0)
    for _ in range(300):
        v = Tilt(*rng.normal(size=2))
        xi = SymMat2(*rng.normal(size=3))
        s = shape_operator(v, xi)
        lhs = polyconvex_H(v, xi, xi.det())
        assert lhs == pytest.approx(g_lambda(one, s), abs=1e-10 * max(1.0, lhs))


def test_polyconvex_H_midpoint_convex_in_lifted_variables():
    # H is convex jointly in (xi, A); check midpoints along random segments
    rng = np.random.default_rng(29)
    for _ in range(300):
        v = Tilt(*rng.normal(size=2))
        xi0, xi1 = (SymMat2(*rng.normal(size=3)) for _ in range(2))
        a0, a1 = rng.normal(size=2)
        mid = polyconvex_H(v, 0.5 * (xi0 + xi1), 0.5 * (a0 + a1))
        avg = 0.5 * (polyconvex_H(v, xi0, a0) + polyconvex_H(v, xi1, a1))
        assert mid <= avg + 1e-10 * max(1.0, abs(avg))
