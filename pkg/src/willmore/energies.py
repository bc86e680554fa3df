"""Pointwise energy densities for the penalized Willmore functional of graphs.

The raw penalized density of a graph with gradient ``v`` and Hessian ``xi`` is

    f_raw(v, xi) = lambda^{-1/2} (|S(v,xi)|^2 + lambda) sqrt(1+|v|^2),

vanishing exactly where the shape operator ``S`` vanishes.  Its 2-quasiconvex
envelope has the closed form

    h_lambda(v, xi) = g_lambda(S(v, xi)) sqrt(1+|v|^2),

with the two-branch matrix function ``g_lambda`` below.  The pointwise limit
of ``h_lambda`` as the penalization grows is ``G = 2 rho0(S) sqrt(1+|v|^2)``;
``G_inf`` replaces the eigenvalue sum by the operator norm.  The module also
provides the transition cost of a gradient jump, the one-dimensional analogue
of the envelope, and the convex function certifying polyconvexity of ``g_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    SymMat2,
    Tilt,
    det_arr,
    frobenius_arr,
    norm_inf_arr,
    normal,
    rho0_arr,
    shape_operator_arr,
    turning_angle,
)

__all__ = [
    "Penalty",
    "JumpDatum",
    "f_raw",
    "g_lambda",
    "h_lambda",
    "G_density",
    "G_inf_density",
    "jump_cost",
    "f1d_raw",
    "envelope_1d",
    "polyconvex_H",
]

# Relative threshold under which S(v, xi) counts as exactly zero in f_raw;
# the raw density is discontinuous at S = 0 and needs a hard test.
_S_ZERO_REL = 1e-14

# Tolerance on the tangential compatibility a.nu_perp = b.nu_perp of a jump.
_JUMP_TANGENT_TOL = 1e-9


@dataclass(frozen=True)
class Penalty:
    """Penalization strength lambda > 0 with its square root cached."""

    lam: float
    sqrt_lam: float = field(init=False)

    def __post_init__(self):
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"penalization strength must be positive, got {self.lam}")
        object.__setattr__(self, "sqrt_lam", math.sqrt(self.lam))


@dataclass(frozen=True)
class JumpDatum:
    """One-sided gradients (a, b) across a jump line with unit normal nu.

    The gradient of a continuous function can only jump in the direction of
    the jump normal, so ``a . nu_perp == b . nu_perp`` is required.
    """

    a: Tilt
    b: Tilt
    nu: tuple[float, float]

    def __post_init__(self):
        n1, n2 = self.nu
        if abs(math.hypot(n1, n2) - 1.0) > 1e-12:
            raise ValueError(f"jump normal must be a unit vector, got {self.nu}")
        if abs(self.tangential_mismatch()) > _JUMP_TANGENT_TOL:
            raise ValueError(
                "ill-posed jump datum: tangential gradient components differ "
                f"by {self.tangential_mismatch():.3e} (the jump of a gradient "
                "must be parallel to the jump normal)"
            )

    def tangential(self) -> float:
        n1, n2 = self.nu
        return self.a.v1 * (-n2) + self.a.v2 * n1

    def tangential_mismatch(self) -> float:
        n1, n2 = self.nu
        return (self.a.v1 - self.b.v1) * (-n2) + (self.a.v2 - self.b.v2) * n1


# ---------------------------------------------------------------------------
# array kernels (componentwise over fields)
# ---------------------------------------------------------------------------

def f_raw_arr(lam: float, v1, v2, x11, x12, x22):
    s11, s12, s22 = shape_operator_arr(v1, v2, x11, x12, x22)
    s_norm = frobenius_arr(s11, s12, s22)
    xi_norm = frobenius_arr(x11, x12, x22)
    area = np.sqrt(1.0 + np.asarray(v1, dtype=float) ** 2 + np.asarray(v2, dtype=float) ** 2)
    val = (s_norm ** 2 + lam) / math.sqrt(lam) * area
    flat = s_norm <= _S_ZERO_REL * np.maximum(1.0, xi_norm)
    return np.where(flat, 0.0, val)


def g_lambda_arr(lam: float, a11, a12, a22):
    rho = rho0_arr(a11, a12, a22)
    det = det_arr(a11, a12, a22)
    frob_sq = frobenius_arr(a11, a12, a22) ** 2
    root = math.sqrt(lam)
    low = 2.0 * (rho - np.abs(det) / root)
    high = root + frob_sq / root
    return np.where(rho <= root, low, high)


def h_lambda_arr(lam: float, v1, v2, x11, x12, x22):
    s11, s12, s22 = shape_operator_arr(v1, v2, x11, x12, x22)
    area = np.sqrt(1.0 + np.asarray(v1, dtype=float) ** 2 + np.asarray(v2, dtype=float) ** 2)
    return g_lambda_arr(lam, s11, s12, s22) * area


def G_density_arr(v1, v2, x11, x12, x22):
    s11, s12, s22 = shape_operator_arr(v1, v2, x11, x12, x22)
    area = np.sqrt(1.0 + np.asarray(v1, dtype=float) ** 2 + np.asarray(v2, dtype=float) ** 2)
    return 2.0 * rho0_arr(s11, s12, s22) * area


def G_inf_density_arr(v1, v2, x11, x12, x22):
    s11, s12, s22 = shape_operator_arr(v1, v2, x11, x12, x22)
    area = np.sqrt(1.0 + np.asarray(v1, dtype=float) ** 2 + np.asarray(v2, dtype=float) ** 2)
    return 2.0 * norm_inf_arr(s11, s12, s22) * area


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------

def f_raw(p: Penalty, v: Tilt, xi: SymMat2) -> float:
    """Raw penalized bending density; 0 exactly where the shape operator vanishes."""
    return float(f_raw_arr(p.lam, v.v1, v.v2, xi.a11, xi.a12, xi.a22))


def g_lambda(p: Penalty, xi: SymMat2) -> float:
    """Two-branch envelope kernel applied directly to a (shape-operator) matrix.

    Equals 2(rho0(xi) - |det xi| / sqrt(lambda)) while rho0(xi) <= sqrt(lambda)
    and sqrt(lambda) + |xi|^2 / sqrt(lambda) beyond; the branches agree on the
    boundary.
    """
    return float(g_lambda_arr(p.lam, xi.a11, xi.a12, xi.a22))


def h_lambda(p: Penalty, v: Tilt, xi: SymMat2) -> float:
    """Closed-form 2-quasiconvex envelope of f_raw at (v, xi)."""
    return float(h_lambda_arr(p.lam, v.v1, v.v2, xi.a11, xi.a12, xi.a22))


def G_density(v: Tilt, xi: SymMat2) -> float:
    """Bulk density of the limit functional, 2 rho0(S) sqrt(1+|v|^2)."""
    return float(G_density_arr(v.v1, v.v2, xi.a11, xi.a12, xi.a22))


def G_inf_density(v: Tilt, xi: SymMat2) -> float:
    """Operator-norm variant 2 |S|_inf sqrt(1+|v|^2); G_inf <= G <= 2 G_inf."""
    return float(G_inf_density_arr(v.v1, v.v2, xi.a11, xi.a12, xi.a22))


def jump_cost(j: JumpDatum) -> float:
    """Line-energy density of a gradient jump.

    2 sqrt(1 + (a . nu_perp)^2) arccos(N(a) . N(b)): the turning angle of the
    surface normal weighted by the length element of the lifted jump curve.
    """
    t = j.tangential()
    return 2.0 * math.sqrt(1.0 + t * t) * turning_angle(j.a, j.b)


def f1d_raw(p: Penalty, kappa: float) -> float:
    """One-dimensional analogue of f_raw: 0 at zero curvature, else lambda + kappa^2."""
    if kappa == 0.0:
        return 0.0
    return p.lam + kappa * kappa


def envelope_1d(p: Penalty, kappa: float) -> float:
    """Convex lower semicontinuous envelope of f1d_raw.

    2 sqrt(lambda) |kappa| on |kappa| <= sqrt(lambda), the parabola beyond.
    """
    k = abs(kappa)
    if k <= p.sqrt_lam:
        return 2.0 * p.sqrt_lam * k
    return p.lam + k * k


def _theta(t: float) -> float:
    return 2.0 * t if t <= 1.0 else 1.0 + t * t


def polyconvex_H(v: Tilt, xi: SymMat2, A: float) -> float:
    """Convex function of (xi, det xi) whose diagonal value is g_1(S(v, xi)).

    H = max(H+, H-) with
    H+-(xi, A) = theta(sqrt(|S|^2 +- 2 det S)) -+ 2 A / (1+|v|^2)^2,
    theta(t) = 2t for t <= 1 and 1 + t^2 beyond.  The radicands are the
    perfect squares (tau1(S) +- tau2(S))^2; tiny negative rounding is clamped.
    """
    s11, s12, s22 = shape_operator_arr(v.v1, v.v2, xi.a11, xi.a12, xi.a22)
    frob_sq = float(frobenius_arr(s11, s12, s22)) ** 2
    det_s = float(det_arr(s11, s12, s22))
    weight = 2.0 * A / (1.0 + v.norm_sq()) ** 2
    vals = []
    for sign in (+1.0, -1.0):
        rad = frob_sq + sign * 2.0 * det_s
        if rad < -1e-12 * max(1.0, frob_sq):
            raise ArithmeticError(
                f"radicand |S|^2 {'+' if sign > 0 else '-'} 2 det S = {rad} is "
                "negative beyond rounding; it should be a perfect square"
            )
        vals.append(_theta(math.sqrt(max(rad, 0.0))) - sign * weight)
    return max(vals)
