"""Exact 2x2 symmetric algebra and the differential geometry of graph surfaces.

Everything here is closed-form: eigenvalues of symmetric 2x2 matrices, the
downward unit normal of a graph, the induced metric, and the shape operator

    S(v, xi) = g(v)^{-1/2} II(v, xi) g(v)^{-1/2},

where ``g(v) = Id + v (x) v`` is the first fundamental form of the graph with
gradient ``v`` and ``II(v, xi) = xi / sqrt(1 + |v|^2)`` its second fundamental
form for Hessian ``xi``.

Scalar entry points take the small value types below; the ``*_arr`` kernels
operate on numpy arrays of matrix/vector components so that grid-sized fields
can be processed without Python-level loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SymMat2",
    "Tilt",
    "UnitNormal3",
    "eig_sym2",
    "rho0",
    "norm_inf",
    "normal",
    "shape_operator",
    "inverse_shape_operator",
    "turning_angle",
]

# Below this tilt magnitude the eigenframe {v/|v|, v_perp/|v|} is numerically
# meaningless and g(v) is treated as the identity.
_TILT_EPS = 1e-14


@dataclass(frozen=True)
class SymMat2:
    """Symmetric 2x2 matrix stored by its three independent entries."""

    a11: float
    a12: float
    a22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    @staticmethod
    def from_array(m: np.ndarray) -> "SymMat2":
        return SymMat2(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))

    @staticmethod
    def zero() -> "SymMat2":
        return SymMat2(0.0, 0.0, 0.0)

    @staticmethod
    def diag(d1: float, d2: float) -> "SymMat2":
        return SymMat2(float(d1), 0.0, float(d2))

    def frobenius(self) -> float:
        return math.sqrt(self.a11 ** 2 + 2.0 * self.a12 ** 2 + self.a22 ** 2)

    def trace(self) -> float:
        return self.a11 + self.a22

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 ** 2

    def __add__(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(self.a11 + other.a11, self.a12 + other.a12, self.a22 + other.a22)

    def __sub__(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(self.a11 - other.a11, self.a12 - other.a12, self.a22 - other.a22)

    def __mul__(self, t: float) -> "SymMat2":
        return SymMat2(self.a11 * t, self.a12 * t, self.a22 * t)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Tilt:
    """Gradient (slope) vector of a graph."""

    v1: float
    v2: float

    def norm_sq(self) -> float:
        return self.v1 ** 2 + self.v2 ** 2

    def norm(self) -> float:
        return math.hypot(self.v1, self.v2)

    def perp(self) -> "Tilt":
        return Tilt(-self.v2, self.v1)


@dataclass(frozen=True)
class UnitNormal3:
    """Unit 3-vector; graph normals produced here always point downward (n3 < 0)."""

    n1: float
    n2: float
    n3: float

    def dot(self, other: "UnitNormal3") -> float:
        return self.n1 * other.n1 + self.n2 * other.n2 + self.n3 * other.n3


# ---------------------------------------------------------------------------
# array kernels
# ---------------------------------------------------------------------------

def eig_sym2_arr(a11, a12, a22):
    """Eigenvalues (tau1 >= tau2) of symmetric 2x2 matrices, componentwise."""
    a11 = np.asarray(a11, dtype=float)
    a12 = np.asarray(a12, dtype=float)
    a22 = np.asarray(a22, dtype=float)
    mean = 0.5 * (a11 + a22)
    rad = np.hypot(0.5 * (a11 - a22), a12)
    return mean + rad, mean - rad


def rho0_arr(a11, a12, a22):
    t1, t2 = eig_sym2_arr(a11, a12, a22)
    return np.abs(t1) + np.abs(t2)


def norm_inf_arr(a11, a12, a22):
    t1, t2 = eig_sym2_arr(a11, a12, a22)
    return np.maximum(np.abs(t1), np.abs(t2))


def frobenius_arr(a11, a12, a22):
    return np.sqrt(np.asarray(a11, dtype=float) ** 2
                   + 2.0 * np.asarray(a12, dtype=float) ** 2
                   + np.asarray(a22, dtype=float) ** 2)


def det_arr(a11, a12, a22):
    return np.asarray(a11, dtype=float) * a22 - np.asarray(a12, dtype=float) ** 2


def shape_operator_arr(v1, v2, x11, x12, x22):
    """Componentwise S(v, xi); returns the three entries of S.

    Uses the eigenframe {v/|v|, v_perp/|v|} of g(v) = Id + v (x) v, in which

        g^{-1/2} = (1+|v|^2)^{-1/2} vv^T/|v|^2 + v_perp v_perp^T / |v|^2,

    falling back to the identity metric where |v| is negligible.
    """
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    x11 = np.asarray(x11, dtype=float)
    x12 = np.asarray(x12, dtype=float)
    x22 = np.asarray(x22, dtype=float)

    s = v1 ** 2 + v2 ** 2
    tiny = s < _TILT_EPS ** 2
    s_safe = np.where(tiny, 1.0, s)

    # entries of P = g^{-1/2}
    c = 1.0 / np.sqrt(1.0 + s)
    p11 = (c * v1 ** 2 + v2 ** 2) / s_safe
    p22 = (c * v2 ** 2 + v1 ** 2) / s_safe
    p12 = (c - 1.0) * v1 * v2 / s_safe
    p11 = np.where(tiny, 1.0, p11)
    p22 = np.where(tiny, 1.0, p22)
    p12 = np.where(tiny, 0.0, p12)

    # II = xi / sqrt(1+|v|^2); then S = P II P
    w = c
    b11, b12, b22 = x11 * w, x12 * w, x22 * w

    # M = P B (general 2x2), then S = M P
    m11 = p11 * b11 + p12 * b12
    m12 = p11 * b12 + p12 * b22
    m21 = p12 * b11 + p22 * b12
    m22 = p12 * b12 + p22 * b22

    s11 = m11 * p11 + m12 * p12
    s12 = m11 * p12 + m12 * p22
    s22 = m21 * p12 + m22 * p22
    s12b = m21 * p11 + m22 * p12
    # symmetric up to rounding; average the two off-diagonal computations
    return s11, 0.5 * (s12 + s12b), s22


def normal_dot_arr(a1, a2, b1, b2):
    """N(a) . N(b) for tilt components, clamped to [-1, 1]."""
    a1 = np.asarray(a1, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    num = a1 * b1 + a2 * b2 + 1.0
    den = np.sqrt((1.0 + a1 ** 2 + np.asarray(a2, dtype=float) ** 2)
                  * (1.0 + b1 ** 2 + np.asarray(b2, dtype=float) ** 2))
    return np.clip(num / den, -1.0, 1.0)


def turning_angle_arr(a1, a2, b1, b2):
    return np.arccos(normal_dot_arr(a1, a2, b1, b2))


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------

def eig_sym2(xi: SymMat2) -> tuple[float, float]:
    """Eigenvalues of ``xi`` in decreasing order."""
    t1, t2 = eig_sym2_arr(xi.a11, xi.a12, xi.a22)
    return float(t1), float(t2)


def rho0(xi: SymMat2) -> float:
    """Sum of the absolute eigenvalues, |tau1| + |tau2|."""
    t1, t2 = eig_sym2(xi)
    return abs(t1) + abs(t2)


def norm_inf(xi: SymMat2) -> float:
    """Operator norm max(|tau1|, |tau2|)."""
    t1, t2 = eig_sym2(xi)
    return max(abs(t1), abs(t2))


def normal(v: Tilt) -> UnitNormal3:
    """Downward unit normal (v, -1)/sqrt(1+|v|^2) of the graph with gradient v."""
    c = 1.0 / math.sqrt(1.0 + v.norm_sq())
    return UnitNormal3(v.v1 * c, v.v2 * c, -c)


def shape_operator(v: Tilt, xi: SymMat2) -> SymMat2:
    s11, s12, s22 = shape_operator_arr(v.v1, v.v2, xi.a11, xi.a12, xi.a22)
    return SymMat2(float(s11), float(s12), float(s22))


def inverse_shape_operator(v: Tilt, s: SymMat2) -> SymMat2:
    """The Hessian xi with shape_operator(v, xi) == s.

    xi = sqrt(1+|v|^2) g^{1/2} s g^{1/2}; the map xi -> S(v, xi) is linear and
    invertible for every fixed v.
    """
    sq = v.norm_sq()
    if sq < _TILT_EPS ** 2:
        return s
    root = math.sqrt(1.0 + sq)
    # Q = g^{1/2} in the eigenframe of g(v)
    q11 = (root * v.v1 ** 2 + v.v2 ** 2) / sq
    q22 = (root * v.v2 ** 2 + v.v1 ** 2) / sq
    q12 = (root - 1.0) * v.v1 * v.v2 / sq
    q = np.array([[q11, q12], [q12, q22]])
    m = root * (q @ s.as_array() @ q)
    return SymMat2.from_array(m)


def turning_angle(a: Tilt, b: Tilt) -> float:
    """arccos of the dot product of the two graph normals, in [0, pi]."""
    return float(turning_angle_arr(a.v1, a.v2, b.v1, b.v2))
