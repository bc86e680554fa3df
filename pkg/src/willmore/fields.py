"""Discrete carriers of graph functions.

Two representations are provided:

* :class:`GridField` — a scalar field sampled on a uniform rectangular grid,
  with second-order finite-difference gradient/Hessian and midpoint-rule
  energy quadrature for the raw, envelope, and limit bulk densities.

* :class:`GraphScene` — a piecewise-polynomial graph over a partition of a
  rectangle into convex polygonal cells (per-cell total degree <= 3), with
  polygonal jump segments across which the gradient may jump in the normal
  direction.  The limit functional (bulk + jump line energy) is evaluated by
  Gauss quadrature; the Cantor part has no discrete carrier and is always 0.

Scenes can be serialized to/from a strict JSON document; unknown keys are
rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .energies import (
    Penalty,
    G_density_arr,
    f_raw_arr,
    h_lambda_arr,
)
from .geometry import turning_angle_arr

__all__ = [
    "GridField",
    "PolyCell",
    "JumpSegment",
    "GraphScene",
    "EnergyBreakdown",
    "SceneDiagnostics",
    "SceneValidationError",
    "fd_gradient",
    "fd_hessian",
    "denoised_hessian",
    "energy_F_lambda",
    "energy_h_lambda",
    "energy_G",
    "limit_energy",
    "validate_scene",
    "rasterize",
    "load_scene",
    "scene_from_dict",
    "scene_to_dict",
]

_COEFF_KEYS = ["c00", "c10", "c01", "c20", "c11", "c02", "c30", "c21", "c12", "c03"]
_GEOM_TOL = 1e-9


def pairwise_sum(values: np.ndarray) -> float:
    """Deterministic pairwise reduction of a row-major flattening."""
    a = np.ravel(np.asarray(values, dtype=float), order="C").copy()
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 0.0)
        a = a[0::2] + a[1::2]
    return float(a[0]) if a.size else 0.0


# ---------------------------------------------------------------------------
# grid fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridField:
    """Scalar samples u[i, j] at (x0 + i h, y0 + j h); nx, ny >= 5."""

    origin: tuple[float, float]
    h: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[0] < 5 or vals.shape[1] < 5:
            raise ValueError(f"grid must be at least 5x5, got shape {vals.shape}")
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.origin[0] + self.h * np.arange(self.nx)
        y = self.origin[1] + self.h * np.arange(self.ny)
        return x, y


def fd_gradient(f: GridField) -> tuple[np.ndarray, np.ndarray]:
    """Second-order finite-difference gradient (central interior, one-sided edges)."""
    gx, gy = np.gradient(f.values, f.h, edge_order=2)
    return gx, gy


def _second_diff(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Compact second derivative: 3-point central interior, one-sided 4-point edges.

    Exact on quadratics everywhere, including the boundary rows; the compact
    stencil keeps sharp curvature transitions confined to one cell instead of
    the two-cell smearing of a composed first-difference pair.
    """
    u = np.moveaxis(u, axis, 0)
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h ** 2
    out[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h ** 2
    out[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h ** 2
    return np.moveaxis(out, 0, axis)


def fd_hessian(f: GridField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Finite-difference Hessian entries (u_xx, u_xy, u_yy), mixed part symmetrized."""
    gx, gy = fd_gradient(f)
    hxx = _second_diff(f.values, f.h, 0)
    hyy = _second_diff(f.values, f.h, 1)
    _, hxy = np.gradient(gx, f.h, edge_order=2)
    hyx, _ = np.gradient(gy, f.h, edge_order=2)
    return hxx, 0.5 * (hxy + hyx), hyy


def _grid_energy(f: GridField, density: np.ndarray) -> float:
    return pairwise_sum(density) * f.h * f.h


# Relative floor under which a finite-difference Hessian counts as exactly
# zero.  Differencing a flat region of a large field leaves rounding residue
# of order eps / h^2 rather than exact zeros, and the raw density is
# discontinuous at zero curvature, so residue must not trigger the penalty.
_HESSIAN_NOISE_REL = 1e-7


def denoised_hessian(f: GridField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """fd_hessian with entries snapped to zero below the rounding-noise floor."""
    hxx, hxy, hyy = fd_hessian(f)
    mag = np.maximum(np.abs(hxx), np.maximum(np.abs(hxy), np.abs(hyy)))
    flat = mag < _HESSIAN_NOISE_REL * max(1.0, float(mag.max()))
    return (np.where(flat, 0.0, hxx), np.where(flat, 0.0, hxy),
            np.where(flat, 0.0, hyy))


def energy_F_lambda(f: GridField, p: Penalty) -> float:
    """Midpoint-rule integral of the raw density over the grid."""
    gx, gy = fd_gradient(f)
    hxx, hxy, hyy = denoised_hessian(f)
    return _grid_energy(f, f_raw_arr(p.lam, gx, gy, hxx, hxy, hyy))


def energy_h_lambda(f: GridField, p: Penalty) -> float:
    """Midpoint-rule integral of the closed-form envelope density."""
    gx, gy = fd_gradient(f)
    hxx, hxy, hyy = fd_hessian(f)
    return _grid_energy(f, h_lambda_arr(p.lam, gx, gy, hxx, hxy, hyy))


def energy_G(f: GridField) -> float:
    """Midpoint-rule integral of the limit bulk density 2 rho0(S) sqrt(1+|v|^2)."""
    gx, gy = fd_gradient(f)
    hxx, hxy, hyy = fd_hessian(f)
    return _grid_energy(f, G_density_arr(gx, gy, hxx, hxy, hyy))


# ---------------------------------------------------------------------------
# polynomial cells and scenes
# ---------------------------------------------------------------------------

def _coeff_matrix(coeffs: dict[str, float]) -> np.ndarray:
    c = np.zeros((4, 4))
    for key, val in coeffs.items():
        if key not in _COEFF_KEYS:
            raise SceneValidationError(f"unknown coefficient key {key!r}")
        i, j = int(key[1]), int(key[2])
        c[i, j] = float(val)
    return c


def _poly_dx(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[:-1, :] = c[1:, :] * np.arange(1, c.shape[0])[:, None]
    return out


def _poly_dy(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[:, :-1] = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
    return out


@dataclass(frozen=True)
class PolyCell:
    """Convex polygonal cell with a total-degree-<=3 polynomial height function."""

    polygon: np.ndarray  # (k, 2) vertices, stored counterclockwise
    coeffs: np.ndarray   # (4, 4), coeffs[i, j] multiplies x^i y^j

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=float)
        if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] != 2:
            raise SceneValidationError("cell polygon needs at least 3 planar vertices")
        if _signed_area(poly) < 0:
            poly = poly[::-1]
        object.__setattr__(self, "polygon", poly)
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (4, 4):
            raise SceneValidationError("coefficient matrix must be 4x4")
        for i in range(4):
            for j in range(4):
                if i + j > 3 and c[i, j] != 0.0:
                    raise SceneValidationError(
                        f"cell polynomial exceeds total degree 3 (coefficient x^{i} y^{j})"
                    )
        object.__setattr__(self, "coeffs", c)

    def u(self, x, y):
        return np.polynomial.polynomial.polyval2d(x, y, self.coeffs)

    def grad(self, x, y):
        pv = np.polynomial.polynomial.polyval2d
        return pv(x, y, _poly_dx(self.coeffs)), pv(x, y, _poly_dy(self.coeffs))

    def hess(self, x, y):
        pv = np.polynomial.polynomial.polyval2d
        cx, cy = _poly_dx(self.coeffs), _poly_dy(self.coeffs)
        return pv(x, y, _poly_dx(cx)), pv(x, y, _poly_dy(cx)), pv(x, y, _poly_dy(cy))

    def area(self) -> float:
        return _signed_area(self.polygon)

    def contains(self, x, y, tol: float = _GEOM_TOL):
        """Vectorized point-in-convex-polygon test (boundary counts as inside)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
        poly = self.polygon
        for k in range(len(poly)):
            p, q = poly[k], poly[(k + 1) % len(poly)]
            cross = (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])
            inside &= cross >= -tol
        return inside


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class JumpSegment:
    """Straight jump segment from p0 to p1 with unit normal nu."""

    p0: tuple[float, float]
    p1: tuple[float, float]
    nu: tuple[float, float]

    def __post_init__(self):
        if abs(math.hypot(*self.nu) - 1.0) > 1e-12:
            raise SceneValidationError(f"jump normal must be a unit vector, got {self.nu}")
        if math.dist(self.p0, self.p1) <= 0.0:
            raise SceneValidationError("jump segment has zero length")

    def length(self) -> float:
        return math.dist(self.p0, self.p1)


class SceneValidationError(ValueError):
    """Raised when a scene document or geometry violates its invariants."""


@dataclass(frozen=True)
class GraphScene:
    """Piecewise-polynomial graph over a rectangle with polygonal jump segments."""

    domain: tuple[float, float, float, float]  # x0, y0, x1, y1
    cells: tuple[PolyCell, ...]
    jumps: tuple[JumpSegment, ...]

    def __post_init__(self):
        x0, y0, x1, y1 = self.domain
        if not (x1 > x0 and y1 > y0):
            raise SceneValidationError(f"degenerate domain rectangle {self.domain}")
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "jumps", tuple(self.jumps))
        if not self.cells:
            raise SceneValidationError("scene has no cells")

    def diameter(self) -> float:
        x0, y0, x1, y1 = self.domain
        return math.hypot(x1 - x0, y1 - y0)

    def find_cell(self, x: float, y: float) -> PolyCell | None:
        for cell in self.cells:
            if bool(cell.contains(x, y)):
                return cell
        return None


@dataclass(frozen=True)
class EnergyBreakdown:
    """Bulk + jump + Cantor decomposition of the limit functional's value."""

    bulk: float
    jump: float
    cantor: float

    @property
    def total(self) -> float:
        return self.bulk + self.jump + self.cantor


@dataclass
class SceneDiagnostics:
    """Validation report: one entry per violated invariant, empty when valid."""

    issues: list[tuple[str, str, float]] = field(default_factory=list)
    area_defect: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, kind: str, where: str, magnitude: float):
        self.issues.append((kind, where, magnitude))

    def summary(self) -> str:
        if self.ok:
            return "scene valid"
        lines = [f"{kind} at {where}: defect {mag:.3e}" for kind, where, mag in self.issues]
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------

_GAUSS_N = 8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GAUSS_N)
_U01 = 0.5 * (_GL_NODES + 1.0)   # nodes on [0, 1]
_W01 = 0.5 * _GL_WEIGHTS


def _triangles(poly: np.ndarray):
    for k in range(1, len(poly) - 1):
        yield poly[0], poly[k], poly[k + 1]


def _cell_bulk_energy(cell: PolyCell) -> float:
    """Gauss quadrature of 2 rho0(S) sqrt(1+|grad u|^2) over the cell."""
    total = 0.0
    a = _U01[:, None]
    b = _U01[None, :]
    w = (_W01[:, None] * _W01[None, :])
    for p0, p1, p2 in _triangles(cell.polygon):
        # collapsed-square map onto the triangle; Jacobian = a * 2 * area
        px = (1.0 - a) * p0[0] + a * ((1.0 - b) * p1[0] + b * p2[0])
        py = (1.0 - a) * p0[1] + a * ((1.0 - b) * p1[1] + b * p2[1])
        two_area = abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]))
        gx, gy = cell.grad(px, py)
        hxx, hxy, hyy = cell.hess(px, py)
        dens = G_density_arr(gx, gy, hxx, hxy, hyy)
        total += pairwise_sum(dens * w * a * two_area)
    return total


def _jump_side_cells(s: GraphScene, seg: JumpSegment) -> tuple[PolyCell, PolyCell]:
    """Cells on the plus (along nu) and minus sides of the segment midpoint."""
    mx = 0.5 * (seg.p0[0] + seg.p1[0])
    my = 0.5 * (seg.p0[1] + seg.p1[1])
    delta = 1e-7 * s.diameter()
    plus = s.find_cell(mx + delta * seg.nu[0], my + delta * seg.nu[1])
    minus = s.find_cell(mx - delta * seg.nu[0], my - delta * seg.nu[1])
    if plus is None or minus is None:
        raise SceneValidationError(
            f"jump segment {seg.p0}->{seg.p1} is not an interface between two cells"
        )
    return plus, minus


def _segment_jump_energy(s: GraphScene, seg: JumpSegment) -> float:
    """Gauss quadrature of 2 arccos(N+ . N-) sqrt(1 + (nu_perp . grad u)^2) dH^1."""
    plus, minus = _jump_side_cells(s, seg)
    t = _U01
    px = seg.p0[0] + t * (seg.p1[0] - seg.p0[0])
    py = seg.p0[1] + t * (seg.p1[1] - seg.p0[1])
    gpx, gpy = plus.grad(px, py)
    gmx, gmy = minus.grad(px, py)
    angle = turning_angle_arr(gpx, gpy, gmx, gmy)
    perp = (-seg.nu[1], seg.nu[0])
    tang = gpx * perp[0] + gpy * perp[1]
    dens = 2.0 * angle * np.sqrt(1.0 + tang ** 2)
    return pairwise_sum(dens * _W01) * seg.length()


def limit_energy(s: GraphScene, validate: bool = True) -> EnergyBreakdown:
    """Bulk + jump value of the limit functional on a scene (Cantor part 0)."""
    if validate:
        diag = validate_scene(s)
        if not diag.ok:
            raise SceneValidationError(diag.summary())
    bulk = 0.0
    for cell in s.cells:
        bulk += _cell_bulk_energy(cell)
    jump = 0.0
    for seg in s.jumps:
        jump += _segment_jump_energy(s, seg)
    return EnergyBreakdown(bulk=bulk, jump=jump, cantor=0.0)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _edge_overlap(p0, p1, q0, q1, tol):
    """Overlapping sub-segment of collinear edges [p0,p1], [q0,q1], or None."""
    d = p1 - p0
    length = np.hypot(*d)
    if length < tol:
        return None
    u = d / length
    # both q endpoints must lie on the p-line
    for q in (q0, q1):
        off = q - p0
        if abs(off[0] * u[1] - off[1] * u[0]) > tol:
            return None
    t0, t1 = sorted((float(np.dot(q0 - p0, u)), float(np.dot(q1 - p0, u))))
    lo, hi = max(0.0, t0), min(length, t1)
    if hi - lo < 10 * tol:
        return None
    return p0 + lo * u, p0 + hi * u


def _on_jump(seg_pt0, seg_pt1, jumps, tol):
    """The declared jump segment containing both endpoints, if any."""
    for j in jumps:
        p0 = np.asarray(j.p0)
        d = np.asarray(j.p1) - p0
        length = np.hypot(*d)
        u = d / length
        ok = True
        for pt in (seg_pt0, seg_pt1):
            off = pt - p0
            t = float(np.dot(off, u))
            if abs(off[0] * u[1] - off[1] * u[0]) > tol or t < -tol or t > length + tol:
                ok = False
                break
        if ok:
            return j
    return None


def validate_scene(s: GraphScene) -> SceneDiagnostics:
    """Check tiling, height continuity, and the gradient-jump structure."""
    diag = SceneDiagnostics()
    x0, y0, x1, y1 = s.domain
    tol = _GEOM_TOL * max(1.0, s.diameter())

    cell_area = sum(c.area() for c in s.cells)
    diag.area_defect = abs(cell_area - (x1 - x0) * (y1 - y0))
    if diag.area_defect > 1e-12 * max(1.0, (x1 - x0) * (y1 - y0)):
        diag.add("tiling", "domain", diag.area_defect)

    t = _U01
    for i, ci in enumerate(s.cells):
        for j in range(i + 1, len(s.cells)):
            cj = s.cells[j]
            for a in range(len(ci.polygon)):
                pa0 = ci.polygon[a]
                pa1 = ci.polygon[(a + 1) % len(ci.polygon)]
                for b in range(len(cj.polygon)):
                    pb0 = cj.polygon[b]
                    pb1 = cj.polygon[(b + 1) % len(cj.polygon)]
                    ov = _edge_overlap(pa0, pa1, np.asarray(pb0), np.asarray(pb1), tol)
                    if ov is None:
                        continue
                    e0, e1 = ov
                    px = e0[0] + t * (e1[0] - e0[0])
                    py = e0[1] + t * (e1[1] - e0[1])
                    where = f"edge {tuple(np.round(e0, 6))}-{tuple(np.round(e1, 6))}"

                    du = np.max(np.abs(ci.u(px, py) - cj.u(px, py)))
                    if du > 1e-9:
                        diag.add("height continuity", where, float(du))

                    gix, giy = ci.grad(px, py)
                    gjx, gjy = cj.grad(px, py)
                    jmp = _on_jump(e0, e1, s.jumps, tol)
                    if jmp is None:
                        dg = np.max(np.hypot(gix - gjx, giy - gjy))
                        if dg > 1e-9:
                            diag.add("gradient continuity", where, float(dg))
                    else:
                        perp = (-jmp.nu[1], jmp.nu[0])
                        tangential = (gix - gjx) * perp[0] + (giy - gjy) * perp[1]
                        dt_ = np.max(np.abs(tangential))
                        if dt_ > 1e-9:
                            diag.add("gradient jump direction", where, float(dt_))
    return diag


# ---------------------------------------------------------------------------
# rasterization
# ---------------------------------------------------------------------------

def rasterize(s: GraphScene, nx: int, ny: int) -> GridField:
    """Sample the scene's height function on an nx-by-ny grid over its domain."""
    x0, y0, x1, y1 = s.domain
    hx = (x1 - x0) / (nx - 1)
    hy = (y1 - y0) / (ny - 1)
    if abs(hx - hy) > 1e-12 * max(hx, hy):
        raise SceneValidationError(
            f"grid spacing must match in both axes (got {hx} vs {hy}); "
            "choose nx, ny proportional to the domain aspect"
        )
    x = x0 + hx * np.arange(nx)
    y = y0 + hy * np.arange(ny)
    gx, gy = np.meshgrid(x, y, indexing="ij")
    values = np.full((nx, ny), np.nan)
    unset = np.ones((nx, ny), dtype=bool)
    for cell in s.cells:
        mask = unset & cell.contains(gx, gy)
        if np.any(mask):
            values[mask] = cell.u(gx[mask], gy[mask])
            unset &= ~mask
    if np.any(unset):
        k = int(np.argmax(unset))
        raise SceneValidationError(
            f"grid point {(float(gx.flat[k]), float(gy.flat[k]))} lies in no cell"
        )
    return GridField(origin=(x0, y0), h=hx, values=values)


# ---------------------------------------------------------------------------
# strict JSON (de)serialization
# ---------------------------------------------------------------------------

def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str):
    for key in obj:
        if key not in allowed:
            raise SceneValidationError(f"unknown key {key!r} in {where}")
    for key in required:
        if key not in obj:
            raise SceneValidationError(f"missing key {key!r} in {where}")


def scene_from_dict(doc: dict) -> GraphScene:
    if not isinstance(doc, dict):
        raise SceneValidationError("scene document must be a JSON object")
    _require_keys(doc, {"domain", "cells", "jumps"}, {"domain", "cells"}, "scene")
    dom = doc["domain"]
    _require_keys(dom, {"x0", "y0", "x1", "y1"}, {"x0", "y0", "x1", "y1"}, "domain")
    cells = []
    for k, cd in enumerate(doc["cells"]):
        _require_keys(cd, {"polygon", "coeffs"}, {"polygon", "coeffs"}, f"cells[{k}]")
        cells.append(PolyCell(polygon=np.asarray(cd["polygon"], dtype=float),
                              coeffs=_coeff_matrix(cd["coeffs"])))
    jumps = []
    for k, jd in enumerate(doc.get("jumps", [])):
        _require_keys(jd, {"p0", "p1", "nu"}, {"p0", "p1", "nu"}, f"jumps[{k}]")
        jumps.append(JumpSegment(p0=tuple(map(float, jd["p0"])),
                                 p1=tuple(map(float, jd["p1"])),
                                 nu=tuple(map(float, jd["nu"]))))
    return GraphScene(
        domain=(float(dom["x0"]), float(dom["y0"]), float(dom["x1"]), float(dom["y1"])),
        cells=tuple(cells),
        jumps=tuple(jumps),
    )


def scene_to_dict(s: GraphScene) -> dict:
    cells = []
    for cell in s.cells:
        coeffs = {}
        for key in _COEFF_KEYS:
            i, j = int(key[1]), int(key[2])
            if cell.coeffs[i, j] != 0.0:
                coeffs[key] = cell.coeffs[i, j]
        cells.append({"polygon": cell.polygon.tolist(), "coeffs": coeffs})
    return {
        "domain": dict(zip(("x0", "y0", "x1", "y1"), s.domain)),
        "cells": cells,
        "jumps": [{"p0": list(j.p0), "p1": list(j.p1), "nu": list(j.nu)} for j in s.jumps],
    }


def load_scene(path) -> GraphScene:
    """Parse and validate a scene JSON file."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneValidationError(f"malformed scene file {path}: {exc}") from exc
    return scene_from_dict(doc)
