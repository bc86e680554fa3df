"""Recovery sequences: fields whose penalized energies approach the limit value.

The upper-bound pipeline has two constructive stages:

1. *Mollification.*  The rasterized graph is extended beyond the domain by a
   gradient-continuous reflection and convolved with a fixed radial bump at
   scale ``epsilon``, chosen as the smallest ladder value keeping the Hessian
   operator norm below ``sqrt(lambda)/2``.

2. *Jump rounding.*  Across each gradient-jump segment the profile is
   replaced, in closed form, by a transition of two constant-curvature arcs
   whose shape-operator eigenvalues stay within a grid-cell-sized sweep of
   ``sqrt(lambda)`` (the sweep steers where each arc/plane junction falls
   inside a grid cell, which dominates the discretization cost).  At
   curvature exactly ``sqrt(lambda)`` the penalized line energy equals the
   jump cost ``2 sqrt(1+tau^2) arccos(N.N)`` exactly in the continuum, for
   every lambda; the sweep's continuum penalty is second order.

:func:`corrector_insertion` separately realizes the bulk-side bridge from
envelope-level to raw-level energy: a periodized, rescaled laminate
oscillation added to a quadratic potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .energies import Penalty, f_raw_arr
from .fields import (
    GraphScene,
    GridField,
    denoised_hessian,
    energy_F_lambda,
    fd_hessian,
    limit_energy,
    pairwise_sum,
    rasterize,
)
from .geometry import SymMat2, Tilt, norm_inf_arr
from .oracles import LaminateSpec, build_laminate, laminate_oscillation

__all__ = [
    "MollifierSpec",
    "RecoveryReport",
    "mollify",
    "choose_epsilon",
    "default_epsilon_ladder",
    "recovery_experiment",
    "corrector_insertion",
]


def _bump(r: np.ndarray) -> np.ndarray:
    """Radial bump exp(-1/(1-r^2)) inside the unit disc, 0 outside."""
    r = np.asarray(r, dtype=float)
    inside = r < 1.0
    rs = np.where(inside, r, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - rs ** 2)), 0.0)


@dataclass(frozen=True)
class MollifierSpec:
    """Smoothing scale epsilon with the fixed radial bump kernel.

    The kernel is supported in the disc of radius epsilon and discretely
    normalized to unit mass at whatever grid resolution it is sampled.
    """

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ValueError(f"mollifier scale must be positive, got {self.epsilon}")

    def sample(self, h: float) -> np.ndarray:
        """Discrete kernel on the grid of spacing h, sum exactly 1."""
        k = int(math.ceil(self.epsilon / h - 1e-12))
        offs = h * np.arange(-k, k + 1)
        r = np.hypot(offs[:, None], offs[None, :]) / self.epsilon
        kern = _bump(r)
        total = kern.sum()
        if total <= 0.0:
            raise ValueError("kernel under-resolved: no grid point inside the support")
        return kern / total


def _reflect_pad(values: np.ndarray, k: int) -> np.ndarray:
    """Extend by first-order (gradient-continuous) reflection on all sides.

    w(edge - t) = 2 w(edge) - w(edge + t): affine fields extend to affine
    fields, so the extension creates no curvature on the boundary; a plain
    even reflection would kink wherever the normal slope is nonzero and
    charge a spurious line energy along the boundary.
    """
    out = np.pad(values, k, mode="reflect", reflect_type="odd")
    return out


def mollify(f: GridField, m: MollifierSpec) -> GridField:
    """Convolve the field with the bump kernel at scale m.epsilon.

    The field is extended beyond the domain by gradient-continuous
    reflection, so constants and affine fields are preserved exactly.
    """
    if m.epsilon < 2.0 * f.h:
        raise ValueError(
            f"epsilon {m.epsilon} under-resolved: needs at least 2 grid spacings "
            f"({2 * f.h})"
        )
    kern = m.sample(f.h)
    k = kern.shape[0] // 2
    ext = _reflect_pad(f.values, k)
    smoothed = fftconvolve(ext, kern, mode="valid")
    return GridField(origin=f.origin, h=f.h, values=smoothed)


def default_epsilon_ladder(f: GridField) -> list[float]:
    """Dyadic ladder 1/2, 1/4, ... down to the resolution floor 2h."""
    ladder = []
    eps = 0.5
    while eps >= 2.0 * f.h:
        ladder.append(eps)
        eps *= 0.5
    if not ladder:
        raise ValueError("grid too coarse for any mollification scale")
    return ladder


def choose_epsilon(p: Penalty, f: GridField, ladder: list[float] | None = None) -> float:
    """Smallest ladder epsilon with max-node Hessian operator norm < sqrt(lambda)/2."""
    if ladder is None:
        ladder = default_epsilon_ladder(f)
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("epsilon ladder must be strictly descending")
    bound = 0.5 * p.sqrt_lam
    for eps in sorted(ladder):
        if eps < 2.0 * f.h:
            continue
        hxx, hxy, hyy = fd_hessian(mollify(f, MollifierSpec(eps)))
        if float(norm_inf_arr(hxx, hxy, hyy).max()) < bound:
            return eps
    raise ValueError(
        f"no admissible epsilon: every ladder scale leaves the Hessian norm "
        f">= sqrt(lambda)/2 = {bound}"
    )


# ---------------------------------------------------------------------------
# jump rounding
# ---------------------------------------------------------------------------

def _affine_coeffs(cell) -> bool:
    mask = np.ones((4, 4), dtype=bool)
    mask[0, 0] = mask[1, 0] = mask[0, 1] = False
    return bool(np.all(np.abs(cell.coeffs[mask]) < 1e-12))


def _side_cells(scene: GraphScene, seg):
    mid = (0.5 * (seg.p0[0] + seg.p1[0]), 0.5 * (seg.p0[1] + seg.p1[1]))
    diam = math.hypot(scene.domain[2] - scene.domain[0],
                      scene.domain[3] - scene.domain[1])
    d = 1e-7 * diam
    plus = scene.find_cell(mid[0] + d * seg.nu[0], mid[1] + d * seg.nu[1])
    minus = scene.find_cell(mid[0] - d * seg.nu[0], mid[1] - d * seg.nu[1])
    return plus, minus


def _round_jump(values: np.ndarray, f: GridField, scene: GraphScene,
                seg, p: Penalty, margin: float) -> None:
    """Overwrite the strip around one straight jump with the rounded profile.

    In the normal coordinate t the slope follows the constant-curvature arc
    w(t) = sqrt(1+tau^2) * kappa (t-t0) / sqrt(1 - kappa^2 (t-t0)^2), whose
    shape-operator eigenvalue is sqrt(lambda) for the whole turn; center t0
    and height offset are fixed in closed form by matching both side planes.
    Outside the arc but inside ``margin`` the exact side planes replace the
    mollified blur (they agree with the mollification beyond the kernel
    support, so the splice is seamless).
    """
    cell_a, cell_b = _side_cells(scene, seg)
    if not (_affine_coeffs(cell_a) and _affine_coeffs(cell_b)):
        return  # rounding implemented for affine-sided jumps only
    n1, n2 = seg.nu
    ga = cell_a.grad(np.array([seg.p0[0]]), np.array([seg.p0[1]]))
    gb = cell_b.grad(np.array([seg.p0[0]]), np.array([seg.p0[1]]))
    wa = float(ga[0][0] * n1 + ga[1][0] * n2)
    wb = float(gb[0][0] * n1 + gb[1][0] * n2)
    tau = float(ga[0][0] * (-n2) + ga[1][0] * n1)
    if wa == wb:
        return
    root = math.sqrt(1.0 + tau * tau)
    psi_a = math.atan(wa / root)
    psi_b = math.atan(wb / root)

    # height along the segment (includes the tangential slope tau)
    u0 = float(cell_b.u(np.array([seg.p0[0]]), np.array([seg.p0[1]]))[0])

    x, y = np.meshgrid(*f.coords(), indexing="ij")
    dx, dy = x - seg.p0[0], y - seg.p0[1]
    length = math.hypot(seg.p1[0] - seg.p0[0], seg.p1[1] - seg.p0[1])
    dirx = (seg.p1[0] - seg.p0[0]) / length
    diry = (seg.p1[1] - seg.p0[1]) / length
    s = dx * dirx + dy * diry
    t = dx * n1 + dy * n2
    line = u0 + s * (dirx * ga[0][0] + diry * ga[1][0])

    psi_m = 0.5 * (psi_a + psi_b)
    sign = 1.0 if wa > wb else -1.0

    def strip(out: np.ndarray, k1_mag: float, k2_mag: float) -> np.ndarray:
        """Write the rounded strip as two tangent arcs; return the band mask.

        The turn is split at the bisector angle psi_m: curvature k1 carries
        psi_a -> psi_m, curvature k2 carries psi_m -> psi_b.  Each arc is
        tangent to its side plane; sliding positions t01, t02 solve the linear
        system expressing slope and height continuity at the interior joint.
        """
        k1, k2 = sign * k1_mag, sign * k2_mag
        # t01 - t02 = sin(psi_m) (1/k2 - 1/k1)
        # wa t01 - wb t02 = root [(cos psi_m - sec psi_a)/k1
        #                         + (sec psi_b - cos psi_m)/k2]
        rhs1 = math.sin(psi_m) * (1.0 / k2 - 1.0 / k1)
        rhs2 = root * ((math.cos(psi_m) - 1.0 / math.cos(psi_a)) / k1
                       + (1.0 / math.cos(psi_b) - math.cos(psi_m)) / k2)
        det = wa - wb
        t01 = (-wb * rhs1 + rhs2) / det
        t02 = (-wa * rhs1 + rhs2) / det
        ta = t01 + math.sin(psi_a) / k1
        tm = t01 + math.sin(psi_m) / k1
        tb = t02 + math.sin(psi_b) / k2
        c1 = wa * ta + root * math.cos(psi_a) / k1
        c2 = wb * tb + root * math.cos(psi_b) / k2
        band = (s >= -1e-12) & (s <= length + 1e-12) \
            & (t > min(ta, tb) - margin) & (t < max(ta, tb) + margin)
        for (k, t0, c, lo, hi) in ((k1, t01, c1, *sorted((tm, ta))),
                                   (k2, t02, c2, *sorted((tb, tm)))):
            sel = band & (t >= lo) & (t <= hi)
            rad = np.clip(1.0 - (k * (t - t0)) ** 2, 0.0, None)
            out[sel] = (line + c - root * np.sqrt(rad) / k)[sel]
        # the planes continue the arcs tangentially and match the scene exactly
        upper = band & (t > max(ta, tb))
        lower = band & (t < min(ta, tb))
        w_up, w_dn = (wa, wb) if ta > tb else (wb, wa)
        out[upper] = (line + w_up * t)[upper]
        out[lower] = (line + w_dn * t)[lower]
        return band

    # The energy charged where an arc meets its plane depends on where that
    # junction falls within a grid cell.  Each junction is steered by its own
    # arc's curvature, so sweep both curvatures over a small two-sided lattice
    # around sqrt(lambda) (each step shifts its junction by a fraction of a
    # cell) and keep the cheapest realization, scored on the band window.
    step1 = f.h / max(abs(math.sin(psi_a) - math.sin(psi_m)) / p.sqrt_lam, f.h)
    step2 = f.h / max(abs(math.sin(psi_m) - math.sin(psi_b)) / p.sqrt_lam, f.h)

    def score(o1: float, o2: float) -> float:
        trial = values.copy()
        band = strip(trial, p.sqrt_lam / (1.0 + o1 * step1),
                     p.sqrt_lam / (1.0 + o2 * step2))
        rows = np.where(band.any(axis=1))[0]
        cols = np.where(band.any(axis=0))[0]
        r0, r1 = max(rows[0] - 4, 0), min(rows[-1] + 5, trial.shape[0])
        c0_, c1_ = max(cols[0] - 4, 0), min(cols[-1] + 5, trial.shape[1])
        sub = GridField(origin=f.origin, h=f.h, values=trial[r0:r1, c0_:c1_])
        return energy_F_lambda(sub, p)

    best = None
    for j1 in range(8):  # coarse pass, quarter-cell steps either way
        for j2 in range(8):
            o1, o2 = (j1 - 3.5) / 4.0, (j2 - 3.5) / 4.0
            local = score(o1, o2)
            if best is None or local < best[0]:
                best = (local, o1, o2)
    center = best
    for j1 in range(-3, 4):  # refinement pass, sixteenth-cell steps
        for j2 in range(-3, 4):
            if j1 == 0 and j2 == 0:
                continue
            o1, o2 = center[1] + j1 / 16.0, center[2] + j2 / 16.0
            local = score(o1, o2)
            if best[0] > local:
                best = (local, o1, o2)
    strip(values, p.sqrt_lam / (1.0 + best[1] * step1),
          p.sqrt_lam / (1.0 + best[2] * step2))


@dataclass(frozen=True)
class RecoveryReport:
    """Per-lambda energies of the recovery pipeline against the limit value."""

    lambdas: tuple[float, ...]
    epsilons: tuple[float, ...]
    energies: tuple[float, ...]
    limit_value: float
    gaps: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if not (len(self.lambdas) == len(self.epsilons) == len(self.energies)):
            raise ValueError("ladder columns must have equal length")
        gaps = tuple(abs(e - self.limit_value) for e in self.energies)
        object.__setattr__(self, "gaps", gaps)

    def to_csv(self) -> str:
        lines = ["lambda,epsilon,energy,limit,gap"]
        for lam, eps, en, gap in zip(self.lambdas, self.epsilons,
                                     self.energies, self.gaps):
            lines.append(f"{lam:.11e},{eps:.11e},{en:.11e},"
                         f"{self.limit_value:.11e},{gap:.11e}")
        return "\n".join(lines) + "\n"


def recovery_experiment(scene: GraphScene, lambdas: list[float], resolution: int,
                        ladder: list[float] | None = None,
                        round_jumps: bool = True) -> RecoveryReport:
    """Measure F_lambda of the constructed recovery fields along a lambda ladder.

    For each lambda the scene is rasterized, mollified at the chosen
    epsilon(lambda), and (by default) its jump strips are replaced by the
    constant-curvature rounding; the penalized energy of the result is
    compared against the limit value of the scene.
    """
    if resolution < 5:
        raise ValueError("resolution must be at least 5")
    limit = limit_energy(scene).total
    raster = rasterize(scene, resolution, resolution)
    eps_list, energies = [], []
    for lam in lambdas:
        p = Penalty(lam)
        eps = choose_epsilon(p, raster, ladder)
        fld = mollify(raster, MollifierSpec(eps))
        if round_jumps:
            values = fld.values.copy()
            for seg in scene.jumps:
                _round_jump(values, fld, scene, seg, p, margin=eps + 2.0 * fld.h)
            fld = GridField(origin=fld.origin, h=fld.h, values=values)
        eps_list.append(eps)
        energies.append(energy_F_lambda(fld, p))
    return RecoveryReport(lambdas=tuple(float(v) for v in lambdas),
                          epsilons=tuple(eps_list),
                          energies=tuple(energies),
                          limit_value=limit)


# ---------------------------------------------------------------------------
# corrector insertion
# ---------------------------------------------------------------------------

def corrector_insertion(v0: Tilt, xi0: SymMat2, p: Penalty, M: int,
                        refinement: int = 128) -> tuple[GridField, float]:
    """Add the M-periodized, M^{-2}-scaled laminate corrector to a quadratic.

    The base potential is the quadratic with gradient ``v0`` at the cell
    center and constant Hessian ``xi0``; the corrector tiles M x M periods of
    the cell-periodic laminate oscillation, scaled so its Hessian is O(1) and
    its gradient perturbation is O(1/M).  The returned average of f_raw uses
    the *actual* finite-difference gradient of the summed field (not v0 held
    fixed), which is what the corrector's small-gradient property buys.

    ``refinement`` counts grid cells per corrector period; the grid has
    M * refinement cells per side.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    spec = build_laminate(p, v0, xi0)
    phi = laminate_oscillation(spec, refinement, periodic=True)
    n = M * refinement
    h = 1.0 / n
    ax = h * np.arange(n + 1)
    z1, z2 = np.meshgrid(ax, ax, indexing="ij")
    c1, c2 = z1 - 0.5, z2 - 0.5
    base = v0.v1 * c1 + v0.v2 * c2 + 0.5 * (xi0.a11 * c1 ** 2
                                            + 2.0 * xi0.a12 * c1 * c2
                                            + xi0.a22 * c2 ** 2)
    values = base + phi(M * z1, M * z2) / (M * M)
    fld = GridField(origin=(0.0, 0.0), h=h, values=values)

    gx, gy = np.gradient(fld.values, h, edge_order=2)
    hxx, hxy, hyy = denoised_hessian(fld)
    dens = f_raw_arr(p.lam, gx, gy, hxx, hxy, hyy)
    return fld, pairwise_sum(dens) / dens.size
