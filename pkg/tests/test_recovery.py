import math

import numpy as np
import pytest

from willmore.energies import Penalty
from willmore.fields import (
    GraphScene,
    GridField,
    fd_gradient,
    fd_hessian,
    rasterize,
)
from willmore.geometry import SymMat2, Tilt, norm_inf_arr
from willmore.oracles import FlatInputError, build_laminate, laminate_oscillation
from willmore.recovery import (
    MollifierSpec,
    choose_epsilon,
    corrector_insertion,
    default_epsilon_ladder,
    mollify,
    recovery_experiment,
)

from test_fields import grid_from_function, make_cell, tent_scene


def affine_scene():
    square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    return GraphScene(domain=(0.0, 0.0, 1.0, 1.0),
                      cells=(make_cell(square, c00=0.25, c10=0.5, c01=-0.75),),
                      jumps=())


def test_kernel_has_unit_mass_and_compact_support():
    kern = MollifierSpec(0.1).sample(0.01)
    assert kern.sum() == pytest.approx(1.0, rel=1e-14)
    n = kern.shape[0]
    c = n // 2
    # corners lie outside the disc of radius epsilon
    assert kern[0, 0] == 0.0 and kern[-1, -1] == 0.0
    assert kern[c, c] == kern.max() > 0.0


def test_mollify_preserves_affine_fields_exactly():
    f = grid_from_function(lambda x, y: 0.3 - 1.2 * x + 0.7 * y, n=129)
    g = mollify(f, MollifierSpec(0.125))
    assert g.values == pytest.approx(f.values, abs=1e-12)


def test_mollify_rejects_unresolved_epsilon():
    f = grid_from_function(lambda x, y: x * y, n=33)
    with pytest.raises(ValueError, match="under-resolved"):
        mollify(f, MollifierSpec(0.01))


def test_mollified_hessian_obeys_kernel_bound():
    # |Hess(eta_eps * w)|_inf <= sup(eta) * eps^-2 * |D grad w|(Omega),
    # with sup(eta) read off the sampled kernel; tent: |D grad w| = 2
    f = rasterize(tent_scene(), 257, 257)
    tv = 2.0
    for eps in default_epsilon_ladder(f):
        m = MollifierSpec(eps)
        kern = m.sample(f.h)
        sup_eta = kern.max() * eps ** 2 / f.h ** 2
        hxx, hxy, hyy = fd_hessian(mollify(f, m))
        observed = float(norm_inf_arr(hxx, hxy, hyy).max())
        assert observed <= sup_eta * tv / eps ** 2 * 1.2


def test_choose_epsilon_smallest_admissible_and_ladder_validation():
    f = rasterize(tent_scene(), 257, 257)
    eps_weak = choose_epsilon(Penalty(100.0), f)
    eps_strong = choose_epsilon(Penalty(10000.0), f)
    assert eps_strong <= eps_weak
    bound = 0.5 * math.sqrt(10000.0)
    hxx, hxy, hyy = fd_hessian(mollify(f, MollifierSpec(eps_strong)))
    assert float(norm_inf_arr(hxx, hxy, hyy).max()) < bound
    with pytest.raises(ValueError, match="descending"):
        choose_epsilon(Penalty(100.0), f, ladder=[0.125, 0.25])
    with pytest.raises(ValueError, match="no admissible epsilon"):
        choose_epsilon(Penalty(1e-4), f)


def test_recovery_trivial_on_affine_scene():
    report = recovery_experiment(affine_scene(), [100.0, 400.0], 65)
    assert report.limit_value == 0.0
    assert report.energies == (0.0, 0.0)
    assert report.gaps == (0.0, 0.0)


def test_recovery_tent_small_grid():
    report = recovery_experiment(tent_scene(), [100.0], 257)
    assert report.limit_value == pytest.approx(math.pi, abs=1e-9)
    (gap,) = report.gaps
    assert gap <= 0.05 * math.pi


def test_jump_rounding_beats_plain_mollification():
    rounded = recovery_experiment(tent_scene(), [100.0], 257)
    plain = recovery_experiment(tent_scene(), [100.0], 257, round_jumps=False)
    assert rounded.gaps[0] < plain.gaps[0]


def test_recovery_report_csv_shape():
    report = recovery_experiment(tent_scene(), [100.0], 129)
    lines = report.to_csv().strip().split("\n")
    assert lines[0] == "lambda,epsilon,energy,limit,gap"
    assert len(lines) == 2
    assert len(lines[1].split(",")) == 5


def test_corrector_rejects_flat_center():
    with pytest.raises(FlatInputError, match="already flat"):
        corrector_insertion(Tilt(0.0, 0.0), SymMat2.zero(), Penalty(9.0), 4)


def test_corrector_average_decreases_with_period_count():
    p = Penalty(9.0)
    v0, xi0 = Tilt(0.0, 0.0), SymMat2.diag(1.0, 1.0)
    _, avg1 = corrector_insertion(v0, xi0, p, 1, refinement=64)
    _, avg4 = corrector_insertion(v0, xi0, p, 4, refinement=64)
    assert avg4 < avg1
    assert avg4 >= 10.0 / 3.0 - 1e-9  # never beats the envelope


def test_corrector_gradient_perturbation_scales_inversely_with_M():
    p = Penalty(9.0)
    v0, xi0 = Tilt(0.0, 0.0), SymMat2.diag(1.0, 1.0)
    spec = build_laminate(p, v0, xi0)
    phi = laminate_oscillation(spec, 64, periodic=True)
    ax = np.linspace(0.0, 1.0, 65)
    z1, z2 = np.meshgrid(ax, ax, indexing="ij")
    one_period = GridField(origin=(0.0, 0.0), h=1.0 / 64, values=phi(z1, z2))
    gx, gy = fd_gradient(one_period)
    sup_grad = float(np.hypot(gx, gy).max())

    M = 8
    fld, _ = corrector_insertion(v0, xi0, p, M, refinement=64)
    x, y = np.meshgrid(*fld.coords(), indexing="ij")
    base = 0.5 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)
    pert = GridField(origin=fld.origin, h=fld.h, values=fld.values - base)
    px, py = fd_gradient(pert)
    sup_pert = float(np.hypot(px, py).max())
    assert sup_pert <= sup_grad / M * 1.05
