import json
import math

import numpy as np
import pytest

from willmore.energies import Penalty
from willmore.fields import (
    GraphScene,
    GridField,
    JumpSegment,
    PolyCell,
    SceneValidationError,
    denoised_hessian,
    energy_F_lambda,
    energy_G,
    energy_h_lambda,
    fd_gradient,
    fd_hessian,
    limit_energy,
    load_scene,
    pairwise_sum,
    rasterize,
    scene_from_dict,
    scene_to_dict,
    validate_scene,
)


def grid_from_function(fn, n=65):
    h = 1.0 / (n - 1)
    ax = h * np.arange(n)
    x, y = np.meshgrid(ax, ax, indexing="ij")
    return GridField(origin=(0.0, 0.0), h=h, values=fn(x, y))


def make_cell(poly, **c):
    m = np.zeros((4, 4))
    for key, val in c.items():
        m[int(key[1]), int(key[2])] = val
    return PolyCell(polygon=np.array(poly, dtype=float), coeffs=m)


LOWER = [(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.0, 0.5)]
UPPER = [(0.0, 0.5), (1.0, 0.5), (1.0, 1.0), (0.0, 1.0)]


def tent_scene():
    return GraphScene(
        domain=(0.0, 0.0, 1.0, 1.0),
        cells=(make_cell(LOWER, c01=1.0), make_cell(UPPER, c00=1.0, c01=-1.0)),
        jumps=(JumpSegment(p0=(0.0, 0.5), p1=(1.0, 0.5), nu=(0.0, 1.0)),),
    )


def tilted_scene():
    return GraphScene(
        domain=(0.0, 0.0, 1.0, 1.0),
        cells=(make_cell(LOWER, c10=1.0, c01=1.0),
               make_cell(UPPER, c00=0.5, c10=1.0)),
        jumps=(JumpSegment(p0=(0.0, 0.5), p1=(1.0, 0.5), nu=(0.0, 1.0)),),
    )


def test_pairwise_sum_matches_plain_sum():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(37, 53))
    assert pairwise_sum(a) == pytest.approx(float(a.sum()), rel=1e-13)


def test_fd_derivatives_exact_on_quadratics():
    f = grid_from_function(lambda x, y: 1.5 * x ** 2 - x * y + 0.25 * y ** 2 + x)
    gx, gy = fd_gradient(f)
    x, y = np.meshgrid(*f.coords(), indexing="ij")
    assert gx == pytest.approx(3.0 * x - y + 1.0, abs=1e-10)
    assert gy == pytest.approx(-x + 0.5 * y, abs=1e-10)
    hxx, hxy, hyy = fd_hessian(f)
    assert hxx == pytest.approx(3.0, abs=1e-9)
    assert hxy == pytest.approx(-1.0, abs=1e-9)
    assert hyy == pytest.approx(0.5, abs=1e-9)


def test_fd_hessian_second_order_convergence():
    errs = []
    for n in (33, 65, 129):
        f = grid_from_function(lambda x, y: np.sin(2.0 * x + y), n=n)
        x, y = np.meshgrid(*f.coords(), indexing="ij")
        hxx, _, _ = fd_hessian(f)
        errs.append(np.abs(hxx + 4.0 * np.sin(2.0 * x + y)).max())
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0


def test_denoised_hessian_snaps_affine_residue_to_zero():
    # differencing an affine field with a large offset leaves O(eps/h^2)
    # rounding residue; the raw density is discontinuous at zero curvature,
    # so that residue must be snapped to exact zero before it is charged
    f = grid_from_function(lambda x, y: 300.0 + 10.0 * x - 7.0 * y, n=257)
    hxx, hxy, hyy = denoised_hessian(f)
    assert np.all(hxx == 0.0) and np.all(hxy == 0.0) and np.all(hyy == 0.0)
    assert energy_F_lambda(f, Penalty(100.0)) == 0.0


def test_denoised_hessian_keeps_genuine_curvature():
    f = grid_from_function(lambda x, y: 1.5 * x ** 2 - x * y + 0.25 * y ** 2)
    hxx, hxy, hyy = denoised_hessian(f)
    assert hxx == pytest.approx(3.0, abs=1e-9)
    assert hxy == pytest.approx(-1.0, abs=1e-9)
    assert hyy == pytest.approx(0.5, abs=1e-9)


def test_energies_vanish_on_affine_fields():
    f = grid_from_function(lambda x, y: 2.0 - 3.0 * x + 0.5 * y)
    p = Penalty(9.0)
    assert energy_F_lambda(f, p) == 0.0
    assert energy_h_lambda(f, p) == pytest.approx(0.0, abs=1e-12)
    assert energy_G(f) == pytest.approx(0.0, abs=1e-12)


def test_energy_G_of_cylinder_patch():
    # u = x^2/2: S has eigenvalues ((1+x^2)^{-3/2}, 0), so the density is
    # 2 (1+x^2)^{-3/2} sqrt(1+x^2) = 2/(1+x^2), integrating to pi/2
    f = grid_from_function(lambda x, y: 0.5 * x ** 2, n=257)
    assert energy_G(f) == pytest.approx(math.pi / 2.0, rel=2e-2)


def test_poly_cell_evaluation_and_membership():
    cell = make_cell(LOWER, c01=1.0)
    assert cell.u(np.array([0.5]), np.array([0.25]))[0] == pytest.approx(0.25)
    gx, gy = cell.grad(np.array([0.5]), np.array([0.25]))
    assert (gx[0], gy[0]) == (pytest.approx(0.0), pytest.approx(1.0))
    assert cell.contains(0.5, 0.25)
    assert not cell.contains(0.5, 0.75)


def test_limit_energy_tent_is_pi():
    bd = limit_energy(tent_scene())
    assert bd.bulk == pytest.approx(0.0, abs=1e-12)
    assert bd.cantor == 0.0
    assert bd.total == pytest.approx(math.pi, abs=1e-6)


def test_limit_energy_tilted_tent():
    expected = 2.0 * math.sqrt(2.0) * math.acos(2.0 / math.sqrt(6.0))
    assert limit_energy(tilted_scene()).total == pytest.approx(expected, abs=1e-6)


def test_validate_scene_accepts_the_tent():
    assert validate_scene(tent_scene()).ok


def test_validate_scene_flags_uncovered_area():
    scene = GraphScene(domain=(0.0, 0.0, 1.0, 1.0),
                       cells=(make_cell(LOWER, c01=1.0),),
                       jumps=())
    diag = validate_scene(scene)
    assert not diag.ok


def test_rasterize_matches_cells():
    f = rasterize(tent_scene(), 65, 65)
    x, y = np.meshgrid(*f.coords(), indexing="ij")
    assert f.values == pytest.approx(np.minimum(y, 1.0 - y), abs=1e-12)


def test_scene_json_roundtrip(tmp_path):
    scene = tilted_scene()
    doc = scene_to_dict(scene)
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(doc))
    back = load_scene(path)
    assert back.domain == scene.domain
    assert len(back.cells) == 2 and len(back.jumps) == 1
    assert limit_energy(back).total == pytest.approx(limit_energy(scene).total)


def test_scene_parser_rejects_unknown_and_missing_keys():
    doc = scene_to_dict(tent_scene())
    doc["extra"] = 1
    with pytest.raises(SceneValidationError, match="unknown key"):
        scene_from_dict(doc)
    del doc["extra"]
    del doc["cells"][0]["coeffs"]
    with pytest.raises(SceneValidationError, match="missing key"):
        scene_from_dict(doc)


def test_load_scene_reports_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(SceneValidationError, match="malformed"):
        load_scene(path)
