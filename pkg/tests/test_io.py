import json
import math

import numpy as np
import pytest

from stdglab.fem import FeFunction, FeSpace
from stdglab.mesh import build_polygon_mesh, build_unit_square_mesh
from stdglab.reporting import (csv_text, fefunction_from_text, write_csv, write_json,
                               write_vtk_triangles)


def parse_vtk(text):
    lines = text.splitlines()
    i = next(k for k, ln in enumerate(lines) if ln.startswith("POINTS"))
    n = int(lines[i].split()[1])
    pts = np.array([list(map(float, ln.split())) for ln in lines[i + 1:i + 1 + n]])
    j = next(k for k, ln in enumerate(lines) if ln.startswith("CELLS"))
    nc = int(lines[j].split()[1])
    cells = np.array([list(map(int, ln.split()))[1:] for ln in lines[j + 1:j + 1 + nc]])
    return pts, cells, lines


def test_vtk_geometry_round_trip(tmp_path):
    m = build_polygon_mesh([[0, 0], [1, 0], [1.2, 0.8], [0.1, 1]], levels=1)
    vals = m.vertices[:, 0] ** 2
    m.write_vtk(tmp_path / "m.vtk", point_data={"u": vals}, cell_data={"area": m.areas})
    pts, cells, lines = parse_vtk((tmp_path / "m.vtk").read_text())
    np.testing.assert_allclose(pts[:, :2], m.vertices)
    np.testing.assert_allclose(pts[:, 2], 0.0)
    np.testing.assert_array_equal(cells, m.cells)
    assert any(ln.startswith("CELL_TYPES") for ln in lines)
    assert any(ln.startswith("SCALARS u") for ln in lines)
    assert any(ln.startswith("SCALARS area") for ln in lines)


def test_vtk_rejects_bad_data(tmp_path):
    m = build_unit_square_mesh(2)
    with pytest.raises(ValueError):
        write_vtk_triangles(tmp_path / "x.vtk", m.vertices, m.cells, point_data={"u": np.ones(3)})


@pytest.mark.parametrize("r", [1, 2])
@pytest.mark.parametrize("dtype", [float, complex])
def test_fefunction_text_round_trip(r, dtype, rng):
    space = FeSpace(build_unit_square_mesh(3), r)
    c = rng.standard_normal(space.dim).astype(dtype)
    if dtype is complex:
        c = c + 1j * rng.standard_normal(space.dim)
    v = FeFunction(space, c)
    w = fefunction_from_text(v.to_text())
    np.testing.assert_array_equal(w.coeffs, v.coeffs)
    assert w.space.r == r
    np.testing.assert_array_equal(w.space.mesh.cells, space.mesh.cells)
    with pytest.raises(ValueError):
        fefunction_from_text("garbage\n")


def test_csv_formatting(tmp_path):
    rows = [{"a": 1, "b": 0.1, "c": True, "d": math.nan}, {"a": 2, "b": np.float64(2.5), "c": False}]
    text = csv_text(rows, ["a", "b", "c", "d"])
    assert text.splitlines() == ["a,b,c,d", "1,0.1,true,nan", "2,2.5,false,"]
    write_csv(tmp_path / "t.csv", rows, ["a", "b"])
    assert (tmp_path / "t.csv").read_text() == "a,b\n1,0.1\n2,2.5\n"
    assert csv_text([]) == "\n"


def test_json_coerces_numpy(tmp_path):
    data = {"x": np.arange(3), "y": np.float64(1.5), "z": np.bool_(True), "w": math.inf, "c": 1 + 2j}
    write_json(tmp_path / "s.json", data)
    back = json.loads((tmp_path / "s.json").read_text())
    assert back == {"x": [0, 1, 2], "y": 1.5, "z": True, "w": "inf", "c": [1.0, 2.0]}
