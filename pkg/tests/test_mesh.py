import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stdglab.mesh import (DomainError, Mesh, build_polygon_mesh, build_unit_square_mesh,
                          locate_cell, refine_uniform)


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_unit_square_counts(n):
    m = build_unit_square_mesh(n)
    assert m.n_cells == 2 * n * n
    assert m.n_vertices == (n + 1) ** 2
    # Euler: V - E + F = 1 for a disc
    assert m.n_vertices - m.n_edges + m.n_cells == 1
    assert m.h == pytest.approx(math.sqrt(2) / n, rel=1e-14)
    assert m.area == pytest.approx(1.0, abs=1e-14)
    m.validate()


def test_boundary_vertices_are_on_the_square():
    m = build_unit_square_mesh(5)
    v = m.vertices[m.boundary_vertices]
    on_edge = (np.isclose(v, 0) | np.isclose(v, 1)).any(axis=1)
    assert on_edge.all()
    assert m.boundary_vertices.sum() == 4 * 5


def test_cells_are_counterclockwise():
    m = build_polygon_mesh([[0, 0], [2, 0], [2.5, 1], [0.5, 1.5]], levels=2)
    assert np.all(np.linalg.det(m.jacobians) > 0)


def test_refinement_halves_h_and_keeps_area():
    m0 = build_polygon_mesh([[0, 0], [1, 0], [0.3, 0.8]])
    m1 = refine_uniform(refine_uniform(m0))
    assert m1.n_cells == 16 * m0.n_cells
    assert m1.h == pytest.approx(m0.h / 4)
    assert m1.area == pytest.approx(m0.area, rel=1e-14)
    # refinement through midpoints produces similar triangles
    assert m1.quasi_uniformity == pytest.approx(m0.quasi_uniformity, rel=1e-12)
    m1.validate()


def test_nonconvex_polygon_rejected():
    with pytest.raises(ValueError):
        build_polygon_mesh([[0, 0], [2, 0], [1, 0.2], [1, 2]])


def test_text_round_trip():
    m = build_polygon_mesh([[0, 0], [1, 0], [1, 1], [0, 1]], levels=1)
    m2 = Mesh.from_text(m.to_text())
    np.testing.assert_array_equal(m.vertices, m2.vertices)
    np.testing.assert_array_equal(m.cells, m2.cells)
    np.testing.assert_array_equal(m.polygon, m2.polygon)


def test_locate_outside_raises():
    m = build_unit_square_mesh(3)
    with pytest.raises(DomainError):
        locate_cell(m, [1.2, 0.5])
    with pytest.raises(ValueError):
        locate_cell(m, [np.nan, 0.5])


def test_locate_tie_goes_to_lowest_index():
    m = build_unit_square_mesh(2)
    # the centre vertex is shared by six cells
    owners = [c for c in range(m.n_cells) if 4 in m.cells[c]]
    assert locate_cell(m, [0.5, 0.5]) == min(owners)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(0, 1), y=st.floats(0, 1), n=st.integers(1, 9))
def test_located_cell_contains_point(x, y, n):
    m = build_unit_square_mesh(n)
    c = locate_cell(m, [x, y])
    lam = m.barycentric(c, np.array([x, y]))
    assert lam.min() >= -1e-12
    np.testing.assert_allclose(lam @ m.vertices[m.cells[c]], [x, y], atol=1e-13)
