import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from stdglab.fem import (FeFunction, FeSpace, SolverError, SymmetricSparseOperator, apply_discrete_laplacian, assemble_mass,
                         assemble_stiffness, assemble_weighted_mass, interpolate_nodal, load_vector,
                         norms, project_l2, project_ritz, shape_functions)
from stdglab.mesh import build_polygon_mesh, build_unit_square_mesh


def brute_p1(mesh):
    """Textbook P1 element matrices, one cell at a time."""
    nv = mesh.n_vertices
    M = np.zeros((nv, nv))
    A = np.zeros((nv, nv))
    for cell in mesh.cells:
        p = mesh.vertices[cell]
        area = 0.5 * abs(np.linalg.det(np.array([p[1] - p[0], p[2] - p[0]])))
        # gradients of barycentric coordinates
        B = np.linalg.inv(np.vstack([np.ones(3), p.T]))[:, 1:]
        A[np.ix_(cell, cell)] += area * B @ B.T
        M[np.ix_(cell, cell)] += area / 12 * (np.ones((3, 3)) + np.eye(3))
    return M, A


def test_p1_matches_brute_force():
    mesh = build_polygon_mesh([[0, 0], [1.5, 0], [1.8, 1.1], [0.2, 1.3]], levels=2)
    space = FeSpace(mesh, 1)
    M, A = brute_p1(mesh)
    np.testing.assert_allclose(assemble_mass(space, full=True).toarray(), M, atol=1e-15)
    np.testing.assert_allclose(assemble_stiffness(space, full=True).toarray(), A, atol=1e-13)
    f = space.free
    np.testing.assert_allclose(space.mass.toarray(), M[np.ix_(f, f)], atol=1e-15)


def test_p2_reference_element():
    # known P2 mass matrix on the reference triangle, times 360
    mesh = build_polygon_mesh([[0, 0], [1, 0], [0, 1]])
    space = FeSpace(mesh, 2)
    d = space.cell_dofs[0]
    M = (assemble_mass(space, full=True).toarray() * 360)[np.ix_(d, d)]
    assert M[0, 0] == pytest.approx(6)
    assert M[0, 1] == pytest.approx(-1)
    assert M[3, 3] == pytest.approx(32)
    assert M[0, 4] == pytest.approx(-4)   # vertex 0 against the opposite edge
    assert M[0, 3] == pytest.approx(0, abs=1e-13)


@pytest.mark.parametrize("r", [1, 2])
def test_shape_functions_partition_of_unity(r, rng):
    pts = rng.uniform(0, 0.5, (20, 2))
    vals, grads = shape_functions(r, pts)
    np.testing.assert_allclose(vals.sum(axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-13)


def test_shape_function_unknown_order():
    with pytest.raises(ValueError):
        shape_functions(3, np.zeros((1, 2)))
    with pytest.raises(ValueError):
        FeSpace(build_unit_square_mesh(2), 3)


@pytest.mark.parametrize("r", [1, 2])
def test_full_operators(r):
    space = FeSpace(build_unit_square_mesh(5), r)
    M = assemble_mass(space, full=True).matrix
    A = assemble_stiffness(space, full=True).matrix
    assert M.sum() == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(A @ np.ones(space.n_dofs), 0.0, atol=1e-12)
    # x is in the space, so x^T A x = |grad x|^2 = 1
    x = space.dof_coords[:, 0]
    assert x @ A @ x == pytest.approx(1.0, rel=1e-12)
    assert abs(M - M.T).max() == 0


@pytest.mark.parametrize("r", [1, 2])
def test_mass_integrates_products_of_polynomials(r):
    space = FeSpace(build_unit_square_mesh(3), r)
    M = assemble_mass(space, full=True).matrix
    x, y = space.dof_coords.T
    u = x * y if r == 2 else x
    v = y
    exact = 1 / 6 if r == 2 else 1 / 4   # int x y^2 and int x y
    assert u @ M @ v == pytest.approx(exact, rel=1e-13)


def test_weighted_mass_unit_weight(space8):
    W = assemble_weighted_mass(space8, lambda x, y: np.ones_like(x), power=3)
    np.testing.assert_allclose(W.toarray(), space8.mass.toarray(), atol=1e-15)
    with pytest.raises(ValueError):
        assemble_weighted_mass(space8, lambda x, y: x - 0.5)


def test_load_vector_of_one(space4_p2):
    b = load_vector(space4_p2, lambda x, y: np.ones_like(x), full=True)
    assert b.sum() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("r", [1, 2])
def test_projections_reproduce_space_members(r, rng):
    space = FeSpace(build_unit_square_mesh(4), r)
    v = FeFunction(space, rng.standard_normal(space.dim))
    np.testing.assert_allclose(project_l2(space, v).coeffs, v.coeffs, atol=1e-11)
    np.testing.assert_allclose(project_ritz(space, v).coeffs, v.coeffs, atol=1e-11)


def test_l2_projection_is_orthogonal(space8):
    f = lambda x, y: np.exp(x) * np.sin(3 * y)
    P = project_l2(space8, f, degree=10)
    b = load_vector(space8, f, degree=10)
    np.testing.assert_allclose(space8.mass @ P.coeffs, b, atol=1e-14)


def test_ritz_projection_converges_at_second_order():
    u = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    g = lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                      np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))
    errs = []
    for n in (8, 16, 32):
        space = FeSpace(build_unit_square_mesh(n), 1)
        e = project_ritz(space, u, grad=g).coeffs - interpolate_nodal(space, u).coeffs
        errs.append(np.abs(e).max())
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert rates.min() > 1.8


def test_ritz_needs_gradient(space8):
    with pytest.raises(ValueError):
        project_ritz(space8, lambda x, y: x)


def test_discrete_laplacian_of_eigenfunction(space8):
    lam, vec = sla.eigh(space8.stiffness.toarray(), space8.mass.toarray())
    v = FeFunction(space8, vec[:, 3])
    np.testing.assert_allclose(apply_discrete_laplacian(space8, v).coeffs, -lam[3] * vec[:, 3], atol=1e-10)


def test_point_evaluation_matches_local_expansion(space4_p2, rng):
    w = FeFunction(space4_p2, rng.standard_normal(space4_p2.dim))
    mesh = space4_p2.mesh
    c = 13
    bary = np.array([0.2, 0.3, 0.5])
    p = bary @ mesh.vertices[mesh.cells[c]]
    vals, _ = shape_functions(2, bary[None, 1:])
    expected = vals[0] @ w.full_coeffs()[space4_p2.cell_dofs[c]]
    assert w(*p) == pytest.approx(expected, abs=1e-14)


def test_nodal_values_are_coefficients(space4_p2, rng):
    u = FeFunction(space4_p2, rng.standard_normal(space4_p2.dim))
    xy = space4_p2.dof_coords[space4_p2.free]
    vals = np.array([u(x, y) for x, y in xy])
    np.testing.assert_allclose(vals, u.coeffs, atol=1e-13)


def test_norms_p1(space8, rng):
    c = rng.standard_normal(space8.dim)
    v = FeFunction(space8, c)
    out = norms(v, weight=lambda x, y: 1 + x, N=2)
    assert out["linf"] == pytest.approx(np.abs(c).max())
    assert out["l2"] == pytest.approx(np.sqrt(c @ (space8.mass @ c)))
    assert out["weighted_l2"] > out["l2"]
    assert out["l1"] <= out["l2"] <= out["linf"] + 1e-14


def test_solver_error_on_singular():
    mesh = build_unit_square_mesh(3)
    space = FeSpace(mesh, 1)
    op = SymmetricSparseOperator(sp.csr_matrix((space.dim, space.dim)), "zero")
    with pytest.raises(SolverError):
        op.solve(np.ones(space.dim))


def test_fefunction_shape_checked(space8):
    with pytest.raises(ValueError):
        FeFunction(space8, np.zeros(3))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 7), r=st.sampled_from([1, 2]))
def test_mass_and_stiffness_spd(n, r):
    space = FeSpace(build_unit_square_mesh(n), r)
    for op in (space.mass, space.stiffness):
        assert np.linalg.eigvalsh(op.toarray()).min() > 0
