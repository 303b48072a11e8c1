"""Lagrange finite elements of order 1 and 2 with homogeneous Dirichlet data.

Boundary dofs are eliminated: every operator and coefficient vector lives
on the interior ("free") dofs unless ``full=True`` is requested.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh, locate_cell
from .quadrature import barycentric_lattice, triangle_rule

__all__ = [
    "SolverError",
    "FeSpace",
    "FeFunction",
    "SymmetricSparseOperator",
    "shape_functions",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_weighted_mass",
    "load_vector",
    "interpolate_nodal",
    "project_l2",
    "project_ritz",
    "apply_discrete_laplacian",
    "norms",
]


class SolverError(RuntimeError):
    """A linear solve failed or missed its residual tolerance."""


def shape_functions(r: int, pts):
    """Values ``(nq, nloc)`` and reference gradients ``(nq, nloc, 2)``.

    Local dof order: three vertices, then midpoints of edges (0,1), (1,2), (0,2).
    """
    pts = np.asarray(pts, dtype=float)
    xi, eta = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - xi - eta, xi, eta
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    nq = len(pts)
    if r == 1:
        vals = np.column_stack([l0, l1, l2])
        grads = np.broadcast_to(dl, (nq, 3, 2)).copy()
        return vals, grads
    if r == 2:
        lam = [l0, l1, l2]
        vals = np.column_stack([
            l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
            4 * l0 * l1, 4 * l1 * l2, 4 * l0 * l2,
        ])
        grads = np.empty((nq, 6, 2))
        for i in range(3):
            grads[:, i] = (4 * lam[i] - 1)[:, None] * dl[i]
        for k, (i, j) in enumerate([(0, 1), (1, 2), (0, 2)]):
            grads[:, 3 + k] = 4 * (lam[i][:, None] * dl[j] + lam[j][:, None] * dl[i])
        return vals, grads
    raise ValueError(f"unsupported polynomial order r={r}; expected 1 or 2")


class FeSpace:
    """Continuous Lagrange space of order ``r`` on ``mesh``, zero on the boundary."""

    def __init__(self, mesh: Mesh, r: int = 1):
        if r not in (1, 2):
            raise ValueError(f"unsupported polynomial order r={r}; expected 1 or 2")
        self.mesh = mesh
        self.r = r
        nv = mesh.n_vertices
        if r == 1:
            cell_dofs = mesh.cells.copy()
            coords = mesh.vertices.copy()
            boundary = mesh.boundary_vertices.copy()
        else:
            cell_dofs = np.hstack([mesh.cells, nv + mesh.cell_edges])
            mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
            coords = np.vstack([mesh.vertices, mids])
            bedge = np.zeros(mesh.n_edges, dtype=bool)
            bedge[mesh.boundary_edges] = True
            boundary = np.concatenate([mesh.boundary_vertices, bedge])
        for a in (cell_dofs, coords, boundary):
            a.setflags(write=False)
        self.cell_dofs = cell_dofs
        self.dof_coords = coords
        self.boundary_dofs = boundary
        self.free = np.flatnonzero(~boundary)
        self.free.setflags(write=False)
        f2r = np.full(len(coords), -1, dtype=np.int64)
        f2r[self.free] = np.arange(len(self.free))
        f2r.setflags(write=False)
        self.full_to_free = f2r
        self._quad_cache = {}
        self._eval_cache = {}

    @property
    def n_dofs(self) -> int:
        """Number of dofs including boundary ones."""
        return len(self.dof_coords)

    @property
    def dim(self) -> int:
        """Dimension of the space, i.e. the number of interior dofs."""
        return len(self.free)

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def n_local(self) -> int:
        return 3 if self.r == 1 else 6

    def descriptor(self) -> str:
        return f"lagrange r={self.r} cells={self.mesh.n_cells} dofs={self.n_dofs} free={self.dim}"

    def __repr__(self) -> str:
        return f"FeSpace({self.descriptor()})"

    # -- geometry at reference points --------------------------------------
    def map_points(self, ref_pts) -> np.ndarray:
        """Physical coordinates ``(nc, np, 2)`` of reference points in each cell."""
        ref_pts = np.asarray(ref_pts, dtype=float)
        v0 = self.mesh.vertices[self.mesh.cells[:, 0]]
        return v0[:, None, :] + np.einsum("cij,qj->cqi", self.mesh.jacobians, ref_pts)

    def quadrature(self, degree: int):
        """Cached ``(points (nc,nq,2), weights (nc,nq), values (nq,nloc), grads (nc,nq,nloc,2))``."""
        if degree not in self._quad_cache:
            ref, w = triangle_rule(degree)
            vals, rgrads = shape_functions(self.r, ref)
            det = 2.0 * self.mesh.areas
            weights = det[:, None] * w[None, :]
            # physical gradient = J^{-T} reference gradient
            grads = np.einsum("cji,qnj->cqni", self.mesh.inverse_jacobians, rgrads)
            self._quad_cache[degree] = (self.map_points(ref), weights, vals, grads)
        return self._quad_cache[degree]

    def evaluation_matrix(self, ref_pts, key=None, derivative=None) -> sp.csr_matrix:
        """Sparse map from free coefficients to values at ``ref_pts`` in every cell.

        Rows are ordered cell-major: row ``c * np + q``.  With
        ``derivative=0`` or ``1`` the matrix returns the x or y derivative.
        """
        cache_key = None if key is None else (key, derivative)
        if cache_key is not None and cache_key in self._eval_cache:
            return self._eval_cache[cache_key]
        ref_pts = np.asarray(ref_pts, dtype=float)
        vals, rgrads = shape_functions(self.r, ref_pts)
        nc, nq, nloc = self.mesh.n_cells, len(ref_pts), self.n_local
        if derivative is None:
            data = np.broadcast_to(vals, (nc, nq, nloc))
        else:
            g = np.einsum("cji,qnj->cqni", self.mesh.inverse_jacobians, rgrads)
            data = g[..., derivative]
        cols = self.full_to_free[self.cell_dofs]  # (nc, nloc)
        rows = np.broadcast_to(np.arange(nc * nq).reshape(nc, nq, 1), (nc, nq, nloc))
        cols = np.broadcast_to(cols[:, None, :], (nc, nq, nloc))
        keep = cols >= 0
        mat = sp.csr_matrix((data[keep], (rows[keep], cols[keep])), shape=(nc * nq, self.dim))
        if cache_key is not None:
            self._eval_cache[cache_key] = mat
        return mat

    def quadrature_evaluation(self, degree: int, derivative=None) -> sp.csr_matrix:
        ref, _ = triangle_rule(degree)
        return self.evaluation_matrix(ref, key=("quad", degree), derivative=derivative)

    def lattice(self, density: int):
        """Physical lattice points ``(nc*np, 2)`` and their evaluation matrix."""
        ref = barycentric_lattice(density)
        pts = self.map_points(ref).reshape(-1, 2)
        return pts, self.evaluation_matrix(ref, key=("lattice", density))

    def basis_at(self, p) -> np.ndarray:
        """Values of all free basis functions at the point ``p``."""
        c = locate_cell(self.mesh, p)
        lam = self.mesh.barycentric(c, np.asarray(p, dtype=float)[None, :])
        vals, _ = shape_functions(self.r, lam[:, 1:])
        row = np.zeros(self.dim)
        cols = self.full_to_free[self.cell_dofs[c]]
        keep = cols >= 0
        row[cols[keep]] = vals[0, keep]
        return row

    # -- cached operators ---------------------------------------------------
    @cached_property
    def mass(self) -> "SymmetricSparseOperator":
        return assemble_mass(self)

    @cached_property
    def stiffness(self) -> "SymmetricSparseOperator":
        return assemble_stiffness(self)

    def zero(self, dtype=float) -> "FeFunction":
        return FeFunction(self, np.zeros(self.dim, dtype=dtype))


@dataclass(frozen=True, eq=False)
class SymmetricSparseOperator:
    """Symmetric sparse matrix with a role tag and a cached factorization."""

    matrix: sp.csr_matrix
    role: str

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    @cached_property
    def _lu(self):
        try:
            return spla.splu(self.matrix.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"factorization of {self.role} operator failed: {exc}") from exc

    def solve(self, b, rtol: float = 1e-12):
        """Solve ``matrix @ x = b`` and check the relative residual."""
        b = np.asarray(b)
        if not np.any(b):
            return np.zeros_like(b, dtype=np.result_type(b, float))
        lu = self._lu
        if np.iscomplexobj(b):
            x = lu.solve(np.ascontiguousarray(b.real)) + 1j * lu.solve(np.ascontiguousarray(b.imag))
        else:
            x = lu.solve(b)
        res = np.linalg.norm(self.matrix @ x - b) / np.linalg.norm(b)
        if not res <= rtol:
            raise SolverError(f"{self.role} solve residual {res:.3e} exceeds {rtol:.1e}")
        return x


def _assemble(space: FeSpace, local: np.ndarray, full: bool, role: str) -> SymmetricSparseOperator:
    local = 0.5 * (local + local.transpose(0, 2, 1))
    dofs = space.cell_dofs
    nloc = dofs.shape[1]
    rows = np.repeat(dofs, nloc, axis=1).ravel()
    cols = np.tile(dofs, (1, nloc)).ravel()
    # coo -> csr sums duplicates in input order, which is cell-index order
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(space.n_dofs,) * 2).tocsr()
    if not full:
        mat = mat[space.free][:, space.free].tocsr()
    mat.sort_indices()
    return SymmetricSparseOperator(mat, role)


def assemble_mass(space: FeSpace, full: bool = False) -> SymmetricSparseOperator:
    """Mass matrix ``M_ij = (phi_j, phi_i)`` with a degree ``2r`` rule."""
    _, w, vals, _ = space.quadrature(2 * space.r)
    local = np.einsum("cq,qi,qj->cij", w, vals, vals)
    return _assemble(space, local, full, "mass")


def assemble_stiffness(space: FeSpace, full: bool = False) -> SymmetricSparseOperator:
    """Stiffness matrix ``A_ij = (grad phi_j, grad phi_i)``."""
    _, w, _, grads = space.quadrature(max(2 * space.r - 2, 1))
    local = np.einsum("cq,cqid,cqjd->cij", w, grads, grads)
    return _assemble(space, local, full, "stiffness")


def assemble_weighted_mass(space: FeSpace, weight, power: float = 1.0,
                           full: bool = False, degree: int | None = None) -> SymmetricSparseOperator:
    """``W_ij = integral of weight(x)**power phi_i phi_j``.

    ``weight`` is a callable ``weight(x, y)``; it must be strictly positive
    at every quadrature point.
    """
    deg = 2 * space.r + 2 if degree is None else degree
    pts, w, vals, _ = space.quadrature(deg)
    wv = np.asarray(weight(pts[..., 0], pts[..., 1]), dtype=float)
    wv = np.broadcast_to(wv, w.shape)
    if np.any(~(wv > 0)):
        raise ValueError("weight must be strictly positive on the domain")
    local = np.einsum("cq,qi,qj->cij", w * wv ** power, vals, vals)
    return _assemble(space, local, full, "weighted mass")


def load_vector(space: FeSpace, f, degree: int | None = None, full: bool = False) -> np.ndarray:
    """``b_i = integral of f phi_i`` for a callable ``f(x, y)``."""
    deg = 2 * space.r + 2 if degree is None else degree
    pts, w, vals, _ = space.quadrature(deg)
    fv = np.broadcast_to(np.asarray(f(pts[..., 0], pts[..., 1])), w.shape)
    local = np.einsum("cq,qi->ci", w * fv, vals)
    b = np.zeros(space.n_dofs, dtype=local.dtype)
    np.add.at(b, space.cell_dofs, local)
    return b if full else b[space.free]


def _gradient_load(space: FeSpace, grad, degree: int | None = None) -> np.ndarray:
    deg = 2 * space.r + 2 if degree is None else degree
    pts, w, _, grads = space.quadrature(deg)
    gx, gy = grad(pts[..., 0], pts[..., 1])
    g = np.stack(np.broadcast_arrays(gx, gy), axis=-1)
    local = np.einsum("cq,cqd,cqid->ci", w, g, grads)
    b = np.zeros(space.n_dofs, dtype=local.dtype)
    np.add.at(b, space.cell_dofs, local)
    return b[space.free]


@dataclass(frozen=True, eq=False)
class FeFunction:
    """Coefficient vector over the interior dofs of ``space``."""

    space: FeSpace
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != (self.space.dim,):
            raise ValueError(f"expected {self.space.dim} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.coeffs)

    def full_coeffs(self) -> np.ndarray:
        out = np.zeros(self.space.n_dofs, dtype=self.coeffs.dtype)
        out[self.space.free] = self.coeffs
        return out

    def __call__(self, x, y=None):
        """Evaluate at one point ``(x, y)``."""
        p = np.asarray(x if y is None else (x, y), dtype=float)
        return self.space.basis_at(p) @ self.coeffs

    def __add__(self, other):
        return FeFunction(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return FeFunction(self.space, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return FeFunction(self.space, a * self.coeffs)

    __rmul__ = __mul__

    def to_text(self) -> str:
        """Text form: space descriptor, mesh, then one coefficient per line."""
        from .reporting import fefunction_to_text

        return fefunction_to_text(self)


def interpolate_nodal(space: FeSpace, f) -> FeFunction:
    """Nodal interpolant ``i_h f``; boundary values of ``f`` are dropped."""
    xy = space.dof_coords[space.free]
    vals = np.asarray(f(xy[:, 0], xy[:, 1]))
    return FeFunction(space, np.broadcast_to(vals, (space.dim,)).copy())


def project_l2(space: FeSpace, f, degree: int | None = None) -> FeFunction:
    """L2 projection ``P_h f`` of a callable or an ``FeFunction``."""
    if isinstance(f, FeFunction):
        b = space.mass @ f.coeffs
    else:
        b = load_vector(space, f, degree)
    return FeFunction(space, space.mass.solve(b))


def project_ritz(space: FeSpace, f, grad=None, degree: int | None = None) -> FeFunction:
    """Ritz projection ``R_h f``.

    ``f`` is an ``FeFunction`` or a callable with gradient callable ``grad``
    returning ``(df/dx, df/dy)``.
    """
    if isinstance(f, FeFunction):
        b = space.stiffness @ f.coeffs
    else:
        if grad is None:
            raise ValueError("project_ritz needs the gradient of a callable f")
        b = _gradient_load(space, grad, degree)
    return FeFunction(space, space.stiffness.solve(b))


def apply_discrete_laplacian(space: FeSpace, v: FeFunction) -> FeFunction:
    """``Delta_h v``: the ``w`` with ``M w = -A v``."""
    return FeFunction(space, space.mass.solve(-(space.stiffness @ v.coeffs)))


def norms(v: FeFunction, weight=None, N: int = 2, density: int = 10) -> dict:
    """Norms of a finite element function.

    Returns ``l1``, ``l2``, ``linf``, ``h1_semi`` and, when ``weight`` (the
    weight sigma) is given, ``weighted_l2 = ||sigma^{N/2} v||``.  For ``r=1``
    ``linf`` is exact (the max nodal value); for ``r=2`` it is sampled on the
    barycentric lattice of the given density, reported as ``linf_density``.
    """
    space = v.space
    c = v.coeffs
    out = {
        "l2": float(np.sqrt(abs(np.vdot(c, space.mass @ c)))),
        "h1_semi": float(np.sqrt(abs(np.vdot(c, space.stiffness @ c)))),
    }
    deg = space.r + 4
    _, w, _, _ = space.quadrature(deg)
    vals = space.quadrature_evaluation(deg) @ c
    out["l1"] = float(np.sum(w.ravel() * np.abs(vals)))
    if space.r == 1:
        out["linf"] = float(np.max(np.abs(c), initial=0.0))
        out["linf_density"] = 0
    else:
        _, E = space.lattice(density)
        out["linf"] = float(np.max(np.abs(E @ c), initial=0.0))
        out["linf_density"] = density
    if weight is not None:
        W = assemble_weighted_mass(space, weight, power=N)
        out["weighted_l2"] = float(np.sqrt(abs(np.vdot(c, W @ c))))
    return out
