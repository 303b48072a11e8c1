"""Conforming triangulations of convex polygons.

The default domain is the unit square, built as a structured family of
``2 n**2`` right triangles.  Arbitrary convex polygons are triangulated
from their vertex list and refined uniformly.

Examples
--------
>>> m = build_unit_square_mesh(4)
>>> m.n_cells, round(m.h, 12)
(32, 0.353553390593)
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

__all__ = [
    "DomainError",
    "Mesh",
    "build_unit_square_mesh",
    "build_polygon_mesh",
    "refine_uniform",
    "locate_cell",
]

# local edges of a triangle, in the order used by P2 edge dofs
LOCAL_EDGES = np.array([[0, 1], [1, 2], [0, 2]])


class DomainError(ValueError):
    """A point lies outside the meshed polygon."""


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


class Mesh:
    """Immutable triangulation.

    Parameters
    ----------
    vertices : array_like, shape (nv, 2)
    cells : array_like of int, shape (nc, 3)
        Counterclockwise vertex triples.  Clockwise triples are reoriented.
    polygon : array_like, shape (p, 2), optional
        Boundary polygon (counterclockwise).  Used to check that boundary
        vertices lie on it.
    """

    def __init__(self, vertices, cells, polygon=None):
        vertices = np.asarray(vertices, dtype=float)
        cells = np.array(cells, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError("vertices must have shape (nv, 2)")
        if cells.ndim != 2 or cells.shape[1] != 3:
            raise ValueError("cells must have shape (nc, 3)")
        if not np.all(np.isfinite(vertices)):
            raise ValueError("vertex coordinates must be finite")

        e1 = vertices[cells[:, 1]] - vertices[cells[:, 0]]
        e2 = vertices[cells[:, 2]] - vertices[cells[:, 0]]
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        flip = cross < 0
        cells[flip] = cells[flip][:, [0, 2, 1]]
        area = 0.5 * np.abs(cross)
        if np.any(area <= 0):
            raise ValueError("degenerate cell with zero area")

        self.vertices = _frozen(vertices, float)
        self.cells = _frozen(cells, np.int64)
        self.areas = _frozen(area, float)

        p = self.vertices[self.cells]
        sides = np.stack([
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 0], axis=1),
        ], axis=1)
        self.diameters = _frozen(sides.max(axis=1), float)

        # edges: unique sorted vertex pairs
        local = self.cells[:, LOCAL_EDGES]  # (nc, 3, 2)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse, counts = np.unique(
            pairs, axis=0, return_inverse=True, return_counts=True)
        self.edges = _frozen(edges, np.int64)
        self.cell_edges = _frozen(inverse.reshape(-1, 3), np.int64)
        if np.any(counts > 2):
            raise ValueError("non-conforming mesh: an edge is shared by more than two cells")
        self.edge_cell_counts = _frozen(counts, np.int64)
        self.boundary_edges = _frozen(np.flatnonzero(counts == 1), np.int64)
        bmask = np.zeros(len(self.vertices), dtype=bool)
        bmask[self.edges[self.boundary_edges].ravel()] = True
        self.boundary_vertices = _frozen(bmask, bool)

        if polygon is None:
            polygon = _boundary_polygon(self)
        self.polygon = _frozen(np.asarray(polygon, dtype=float), float)

        # affine maps x = v0 + J xi, stored with their inverses for location
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        self.jacobians = _frozen(jac, float)
        self.inverse_jacobians = _frozen(np.linalg.inv(jac), float)

    # -- scalar summaries -------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        """Global mesh size, the largest cell diameter."""
        return float(self.diameters.max())

    @property
    def quasi_uniformity(self) -> float:
        """max over cells of h_cell / |cell|^(1/2), recorded at construction."""
        return float(np.max(self.diameters / np.sqrt(self.areas)))

    @property
    def global_quasi_uniformity(self) -> float:
        """Smallest ``C`` with ``h <= C |cell|^(1/2)`` for every cell."""
        return float(self.h / np.sqrt(self.areas.min()))

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @property
    def barycenters(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    def validate(self, max_quasi_uniformity: float = 10.0) -> None:
        """Raise ``ValueError`` if the mesh violates its structural invariants."""
        if np.any(self.edge_cell_counts > 2):
            raise ValueError("edge shared by more than two cells")
        bverts = np.flatnonzero(self.boundary_vertices)
        dist = _distance_to_polygon_boundary(self.vertices[bverts], self.polygon)
        if np.any(dist > 1e-10 * max(1.0, np.abs(self.polygon).max())):
            raise ValueError("boundary vertex not on the polygon boundary")
        poly_area = _polygon_area(self.polygon)
        if abs(self.area - poly_area) > 1e-12 * poly_area:
            raise ValueError("cells do not cover the polygon")
        if self.quasi_uniformity > max_quasi_uniformity:
            raise ValueError(
                f"quasi-uniformity constant {self.quasi_uniformity:.3g} "
                f"exceeds bound {max_quasi_uniformity:.3g}")

    # -- geometry queries -------------------------------------------------
    def barycentric(self, cell: int, points) -> np.ndarray:
        """Barycentric coordinates of ``points`` (shape (..., 2)) in ``cell``."""
        points = np.asarray(points, dtype=float)
        xi = (points - self.vertices[self.cells[cell, 0]]) @ self.inverse_jacobians[cell].T
        return np.concatenate([1.0 - xi.sum(axis=-1, keepdims=True), xi], axis=-1)

    def contains(self, point, tol: float = 1e-12) -> bool:
        """True if ``point`` lies in the closed polygon."""
        point = np.asarray(point, dtype=float)
        poly = self.polygon
        nxt = np.roll(poly, -1, axis=0)
        edge = nxt - poly
        rel = point - poly
        cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
        scale = np.linalg.norm(edge, axis=1)
        return bool(np.all(cross >= -tol * scale))

    def on_boundary(self, point, tol: float = 1e-12) -> bool:
        d = _distance_to_polygon_boundary(np.atleast_2d(point), self.polygon)[0]
        return bool(d <= tol)

    def __repr__(self) -> str:
        return f"Mesh(n_vertices={self.n_vertices}, n_cells={self.n_cells}, h={self.h:.4g})"

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        """Plain-text form: a vertex block followed by a cell block."""
        lines = [f"vertices {self.n_vertices}"]
        lines += [f"{x!r} {y!r}" for x, y in self.vertices.tolist()]
        lines.append(f"cells {self.n_cells}")
        lines += [f"{a} {b} {c}" for a, b, c in self.cells.tolist()]
        lines.append(f"polygon {len(self.polygon)}")
        lines += [f"{x!r} {y!r}" for x, y in self.polygon.tolist()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Mesh":
        tokens = iter(text.split("\n"))

        def block(name, conv):
            head = next(tokens).split()
            if head[0] != name:
                raise ValueError(f"expected '{name}' block, got '{head[0]}'")
            return [list(map(conv, next(tokens).split())) for _ in range(int(head[1]))]

        verts = block("vertices", float)
        cells = block("cells", int)
        try:
            poly = block("polygon", float)
        except StopIteration:
            poly = None
        return cls(verts, cells, polygon=poly)

    def write_vtk(self, path, point_data=None, cell_data=None, title="stdglab mesh"):
        """Write a legacy ASCII VTK unstructured grid."""
        from .reporting import write_vtk_triangles

        write_vtk_triangles(path, self.vertices, self.cells,
                            point_data=point_data, cell_data=cell_data, title=title)


def _polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _distance_to_polygon_boundary(points, poly):
    points = np.atleast_2d(points)
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    t = np.einsum("pkd,kd->pk", points[:, None, :] - a[None], ab) / np.einsum("kd,kd->k", ab, ab)
    t = np.clip(t, 0.0, 1.0)
    proj = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(points[:, None, :] - proj, axis=2).min(axis=1)


def _boundary_polygon(mesh):
    """Corner points of the boundary loop, counterclockwise."""
    bedges = mesh.edges[mesh.boundary_edges]
    # orient boundary edges along their cell's counterclockwise order
    nxt = {}
    for c, le in zip(*np.nonzero(np.isin(mesh.cell_edges, mesh.boundary_edges))):
        i, j = mesh.cells[c, LOCAL_EDGES[le]]
        if le == 2:  # local edge (0, 2) runs clockwise inside the cell
            i, j = j, i
        nxt[i] = j
    if not nxt:
        return np.zeros((0, 2))
    start = min(nxt)
    loop = [start]
    while True:
        v = nxt[loop[-1]]
        if v == start:
            break
        loop.append(v)
        if len(loop) > len(bedges):
            raise ValueError("boundary is not a single closed loop")
    pts = mesh.vertices[loop]
    prev = np.roll(pts, 1, axis=0)
    post = np.roll(pts, -1, axis=0)
    d1, d2 = pts - prev, post - pts
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    scale = np.linalg.norm(d1, axis=1) * np.linalg.norm(d2, axis=1)
    return pts[np.abs(cross) > 1e-12 * scale]


def build_unit_square_mesh(n: int) -> Mesh:
    """Structured mesh of ``[0, 1]^2`` with ``2 n^2`` triangles, ``h = sqrt(2)/n``.

    Every square of the ``n x n`` grid is cut along its south-west to
    north-east diagonal, so all cells are congruent.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    v00 = (j * (n + 1) + i).ravel()
    v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return Mesh(vertices, cells, polygon=square)


def build_polygon_mesh(polygon, levels: int = 0) -> Mesh:
    """Triangulate a convex polygon from its vertex list, then refine.

    The initial triangulation is the Delaunay triangulation of the polygon
    corners, which covers a convex polygon exactly.
    """
    poly = np.asarray(polygon, dtype=float)
    if len(poly) < 3:
        raise ValueError("a polygon needs at least three vertices")
    if _signed_area(poly) < 0:
        poly = poly[::-1]
    nxt = np.roll(poly, -1, axis=0)
    prv = np.roll(poly, 1, axis=0)
    d1, d2 = poly - prv, nxt - poly
    if np.any(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0):
        raise ValueError("polygon is not convex")
    tri = Delaunay(poly)
    mesh = Mesh(poly, tri.simplices, polygon=poly)
    for _ in range(levels):
        mesh = refine_uniform(mesh)
    return mesh


def _signed_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into four similar ones through its edge midpoints."""
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    nv = mesh.n_vertices
    v = mesh.cells
    m01, m12, m02 = (nv + mesh.cell_edges[:, k] for k in range(3))
    children = np.stack([
        np.column_stack([v[:, 0], m01, m02]),
        np.column_stack([m01, v[:, 1], m12]),
        np.column_stack([m02, m12, v[:, 2]]),
        np.column_stack([m01, m12, m02]),
    ], axis=1).reshape(-1, 3)
    return Mesh(vertices, children, polygon=mesh.polygon)


def locate_cell(mesh: Mesh, p, tol: float = 1e-12) -> int:
    """Index of a cell whose closed triangle contains ``p``.

    Ties on shared edges or vertices go to the lowest cell index.

    Raises
    ------
    DomainError
        If ``p`` is outside the polygon.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise ValueError(f"expected a finite 2D point, got {p!r}")
    xi = np.einsum("cij,cj->ci", mesh.inverse_jacobians,
                   p[None, :] - mesh.vertices[mesh.cells[:, 0]])
    lam = np.column_stack([1.0 - xi.sum(axis=1), xi])
    hits = np.flatnonzero(np.all(lam >= -tol, axis=1))
    if len(hits) == 0:
        raise DomainError(f"point {tuple(p.tolist())} lies outside the domain")
    return int(hits[0])
