"""Regularization devices: weight sigma, smoothed deltas in space and time, cutoff.

``WeightSigma`` is ``sqrt(|x - x0|^2 + K^2 h^2)``.  ``SmoothedDelta`` is
the L2(cell) Riesz representer of point evaluation at ``x0`` among
polynomials of degree ``r`` on the host cell.  ``TimeDelta`` is the
analogous representer of evaluation at a time in one interval.
``CutoffOmega`` equals 1 on ``B_d(x0)`` and 0 outside ``B_2d(x0)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .fem import FeFunction, FeSpace, assemble_weighted_mass
from .mesh import DomainError, locate_cell
from .quadrature import barycentric_lattice, collapsed_rule, gauss_legendre, triangle_rule

__all__ = [
    "WeightSigma",
    "SmoothedDelta",
    "TimeDelta",
    "CutoffOmega",
    "build_smoothed_delta",
    "build_time_delta",
    "sigma_properties_check",
    "superapprox_residual",
    "sigma_delta_norms",
]


@dataclass(frozen=True)
class WeightSigma:
    """``sigma(x) = sqrt(|x - x0|^2 + K^2 h^2)``."""

    x0: tuple
    K: float
    h: float
    N: int = 2

    def __post_init__(self):
        if not (self.K > 0 and self.h > 0):
            raise ValueError("K and h must be positive")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))

    @property
    def floor(self) -> float:
        """The minimum value ``K h``, attained at ``x0``."""
        return self.K * self.h

    def __call__(self, x, y):
        return np.sqrt((x - self.x0[0]) ** 2 + (y - self.x0[1]) ** 2 + self.floor ** 2)

    def gradient(self, x, y):
        s = self(x, y)
        return (x - self.x0[0]) / s, (y - self.x0[1]) / s

    def power(self, p):
        """Callable ``x, y -> sigma(x, y)**p``."""
        return lambda x, y: self(x, y) ** p


def _monomials(r, X, Y):
    cols = [np.ones_like(X), X, Y]
    if r >= 2:
        cols += [X * X, X * Y, Y * Y]
    return np.stack(cols, axis=-1)


def _monomial_gradients(r, X, Y, scale):
    one, zero = np.ones_like(X), np.zeros_like(X)
    gx = [zero, one, zero]
    gy = [zero, zero, one]
    if r >= 2:
        gx += [2 * X, Y, zero]
        gy += [zero, X, 2 * Y]
    return np.stack(gx, axis=-1) / scale, np.stack(gy, axis=-1) / scale


@dataclass(frozen=True, eq=False)
class SmoothedDelta:
    """One-cell-supported representer of point evaluation at ``x0``.

    Stored as coefficients in an L2(cell)-orthonormal basis ``psi`` of
    degree-``r`` polynomials, built from centered, scaled monomials by a
    Cholesky factor of their Gram matrix.
    """

    space: FeSpace
    x0: tuple
    cell: int
    r: int
    center: np.ndarray = field(repr=False)
    scale: float = field(repr=False)
    chol: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    amplitude: float = 1.0

    def _local(self, x, y):
        return (x - self.center[0]) / self.scale, (y - self.center[1]) / self.scale

    def _inside(self, x, y, tol=1e-12):
        pts = np.stack(np.broadcast_arrays(x, y), axis=-1)
        lam = self.space.mesh.barycentric(self.cell, pts)
        return np.all(lam >= -tol, axis=-1)

    def orthonormal_basis(self, x, y):
        """Values of ``psi_j`` at ``(x, y)``, last axis indexes ``j``."""
        X, Y = self._local(np.asarray(x, float), np.asarray(y, float))
        p = _monomials(self.r, X, Y)
        flat = p.reshape(-1, p.shape[-1]).T
        return solve_triangular(self.chol, flat, lower=True).T.reshape(p.shape)

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        vals = self.amplitude * self.orthonormal_basis(x, y) @ self.coeffs
        return np.where(self._inside(x, y), vals, 0.0)

    def gradient(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        X, Y = self._local(x, y)
        gx, gy = _monomial_gradients(self.r, X, Y, self.scale)
        c = self.amplitude * solve_triangular(self.chol, self.coeffs, lower=True, trans="T")
        inside = self._inside(x, y)
        return np.where(inside, gx @ c, 0.0), np.where(inside, gy @ c, 0.0)

    def scaled(self, a: float) -> "SmoothedDelta":
        """``a * delta``; ``a = 0`` gives the zero function."""
        return SmoothedDelta(self.space, self.x0, self.cell, self.r, self.center,
                             self.scale, self.chol, self.coeffs, self.amplitude * a)

    def cell_quadrature(self, degree: int = 12):
        """Physical points and weights of a rule on the host cell."""
        ref, w = collapsed_rule(degree) if degree > 6 else triangle_rule(degree)
        pts = self.space.map_points(ref)[self.cell]
        return pts, w * 2.0 * self.space.mesh.areas[self.cell]

    def load_vector(self) -> np.ndarray:
        """``(delta, phi_i)`` for every free basis function."""
        space = self.space
        pts, w = self.cell_quadrature(2 * space.r)
        from .fem import shape_functions

        ref, _ = triangle_rule(2 * space.r)
        vals, _ = shape_functions(space.r, ref)
        local = (w * self(pts[:, 0], pts[:, 1])) @ vals
        b = np.zeros(space.dim)
        cols = space.full_to_free[space.cell_dofs[self.cell]]
        keep = cols >= 0
        b[cols[keep]] = local[keep]
        return b

    def projection(self) -> FeFunction:
        """``P_h delta``."""
        return FeFunction(self.space, self.space.mass.solve(self.load_vector()))

    def norms(self, density: int = 20) -> dict:
        """``l1``, ``l2`` and sampled ``linf`` norms."""
        pts, w = self.cell_quadrature(2 * self.r + 6)
        v = self(pts[:, 0], pts[:, 1])
        lat = self.space.map_points(barycentric_lattice(density))[self.cell]
        return {
            "l1": float(np.sum(w * np.abs(v))),
            "l2": float(np.sqrt(np.sum(w * v * v))),
            "linf": float(np.max(np.abs(self(lat[:, 0], lat[:, 1])))),
        }


def build_smoothed_delta(space: FeSpace, x0, r: int | None = None) -> SmoothedDelta:
    """Smoothed delta at ``x0`` of degree ``r`` (default: the space order).

    Raises
    ------
    DomainError
        If ``x0`` lies on the boundary or outside the domain.
    """
    mesh = space.mesh
    x0 = np.asarray(x0, dtype=float)
    r = space.r if r is None else r
    cell = locate_cell(mesh, x0)
    if mesh.on_boundary(x0):
        raise DomainError(f"x0 = {tuple(x0.tolist())} lies on the boundary")
    verts = mesh.vertices[mesh.cells[cell]]
    center = verts.mean(axis=0)
    scale = float(mesh.diameters[cell])
    ref, w = triangle_rule(2 * r)
    pts = space.map_points(ref)[cell]
    w = w * 2.0 * mesh.areas[cell]
    X, Y = (pts[:, 0] - center[0]) / scale, (pts[:, 1] - center[1]) / scale
    P = _monomials(r, X, Y)
    gram = (P * w[:, None]).T @ P
    chol = np.linalg.cholesky(gram)
    p0 = _monomials(r, *((x0 - center) / scale))
    coeffs = solve_triangular(chol, p0, lower=True)
    return SmoothedDelta(space, tuple(x0.tolist()), cell, r, center, scale, chol, coeffs)


@dataclass(frozen=True, eq=False)
class TimeDelta:
    """Polynomial representer of evaluation at ``t_tilde`` on one interval.

    ``theta(t) = sum_j L_j(t_tilde) L_j(t) / ||L_j||^2`` with Legendre
    polynomials ``L_j`` mapped to the interval.
    """

    interval: int  # 1-based
    a: float
    b: float
    t_tilde: float
    q: int
    coeffs: np.ndarray = field(repr=False)

    @property
    def length(self) -> float:
        return self.b - self.a

    def _s(self, t):
        return 2.0 * (np.asarray(t, float) - self.a) / self.length - 1.0

    def __call__(self, t):
        t = np.asarray(t, float)
        vals = np.polynomial.legendre.legval(self._s(t), self.coeffs)
        return np.where((t > self.a) & (t <= self.b), vals, 0.0)

    def moments(self, fn, n: int | None = None) -> float:
        """``(theta, fn)`` over the interval by Gauss quadrature."""
        s, w = gauss_legendre(n or self.q + 8)
        t = self.a + 0.5 * (s + 1.0) * self.length
        return float(0.5 * self.length * np.sum(w * np.polynomial.legendre.legval(s, self.coeffs) * fn(t)))

    def l1_norm(self, n: int = 200) -> float:
        s, w = gauss_legendre(n)
        return float(0.5 * self.length * np.sum(w * np.abs(np.polynomial.legendre.legval(s, self.coeffs))))


def build_time_delta(partition, t_tilde: float, q: int, interval: int | None = None) -> TimeDelta:
    """Time delta at ``t_tilde`` of degree ``q`` on ``interval`` (default: the last).

    Intervals are half open, ``(t_{m-1}, t_m]``.
    """
    nodes = partition.nodes
    m = len(nodes) - 1 if interval is None else int(interval)
    if not 1 <= m < len(nodes):
        raise ValueError(f"interval index {m} out of range 1..{len(nodes) - 1}")
    a, b = float(nodes[m - 1]), float(nodes[m])
    if not a < t_tilde <= b:
        raise ValueError(f"t_tilde={t_tilde} is outside the interval I_{m} = ({a}, {b}]")
    k = b - a
    s0 = 2.0 * (t_tilde - a) / k - 1.0
    j = np.arange(q + 1)
    Lj = np.array([np.polynomial.legendre.legval(s0, np.eye(q + 1)[i]) for i in j])
    coeffs = Lj * (2 * j + 1) / k
    return TimeDelta(m, a, b, float(t_tilde), q, coeffs)


def _smootherstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def _smootherstep_d1(t):
    t = np.clip(t, 0.0, 1.0)
    return 30.0 * t * t * (1.0 - t) ** 2


def _smootherstep_d2(t):
    inside = (t > 0) & (t < 1)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t), 0.0)


@dataclass(frozen=True)
class CutoffOmega:
    """Radial cutoff: 1 on ``B_d(x0)``, 0 outside ``B_2d(x0)``, C2 quintic blend."""

    x0: tuple
    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("radius d must be positive")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))

    def _rho(self, x, y):
        return np.hypot(x - self.x0[0], y - self.x0[1])

    def profile(self, rho):
        return 1.0 - _smootherstep(rho / self.d - 1.0)

    def __call__(self, x, y):
        return self.profile(self._rho(x, y))

    def gradient(self, x, y):
        rho = self._rho(x, y)
        dprof = -_smootherstep_d1(rho / self.d - 1.0) / self.d
        safe = np.where(rho > 0, rho, 1.0)
        return dprof * (x - self.x0[0]) / safe, dprof * (y - self.x0[1]) / safe

    def hessian(self, x, y):
        """``(H_xx, H_xy, H_yy)``."""
        rho = self._rho(x, y)
        t = rho / self.d - 1.0
        d1 = -_smootherstep_d1(t) / self.d
        d2 = -_smootherstep_d2(t) / self.d ** 2
        safe = np.where(rho > 0, rho, 1.0)
        ex, ey = (x - self.x0[0]) / safe, (y - self.x0[1]) / safe
        tang = np.where(rho > 0, d1 / safe, 0.0)
        return (d2 * ex * ex + tang * (1 - ex * ex),
                d2 * ex * ey - tang * ex * ey,
                d2 * ey * ey + tang * (1 - ey * ey))

    def laplacian(self, x, y):
        hxx, _, hyy = self.hessian(x, y)
        return hxx + hyy

    def constants(self, samples: int = 2001) -> dict:
        """Recorded ``C`` in ``|grad w| <= C/d`` and ``|D^2 w| <= C/d^2``."""
        rho = np.linspace(self.d, 2 * self.d, samples)
        x = self.x0[0] + rho
        y = np.full_like(x, self.x0[1])
        gx, gy = self.gradient(x, y)
        hxx, hxy, hyy = self.hessian(x, y)
        # spectral norm of the symmetric 2x2 Hessian
        mean = 0.5 * (hxx + hyy)
        rad = np.sqrt((0.5 * (hxx - hyy)) ** 2 + hxy ** 2)
        hess = np.max(np.abs(mean) + rad)
        return {"grad": float(np.max(np.hypot(gx, gy)) * self.d),
                "hessian": float(hess * self.d ** 2)}


def _point_triangle_distance(p, tri):
    """Euclidean distance from ``p`` to the closed triangle ``tri`` (3x2)."""
    a, b, c = tri
    v0, v1 = b - a, c - a
    mat = np.column_stack([v0, v1])
    lam = np.linalg.solve(mat, p - a)
    if lam[0] >= 0 and lam[1] >= 0 and lam.sum() <= 1:
        return 0.0
    best = np.inf
    for s, e in ((a, b), (b, c), (c, a)):
        d = e - s
        t = np.clip(np.dot(p - s, d) / np.dot(d, d), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(p - (s + t * d))))
    return best


def sigma_properties_check(w: WeightSigma, space: FeSpace, bounds: dict | None = None,
                           degree: int = 14) -> dict:
    """Measure the defining properties of sigma on ``space.mesh``.

    Returns the normalized ``||sigma^{-N/2}||_L2 / (1 + |ln h|)^{1/2}``,
    ``max |grad sigma|`` and the largest per-cell ratio ``max sigma / min sigma``
    (exact: the max of a convex function on a triangle is at a vertex, the
    min is at the closest point to ``x0``), each with a pass flag.
    """
    bounds = {"inv_norm": 4.0, "grad": 1.0, "cell_ratio": 1.0 + 1.0 / w.K, **(bounds or {})}
    mesh = space.mesh
    ref, wq = collapsed_rule(degree)
    pts = space.map_points(ref)
    weights = 2.0 * mesh.areas[:, None] * wq[None, :]
    sig = w(pts[..., 0], pts[..., 1])
    inv_sq = float(np.sum(weights * sig ** (-float(w.N))))
    inv_norm = np.sqrt(inv_sq) / np.sqrt(1.0 + abs(np.log(w.h)))

    gx, gy = w.gradient(pts[..., 0], pts[..., 1])
    vx, vy = mesh.vertices[:, 0], mesh.vertices[:, 1]
    gvx, gvy = w.gradient(vx, vy)
    grad_max = float(max(np.hypot(gx, gy).max(), np.hypot(gvx, gvy).max()))

    x0 = np.asarray(w.x0)
    vert_sigma = w(vx, vy)[mesh.cells]
    smax = vert_sigma.max(axis=1)
    tri = mesh.vertices[mesh.cells]
    dist = np.array([_point_triangle_distance(x0, t) for t in tri])
    smin = np.sqrt(dist ** 2 + w.floor ** 2)
    ratio = float(np.max(smax / smin))
    return {
        "K": w.K, "h": w.h,
        "inv_norm_sq": inv_sq,
        "inv_norm_normalized": float(inv_norm),
        "inv_norm_pass": bool(inv_norm <= bounds["inv_norm"]),
        "grad_max": grad_max,
        "grad_pass": bool(grad_max <= bounds["grad"]),
        "cell_ratio": ratio,
        "cell_ratio_pass": bool(ratio <= bounds["cell_ratio"]),
    }


def superapprox_residual(space: FeSpace, w: WeightSigma, alpha: float, beta: float,
                         v: FeFunction, degree: int = 10) -> tuple[float, float]:
    """Weighted superapproximation ratios for the nodal interpolant.

    Returns ``(||sigma^a (I - i_h)(sigma^b v)|| / (h ||sigma^{a+b-1} v||),
    ||sigma^a grad (I - i_h)(sigma^b v)|| / ||sigma^{a+b-1} v||)``.
    """
    ref, wq = collapsed_rule(degree)
    pts = space.map_points(ref).reshape(-1, 2)
    weights = (2.0 * space.mesh.areas[:, None] * wq[None, :]).ravel()
    x, y = pts[:, 0], pts[:, 1]
    E = space.evaluation_matrix(ref, key=("collapsed", degree))
    Ex = space.evaluation_matrix(ref, key=("collapsed", degree), derivative=0)
    Ey = space.evaluation_matrix(ref, key=("collapsed", degree), derivative=1)
    c = v.coeffs
    vq, vxq, vyq = E @ c, Ex @ c, Ey @ c
    sig = w(x, y)
    sx, sy = w.gradient(x, y)

    dof = space.dof_coords[space.free]
    nodal = w(dof[:, 0], dof[:, 1]) ** beta * c
    iq, ixq, iyq = E @ nodal, Ex @ nodal, Ey @ nodal

    sb = sig ** beta
    err = sb * vq - iq
    gxe = beta * sig ** (beta - 1) * sx * vq + sb * vxq - ixq
    gye = beta * sig ** (beta - 1) * sy * vq + sb * vyq - iyq
    sa = sig ** alpha
    num0 = np.sqrt(np.sum(weights * np.abs(sa * err) ** 2))
    num1 = np.sqrt(np.sum(weights * (np.abs(sa * gxe) ** 2 + np.abs(sa * gye) ** 2)))
    den = np.sqrt(np.sum(weights * np.abs(sig ** (alpha + beta - 1) * vq) ** 2))
    if den == 0:
        return 0.0, 0.0
    return float(num0 / (space.h * den)), float(num1 / den)


def sigma_delta_norms(w: WeightSigma, d: SmoothedDelta, space: FeSpace,
                      degree: int = 14) -> tuple[float, float, float]:
    """``(||sigma^{N/2} delta||, h ||sigma^{N/2} grad delta||, ||sigma^{N/2} P_h delta||)``."""
    half = w.N / 2.0
    pts, wq = d.cell_quadrature(degree)
    x, y = pts[:, 0], pts[:, 1]
    s = w(x, y) ** half
    n0 = np.sqrt(np.sum(wq * (s * d(x, y)) ** 2))
    gx, gy = d.gradient(x, y)
    n1 = space.h * np.sqrt(np.sum(wq * s * s * (gx ** 2 + gy ** 2)))
    ph = d.projection().coeffs
    W = assemble_weighted_mass(space, w, power=w.N)
    n2 = np.sqrt(max(float(ph @ (W @ ph)), 0.0))
    return float(n0), float(n1), float(n2)
