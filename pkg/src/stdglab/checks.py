"""Fast exactness checks on a coarse mesh, run by ``stdglab check``."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .fem import (FeFunction, FeSpace, apply_discrete_laplacian, assemble_mass, assemble_stiffness,
                  project_l2, project_ritz)
from .mesh import build_unit_square_mesh
from .mollifiers import build_smoothed_delta, build_time_delta
from .resolvent import opnorm_linf, solve_resolvent
from .spacetime import SpaceTimeFunction, bilinear_form_B, build_partition, rhs_functional, solve_forward

__all__ = ["run_checks"]


def run_checks(n: int = 6, seed: int = 0) -> list:
    """Return ``(name, value, tolerance)`` triples; a check passes when ``value <= tolerance``."""
    rng = np.random.default_rng(seed)
    mesh = build_unit_square_mesh(n)
    space = FeSpace(mesh, 1)
    out = []
    out.append(("mesh area", abs(mesh.area - 1.0), 1e-12))
    out.append(("full mass sums to area", abs(assemble_mass(space, full=True).matrix.sum() - 1.0), 1e-12))
    rows = np.abs(np.asarray(assemble_stiffness(space, full=True).matrix.sum(axis=1))).max()
    out.append(("stiffness row sums", float(rows), 1e-12))

    v = FeFunction(space, rng.standard_normal(space.dim))
    out.append(("P_h idempotent", float(np.abs(project_l2(space, v).coeffs - v.coeffs).max()), 1e-10))
    out.append(("R_h idempotent", float(np.abs(project_ritz(space, v).coeffs - v.coeffs).max()), 1e-10))
    w = FeFunction(space, rng.standard_normal(space.dim))
    lap_sym = abs(apply_discrete_laplacian(space, v).coeffs @ (space.mass @ w.coeffs)
                  - apply_discrete_laplacian(space, w).coeffs @ (space.mass @ v.coeffs))
    out.append(("Delta_h symmetric", float(lap_sym), 1e-10))

    lam, vec = sla.eigh(space.stiffness.toarray(), space.mass.toarray())
    part = build_partition(1.0, 8)
    x = lam[2] * part.k
    for q, exact in ((0, 1 / (1 + x)), (1, (6 - 2 * x) / (6 + 4 * x + x * x))):
        u = solve_forward(part, space, u0=vec[:, 2], q=q)
        fac = u.left(1) @ (space.mass @ vec[:, 2])
        out.append((f"dG({q}) end factor", abs(fac - exact), 1e-12))

    for q in (0, 1):
        a = SpaceTimeFunction(part, space, q, rng.standard_normal((part.M, q + 1, space.dim)))
        b = SpaceTimeFunction(part, space, q, rng.standard_normal((part.M, q + 1, space.dim)))
        diff = abs(bilinear_form_B(a, b) - bilinear_form_B(a, b, "dual"))
        out.append((f"B primal = dual, q={q}", diff / max(1.0, abs(bilinear_form_B(a, b))), 1e-10))
        f = lambda t, x, y: np.cos(t) * x * (1 - x) * y
        u = solve_forward(part, space, f, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y), q)
        out.append((f"Galerkin orthogonality, q={q}", abs(bilinear_form_B(u, b) - rhs_functional(u, b)), 1e-8))

    x0 = np.array([0.41, 0.53])
    d = build_smoothed_delta(space, x0)
    pts, wq = d.cell_quadrature(6)
    X, Y = pts[:, 0], pts[:, 1]
    moments = max(abs(np.sum(wq * d(X, Y) * p) - p0) for p, p0 in
                  ((1.0, 1.0), (X, x0[0]), (Y, x0[1])))
    out.append(("smoothed delta moments", float(moments), 1e-12))
    th = build_time_delta(part, 0.97, 2)
    rep = max(abs(th.moments(lambda t, j=j: t ** j) - 0.97 ** j) for j in range(3))
    out.append(("time delta reproduction", float(rep), 1e-12))

    z = complex(-3.0, 4.0)
    chi = FeFunction(space, rng.standard_normal(space.dim))
    z2 = complex(-10.0, 0.0)
    u1, u2 = solve_resolvent(space, z, chi), solve_resolvent(space, z2, chi)
    u12 = solve_resolvent(space, z, FeFunction(space, u2.coeffs))
    ident = np.abs(u1.coeffs - u2.coeffs - (z2 - z) * u12.coeffs).max()
    out.append(("first resolvent identity", float(ident), 1e-8))
    conj = abs(opnorm_linf(space, z) - opnorm_linf(space, z.conjugate()))
    out.append(("L-inf norm conjugation symmetry", float(conj), 1e-12))
    return out
