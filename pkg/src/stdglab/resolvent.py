"""Shifted complex solves for ``(z + Delta_h)^{-1}`` and measured resolvent norms.

With free-dof matrices ``M`` (mass) and ``A`` (stiffness), ``u = (z + Delta_h)^{-1} chi``
solves ``(z M - A) U = M X``.  Both matrices are real and symmetric, so the
resolvent at ``conj(z)`` is the complex conjugate of the resolvent at ``z``;
norms are therefore always computed at the representative with ``Im z >= 0``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .fem import FeFunction, FeSpace, SolverError, assemble_weighted_mass
from .quadrature import collapsed_rule

__all__ = [
    "ResolventError",
    "SectorSample",
    "ResolventReport",
    "ShiftedSystem",
    "solve_resolvent",
    "opnorm_linf",
    "opnorm_weighted",
    "green_resolvent_l3",
    "sweep_sector",
    "RESOLVENT_COLUMNS",
]

RESOLVENT_COLUMNS = [
    "gamma", "arg_z", "abs_z", "norm_linf", "norm_weighted", "abs_z_times_norm",
    "normalized_by_log", "flag", "abs_z_times_linf", "linf_normalized_by_log", "linf_kind",
    "h", "r", "K", "iterations",
]


class ResolventError(SolverError):
    """A shifted solve is singular or too ill conditioned, or an iteration stalled."""

    def __init__(self, message, condition=None, last_iterate=None):
        super().__init__(message)
        self.condition = condition
        self.last_iterate = last_iterate


def _canonical(z: complex) -> tuple[complex, bool]:
    z = complex(z)
    return (z.conjugate(), True) if z.imag < 0 else (z, False)


class ShiftedSystem:
    """Sparse LU of ``z M - A`` with solves for the matrix and its conjugate transpose."""

    def __init__(self, space: FeSpace, z: complex):
        self.space = space
        self.z = complex(z)
        M, A = space.mass.matrix, space.stiffness.matrix
        self.M = M
        self.matrix = (self.z * M - A).tocsc()
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:
            raise ResolventError(f"z = {self.z!r}: shifted matrix is singular ({exc})",
                                 condition=math.inf) from exc

    def solve(self, b, rtol: float = 1e-10):
        x = self._lu.solve(np.asarray(b, dtype=complex))
        self._check(self.matrix, x, b, rtol)
        return x

    def solve_h(self, b, rtol: float = 1e-10):
        """Solve with the conjugate transpose, i.e. ``(conj(z) M - A) x = b``."""
        x = self._lu.solve(np.asarray(b, dtype=complex), trans="H")
        self._check(self.matrix.conj().T, x, b, rtol)
        return x

    def _check(self, mat, x, b, rtol):
        nb = np.linalg.norm(b)
        if nb == 0:
            return
        res = np.linalg.norm(mat @ x - b) / nb
        if not res <= rtol:
            raise ResolventError(
                f"z = {self.z!r}: relative residual {res:.2e} exceeds {rtol:.0e}; "
                f"condition estimate {self.condition_estimate():.2e}",
                condition=self.condition_estimate())

    def condition_estimate(self) -> float:
        """1-norm condition estimate ``||K||_1 ||K^{-1}||_1``."""
        n = self.matrix.shape[0]
        inv = spla.LinearOperator((n, n), matvec=lambda v: self._lu.solve(np.asarray(v, complex)),
                                  rmatvec=lambda v: self._lu.solve(np.asarray(v, complex), trans="H"),
                                  dtype=complex)
        return float(spla.norm(self.matrix, 1) * spla.onenormest(inv))


def solve_resolvent(space: FeSpace, z: complex, chi: FeFunction, max_condition: float = 1e12,
                    rtol: float = 1e-10) -> FeFunction:
    """``u_h = (z + Delta_h)^{-1} chi``.

    Raises
    ------
    ResolventError
        If ``z M - A`` is singular or its condition estimate exceeds ``max_condition``.
    """
    c = np.asarray(chi.coeffs)
    if not np.any(c):
        return FeFunction(space, np.zeros(space.dim, dtype=complex))
    sys = ShiftedSystem(space, z)
    cond = sys.condition_estimate()
    if not cond <= max_condition:
        raise ResolventError(f"z = {complex(z)!r} is too close to the spectrum of Delta_h: "
                             f"condition estimate {cond:.2e}", condition=cond)
    return FeFunction(space, sys.solve(space.mass @ c, rtol=rtol))


def opnorm_linf(space: FeSpace, z: complex, dof_cap: int = 5000, block: int = 512) -> float:
    """Max absolute row sum of the nodal resolvent matrix ``(z M - A)^{-1} M``.

    For ``r = 1`` this is the exact L-infinity operator norm on ``V_h``; for
    ``r = 2`` it is a nodal-value surrogate.
    """
    if space.dim > dof_cap:
        raise ValueError(f"dense column sweep refused: {space.dim} dofs exceeds the cap {dof_cap}")
    z, _ = _canonical(z)
    sys = ShiftedSystem(space, z)
    M = space.mass.matrix.tocsc()
    rows = np.zeros(space.dim)
    for start in range(0, space.dim, block):
        cols = M[:, start:start + block].toarray().astype(complex)
        rows += np.abs(sys.solve(cols)).sum(axis=1)
    return float(rows.max())


@dataclass
class _PowerResult:
    value: float
    iterations: int
    vector: np.ndarray = field(repr=False)


def _start_vector(n: int) -> np.ndarray:
    # seeded, so runs are reproducible; a constant vector is invariant under
    # mesh symmetries and can miss an antisymmetric top mode entirely
    rng = np.random.default_rng(20240611)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _power_weighted(space, z, W, tol, max_iter) -> _PowerResult:
    sys = ShiftedSystem(space, z)
    M = space.mass.matrix

    def apply(x):
        # W-self-adjoint operator W^{-1} R^H W R with R = (zM - A)^{-1} M
        y = sys.solve(M @ x)
        y = M @ sys.solve_h(W.matrix @ y)
        return W.solve(y, rtol=1e-10)

    x = _start_vector(space.dim)
    x /= math.sqrt(abs(np.vdot(x, W @ x)))
    mu = 0.0
    for it in range(1, max_iter + 1):
        y = apply(x)
        mu_new = float(np.vdot(x, W @ y).real)
        ny = math.sqrt(abs(np.vdot(y, W @ y)))
        if ny == 0:
            return _PowerResult(0.0, it, x)
        # W-norm residual of the Rayleigh pair, relative to mu
        r = y - mu_new * x
        res = math.sqrt(abs(np.vdot(r, W @ r))) / max(mu_new, 1e-300)
        if abs(mu_new - mu) <= tol * mu_new and res <= math.sqrt(tol):
            return _PowerResult(math.sqrt(mu_new), it, y / ny)
        mu = mu_new
        x = y / ny
    raise ResolventError(f"power iteration for z = {z!r} did not converge in {max_iter} iterations "
                         f"(last estimate {math.sqrt(max(mu, 0.0)):.6e})", last_iterate=x)


def _lanczos_weighted(space, z, W, tol, max_iter) -> _PowerResult:
    sys = ShiftedSystem(space, z)
    M = space.mass.matrix
    n = space.dim
    count = [0]

    def matvec(x):
        count[0] += 1
        y = sys.solve(M @ x)
        return M @ sys.solve_h(W.matrix @ y)

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=complex)
    winv = spla.LinearOperator((n, n), matvec=lambda x: W.solve(x, rtol=1e-10), dtype=complex)
    try:
        vals, vecs = spla.eigs(op, k=1, M=W.matrix.astype(complex), Minv=winv, which="LR",
                               v0=_start_vector(n), tol=tol, maxiter=max_iter)
    except spla.ArpackNoConvergence as exc:
        last = exc.eigenvectors[:, 0] if exc.eigenvectors.size else None
        raise ResolventError(f"Lanczos iteration for z = {z!r} did not converge in "
                             f"{max_iter} restarts", last_iterate=last) from exc
    return _PowerResult(math.sqrt(max(float(vals[0].real), 0.0)), count[0], vecs[:, 0])


def opnorm_weighted(space: FeSpace, z: complex, w, tol: float = 1e-8, max_iter: int = 5000,
                    method: str = "lanczos", return_iterations: bool = False):
    """Weighted operator norm ``sup ||sigma^{N/2} R chi|| / ||sigma^{N/2} chi||``.

    The square of the norm is the top eigenvalue of ``R^H W R x = mu W x``.
    ``method="lanczos"`` (default) runs implicitly restarted Arnoldi/Lanczos
    on this Hermitian pencil; ``method="power"`` runs plain power iteration,
    which stalls when the top singular values cluster.  Both start from the
    same seeded random vector.  ``method="dense"`` is limited to 200 dofs.

    ``w`` is a ``WeightSigma`` (or any positive callable, in which case
    ``N = 2``).
    """
    z, _ = _canonical(z)
    N = getattr(w, "N", 2)
    W = assemble_weighted_mass(space, w, power=N)
    if method == "dense":
        if space.dim > 200:
            raise ValueError("dense weighted norm is limited to 200 dofs")
        import scipy.linalg as sla

        Md, Ad, Wd = space.mass.toarray(), space.stiffness.toarray(), W.toarray()
        R = np.linalg.solve(z * Md - Ad, Md)
        mu = sla.eigh(R.conj().T @ Wd @ R, Wd, eigvals_only=True)[-1]
        val = math.sqrt(max(mu, 0.0))
        return (val, 0) if return_iterations else val
    if method == "power":
        res = _power_weighted(space, z, W, tol, max_iter)
    elif method == "lanczos":
        res = _lanczos_weighted(space, z, W, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (res.value, res.iterations) if return_iterations else res.value


def green_resolvent_l3(space: FeSpace, z: complex, d, degree: int = 8) -> float:
    """``||G_h||_{L^3}`` for ``(conj(z) M - A) G = b``, ``b_i = (phi_i, delta)``."""
    b = d.load_vector()
    if not np.any(b):
        return 0.0
    G = ShiftedSystem(space, complex(z).conjugate()).solve(b)
    return l3_norm(space, G, degree)


def l3_norm(space: FeSpace, coeffs, degree: int = 8) -> float:
    ref, wq = collapsed_rule(degree)
    weights = (2.0 * space.mesh.areas[:, None] * wq[None, :]).ravel()
    vals = space.evaluation_matrix(ref, key=("collapsed", degree)) @ coeffs
    return float(np.sum(weights * np.abs(vals) ** 3) ** (1.0 / 3.0))


@dataclass(frozen=True)
class SectorSample:
    """Points ``z`` outside the sector ``|arg z| < gamma``.

    Rays ``arg z = +gamma, -gamma`` plus ``extra_angles`` (default: the
    negative real axis), each sampled at the given moduli.
    """

    gamma: float
    moduli: tuple
    extra_angles: tuple = (math.pi,)

    def __post_init__(self):
        if not 0 < self.gamma < math.pi / 2:
            raise ValueError(f"aperture gamma={self.gamma} must lie in (0, pi/2)")
        mods = tuple(float(m) for m in self.moduli)
        if not mods or min(mods) <= 0:
            raise ValueError("moduli must be strictly positive")
        object.__setattr__(self, "moduli", tuple(sorted(set(mods))))
        angles = tuple(float(a) for a in self.extra_angles)
        for a in angles:
            if abs(a) < self.gamma - 1e-14 or abs(a) > math.pi:
                raise ValueError(f"extra angle {a} lies inside the sector of aperture {self.gamma}")
        object.__setattr__(self, "extra_angles", angles)

    @classmethod
    def log_spaced(cls, gamma=math.pi / 4, lo=-2.0, hi=8.0, per_decade=6, extra_angles=(math.pi,)):
        n = int(round((hi - lo) * per_decade)) + 1
        return cls(gamma, tuple(np.logspace(lo, hi, n)), extra_angles)

    @property
    def angles(self) -> tuple:
        return tuple(sorted(set((-self.gamma, self.gamma) + self.extra_angles)))

    def points(self) -> list:
        """``(angle, modulus, z)`` triples ordered by angle, then modulus."""
        out = []
        for a in self.angles:
            for m in self.moduli:
                z = m * complex(math.cos(a), math.sin(a))
                if a == math.pi:
                    z = complex(-m, 0.0)
                out.append((a, m, z))
        for a, _, z in out:
            assert abs(np.angle(z)) >= self.gamma - 1e-12, "sample point inside the sector"
        return out


@dataclass
class ResolventReport:
    """Per-z rows and the supremum constants over the sample."""

    rows: list
    h: float
    r: int
    gamma: float
    K: float | None = None

    def _sup(self, key):
        vals = [row[key] for row in self.rows if row["flag"] == "ok" and _finite(row[key])]
        return max(vals) if vals else math.nan

    @property
    def M_h_weighted(self) -> float:
        return self._sup("abs_z_times_norm")

    @property
    def M_h_weighted_log(self) -> float:
        return self._sup("normalized_by_log")

    @property
    def M_h_linf(self) -> float:
        return self._sup("abs_z_times_linf")

    @property
    def M_h_linf_log(self) -> float:
        return self._sup("linf_normalized_by_log")

    def summary(self) -> dict:
        return {
            "h": self.h, "r": self.r, "gamma": self.gamma, "K": self.K,
            "n_points": len(self.rows),
            "n_flagged": sum(row["flag"] != "ok" for row in self.rows),
            "M_h_weighted": self.M_h_weighted,
            "M_h_weighted_log": self.M_h_weighted_log,
            "M_h_linf": self.M_h_linf,
            "M_h_linf_log": self.M_h_linf_log,
        }

    def to_csv(self) -> str:
        from .reporting import csv_text

        return csv_text(self.rows, RESOLVENT_COLUMNS)


def _finite(v) -> bool:
    return isinstance(v, float) and math.isfinite(v)


def sweep_sector(space: FeSpace, sample: SectorSample, w=None, linf: bool = True,
                 weighted: bool = True, workers: int = 1, dof_cap: int = 5000,
                 tol: float = 1e-8, max_iter: int = 5000) -> ResolventReport:
    """Measure both resolvent norms at every sample point.

    Each ``z`` with ``Im z < 0`` reuses the values of ``conj(z)``.  Per-z
    failures become flagged rows and the sweep continues.  Rows are ordered
    by ``(angle, modulus)`` regardless of ``workers``.
    """
    h = space.h
    logf = 1.0 + abs(math.log(h))
    pts = sample.points()
    keys = sorted({_canonical(z)[0] for _, _, z in pts}, key=lambda c: (c.real, c.imag))

    def measure(z):
        out = {"norm_linf": math.nan, "norm_weighted": math.nan, "iterations": 0, "flag": "ok"}
        try:
            if linf:
                out["norm_linf"] = opnorm_linf(space, z, dof_cap=dof_cap)
            if weighted and w is not None:
                val, it = opnorm_weighted(space, z, w, tol=tol, max_iter=max_iter,
                                          return_iterations=True)
                out["norm_weighted"], out["iterations"] = val, it
        except (SolverError, ValueError) as exc:
            out["flag"] = f"error: {exc}"
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(zip(keys, pool.map(measure, keys)))
    else:
        results = {z: measure(z) for z in keys}

    rows = []
    kind = "exact" if space.r == 1 else "surrogate"
    for a, m, z in pts:
        res = results[_canonical(z)[0]]
        az = abs(z)
        rows.append({
            "gamma": sample.gamma, "arg_z": a, "abs_z": az,
            "norm_linf": res["norm_linf"], "norm_weighted": res["norm_weighted"],
            "abs_z_times_norm": az * res["norm_weighted"],
            "normalized_by_log": az * res["norm_weighted"] / logf,
            "flag": res["flag"],
            "abs_z_times_linf": az * res["norm_linf"],
            "linf_normalized_by_log": az * res["norm_linf"] / logf,
            "linf_kind": kind if linf else "none",
            "h": h, "r": space.r, "K": getattr(w, "K", math.nan),
            "iterations": res["iterations"],
        })
    return ResolventReport(rows, h, space.r, sample.gamma, getattr(w, "K", None))
