"""Time partitions and the cG(r)dG(q) scheme for the heat equation.

On every interval ``I_m = (t_{m-1}, t_m]`` a discrete function is a Legendre
expansion ``u(t) = sum_j U_j P_j(s)`` with ``s`` the affine image of ``t``
in ``[-1, 1]``, so ``u(t_m^-) = sum_j U_j`` and ``u(t_{m-1}^+) = sum_j (-1)^j U_j``.

The interval system is ``(G kron M + H kron A) U = F + P(-1) kron M u^-_{m-1}``, with

* ``G_ij = int P_j' P_i ds + (-1)^(i+j)``  (time derivative plus upwind jump),
* ``H = diag(k / (2j + 1))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import FeFunction, FeSpace, SolverError, assemble_weighted_mass, load_vector
from .quadrature import gauss_legendre

__all__ = [
    "PartitionError",
    "TimePartition",
    "build_partition",
    "legendre_tables",
    "DgStepSystem",
    "dg_step_forward",
    "SpaceTimeFunction",
    "assemble_source",
    "solve_forward",
    "solve_dual_terminal",
    "solve_dual_source",
    "bilinear_form_B",
    "rhs_functional",
    "regularity_sums",
    "make_norm",
    "chebyshev_times",
]


class PartitionError(ValueError):
    """A time partition violates one of the mesh conditions (i), (ii) or (iii)."""

    def __init__(self, condition: str, index: int, message: str):
        super().__init__(f"condition ({condition}) violated at step {index}: {message}")
        self.condition = condition
        self.index = index


class TimePartition:
    """Nodes ``0 = t_0 < ... < t_M = T`` with the recorded mesh constants.

    Conditions checked: (i) ``k_min >= c k^beta``, (ii) adjacent step ratio
    within ``[1/kappa, kappa]``, (iii) ``k <= T/4``.  Conditions (i) and (ii)
    are only enforced when bounds are supplied; (iii) always is.  Without a
    bound the constants are recorded as measured (``c = k_min / k^beta`` and
    ``kappa`` the largest adjacent ratio).
    """

    def __init__(self, nodes, c: float | None = None, beta: float = 1.0,
                 kappa: float | None = None, check: bool = True):
        nodes = np.asarray(nodes, dtype=float).copy()
        if nodes.ndim != 1 or len(nodes) < 2:
            raise ValueError("a partition needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError(f"first node must be 0, got {nodes[0]}")
        steps = np.diff(nodes)
        bad = np.flatnonzero(~(steps > 0))
        if len(bad):
            raise ValueError(f"nodes must be strictly increasing (step {bad[0] + 1})")
        nodes.setflags(write=False)
        steps.setflags(write=False)
        self.nodes = nodes
        self.steps = steps
        self.beta = float(beta)
        k, kmin = float(steps.max()), float(steps.min())
        ratios = steps[:-1] / steps[1:]
        measured_kappa = float(max(np.max(ratios, initial=1.0), np.max(1.0 / ratios, initial=1.0)))
        self.c = kmin / k ** self.beta if c is None else float(c)
        self.kappa = measured_kappa if kappa is None else float(kappa)
        self.measured_kappa = measured_kappa
        if check:
            self._check(c, kappa)

    def _check(self, c, kappa):
        T, k = self.T, self.k
        if c is not None:
            i = int(np.argmin(self.steps))
            if self.steps[i] < c * k ** self.beta:
                raise PartitionError("i", i + 1, f"k_{i + 1} = {self.steps[i]:.6g} < c k^beta = "
                                     f"{c * k ** self.beta:.6g}")
        if kappa is not None:
            ratios = self.steps[:-1] / self.steps[1:]
            for i, q in enumerate(ratios):
                if not (1.0 / kappa <= q <= kappa):
                    raise PartitionError("ii", i + 1, f"k_{i + 1}/k_{i + 2} = {q:.6g} outside "
                                         f"[1/{kappa:g}, {kappa:g}]")
        if k > T / 4 * (1 + 1e-12):
            i = int(np.argmax(self.steps))
            raise PartitionError("iii", i + 1, f"k = {k:.6g} > T/4 = {T / 4:.6g}")

    @property
    def M(self) -> int:
        return len(self.steps)

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def k(self) -> float:
        return float(self.steps.max())

    @property
    def k_min(self) -> float:
        return float(self.steps.min())

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.steps, self.steps[0], rtol=1e-13, atol=0))

    def interval_of(self, t: float) -> int:
        """1-based ``m`` with ``t`` in ``(t_{m-1}, t_m]``; ``t = 0`` maps to 1."""
        if not 0.0 <= t <= self.T * (1 + 1e-14):
            raise ValueError(f"t = {t} outside [0, {self.T}]")
        m = int(np.searchsorted(self.nodes, t, side="left"))
        return min(max(m, 1), self.M)

    def constants(self) -> dict:
        return {"M": self.M, "T": self.T, "k": self.k, "k_min": self.k_min, "c": self.c,
                "beta": self.beta, "kappa": self.kappa, "k_le_T_over_4": self.k <= self.T / 4}

    def reversed(self) -> "TimePartition":
        return TimePartition(self.T - self.nodes[::-1], check=False)

    def __repr__(self):
        return f"TimePartition(M={self.M}, T={self.T:g}, k={self.k:.4g}, k_min={self.k_min:.4g})"


def build_partition(T: float, M: int | None = None, steps=None, c: float | None = None,
                    beta: float = 1.0, kappa: float | None = None) -> TimePartition:
    """Uniform partition with ``M >= 4`` steps, or one from explicit ``steps``."""
    if steps is None:
        if M is None or M < 4:
            raise ValueError(f"uniform partitions need M >= 4, got {M}")
        nodes = np.linspace(0.0, T, M + 1)
    else:
        steps = np.asarray(steps, dtype=float)
        nodes = np.concatenate([[0.0], np.cumsum(steps)])
        if not math.isclose(nodes[-1], T, rel_tol=1e-12):
            raise ValueError(f"steps sum to {nodes[-1]}, expected T = {T}")
        nodes[-1] = T
    return TimePartition(nodes, c=c, beta=beta, kappa=kappa)


@lru_cache(maxsize=None)
def legendre_tables(q: int):
    """``(D, E, hdiag)`` with ``D_ij = int P_j' P_i``, ``E_ij = (-1)^(i+j)``, ``hdiag_j = 1/(2j+1)``.

    ``H = k * diag(hdiag)`` on an interval of length ``k``.
    """
    if q < 0:
        raise ValueError("q must be nonnegative")
    s, w = gauss_legendre(q + 2)
    I = np.eye(q + 1)
    P = np.array([np.polynomial.legendre.legval(s, I[j]) for j in range(q + 1)])
    dP = np.array([np.polynomial.legendre.legval(s, np.polynomial.legendre.legder(I[j]))
                   for j in range(q + 1)])
    D = (P * w) @ dP.T  # D[i, j] = sum w P_i P_j'
    j = np.arange(q + 1)
    E = (-1.0) ** (j[:, None] + j[None, :])
    hdiag = 1.0 / (2 * j + 1)
    for a in (D, E, hdiag):
        a.setflags(write=False)
    return D, E, hdiag


def _legendre_values(q: int, s) -> np.ndarray:
    """``(q+1, len(s))`` values of ``P_j(s)``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return np.array([np.polynomial.legendre.legval(s, np.eye(q + 1)[j]) for j in range(q + 1)])


def _legendre_derivs(q: int, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    I = np.eye(q + 1)
    return np.array([np.polynomial.legendre.legval(s, np.polynomial.legendre.legder(I[j]))
                     for j in range(q + 1)])


class DgStepSystem:
    """Block operator ``G kron M + H kron A`` on one interval, with a cached LU."""

    def __init__(self, space: FeSpace, q: int, k: float, index: int = 1):
        self.space, self.q, self.k, self.index = space, q, float(k), index
        D, E, hdiag = legendre_tables(q)
        self.G = D + E
        self.H = self.k * np.diag(hdiag)
        M, A = space.mass.matrix, space.stiffness.matrix
        self.matrix = (sp.kron(sp.csr_matrix(self.G), M) + sp.kron(sp.csr_matrix(self.H), A)).tocsc()
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix)
            except RuntimeError as exc:
                raise SolverError(f"interval {self.index}: block factorization failed ({exc})") from exc
        return self._lu

    def solve(self, rhs, trans: str = "N", rtol: float = 1e-10) -> np.ndarray:
        """Solve with the block matrix (``trans="T"`` for its transpose); ``rhs`` is ``(q+1, dim)``."""
        b = np.asarray(rhs).reshape(-1)
        nb = np.linalg.norm(b)
        if nb == 0:
            return np.zeros_like(rhs, dtype=np.result_type(b, float))
        if np.iscomplexobj(b):
            x = self.lu.solve(np.ascontiguousarray(b.real), trans=trans) \
                + 1j * self.lu.solve(np.ascontiguousarray(b.imag), trans=trans)
        else:
            x = self.lu.solve(b, trans=trans)
        mat = self.matrix if trans == "N" else self.matrix.T
        res = np.linalg.norm(mat @ x - b) / nb
        if not res <= rtol:
            raise SolverError(f"interval {self.index}: block residual {res:.2e} exceeds {rtol:.0e}")
        return x.reshape(np.shape(rhs))


def dg_step_forward(system: DgStepSystem, incoming, load=None) -> list:
    """One dG(q) step; returns the ``q+1`` modal ``FeFunction`` of the interval.

    ``incoming`` is ``u^-_{m-1}`` as an ``FeFunction`` or coefficient vector.
    ``load`` is the ``(q+1, dim)`` array ``F_i = int (f, phi P_i)`` or ``None``.
    """
    space, q = system.space, system.q
    u = incoming.coeffs if isinstance(incoming, FeFunction) else np.asarray(incoming)
    sign = (-1.0) ** np.arange(q + 1)
    rhs = np.outer(sign, space.mass @ u)
    if load is not None:
        rhs = rhs + load
    U = system.solve(rhs)
    return [FeFunction(space, U[j]) for j in range(q + 1)]


@dataclass(frozen=True, eq=False)
class SpaceTimeFunction:
    """Piecewise polynomial in time with values in ``V_h``.

    ``coeffs[m - 1, j]`` is the free-dof vector of Legendre mode ``j`` on ``I_m``.
    """

    partition: TimePartition
    space: FeSpace
    q: int
    coeffs: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        shape = (self.partition.M, self.q + 1, self.space.dim)
        if c.shape != shape:
            raise ValueError(f"coefficient block shape {c.shape}, expected {shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def modes(self, m: int) -> list:
        return [FeFunction(self.space, self.coeffs[m - 1, j]) for j in range(self.q + 1)]

    def left(self, m: int) -> np.ndarray:
        """``u(t_m^-)``, ``m = 1..M``."""
        return self.coeffs[m - 1].sum(axis=0)

    def right(self, m: int) -> np.ndarray:
        """``u(t_m^+)``, ``m = 0..M-1``."""
        sign = (-1.0) ** np.arange(self.q + 1)
        return sign @ self.coeffs[m]

    def jump(self, m: int, initial=None) -> np.ndarray:
        """``[u]_m = u(t_m^+) - u(t_m^-)``; for ``m = 0`` the left value is ``initial`` (default 0)."""
        if m == 0:
            return self.right(0) - (0.0 if initial is None else np.asarray(initial))
        return self.right(m) - self.left(m)

    def _local(self, t):
        m = self.partition.interval_of(t)
        a, b = self.partition.nodes[m - 1], self.partition.nodes[m]
        return m, 2.0 * (t - a) / (b - a) - 1.0, b - a

    def value(self, t: float, side: str = "left") -> np.ndarray:
        """Coefficients at ``t``; at a node ``side`` selects the one-sided limit."""
        m, s, _ = self._local(t)
        if side == "right" and math.isclose(s, 1.0, abs_tol=1e-14) and m < self.partition.M:
            return self.right(m)
        return _legendre_values(self.q, s)[:, 0] @ self.coeffs[m - 1]

    def dt(self, t: float) -> np.ndarray:
        m, s, k = self._local(t)
        return (2.0 / k) * _legendre_derivs(self.q, s)[:, 0] @ self.coeffs[m - 1]

    def interval_values(self, m: int, s) -> np.ndarray:
        """Values ``(len(s), dim)`` at reference times ``s`` in ``[-1, 1]`` of ``I_m``."""
        return _legendre_values(self.q, s).T @ self.coeffs[m - 1]

    def interval_dt(self, m: int, s) -> np.ndarray:
        k = self.partition.steps[m - 1]
        return (2.0 / k) * _legendre_derivs(self.q, s).T @ self.coeffs[m - 1]

    def evaluate(self, t: float, x, y=None):
        """Point value ``u(t, x)``."""
        return FeFunction(self.space, self.value(t))(x, y)

    def __sub__(self, other):
        return SpaceTimeFunction(self.partition, self.space, self.q, self.coeffs - other.coeffs)

    def to_text(self) -> str:
        from .reporting import spacetime_to_text

        return spacetime_to_text(self)

    def write_vtk_snapshots(self, directory, prefix: str = "u") -> list:
        """One legacy VTK file per time node with the vertex values ``u(t_m^-)``.

        Node ``t_0`` uses ``u(0^+)``.  Complex data is split into real and
        imaginary fields.
        """
        from .reporting import write_vtk_triangles

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        mesh = self.space.mesh
        paths = []
        for m in range(self.partition.M + 1):
            c = self.right(0) if m == 0 else self.left(m)
            full = FeFunction(self.space, c).full_coeffs()[:mesh.n_vertices]
            data = {"re": full.real, "im": full.imag} if np.iscomplexobj(full) else {prefix: full}
            path = directory / f"{prefix}_{m:04d}.vtk"
            write_vtk_triangles(path, mesh.vertices, mesh.cells, point_data=data,
                                title=f"{prefix} t={self.partition.nodes[m]!r}")
            paths.append(path)
        return paths


def _system_cache(space, q, partition):
    cache = {}

    def get(m):
        k = float(partition.steps[m - 1])
        if k not in cache:
            cache[k] = DgStepSystem(space, q, k, m)
        sys = cache[k]
        sys.index = m
        return sys

    return get


def assemble_source(partition: TimePartition, space: FeSpace, f, q: int,
                    n_time: int | None = None, degree: int | None = None) -> np.ndarray:
    """``F[m-1, i] = int_{I_m} (f(t), phi) P_i dt`` by ``q+2``-point Gauss in time.

    ``f`` is a callable ``f(t, x, y)``.
    """
    s, w = gauss_legendre(q + 2 if n_time is None else n_time)
    P = _legendre_values(q, s)
    F = np.zeros((partition.M, q + 1, space.dim))
    for m in range(1, partition.M + 1):
        a, k = partition.nodes[m - 1], partition.steps[m - 1]
        for g, sg in enumerate(s):
            tg = a + 0.5 * (sg + 1.0) * k
            b = load_vector(space, lambda x, y: f(tg, x, y), degree)
            F[m - 1] += (0.5 * k * w[g]) * np.outer(P[:, g], b)
    return F


def _initial_load(space, u0):
    if u0 is None:
        return np.zeros(space.dim)
    if isinstance(u0, FeFunction):
        return space.mass @ u0.coeffs
    if callable(u0):
        return load_vector(space, u0)
    return space.mass @ np.asarray(u0)


def solve_forward(partition: TimePartition, space: FeSpace, f=None, u0=None, q: int = 0,
                  load=None) -> SpaceTimeFunction:
    """March ``B(u, phi) = (f, phi) + (u0, phi^+_0)`` forward in time.

    ``f`` is ``None``, a callable ``f(t, x, y)``, or pass a precomputed
    ``load`` of shape ``(M, q+1, dim)``.  ``u0`` is ``None``, a callable, an
    ``FeFunction`` or a coefficient vector.
    """
    if load is None:
        load = np.zeros((partition.M, q + 1, space.dim)) if f is None else \
            assemble_source(partition, space, f, q)
    load = np.asarray(load)
    b0 = _initial_load(space, u0)
    get = _system_cache(space, q, partition)
    sign = (-1.0) ** np.arange(q + 1)
    out = np.zeros((partition.M, q + 1, space.dim), dtype=np.result_type(load, b0))
    incoming = b0
    for m in range(1, partition.M + 1):
        rhs = load[m - 1] + np.outer(sign, incoming)
        U = get(m).solve(rhs)
        out[m - 1] = U
        incoming = space.mass @ U.sum(axis=0)
    return SpaceTimeFunction(partition, space, q, out, {"load": load, "initial_load": b0})


def _solve_dual(partition, space, q, load, terminal):
    """Backward march for ``B(phi, g) = sum_m (load_m, Phi_m) + (phi^-_M, terminal)``."""
    get = _system_cache(space, q, partition)
    sign = (-1.0) ** np.arange(q + 1)
    ones = np.ones(q + 1)
    out = np.zeros((partition.M, q + 1, space.dim), dtype=np.result_type(load, terminal))
    incoming = np.asarray(terminal)  # M g^+_m, with g^+_M standing for the terminal datum
    for m in range(partition.M, 0, -1):
        rhs = load[m - 1] + np.outer(ones, incoming)
        G = get(m).solve(rhs, trans="T")
        out[m - 1] = G
        incoming = space.mass @ (sign @ G)
    return out


def solve_dual_terminal(partition: TimePartition, space: FeSpace, d, q: int = 0) -> SpaceTimeFunction:
    """``g_kh`` with ``B(phi, g_kh) = (phi(T), delta)`` for all ``phi`` in ``X_kh``."""
    b = d.load_vector()
    load = np.zeros((partition.M, q + 1, space.dim))
    coeffs = _solve_dual(partition, space, q, load, b)
    return SpaceTimeFunction(partition, space, q, coeffs, {"terminal": b})


def solve_dual_source(partition: TimePartition, space: FeSpace, d, th, q: int | None = None
                      ) -> SpaceTimeFunction:
    """``g~_kh`` with ``B(phi, g~_kh) = (phi, delta theta)`` for all ``phi`` in ``X_kh``."""
    q = th.q if q is None else q
    b = d.load_vector()
    m = th.interval
    a, k = partition.nodes[m - 1], partition.steps[m - 1]
    if not (math.isclose(a, th.a, abs_tol=1e-14) and math.isclose(a + k, th.b, abs_tol=1e-14)):
        raise ValueError("time delta interval does not match the partition")
    I = np.eye(q + 1)
    tm = np.array([th.moments(lambda t, j=j: np.polynomial.legendre.legval(
        2.0 * (t - a) / k - 1.0, I[j]), n=q + th.q + 2) for j in range(q + 1)])
    load = np.zeros((partition.M, q + 1, space.dim))
    load[m - 1] = np.outer(tm, b)
    coeffs = _solve_dual(partition, space, q, load, np.zeros(space.dim))
    return SpaceTimeFunction(partition, space, q, coeffs, {"load": load})


def _check_pair(u, v):
    if u.partition is not v.partition and not np.array_equal(u.partition.nodes, v.partition.nodes):
        raise ValueError("arguments live on different time partitions")
    if u.space is not v.space:
        raise ValueError("arguments live on different spaces")
    if u.q != v.q:
        raise ValueError(f"arguments have different time degrees {u.q} and {v.q}")


def bilinear_form_B(u: SpaceTimeFunction, v: SpaceTimeFunction, form: str = "primal") -> float:
    """Space-time form ``B(u, v)``.

    ``form="primal"``: sum_m int (u_t, v) + (grad u, grad v) + sum_{m>=2} ([u]_{m-1}, v^+_{m-1}) + (u^+_0, v^+_0).
    ``form="dual"``: sum_m int -(u, v_t) + (grad u, grad v) - sum_{m<M} (u^-_m, [v]_m) + (u^-_M, v^-_M).
    """
    _check_pair(u, v)
    space, part, q = u.space, u.partition, u.q
    Mm, Am = space.mass.matrix, space.stiffness.matrix
    D, _, hdiag = legendre_tables(q)
    U, V = u.coeffs, v.coeffs
    total = 0.0
    for m in range(1, part.M + 1):
        k = part.steps[m - 1]
        Um, Vm = U[m - 1], V[m - 1]
        MU, AU = (Mm @ Um.T).T, (Am @ Um.T).T  # (q+1, dim)
        gram_M = Vm @ MU.T  # gram_M[i, j] = (U_j, V_i)
        gram_A = Vm @ AU.T
        total += k * np.sum(hdiag * np.diag(gram_A))
        if form == "primal":
            total += np.sum(D * gram_M)
            vplus = v.right(m - 1)
            uplus = u.right(m - 1)
            if m == 1:
                total += uplus @ (Mm @ vplus)
            else:
                total += (uplus - u.left(m - 1)) @ (Mm @ vplus)
        elif form == "dual":
            total -= np.sum(D.T * gram_M)
            um = u.left(m)
            if m < part.M:
                total -= um @ (Mm @ (v.right(m) - v.left(m)))
            else:
                total += um @ (Mm @ v.left(m))
        else:
            raise ValueError(f"unknown form {form!r}")
    return float(total) if not np.iscomplexobj(total) else complex(total)


def rhs_functional(u: SpaceTimeFunction, phi: SpaceTimeFunction) -> float:
    """``(f, phi) + (u0, phi^+_0)`` from the data stored by ``solve_forward``."""
    load = u.meta.get("load")
    b0 = u.meta.get("initial_load")
    if load is None or b0 is None:
        raise ValueError("u carries no forward data")
    return float(np.sum(load * phi.coeffs) + b0 @ phi.right(0))


def chebyshev_times(n: int) -> np.ndarray:
    """First-kind Chebyshev points on ``[-1, 1]`` plus both endpoints, ascending."""
    j = np.arange(n)
    pts = np.cos((2 * j + 1) * np.pi / (2 * n))
    return np.concatenate([[-1.0], np.sort(pts), [1.0]])


def make_norm(space: FeSpace, kind: str, weight=None, density: int = 10):
    """Vectorized norm ``(..., dim) -> (...)`` on ``V_h``.

    ``kind`` is ``"l2"``, ``"l1"``, ``"linf"`` or ``"weighted"`` (``||sigma^{N/2} v||``).
    """
    if kind in ("l2", "weighted"):
        if kind == "l2":
            Q = space.mass.matrix
        elif weight is None:
            raise ValueError("weighted norm needs a weight")
        else:
            Q = assemble_weighted_mass(space, weight, power=getattr(weight, "N", 2)).matrix

        def quad_norm(c):
            c = np.asarray(c)
            flat = c.reshape(-1, c.shape[-1])
            vals = np.einsum("ni,ni->n", np.conj(flat), (Q @ flat.T).T)
            return np.sqrt(np.abs(vals)).reshape(c.shape[:-1])

        return quad_norm
    if kind == "l1":
        deg = space.r + 4
        _, w, _, _ = space.quadrature(deg)
        E = space.quadrature_evaluation(deg)
        wf = w.ravel()
        return lambda c: (np.abs(E @ np.atleast_2d(c).T).T @ wf).reshape(np.shape(c)[:-1])
    if kind == "linf":
        if space.r == 1:
            return lambda c: np.max(np.abs(c), axis=-1)
        _, E = space.lattice(density)
        return lambda c: np.max(np.abs(E @ np.atleast_2d(c).T), axis=0).reshape(np.shape(c)[:-1])
    raise ValueError(f"unknown norm {kind!r}")


def regularity_sums(g: SpaceTimeFunction, norm: str = "l2", s=1, weight=None, initial=None,
                    samples: int | None = None, n_time: int = 8, density: int = 10) -> dict:
    """Time-integrated and per-interval norms of ``g_t``, ``Delta_h g`` and the jumps.

    Returns ``sum_dt``, ``sum_lap`` and ``sum_jumps``, which are the three
    left-hand terms for exponent ``s`` (1 or ``inf``), plus per-interval lists
    ``sup_dt``, ``sup_lap`` and ``jump`` (``||[g]_{m-1}||``).  ``initial`` is
    the left value used in ``[g]_0`` (``P_h u_0`` for homogeneous runs,
    ``None`` meaning zero).  Suprema over an interval are sampled at
    ``samples`` (default ``q+3``) Chebyshev times plus both endpoints.
    """
    space, part, q = g.space, g.partition, g.q
    nrm = make_norm(space, norm, weight, density)
    n_cheb = q + 3 if samples is None else samples
    tc = chebyshev_times(n_cheb)
    st, wt = gauss_legendre(n_time)
    mass, stiff = space.mass, space.stiffness.matrix
    s_inf = s in (math.inf, "inf")
    sup_dt, sup_lap, jumps, int_dt, int_lap = [], [], [], [], []
    for m in range(1, part.M + 1):
        k = part.steps[m - 1]
        C = g.coeffs[m - 1]
        lap = np.array([-mass.solve(stiff @ C[j]) for j in range(q + 1)]) if np.any(C) else np.zeros_like(C)
        P_c, P_g = _legendre_values(q, tc).T, _legendre_values(q, st).T
        dP_c, dP_g = _legendre_derivs(q, tc).T, _legendre_derivs(q, st).T
        dt_c, dt_g = (2.0 / k) * dP_c @ C, (2.0 / k) * dP_g @ C
        lap_c, lap_g = P_c @ lap, P_g @ lap
        sup_dt.append(float(np.max(nrm(dt_c))) if q > 0 else 0.0)
        sup_lap.append(float(np.max(nrm(lap_c))))
        jumps.append(float(nrm(g.jump(m - 1, initial if m == 1 else None))))
        if s_inf:
            continue
        p = float(s)
        int_dt.append(0.5 * k * np.sum(wt * nrm(dt_g) ** p) if q > 0 else 0.0)
        int_lap.append(0.5 * k * np.sum(wt * nrm(lap_g) ** p))
    steps = part.steps
    jumps_a = np.array(jumps)
    if s_inf:
        sums = {"sum_dt": max(sup_dt), "sum_lap": max(sup_lap),
                "sum_jumps": float(np.max(jumps_a / steps))}
    else:
        p = float(s)
        sums = {"sum_dt": float(np.sum(int_dt) ** (1 / p)),
                "sum_lap": float(np.sum(int_lap) ** (1 / p)),
                "sum_jumps": float(np.sum(steps * (jumps_a / steps) ** p) ** (1 / p))}
    sums["total"] = sums["sum_dt"] + sums["sum_lap"] + sums["sum_jumps"]
    sums.update({"sup_dt": sup_dt, "sup_lap": sup_lap, "jump": jumps, "norm": norm, "s": s,
                 "samples": n_cheb})
    return sums
