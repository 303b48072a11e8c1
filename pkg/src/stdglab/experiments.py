"""Experiment drivers: convergence, best approximation, interior estimate,
smoothing, maximal regularity and resolvent sweeps.

Every driver takes an ``ExperimentConfig`` and returns a report holding
per-level rows (each row carries h, k, r, q, K, gamma and sampling
densities) plus a summary dict with the extracted constants.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .fem import FeSpace, interpolate_nodal, project_l2
from .mesh import build_unit_square_mesh
from .mollifiers import CutoffOmega, WeightSigma
from .quadrature import gauss_legendre
from .resolvent import RESOLVENT_COLUMNS, SectorSample, sweep_sector
from .spacetime import (SpaceTimeFunction, build_partition, chebyshev_times, make_norm, regularity_sums,
                        solve_forward, _legendre_values)

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "ExperimentConfig",
    "Report",
    "Solution",
    "manufactured",
    "interpolant_kh",
    "SpaceTimeSampler",
    "drift",
    "run_convergence",
    "run_best_approx_global",
    "run_interior",
    "run_smoothing",
    "run_max_regularity",
    "run_resolvent",
    "run_experiment",
    "finest_solution",
]

EXPERIMENTS = ("convergence", "bestapprox", "interior", "smoothing", "maxreg", "resolvent")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# -- configuration -------------------------------------------------------------

_DEFAULTS = {
    "convergence": dict(r=1, q=0, levels=[8, 16, 32, 64], time_factor=1.0, time_exponent=1.0,
                        solution="smooth"),
    "bestapprox": dict(r=1, q=0, levels=[8, 16, 32], time_factor=1.0, time_exponent=1.0,
                       solution="smooth"),
    "interior": dict(r=1, q=1, levels=[32, 64, 128], time_factor=0.5, time_exponent=1.0,
                     solution="near_far", x0=[0.5 + 1 / 97, 0.5 - 1 / 113], d=0.2),
    "smoothing": dict(r=1, q=0, levels=[16], time_levels=[8, 16, 32, 64], solution="checkerboard"),
    "maxreg": dict(r=1, q=0, levels=[8, 16, 32, 64], time_factor=1.0, time_exponent=1.0,
                   solution="jump_source"),
    "resolvent": dict(r=1, q=0, levels=[8, 16, 32, 64], solution="none"),
}


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment run.

    ``levels`` lists the mesh parameters ``n`` (unit square, ``h = sqrt(2)/n``).
    Time levels come from ``time_levels`` when given, otherwise
    ``M = max(4, round(time_factor * T * n**time_exponent))``.
    """

    experiment: str = "bestapprox"
    r: int = 1
    q: int = 0
    levels: list = field(default_factory=lambda: [8, 16, 32])
    time_levels: list = field(default_factory=list)
    time_factor: float = 1.0
    time_exponent: float = 1.0
    T: float = 1.0
    gamma: float = math.pi / 4
    K: float = 4.0
    x0: list = field(default_factory=lambda: [0.5, 0.5])
    d: float = 0.2
    t_tilde: float | None = None
    solution: str = "smooth"
    far_amplitude: float = 10.0
    far_frequency: int = 5
    checker_blocks: int = 4
    drift_factor: float = 1.5
    density: int = 4
    time_samples: int | None = None
    interp_points: int = 24
    verify_density: bool = True
    sampling_tolerance: float = 0.02
    moduli_range: list = field(default_factory=lambda: [-2.0, 8.0])
    per_decade: int = 6
    per_decade_linf: int = 2
    extra_angles: list = field(default_factory=lambda: [math.pi])
    linf_dof_cap: int = 5000
    resolvent_norms: list = field(default_factory=lambda: ["weighted", "linf"])
    norms: list = field(default_factory=lambda: ["l2", "weighted", "l1"])
    s_values: list = field(default_factory=lambda: [1, "inf"])
    workers: int = 1
    output: str = "stdglab_out"

    @classmethod
    def defaults(cls, experiment: str = "bestapprox") -> "ExperimentConfig":
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        base = {"drift_factor": 2.0} if experiment in ("interior", "smoothing", "maxreg") else {}
        return cls(experiment=experiment, **{**base, **_DEFAULTS[experiment]})

    @classmethod
    def from_dict(cls, data: dict, experiment: str | None = None) -> "ExperimentConfig":
        exp = experiment or data.get("experiment", "bestapprox")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        cfg = asdict(cls.defaults(exp))
        cfg.update(data)
        cfg["experiment"] = exp
        return cls(**cfg).validated()

    @classmethod
    def from_json(cls, path, experiment: str | None = None) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise FileNotFoundError(f"cannot read config file {path}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data, experiment)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def with_levels(self, count: int) -> "ExperimentConfig":
        """Use ``count`` mesh levels, extending by doubling when needed."""
        if count < 1:
            raise ConfigError("--levels must be at least 1")
        out = ExperimentConfig(**self.to_dict())
        if self.experiment == "smoothing":
            tl = list(self.time_levels)
            while len(tl) < count:
                tl.append(2 * tl[-1])
            out.time_levels = tl[:count]
            return out.validated()
        lv = list(self.levels)
        while len(lv) < count:
            lv.append(2 * lv[-1])
        out.levels = lv[:count]
        if self.time_levels:
            tl = list(self.time_levels)
            while len(tl) < count:
                tl.append(2 * tl[-1])
            out.time_levels = tl[:count]
        return out.validated()

    def time_steps(self, n: int, index: int) -> int:
        if self.time_levels:
            return int(self.time_levels[index])
        return max(4, int(round(self.time_factor * self.T * n ** self.time_exponent)))

    def mesh_size(self, n: int) -> float:
        return math.sqrt(2.0) / n

    def validated(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.r not in (1, 2):
            raise ConfigError(f"r={self.r} unsupported; expected 1 or 2")
        if self.q not in (0, 1, 2):
            raise ConfigError(f"q={self.q} unsupported; expected 0, 1 or 2")
        if not self.levels or any(int(n) < 1 for n in self.levels):
            raise ConfigError("levels must be a nonempty list of positive integers")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not 0 < self.gamma < math.pi / 2:
            raise ConfigError("gamma must lie in (0, pi/2)")
        if not self.K > 0:
            raise ConfigError("K must be positive")
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (2,) or not np.all((x0 > 0) & (x0 < 1)):
            raise ConfigError(f"x0={self.x0} must be an interior point of the unit square")
        if self.t_tilde is not None and not 0 < self.t_tilde <= self.T:
            raise ConfigError(f"t_tilde={self.t_tilde} must lie in (0, T]")
        if self.density < 1:
            raise ConfigError("density must be >= 1")
        if self.experiment == "interior":
            if not self.d > 0:
                raise ConfigError("d must be positive")
            margin = min(x0[0], x0[1], 1 - x0[0], 1 - x0[1])
            if not 2 * self.d < margin:
                raise ConfigError(f"closed ball of radius 2d={2 * self.d} around x0 is not inside the domain")
            for n in self.levels:
                h = self.mesh_size(int(n))
                if not self.d > 4 * h:
                    raise ConfigError(f"interior estimate hypothesis d > 4h violated: d={self.d}, "
                                      f"h={h:.4g} at n={n}")
        if self.time_levels and self.experiment != "smoothing" and len(self.time_levels) != len(self.levels):
            raise ConfigError("time_levels must match levels in length")
        for i, n in enumerate(self.levels if self.experiment != "smoothing" else [self.levels[0]]):
            if self.experiment == "resolvent":
                break
            if self.experiment == "smoothing":
                Ms = self.time_levels
            else:
                Ms = [self.time_steps(int(n), i)]
            for M in Ms:
                if int(M) < 4:
                    raise ConfigError(f"time level M={M} violates k <= T/4")
        return self


# -- manufactured solutions ----------------------------------------------------

@dataclass(frozen=True)
class Solution:
    """Exact solution ``u(t, x, y)`` with source, initial value and gradient."""

    name: str
    u: object
    f: object
    u0: object
    grad: object = None
    discrete: object = None  # FeFunction for solutions inside X_kh


def _S(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def _gradS(x, y):
    return (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
            np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))


def manufactured(name: str, cfg: ExperimentConfig | None = None, space: FeSpace | None = None) -> Solution:
    """Named manufactured solutions.

    * ``smooth``: ``e^{-t} sin(pi x) sin(pi y)``.
    * ``rough_time``: ``|sin(2 pi t)|^{3/2} sin(pi x) sin(pi y)``.
    * ``near_far``: smooth part plus ``A (1 - omega) sin(k pi x) sin(k pi y) e^{-t}``,
      which vanishes on ``B_d(x0)``.
    * ``discrete``: a time-constant ``psi_h`` in ``V_h`` with ``f = -Delta_h psi_h``.
    """
    cfg = cfg or ExperimentConfig()
    lam = 2 * np.pi ** 2
    if name == "smooth":
        return Solution(
            name,
            u=lambda t, x, y: np.exp(-t) * _S(x, y),
            f=lambda t, x, y: (lam - 1.0) * np.exp(-t) * _S(x, y),
            u0=_S,
            grad=lambda t, x, y: tuple(np.exp(-t) * g for g in _gradS(x, y)),
        )
    if name == "rough_time":
        def a(t):
            return np.abs(np.sin(2 * np.pi * t)) ** 1.5

        def da(t):
            s = np.sin(2 * np.pi * t)
            return 1.5 * np.sqrt(np.abs(s)) * np.sign(s) * 2 * np.pi * np.cos(2 * np.pi * t)

        return Solution(
            name,
            u=lambda t, x, y: a(t) * _S(x, y),
            f=lambda t, x, y: (da(t) + lam * a(t)) * _S(x, y),
            u0=lambda x, y: 0.0 * x,
            grad=lambda t, x, y: tuple(a(t) * g for g in _gradS(x, y)),
        )
    if name == "near_far":
        om = CutoffOmega(tuple(cfg.x0), cfg.d)
        A, kap = cfg.far_amplitude, cfg.far_frequency

        def F(x, y):
            return np.sin(kap * np.pi * x) * np.sin(kap * np.pi * y)

        def gradF(x, y):
            return (kap * np.pi * np.cos(kap * np.pi * x) * np.sin(kap * np.pi * y),
                    kap * np.pi * np.sin(kap * np.pi * x) * np.cos(kap * np.pi * y))

        def far(x, y):
            return A * (1.0 - om(x, y)) * F(x, y)

        def lap_far(x, y):
            gx, gy = om.gradient(x, y)
            fx, fy = gradF(x, y)
            return A * ((1.0 - om(x, y)) * (-2 * kap ** 2 * np.pi ** 2) * F(x, y)
                        - 2 * (gx * fx + gy * fy) - om.laplacian(x, y) * F(x, y))

        def grad_far(x, y):
            gx, gy = om.gradient(x, y)
            fx, fy = gradF(x, y)
            w = 1.0 - om(x, y)
            return A * (w * fx - gx * F(x, y)), A * (w * fy - gy * F(x, y))

        def grad(t, x, y):
            sx, sy = _gradS(x, y)
            fx, fy = grad_far(x, y)
            e = np.exp(-t)
            return e * (sx + fx), e * (sy + fy)

        return Solution(
            name,
            u=lambda t, x, y: np.exp(-t) * (_S(x, y) + far(x, y)),
            f=lambda t, x, y: np.exp(-t) * ((lam - 1.0) * _S(x, y) - far(x, y) - lap_far(x, y)),
            u0=lambda x, y: _S(x, y) + far(x, y),
            grad=grad,
        )
    if name == "discrete":
        if space is None:
            raise ValueError("the discrete solution needs a space")
        psi = interpolate_nodal(space, lambda x, y: 16.0 * x * (1 - x) * y * (1 - y))
        return Solution(name, u=None, f=None, u0=psi, discrete=psi)
    raise ConfigError(f"unknown manufactured solution {name!r}")


def _discrete_load(partition, space, q, psi):
    # (-Delta_h psi, phi P_j) over I_m: only the j = 0 mode survives
    load = np.zeros((partition.M, q + 1, space.dim))
    Apsi = space.stiffness @ psi.coeffs
    for m in range(partition.M):
        load[m, 0] = partition.steps[m] * Apsi
    return load


def interpolant_kh(partition, space: FeSpace, q: int, u, n_points: int = 24) -> SpaceTimeFunction:
    """``I_kh u``: nodal interpolation in space, L2(I_m) projection onto degree ``q`` in time."""
    s, w = gauss_legendre(n_points)
    P = _legendre_values(q, s)  # (q+1, ng)
    xy = space.dof_coords[space.free]
    scale = (2 * np.arange(q + 1) + 1) / 2.0
    coeffs = np.zeros((partition.M, q + 1, space.dim))
    for m in range(partition.M):
        a, k = partition.nodes[m], partition.steps[m]
        vals = np.array([u(a + 0.5 * (sg + 1) * k, xy[:, 0], xy[:, 1]) for sg in s])  # (ng, dim)
        coeffs[m] = scale[:, None] * ((P * w) @ vals)
    return SpaceTimeFunction(partition, space, q, coeffs)


class SpaceTimeSampler:
    """Declared lattice for sampled L-infinity norms on ``I x Omega``.

    Space: per cell the barycentric lattice of the given density.  Time: per
    interval ``n_cheb`` first-kind Chebyshev times plus both endpoints (the
    endpoint values are the one-sided limits from inside the interval).
    """

    def __init__(self, space: FeSpace, partition, q: int, density: int, n_cheb: int | None = None):
        self.space, self.partition, self.q = space, partition, q
        self.density = density
        self.n_cheb = q + 3 if n_cheb is None else n_cheb
        self.s = chebyshev_times(self.n_cheb)
        self.points, self.E = space.lattice(density)
        self.P = _legendre_values(q, self.s)  # (q+1, ns)

    def times(self, m: int) -> np.ndarray:
        a, k = self.partition.nodes[m - 1], self.partition.steps[m - 1]
        return a + 0.5 * (self.s + 1.0) * k

    def max_errors(self, u, discrete: list, mask=None, t_max: float | None = None) -> list:
        """``max |u - v|`` over the lattice for every ``v`` in ``discrete``."""
        x, y = self.points[:, 0], self.points[:, 1]
        if mask is not None:
            x, y = x[mask], y[mask]
            E = self.E[mask]
        else:
            E = self.E
        out = [0.0] * len(discrete)
        for m in range(1, self.partition.M + 1):
            if t_max is not None and self.partition.nodes[m - 1] >= t_max:
                break
            vals = [E @ (self.P.T @ v.coeffs[m - 1]).T for v in discrete]  # (npts, ns)
            for i, t in enumerate(self.times(m)):
                ue = u(t, x, y)
                for j, vv in enumerate(vals):
                    out[j] = max(out[j], float(np.max(np.abs(ue - vv[:, i]), initial=0.0)))
        return out


def drift(values, factor: float) -> dict:
    """Level-to-level drift of a recorded constant.

    ``max_growth`` is the largest ratio ``c_{l+1}/c_l``; the constant counts
    as bounded when it stays below ``factor``.  ``max_ratio`` is the two-sided
    ``max(c_{l+1}/c_l, c_l/c_{l+1})``, reported for information.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return {"max_growth": 1.0, "max_ratio": 1.0, "factor": factor, "pass": True}
    with np.errstate(divide="ignore", invalid="ignore"):
        g = v[1:] / v[:-1]
        ratio = float(np.max(np.maximum(g, 1.0 / g)))
    growth = float(np.max(g))
    ok = bool(np.all(np.isfinite(g)) and growth <= factor)
    return {"max_growth": growth, "max_ratio": ratio, "factor": factor, "pass": ok}


@dataclass
class Report:
    """Rows plus a summary; ``to_csv`` writes the experiment's documented header."""

    experiment: str
    rows: list
    summary: dict
    columns: list
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("pass", True))

    def to_csv(self) -> str:
        from .reporting import csv_text

        return csv_text(self.rows, self.columns)

    def write(self, directory) -> dict:
        from .reporting import write_json

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{self.experiment}.csv"
        json_path = directory / f"{self.experiment}_summary.json"
        csv_path.write_text(self.to_csv())
        write_json(json_path, {"experiment": self.experiment, "summary": self.summary,
                               "config": self.config})
        return {"csv": csv_path, "json": json_path}


def _meta(cfg, n, M, h, k):
    return {"n": n, "M": M, "h": h, "k": k, "r": cfg.r, "q": cfg.q, "K": cfg.K, "gamma": cfg.gamma,
            "density": cfg.density, "time_samples": cfg.time_samples if cfg.time_samples else cfg.q + 3}


_META = ["n", "M", "h", "k", "r", "q", "K", "gamma", "density", "time_samples"]


def _map_levels(cfg, fn, items):
    workers = int(os.environ.get("STDGLAB_WORKERS", cfg.workers) or 1)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _level_setup(cfg, i, n):
    mesh = build_unit_square_mesh(int(n))
    space = FeSpace(mesh, cfg.r)
    M = cfg.time_steps(int(n), i)
    part = build_partition(cfg.T, M)
    return space, part


def _forward(cfg, sol, part, space):
    if sol.discrete is not None:
        return solve_forward(part, space, u0=sol.discrete, q=cfg.q,
                             load=_discrete_load(part, space, cfg.q, sol.discrete))
    return solve_forward(part, space, sol.f, sol.u0, cfg.q)


# -- convergence and global best approximation --------------------------------

def _global_level(cfg, i, n, with_interpolant=True, density=None):
    space, part = _level_setup(cfg, i, n)
    sol = manufactured(cfg.solution, cfg, space)
    u_kh = _forward(cfg, sol, part, space)
    density = cfg.density if density is None else density
    sampler = SpaceTimeSampler(space, part, cfg.q, density, cfg.time_samples)
    if sol.discrete is not None:
        psi = sol.discrete.coeffs
        target = np.zeros_like(u_kh.coeffs)
        target[:, 0] = psi
        err = float(np.max(np.abs(sampler.E @ (u_kh.coeffs - target).reshape(-1, space.dim).T)))
        return space, part, u_kh, err, 0.0
    discrete = [u_kh]
    if with_interpolant:
        discrete.append(interpolant_kh(part, space, cfg.q, sol.u, cfg.interp_points))
    errs = sampler.max_errors(sol.u, discrete)
    return space, part, u_kh, errs[0], (errs[1] if with_interpolant else None)


def _orders(rows, key):
    for a, b in zip(rows[:-1], rows[1:]):
        b[f"order_{key}"] = math.log(a[key] / b[key]) / math.log(a["h"] / b["h"]) \
            if a[key] > 0 and b[key] > 0 else math.nan
    if rows:
        rows[0][f"order_{key}"] = math.nan


def run_convergence(cfg: ExperimentConfig) -> Report:
    """Sampled ``L^inf(I x Omega)`` errors and observed orders in ``h``."""
    cfg = cfg.validated()

    def level(item):
        i, n = item
        space, part, _, err, _ = _global_level(cfg, i, n, with_interpolant=False)
        return {**_meta(cfg, n, part.M, space.h, part.k), "err_inf": err}

    rows = _map_levels(cfg, level, list(enumerate(cfg.levels)))
    _orders(rows, "err_inf")
    last = rows[-1]["order_err_inf"] if len(rows) > 1 else math.nan
    summary = {"solution": cfg.solution, "final_order": last, "errors": [r["err_inf"] for r in rows]}
    return Report("convergence", rows, summary, _META + ["err_inf", "order_err_inf"], cfg.to_dict())


def run_best_approx_global(cfg: ExperimentConfig) -> Report:
    """``err_inf``, ``ba_inf`` (interpolant), their ratio and its log-normalized form."""
    cfg = cfg.validated()

    def level(item):
        i, n = item
        space, part, _, err, ba = _global_level(cfg, i, n)
        h, k = space.h, part.k
        logs = (1 + abs(math.log(h))) * (1 + abs(math.log(k)))
        exact = ba == 0.0
        if exact:
            ratio = 1.0 if err <= 1e-8 else math.inf
        else:
            ratio = err / ba
        return {**_meta(cfg, n, part.M, h, k), "err_inf": err, "ba_inf": ba, "ratio": ratio,
                "normalized_ratio": ratio / logs, "exact": exact}

    rows = _map_levels(cfg, level, list(enumerate(cfg.levels)))
    d = drift([r["normalized_ratio"] for r in rows], cfg.drift_factor)
    summary = {"solution": cfg.solution, "drift": d, "pass": d["pass"],
               "C_estimate": max(r["normalized_ratio"] for r in rows)}
    if cfg.verify_density and cfg.solution != "discrete":
        i, n = len(cfg.levels) - 1, cfg.levels[-1]
        _, _, _, err2, ba2 = _global_level(cfg, i, n, density=2 * cfg.density)
        change = max(abs(err2 - rows[-1]["err_inf"]) / err2, abs(ba2 - rows[-1]["ba_inf"]) / ba2)
        summary["sampling_check"] = {"density": 2 * cfg.density, "relative_change": change,
                                     "pass": change < cfg.sampling_tolerance}
    cols = _META + ["err_inf", "ba_inf", "ratio", "normalized_ratio", "exact"]
    return Report("bestapprox", rows, summary, cols, cfg.to_dict())


# -- interior estimate ---------------------------------------------------------

def _l2_and_grad_errors(space, coeffs, u, grad, t, degree):
    """``||u(t) - v||`` and ``||grad(u(t) - v)||`` by quadrature."""
    pts, w, _, _ = space.quadrature(degree)
    x, y = pts[..., 0].ravel(), pts[..., 1].ravel()
    wf = w.ravel()
    E = space.quadrature_evaluation(degree)
    Ex = space.quadrature_evaluation(degree, derivative=0)
    Ey = space.quadrature_evaluation(degree, derivative=1)
    e = u(t, x, y) - E @ coeffs
    gx, gy = grad(t, x, y)
    ex, ey = gx - Ex @ coeffs, gy - Ey @ coeffs
    return math.sqrt(np.sum(wf * e * e)), math.sqrt(np.sum(wf * (ex * ex + ey * ey)))


def run_interior(cfg: ExperimentConfig) -> Report:
    """Pointwise error at ``(t_tilde, x0)`` against the local and global terms for ``chi = I_kh u``."""
    cfg = cfg.validated()
    x0 = np.asarray(cfg.x0, dtype=float)
    t_tilde = cfg.T if cfg.t_tilde is None else cfg.t_tilde

    def level(item):
        i, n = item
        space, part = _level_setup(cfg, i, n)
        sol = manufactured(cfg.solution, cfg, space)
        u_kh = _forward(cfg, sol, part, space)
        chi = interpolant_kh(part, space, cfg.q, sol.u, cfg.interp_points)
        sampler = SpaceTimeSampler(space, part, cfg.q, cfg.density, cfg.time_samples)
        pt_err = abs(float(sol.u(t_tilde, x0[0], x0[1])) - u_kh.evaluate(t_tilde, x0))
        glob_err, = sampler.max_errors(sol.u, [u_kh])
        mask = np.hypot(sampler.points[:, 0] - x0[0], sampler.points[:, 1] - x0[1]) <= cfg.d
        m_tilde = part.interval_of(t_tilde)
        local, = sampler.max_errors(sol.u, [chi], mask=mask, t_max=part.nodes[m_tilde])
        l2max, gradmax = 0.0, 0.0
        deg = 2 * cfg.r + 4
        for m in range(1, part.M + 1):
            for j, t in enumerate(sampler.times(m)):
                c = sampler.P[:, j] @ chi.coeffs[m - 1]
                a, b = _l2_and_grad_errors(space, c, sol.u, sol.grad, t, deg)
                l2max, gradmax = max(l2max, a), max(gradmax, b)
        h, k = space.h, part.k
        global_term = (l2max + h * gradmax) / cfg.d  # d^{-N/2} with N = 2
        logs = (1 + abs(math.log(k))) * (1 + abs(math.log(h)))
        pt_err = float(pt_err)
        const = pt_err / (logs * (local + global_term))
        return {**_meta(cfg, n, part.M, h, k), "d": cfg.d, "t_tilde": t_tilde,
                "pointwise_error": pt_err, "global_error": glob_err,
                "locality_ratio": pt_err / glob_err if glob_err > 0 else 0.0,
                "local_term": local, "global_l2": l2max, "global_grad": gradmax,
                "global_term": global_term, "normalized_constant": const}

    rows = _map_levels(cfg, level, list(enumerate(cfg.levels)))
    d = drift([r["normalized_constant"] for r in rows], cfg.drift_factor)
    locality = max(r["locality_ratio"] for r in rows)
    locality = float(locality)
    summary = {"drift": d, "max_locality_ratio": locality, "locality_threshold": 0.5,
               "locality_pass": locality <= 0.5, "pass": bool(d["pass"] and locality <= 0.5),
               "C_estimate": float(max(r["normalized_constant"] for r in rows))}
    cols = _META + ["d", "t_tilde", "pointwise_error", "global_error", "locality_ratio", "local_term",
                    "global_l2", "global_grad", "global_term", "normalized_constant"]
    return Report("interior", rows, summary, cols, cfg.to_dict())


# -- smoothing and maximal regularity -----------------------------------------

def checkerboard(blocks: int):
    """``+-1`` pattern on a ``blocks x blocks`` grid of the unit square."""
    def f(x, y):
        i = np.floor(np.clip(x, 0, 1 - 1e-15) * blocks)
        j = np.floor(np.clip(y, 0, 1 - 1e-15) * blocks)
        return np.where((i + j) % 2 == 0, 1.0, -1.0)
    return f


def _weight(cfg, space):
    return WeightSigma(tuple(cfg.x0), cfg.K, space.h)


def run_smoothing(cfg: ExperimentConfig) -> Report:
    """Homogeneous problem with a checkerboard initial value.

    Per level (time partition) and norm: the largest per-interval quantity
    ``t_m (sup ||u_t|| + sup ||Delta_h u|| + ||[u]_{m-1}||/k_m) / ||P_h u0||``
    and the total sum normalized by ``1 + ln(T/k)``.
    """
    cfg = cfg.validated()
    space = FeSpace(build_unit_square_mesh(int(cfg.levels[0])), cfg.r)
    w = _weight(cfg, space)
    u0 = project_l2(space, checkerboard(cfg.checker_blocks), degree=8)
    Ms = [int(M) for M in cfg.time_levels]

    def level(item):
        i, M = item
        part = build_partition(cfg.T, M)
        u = solve_forward(part, space, u0=u0, q=cfg.q)
        row = _meta(cfg, int(cfg.levels[0]), M, space.h, part.k)
        logk = 1 + math.log(cfg.T / part.k)
        row["log_factor"] = logk
        for norm in cfg.norms:
            rs = regularity_sums(u, norm, 1, weight=w, initial=u0.coeffs, samples=cfg.time_samples)
            n0 = float(make_norm(space, norm, w)(u0.coeffs))
            tm = part.nodes[1:]
            per = tm * (np.array(rs["sup_dt"]) + np.array(rs["sup_lap"])
                        + np.array(rs["jump"]) / part.steps) / n0
            row[f"smoothing_{norm}"] = float(per.max())
            row[f"total_{norm}"] = rs["total"] / n0
            row[f"total_normalized_{norm}"] = rs["total"] / n0 / logk
            row[f"sum_dt_{norm}"] = rs["sum_dt"] / n0
        return row

    rows = _map_levels(cfg, level, list(enumerate(Ms)))
    summary = {"pass": True}
    logs = np.log(1.0 / np.array([r["k"] for r in rows]))
    for norm in cfg.norms:
        d1 = drift([r[f"smoothing_{norm}"] for r in rows], cfg.drift_factor)
        totals = np.array([r[f"total_{norm}"] for r in rows])
        slope = float(np.polyfit(logs, totals, 1)[0]) if len(rows) > 1 else math.nan
        C = float(max(r[f"total_normalized_{norm}"] for r in rows))
        d2 = drift([r[f"total_normalized_{norm}"] for r in rows], cfg.drift_factor)
        # at most logarithmic growth: the fitted slope does not exceed 1.5 C
        slope_ok = bool(slope <= 1.5 * C) if math.isfinite(slope) else True
        summary[norm] = {"smoothing_drift": d1, "total_drift": d2, "C": C, "slope": slope,
                         "slope_bound": 1.5 * C, "slope_pass": slope_ok}
        summary["pass"] = summary["pass"] and d1["pass"] and d2["pass"] and slope_ok
    cols = _META + ["log_factor"] + [f"{p}_{n}" for n in cfg.norms
                                     for p in ("smoothing", "total", "total_normalized", "sum_dt")]
    return Report("smoothing", rows, summary, cols, cfg.to_dict())


def jump_source(T: float):
    """``f = sign(t - T/2) sin(pi x) sin(pi y)``."""
    return lambda t, x, y: np.sign(t - T / 2) * _S(x, y)


def run_max_regularity(cfg: ExperimentConfig) -> Report:
    """Maximal regularity sums for ``u0 = 0`` and a source with a jump at ``T/2``.

    Normalized by ``(1 + |ln k|) (int ||P_h f||^s)^{1/s}``; the weighted
    variant is divided further by ``1 + |ln h|``.
    """
    cfg = cfg.validated()

    def level(item):
        i, n = item
        space, part = _level_setup(cfg, i, n)
        if part.M % 2:
            raise ConfigError(f"maxreg needs an even number of steps so T/2 is a node (M={part.M})")
        w = _weight(cfg, space)
        f = None if cfg.solution == "zero" else jump_source(cfg.T)
        u = solve_forward(part, space, f, None, cfg.q)
        Pf = project_l2(space, _S, degree=8) if f is not None else space.zero()
        h, k = space.h, part.k
        row = _meta(cfg, n, part.M, h, k)
        for norm in [nm for nm in cfg.norms if nm != "l2"] or cfg.norms:
            nf = float(make_norm(space, norm, w)(Pf.coeffs))  # |sign| = 1, so ||P_h f(t)|| is constant
            for s in cfg.s_values:
                s_inf = s in ("inf", math.inf)
                fnorm = nf if s_inf else nf * cfg.T ** (1.0 / float(s))
                rs = regularity_sums(u, norm, math.inf if s_inf else s, weight=w, initial=None,
                                     samples=cfg.time_samples)
                tag = f"{norm}_s{'inf' if s_inf else s}"
                denom = (1 + abs(math.log(k))) * fnorm
                val = rs["total"] / denom if denom > 0 else 0.0
                if norm == "weighted":
                    val /= 1 + abs(math.log(h))
                row[f"sum_{tag}"] = rs["total"]
                row[f"normalized_{tag}"] = val
        return row

    rows = _map_levels(cfg, level, list(enumerate(cfg.levels)))
    tags = [c[len("normalized_"):] for c in rows[0] if c.startswith("normalized_")]
    summary = {"pass": True}
    for tag in tags:
        vals = [r[f"normalized_{tag}"] for r in rows]
        d = drift(vals, cfg.drift_factor) if any(vals) else {"max_growth": 0.0, "pass": True}
        summary[tag] = {"drift": d, "C": max(vals)}
        summary["pass"] = summary["pass"] and d["pass"]
    cols = _META + [f"{p}_{t}" for t in tags for p in ("sum", "normalized")]
    return Report("maxreg", rows, summary, cols, cfg.to_dict())


# -- resolvent -----------------------------------------------------------------

def run_resolvent(cfg: ExperimentConfig) -> Report:
    """Weighted and nodal L-infinity resolvent norms over the sector complement, per level.

    The weighted norm uses ``per_decade`` moduli per decade and the dense
    L-infinity column sweep uses ``per_decade_linf``.
    """
    cfg = cfg.validated()
    lo, hi = cfg.moduli_range
    samp_w = SectorSample.log_spaced(cfg.gamma, lo, hi, cfg.per_decade, tuple(cfg.extra_angles))
    samp_l = SectorSample.log_spaced(cfg.gamma, lo, hi, cfg.per_decade_linf, tuple(cfg.extra_angles))

    def level(n):
        space = FeSpace(build_unit_square_mesh(int(n)), cfg.r)
        w = _weight(cfg, space)
        out = {}
        if "weighted" in cfg.resolvent_norms:
            out["weighted"] = sweep_sector(space, samp_w, w, linf=False)
        if "linf" in cfg.resolvent_norms:
            out["linf"] = sweep_sector(space, samp_l, w, linf=True, weighted=False,
                                       dof_cap=cfg.linf_dof_cap)
        return n, space, out

    results = _map_levels(cfg, level, list(cfg.levels))
    rows, summary_levels = [], []
    for n, space, out in results:
        lvl = {"n": n, "h": space.h, "dofs": space.dim}
        for kind, rep in out.items():
            for row in rep.rows:
                rows.append({**row, "n": n, "kind": kind})
            s = rep.summary()
            if kind == "weighted":
                lvl.update(M_h_weighted=s["M_h_weighted"], M_h_weighted_log=s["M_h_weighted_log"],
                           flagged_weighted=s["n_flagged"])
            else:
                lvl.update(M_h_linf=s["M_h_linf"], M_h_linf_log=s["M_h_linf_log"],
                           flagged_linf=s["n_flagged"], linf_kind=rep.rows[0]["linf_kind"])
        summary_levels.append(lvl)
    summary = {"levels": summary_levels, "pass": True, "gamma": cfg.gamma, "K": cfg.K}
    for key in ("M_h_weighted_log", "M_h_linf"):
        vals = [lv[key] for lv in summary_levels if key in lv]
        if vals:
            d = drift(vals, cfg.drift_factor)
            flagged = sum(lv.get("flagged_" + ("weighted" if "weighted" in key else "linf"), 0)
                          for lv in summary_levels)
            summary[key] = {"values": vals, "drift": d, "flagged": flagged}
            summary["pass"] = summary["pass"] and d["pass"] and flagged == 0
    return Report("resolvent", rows, summary, ["n", "kind"] + RESOLVENT_COLUMNS, cfg.to_dict())


_RUNNERS = {
    "convergence": run_convergence,
    "bestapprox": run_best_approx_global,
    "interior": run_interior,
    "smoothing": run_smoothing,
    "maxreg": run_max_regularity,
    "resolvent": run_resolvent,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    return _RUNNERS[cfg.experiment](cfg)


def finest_solution(cfg: ExperimentConfig) -> SpaceTimeFunction:
    """Forward solution on the finest configured level, for snapshots."""
    cfg = cfg.validated()
    if cfg.experiment == "resolvent":
        raise ConfigError("resolvent runs have no space-time solution")
    if cfg.experiment == "smoothing":
        space = FeSpace(build_unit_square_mesh(int(cfg.levels[0])), cfg.r)
        part = build_partition(cfg.T, int(cfg.time_levels[-1]))
        u0 = project_l2(space, checkerboard(cfg.checker_blocks), degree=8)
        return solve_forward(part, space, u0=u0, q=cfg.q)
    i, n = len(cfg.levels) - 1, cfg.levels[-1]
    space, part = _level_setup(cfg, i, n)
    if cfg.experiment == "maxreg":
        return solve_forward(part, space, jump_source(cfg.T), None, cfg.q)
    return _forward(cfg, manufactured(cfg.solution, cfg, space), part, space)
