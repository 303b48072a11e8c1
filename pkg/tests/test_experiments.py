import json
import math

import numpy as np
import pytest

from stdglab.experiments import (EXPERIMENTS, ConfigError, ExperimentConfig, Report, SpaceTimeSampler,
                                 checkerboard, drift, finest_solution, interpolant_kh, jump_source,
                                 manufactured, run_experiment)
from stdglab.fem import FeSpace
from stdglab.mesh import build_unit_square_mesh
from stdglab.spacetime import build_partition


def test_defaults_cover_every_experiment():
    for exp in EXPERIMENTS:
        cfg = ExperimentConfig.defaults(exp)
        assert cfg.experiment == exp
        assert cfg.validated() is cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.defaults("wave")


def test_json_round_trip(tmp_path):
    cfg = ExperimentConfig.defaults("interior")
    p = tmp_path / "c.json"
    p.write_text(cfg.to_json())
    back = ExperimentConfig.from_json(p)
    assert back.to_dict() == cfg.to_dict()


def test_config_errors(tmp_path):
    with pytest.raises(FileNotFoundError, match="missing.json"):
        ExperimentConfig.from_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(bad)
    with pytest.raises(ConfigError, match="unknown configuration keys"):
        ExperimentConfig.from_dict({"colour": 3})
    with pytest.raises(ConfigError, match="d > 4h"):
        ExperimentConfig.from_dict({"levels": [8]}, "interior")
    with pytest.raises(ConfigError, match="2d"):
        ExperimentConfig.from_dict({"d": 0.3, "levels": [64]}, "interior")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"x0": [0.0, 0.5]}, "bestapprox")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"levels": [8], "time_levels": [2]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"r": 3})


def test_with_levels_extends_by_doubling():
    cfg = ExperimentConfig.defaults("bestapprox").with_levels(5)
    assert cfg.levels == [8, 16, 32, 64, 128]
    assert ExperimentConfig.defaults("bestapprox").with_levels(2).levels == [8, 16]
    sm = ExperimentConfig.defaults("smoothing").with_levels(2)
    assert sm.time_levels == [8, 16]
    with pytest.raises(ConfigError):
        ExperimentConfig.defaults("maxreg").with_levels(0)


def test_time_steps_rule():
    cfg = ExperimentConfig.from_dict({"time_factor": 0.5, "time_exponent": 1.5, "r": 2,
                                      "levels": [4, 8, 16]})
    assert [cfg.time_steps(n, i) for i, n in enumerate(cfg.levels)] == [4, 11, 32]


def test_drift():
    d = drift([1.0, 1.2, 1.1], 1.5)
    assert d["pass"] and d["max_growth"] == pytest.approx(1.2)
    assert d["max_ratio"] == pytest.approx(1.2)
    assert not drift([1.0, 2.0], 1.5)["pass"]
    assert drift([3.0, 1.0], 1.5)["pass"]       # decay is not a violation
    assert drift([3.0, 1.0], 1.5)["max_ratio"] == pytest.approx(3.0)
    assert not drift([1.0, 0.0, 1.0], 1.5)["pass"]
    assert drift([5.0], 1.5)["pass"]


@pytest.mark.parametrize("name", ["smooth", "rough_time", "near_far"])
def test_manufactured_source_is_consistent(name, rng):
    # f = u_t - Laplace u, checked by central differences
    cfg = ExperimentConfig.defaults("interior")
    sol = manufactured(name, cfg)
    t = rng.uniform(0.05, 0.45, 20)
    x, y = rng.uniform(0.05, 0.95, (2, 20))
    e = 1e-4
    ut = (sol.u(t + e, x, y) - sol.u(t - e, x, y)) / (2 * e)
    lap = (sol.u(t, x + e, y) + sol.u(t, x - e, y) + sol.u(t, x, y + e) + sol.u(t, x, y - e)
           - 4 * sol.u(t, x, y)) / e ** 2
    scale = np.abs(ut).max() + np.abs(lap).max()
    np.testing.assert_allclose(sol.f(t, x, y), ut - lap, atol=2e-5 * scale)
    np.testing.assert_allclose(sol.u(0.0, x, y), sol.u0(x, y), atol=1e-14)
    gx, gy = sol.grad(t, x, y)
    np.testing.assert_allclose(gx, (sol.u(t, x + e, y) - sol.u(t, x - e, y)) / (2 * e), atol=1e-5 * scale)


def test_near_far_vanishes_near_x0():
    cfg = ExperimentConfig.defaults("interior")
    sol = manufactured("near_far", cfg)
    smooth = manufactured("smooth", cfg)
    th = np.linspace(0, 2 * np.pi, 50)
    x = cfg.x0[0] + 0.99 * cfg.d * np.cos(th)
    y = cfg.x0[1] + 0.99 * cfg.d * np.sin(th)
    np.testing.assert_allclose(sol.u(0.3, x, y), smooth.u(0.3, x, y), atol=1e-14)


def test_unknown_solution():
    with pytest.raises(ConfigError):
        manufactured("spiky")
    with pytest.raises(ValueError):
        manufactured("discrete")


def test_interpolant_reproduces_time_polynomials():
    space = FeSpace(build_unit_square_mesh(4), 1)
    part = build_partition(1.0, 4)
    u = lambda t, x, y: (1 + 2 * t) * x * (1 - x) * y * (1 - y)
    I = interpolant_kh(part, space, 1, u)
    xy = space.dof_coords[space.free]
    for t in (0.1, 0.6, 1.0):
        np.testing.assert_allclose(I.value(t), u(t, xy[:, 0], xy[:, 1]), atol=1e-14)


def test_sampler_sees_the_nodal_error():
    space = FeSpace(build_unit_square_mesh(4), 1)
    part = build_partition(1.0, 4)
    u = lambda t, x, y: 0 * x + 0 * t
    I = interpolant_kh(part, space, 0, lambda t, x, y: 1.0 + 0 * x)
    # interior nodal value 1 against the exact 0
    assert SpaceTimeSampler(space, part, 0, 2).max_errors(u, [I]) == [pytest.approx(1.0)]


def test_checkerboard_and_jump_source():
    f = checkerboard(2)
    assert f(np.array([0.2]), np.array([0.2]))[0] == 1.0
    assert f(np.array([0.7]), np.array([0.2]))[0] == -1.0
    g = jump_source(1.0)
    assert g(0.2, 0.5, 0.5) == pytest.approx(-1.0)
    assert g(0.8, 0.5, 0.5) == pytest.approx(1.0)


def test_discrete_solution_is_exact():
    cfg = ExperimentConfig.from_dict({"solution": "discrete", "levels": [4, 8], "q": 1})
    rep = run_experiment(cfg)
    for row in rep.rows:
        assert row["exact"] and row["err_inf"] < 1e-10 and row["ratio"] == 1.0


def test_small_bestapprox_report(tmp_path):
    cfg = ExperimentConfig.from_dict({"levels": [4, 8], "verify_density": True})
    rep = run_experiment(cfg)
    assert isinstance(rep, Report)
    assert [r["n"] for r in rep.rows] == [4, 8]
    assert all(0 < r["ratio"] < 10 for r in rep.rows)
    assert "sampling_check" in rep.summary
    paths = rep.write(tmp_path)
    header = paths["csv"].read_text().splitlines()[0].split(",")
    assert header == rep.columns
    data = json.loads(paths["json"].read_text())
    assert data["experiment"] == "bestapprox" and data["config"]["levels"] == [4, 8]


def test_small_convergence_orders():
    cfg = ExperimentConfig.from_dict({"levels": [8, 16, 32], "q": 1}, "convergence")
    rep = run_experiment(cfg)
    assert math.isnan(rep.rows[0]["order_err_inf"])
    assert rep.summary["final_order"] > 1.6


def test_small_smoothing_and_maxreg():
    sm = run_experiment(ExperimentConfig.from_dict({"levels": [8], "time_levels": [8, 16]}, "smoothing"))
    assert sm.passed
    assert len(sm.rows) == 2 and all(r["n"] == 8 for r in sm.rows)
    mr = run_experiment(ExperimentConfig.from_dict({"levels": [4, 8]}, "maxreg"))
    assert {"l1_s1", "weighted_sinf"} <= set(mr.summary)
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig.from_dict({"levels": [5], "time_factor": 1.0}, "maxreg"))


def test_small_resolvent():
    cfg = ExperimentConfig.from_dict({"levels": [4, 8], "moduli_range": [0.0, 2.0],
                                      "per_decade": 1, "per_decade_linf": 1}, "resolvent")
    rep = run_experiment(cfg)
    assert rep.passed
    kinds = {r["kind"] for r in rep.rows}
    assert kinds <= {"weighted", "linf"} and kinds


def test_workers_do_not_change_results(monkeypatch):
    cfg = ExperimentConfig.from_dict({"levels": [4, 8]})
    a = run_experiment(cfg).rows
    monkeypatch.setenv("STDGLAB_WORKERS", "2")
    b = run_experiment(cfg).rows
    assert [r["err_inf"] for r in a] == [r["err_inf"] for r in b]


def test_finest_solution():
    u = finest_solution(ExperimentConfig.from_dict({"levels": [4, 6]}))
    assert u.space.mesh.n_cells == 2 * 36
