import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from stdglab.fem import FeFunction, FeSpace, assemble_weighted_mass
from stdglab.mesh import build_unit_square_mesh
from stdglab.mollifiers import WeightSigma, build_smoothed_delta
from stdglab.resolvent import (RESOLVENT_COLUMNS, ResolventError, SectorSample, ShiftedSystem,
                               green_resolvent_l3, l3_norm, opnorm_linf, opnorm_weighted,
                               solve_resolvent, sweep_sector)

X0 = (0.5 + 1 / 97, 0.5 - 1 / 113)


def spectral_resolvent(space, z):
    """Dense R(z) = (zM - A)^{-1} M from the generalized eigendecomposition."""
    lam, V = sla.eigh(space.stiffness.toarray(), space.mass.toarray())
    return V @ np.diag(1.0 / (z - lam)) @ V.T @ space.mass.toarray(), lam


def weighted_norm_oracle(R, W):
    L = np.linalg.cholesky(W)
    return np.linalg.norm(L.T @ R @ np.linalg.inv(L.T), 2)


@pytest.fixture(scope="module")
def small():
    return FeSpace(build_unit_square_mesh(6), 1)


def unit_weight(x, y):
    return np.ones_like(x)


@pytest.mark.parametrize("z", [1j, -3 + 3j, -50.0, 200 * np.exp(0.75j * np.pi)])
def test_linf_norm_matches_dense(small, z):
    R, _ = spectral_resolvent(small, z)
    assert opnorm_linf(small, z, block=7) == pytest.approx(np.abs(R).sum(axis=1).max(), rel=1e-10)


@pytest.mark.parametrize("method", ["lanczos", "power", "dense"])
def test_unweighted_norm_is_spectral(small, method):
    # with W = M the resolvent is normal: its norm is max 1/|z - lambda|
    z = 10 * np.exp(1j * math.pi / 4)
    _, lam = spectral_resolvent(small, z)
    exact = np.max(1.0 / np.abs(z - lam))
    got = opnorm_weighted(small, z, unit_weight, tol=1e-12, method=method)
    assert got == pytest.approx(exact, rel=1e-6 if method == "power" else 1e-9)


def test_weighted_norm_matches_dense(small):
    w = WeightSigma(X0, K=4.0, h=small.h)
    W = assemble_weighted_mass(small, w, power=2).toarray()
    for z in (-1.0, 5j, -30 + 30j):
        R, _ = spectral_resolvent(small, z)
        assert opnorm_weighted(small, z, w, tol=1e-12) == pytest.approx(weighted_norm_oracle(R, W), rel=1e-9)


def test_conjugate_symmetry(small):
    w = WeightSigma(X0, K=4.0, h=small.h)
    z = -2 + 7j
    assert opnorm_weighted(small, z, w) == opnorm_weighted(small, z.conjugate(), w)
    assert opnorm_linf(small, z) == opnorm_linf(small, z.conjugate())


def test_unknown_method(small):
    with pytest.raises(ValueError):
        opnorm_weighted(small, 1j, unit_weight, method="qr")


def test_dense_refused_above_cap():
    space = FeSpace(build_unit_square_mesh(16), 1)
    with pytest.raises(ValueError):
        opnorm_weighted(space, 1j, unit_weight, method="dense")
    with pytest.raises(ValueError):
        opnorm_linf(space, 1j, dof_cap=100)


def test_solve_resolvent_defines_u(small, rng):
    chi = FeFunction(small, rng.standard_normal(small.dim))
    z = -4 + 1j
    u = solve_resolvent(small, z, chi)
    # z u + Delta_h u = chi, i.e. z M u - A u = M chi
    res = z * (small.mass @ u.coeffs) - small.stiffness @ u.coeffs - small.mass @ chi.coeffs
    assert np.abs(res).max() < 1e-12
    assert not np.any(solve_resolvent(small, z, small.zero()).coeffs)


def test_solve_near_eigenvalue_is_rejected(small):
    lam = sla.eigh(small.stiffness.toarray(), small.mass.toarray(), eigvals_only=True)
    chi = FeFunction(small, np.ones(small.dim))
    with pytest.raises(ResolventError) as info:
        solve_resolvent(small, lam[0] * (1 + 1e-14), chi)
    assert info.value.condition > 1e12


def test_shifted_system_adjoint(small, rng):
    sys = ShiftedSystem(small, 3 + 2j)
    b = rng.standard_normal(small.dim) + 1j * rng.standard_normal(small.dim)
    x = sys.solve_h(b)
    K = (3 - 2j) * small.mass.toarray() - small.stiffness.toarray()
    np.testing.assert_allclose(K @ x, b, atol=1e-12)
    assert sys.condition_estimate() >= 1.0


@settings(max_examples=20, deadline=None)
@given(angle=st.floats(math.pi / 4, math.pi), logmod=st.floats(-1, 3))
def test_resolvent_bound_outside_sector(angle, logmod):
    # for self-adjoint Delta_h and |arg z| >= pi/4: |z| ||R||_M <= 1/sin(pi/4)
    space = FeSpace(build_unit_square_mesh(4), 1)
    z = 10 ** logmod * np.exp(1j * angle)
    val = abs(z) * opnorm_weighted(space, z, unit_weight, tol=1e-12)
    assert val <= 1 / math.sin(math.pi / 4) + 1e-8


def test_green_function_l3(small):
    d = build_smoothed_delta(small, X0)
    z = -5 + 5j
    g = green_resolvent_l3(small, z, d)
    G = np.linalg.solve(z.conjugate() * small.mass.toarray() - small.stiffness.toarray(), d.load_vector())
    assert g == pytest.approx(l3_norm(small, G), rel=1e-12)
    assert g > 0


def test_l3_norm_bounds():
    space = FeSpace(build_unit_square_mesh(4), 1)
    c = np.ones(space.dim)
    # 0 <= v <= 1 on the unit square, and the norm is absolutely homogeneous
    assert 0 < l3_norm(space, c) < 1.0
    assert l3_norm(space, -2j * c) == pytest.approx(2 * l3_norm(space, c), rel=1e-14)


def test_sector_sample_validation():
    with pytest.raises(ValueError):
        SectorSample(0.0, (1.0,))
    with pytest.raises(ValueError):
        SectorSample(math.pi / 4, (0.0, 1.0))
    with pytest.raises(ValueError):
        SectorSample(math.pi / 4, (1.0,), extra_angles=(0.1,))
    s = SectorSample(math.pi / 4, (10.0, 1.0, 1.0))
    assert s.moduli == (1.0, 10.0)
    pts = s.points()
    assert len(pts) == 6
    assert pts[-1][2] == complex(-10.0, 0.0)
    assert len(SectorSample.log_spaced(lo=0, hi=2, per_decade=2).moduli) == 5


def test_sweep_rows_and_report(small):
    w = WeightSigma(X0, K=4.0, h=small.h)
    sample = SectorSample(math.pi / 4, (0.5, 50.0))
    rep = sweep_sector(small, sample, w=w)
    assert len(rep.rows) == 6
    assert all(row["flag"] == "ok" for row in rep.rows)
    # the +gamma and -gamma rows carry identical values
    by = {(row["arg_z"], row["abs_z"]): row for row in rep.rows}
    for m in sample.moduli:
        assert by[(-math.pi / 4, m)]["norm_weighted"] == by[(math.pi / 4, m)]["norm_weighted"]
    s = rep.summary()
    assert s["n_points"] == 6 and s["n_flagged"] == 0
    assert s["M_h_weighted"] >= s["M_h_weighted_log"]
    header = rep.to_csv().splitlines()[0].split(",")
    assert header == RESOLVENT_COLUMNS
    rep2 = sweep_sector(small, sample, w=w, workers=2)
    assert [r["norm_linf"] for r in rep2.rows] == [r["norm_linf"] for r in rep.rows]


def test_sweep_flags_failures(small):
    rep = sweep_sector(small, SectorSample(math.pi / 4, (1.0,)), w=None, dof_cap=3)
    assert all(row["flag"].startswith("error") for row in rep.rows)
    assert math.isnan(rep.M_h_linf)
