from math import factorial

import numpy as np
import pytest

from stdglab.quadrature import barycentric_lattice, collapsed_rule, gauss_legendre, triangle_rule


def monomial_integral(a, b):
    # integral of x^a y^b over the reference triangle
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(0, 15))
def test_triangle_rule_is_exact(degree):
    pts, w = triangle_rule(degree)
    assert w.sum() == pytest.approx(0.5, abs=1e-14)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b)
            assert got == pytest.approx(monomial_integral(a, b), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("degree", [1, 7, 12])
def test_collapsed_rule_points_inside(degree):
    pts, w = collapsed_rule(degree)
    assert np.all(w > 0)
    assert np.all(pts >= 0) and np.all(pts.sum(axis=1) <= 1)


def test_gauss_legendre_exact_to_2n_minus_1():
    s, w = gauss_legendre(4)
    for p in range(8):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert np.sum(w * s ** p) == pytest.approx(exact, abs=1e-14)


def test_rules_are_read_only():
    pts, w = triangle_rule(4)
    with pytest.raises(ValueError):
        w[0] = 1.0


def test_lattice():
    L = barycentric_lattice(3)
    assert len(L) == 10
    assert {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)} <= set(map(tuple, L.tolist()))
    with pytest.raises(ValueError):
        barycentric_lattice(0)
