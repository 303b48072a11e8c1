"""Quadrature on the reference triangle and on intervals.

Reference triangle: vertices (0, 0), (1, 0), (0, 1); weights sum to 1/2.
Degrees up to 6 use fully symmetric rules (Strang-Fix / Dunavant).
Higher degrees fall back to a collapsed Gauss-Legendre product rule.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import permutations

import numpy as np

__all__ = ["triangle_rule", "collapsed_rule", "gauss_legendre", "barycentric_lattice"]

# (barycentric orbit generator, weight relative to the triangle area)
_SYMMETRIC = {
    1: [((1 / 3, 1 / 3, 1 / 3), 1.0)],
    2: [((2 / 3, 1 / 6, 1 / 6), 1 / 3)],
    4: [
        ((0.108103018168070, 0.445948490915965, 0.445948490915965), 0.223381589678011),
        ((0.816847572980459, 0.091576213509771, 0.091576213509771), 0.109951743655322),
    ],
    5: [
        ((1 / 3, 1 / 3, 1 / 3), 0.225),
        ((0.059715871789770, 0.470142064105115, 0.470142064105115), 0.132394152788506),
        ((0.797426985353087, 0.101286507323456, 0.101286507323456), 0.125939180544827),
    ],
    6: [
        ((0.501426509658179, 0.249286745170910, 0.249286745170910), 0.116786275726379),
        ((0.873821971016996, 0.063089014491502, 0.063089014491502), 0.050844906370207),
        ((0.053145049844817, 0.310352451033784, 0.636502499121399), 0.082851075618374),
    ],
}


def _expand(orbits):
    pts, wts = [], []
    for gen, w in orbits:
        orbit = sorted(set(permutations(gen)))
        for lam in orbit:
            pts.append(lam[1:])
            wts.append(w)
    pts = np.array(pts, dtype=float)
    wts = np.array(wts, dtype=float)
    return pts, 0.5 * wts / wts.sum()


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    """Points ``(nq, 2)`` and weights ``(nq,)`` exact for polynomials of ``degree``."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    for d in sorted(_SYMMETRIC):
        if d >= max(degree, 1):
            pts, wts = _expand(_SYMMETRIC[d])
            break
    else:
        pts, wts = collapsed_rule(degree)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


@lru_cache(maxsize=None)
def collapsed_rule(degree: int):
    """Collapsed (Duffy) Gauss-Legendre rule exact to ``degree``."""
    n = degree // 2 + 2
    g, w = np.polynomial.legendre.leggauss(n)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    xi = u.ravel()
    eta = (v * (1.0 - u)).ravel()
    wts = (wu * wv * (1.0 - u)).ravel()
    pts = np.column_stack([xi, eta])
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    s, w = np.polynomial.legendre.leggauss(n)
    s.setflags(write=False)
    w.setflags(write=False)
    return s, w


@lru_cache(maxsize=None)
def barycentric_lattice(density: int) -> np.ndarray:
    """Reference points ``(i/d, j/d)`` with ``i + j <= d``; includes vertices."""
    if density < 1:
        raise ValueError("density must be >= 1")
    pts = [(i / density, j / density)
           for j in range(density + 1) for i in range(density + 1 - j)]
    pts = np.array(pts, dtype=float)
    pts.setflags(write=False)
    return pts
