"""Quadrature rules on the reference triangle and the unit interval.

Triangle points are stored in barycentric coordinates ``(l0, l1, l2)`` with
respect to the reference vertices ``(0, 0), (1, 0), (0, 1)``; weights sum to
the reference area 1/2. Segment points are parameters in ``[0, 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 10


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def ref_points(self) -> np.ndarray:
        """Cartesian reference coordinates ``(xi, eta)`` (triangle rules only)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


def _check_degree(degree):
    if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree!r}; need 1..{MAX_DEGREE}")


def _bary(xi, eta):
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.column_stack([1.0 - xi - eta, xi, eta])


def _orbit3(a, w):
    # (a, a, 1-2a) and its permutations, each with weight w
    b = 1.0 - 2.0 * a
    pts = np.array([[b, a, a], [a, b, a], [a, a, b]])
    return pts, np.full(3, w)


def _collapsed_gauss(degree):
    # Duffy map (u, v) -> (u (1 - v), v); the (1 - v) Jacobian is absorbed
    # by Gauss-Jacobi(1, 0) in v.
    n = math.ceil((degree + 1) / 2)
    u, wu = roots_legendre(n)
    u = 0.5 * (u + 1.0)
    wu = 0.5 * wu
    v, wv = roots_jacobi(n, 1.0, 0.0)
    v = 0.5 * (v + 1.0)
    wv = 0.25 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    xi = (U * (1.0 - V)).ravel()
    eta = V.ravel()
    return _bary(xi, eta), W.ravel()


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadRule:
    """Rule on the reference triangle exact for polynomials of total ``degree``."""
    _check_degree(degree)
    if degree == 1:
        pts, w = np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([0.5])
    elif degree == 2:
        pts, w = _orbit3(1 / 6, 1 / 6)
    elif degree <= 5:
        # Radon's 7-point rule
        s15 = math.sqrt(15.0)
        p1, w1 = _orbit3((6 - s15) / 21, (155 - s15) / 2400)
        p2, w2 = _orbit3((6 + s15) / 21, (155 + s15) / 2400)
        pts = np.vstack([[[1 / 3, 1 / 3, 1 / 3]], p1, p2])
        w = np.concatenate([[9 / 80], w1, w2])
    else:
        pts, w = _collapsed_gauss(degree)
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(pts, w, degree)


@lru_cache(maxsize=None)
def segment_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on ``[0, 1]`` exact to ``degree``."""
    _check_degree(degree)
    n = math.ceil((degree + 1) / 2)
    t, w = roots_legendre(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    t.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(t, w, degree)
