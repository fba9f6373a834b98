"""Quadrature rules on segments, triangles and cut subcells.

The scheme itself uses three rules: the segment midpoint rule, a symmetric
three-point triangle rule (exact on P2), and a subtraction rule for the
four-sided part of a cut triangle.  A collapsed Gauss-Legendre rule of
arbitrary degree serves error norms and oracles.

Integrands are callables ``f(x, y)`` accepting numpy arrays.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

TRI3_BARY = np.array(
    [
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ]
)
TRI3_WEIGHTS = np.full(3, 1.0 / 3.0)


def polygon_area(poly) -> float:
    """Signed shoelace area of a polygon given as ``(m, 2)`` corners."""
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def triangle_area(tri) -> float:
    p = np.asarray(tri, dtype=float)
    d1, d2 = p[1] - p[0], p[2] - p[0]
    return 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])


def segment_rule(p0, p1):
    """Midpoint node and weight (the segment length)."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    return 0.5 * (p0 + p1)[None, :], np.array([np.hypot(*(p1 - p0))])


def tri3_rule(tri):
    """Nodes ``(3, 2)`` and weights ``(3,)`` of the three-point rule."""
    p = np.asarray(tri, dtype=float)
    return TRI3_BARY @ p, TRI3_WEIGHTS * triangle_area(p)


def integrate_segment(f, segment) -> float:
    pts, w = segment_rule(*segment)
    return float(np.dot(w, f(pts[:, 0], pts[:, 1])))


def integrate_tri3(f, triangle) -> float:
    pts, w = tri3_rule(triangle)
    return float(np.dot(w, f(pts[:, 0], pts[:, 1])))


def cut_side_rule(element, small_tri, small_is_side: bool):
    """Rule on one side of a cut triangle.

    ``small_tri`` is the three-corner subcell.  If the requested side is that
    triangle the plain three-point rule is returned; otherwise the rule on the
    whole element is concatenated with the negated rule on ``small_tri``.
    """
    ps, ws = tri3_rule(small_tri)
    if small_is_side:
        return ps, ws
    pk, wk = tri3_rule(element)
    return np.vstack([pk, ps]), np.concatenate([wk, -ws])


def integrate_cut_side(f, cut, side: int) -> float:
    """Integrate over ``K_h^+`` (``side=+1``) or ``K_h^-`` (``side=-1``)."""
    pts, w = cut.rule(side)
    return float(np.dot(w, f(pts[:, 0], pts[:, 1])))


@lru_cache(maxsize=None)
def reference_triangle_rule(degree: int):
    """Collapsed Gauss-Legendre rule on the unit triangle, exact to ``degree``.

    Returns barycentric coordinates ``(m, 3)`` and weights summing to one.
    """
    n = max(1, int(np.ceil((degree + 2) / 2)))
    g, w = np.polynomial.legendre.leggauss(n)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    U, V = np.meshgrid(g, g, indexing="ij")
    WU, WV = np.meshgrid(w, w, indexing="ij")
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    weights = (WU * WV * (1.0 - U)).ravel() * 2.0
    bary = np.column_stack([1.0 - x - y, x, y])
    return bary, weights


def fan_triangles(poly) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    return np.array([[p[0], p[k], p[k + 1]] for k in range(1, len(p) - 1)])


def reference_rule(triangles, degree: int = 6):
    """Nodes and weights of the reference rule on a stack of triangles.

    ``triangles`` has shape ``(nt, 3, 2)``.  Returns ``pts`` of shape
    ``(nt, m, 2)`` and ``w`` of shape ``(nt, m)``.
    """
    tris = np.asarray(triangles, dtype=float).reshape(-1, 3, 2)
    bary, wref = reference_triangle_rule(degree)
    d1 = tris[:, 1] - tris[:, 0]
    d2 = tris[:, 2] - tris[:, 0]
    area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    pts = np.einsum("mk,tkd->tmd", bary, tris)
    return pts, area[:, None] * wref[None, :]


def integrate_reference(f, polygon, degree: int = 6) -> float:
    pts, w = reference_rule(fan_triangles(polygon), degree)
    return float(np.sum(w * f(pts[..., 0], pts[..., 1])))


def gauss_segment(p0, p1, n: int = 4):
    """``n``-point Gauss-Legendre nodes and weights on a segment."""
    g, w = np.polynomial.legendre.leggauss(n)
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    t = 0.5 * (g + 1.0)
    length = np.hypot(*(p1 - p0))
    return p0[None, :] + t[:, None] * (p1 - p0)[None, :], 0.5 * w * length
