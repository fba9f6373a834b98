"""Element classification and cut-cell geometry.

Every triangle is PLUS (inside ``Omega^+``), MINUS (inside ``Omega^-``) or CUT.
On a CUT triangle the two edge/interface intersection points are joined by a
straight segment, which splits the triangle into a three-corner polygon
(containing the lone vertex whose sign differs from the other two) and a
four-corner polygon.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DegenerateCutError,
    InterfaceResolutionError,
    NonConvergenceError,
    NoSignChangeError,
)
from .levelset import LevelSet
from .mesh import Mesh
from .quadrature import cut_side_rule, polygon_area

PLUS, CUT, MINUS = 1, 0, -1
SNAP_VALUE = 1e-300


def edge_intersection(levelset: LevelSet, p0, p1, tol: float = 1e-13, max_iter: int = 200):
    """Root of ``levelset`` on the segment ``[p0, p1]`` by bisection."""
    q = _bisect(levelset, np.atleast_2d(p0), np.atleast_2d(p1), tol, max_iter)
    return q[0]


def _bisect(levelset, p0, p1, tol, max_iter, f0=None, f1=None):
    p0 = np.array(p0, dtype=float)
    p1 = np.array(p1, dtype=float)
    f0 = levelset(p0[:, 0], p0[:, 1]) if f0 is None else np.array(f0, dtype=float)
    f1 = levelset(p1[:, 0], p1[:, 1]) if f1 is None else np.array(f1, dtype=float)
    if np.any(f0 * f1 >= 0):
        raise NoSignChangeError("level set does not change sign on the segment")
    scale = tol * np.maximum(np.abs(f0), np.abs(f1))
    lo, hi, flo = p0.copy(), p1.copy(), f0.copy()
    root = 0.5 * (lo + hi)
    done = np.zeros(len(p0), dtype=bool)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = levelset(mid[:, 0], mid[:, 1])
        # an interval that no longer shrinks in floating point is resolved
        stuck = np.all((mid == lo) | (mid == hi), axis=1)
        new = ~done & ((np.abs(fm) <= scale) | stuck)
        root[new] = mid[new]
        done |= new
        if done.all():
            return root
        # converged rows are frozen; an exact zero must not drag them along
        left = ~done & ((fm * flo) < 0)
        move = ~done & ~left
        hi = np.where(left[:, None], mid, hi)
        lo = np.where(move[:, None], mid, lo)
        flo = np.where(move, fm, flo)
    raise NonConvergenceError("bisection did not reach the requested tolerance")


@dataclass
class CutRecord:
    """Geometry of one interface element."""

    tri: int
    corners: np.ndarray  # (3, 2), counterclockwise
    lone: int  # local index of the vertex alone on its side
    lone_in_minus: bool
    cut_edges: tuple  # global ids of (edge lone->lone+1, edge lone->lone+2)
    points: np.ndarray  # (2, 2) intersections on those edges
    normal: np.ndarray  # unit, from Omega^- to Omega^+

    @property
    def segment(self) -> np.ndarray:
        return self.points

    @property
    def midpoint(self) -> np.ndarray:
        return self.points.mean(axis=0)

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.points[1] - self.points[0])))

    @property
    def small_polygon(self) -> np.ndarray:
        return np.array([self.corners[self.lone], self.points[0], self.points[1]])

    @property
    def large_polygon(self) -> np.ndarray:
        a, b = (self.lone + 1) % 3, (self.lone + 2) % 3
        return np.array([self.points[0], self.corners[a], self.corners[b], self.points[1]])

    def polygon(self, side: int) -> np.ndarray:
        """``K_h^+`` for ``side=+1`` and ``K_h^-`` for ``side=-1``."""
        small_is_plus = not self.lone_in_minus
        return self.small_polygon if (side == PLUS) == small_is_plus else self.large_polygon

    def area(self, side: int) -> float:
        return polygon_area(self.polygon(side))

    def three_corner_side(self) -> int:
        return MINUS if self.lone_in_minus else PLUS

    def rule(self, side: int):
        """Scheme quadrature on one side (three-point or subtraction rule)."""
        small_is_side = self.three_corner_side() == side
        return cut_side_rule(self.corners, self.small_polygon, small_is_side)


@dataclass
class CutGeometry:
    mesh: Mesh
    levelset: LevelSet
    vertex_phi: np.ndarray  # raw values
    vertex_minus: np.ndarray  # bool, after snapping
    snapped: np.ndarray  # bool
    edge_cut: np.ndarray  # bool, sign change across the edge
    edge_points: np.ndarray  # (ne, 2), nan where not cut
    classes: np.ndarray  # PLUS / CUT / MINUS per triangle
    cuts: dict = field(default_factory=dict)  # tri -> CutRecord

    @property
    def plus_tris(self) -> np.ndarray:
        return np.flatnonzero(self.classes != MINUS)

    @property
    def minus_tris(self) -> np.ndarray:
        return np.flatnonzero(self.classes != PLUS)

    @property
    def cut_tris(self) -> np.ndarray:
        return np.flatnonzero(self.classes == CUT)

    def side_area(self, tri: int, side: int) -> float:
        c = self.classes[tri]
        if c == CUT:
            return self.cuts[tri].area(side)
        return float(self.mesh.areas()[tri]) if c == side else 0.0

    def side_areas(self, side: int) -> np.ndarray:
        out = np.where(self.classes == side, self.mesh.areas(), 0.0)
        for t, rec in self.cuts.items():
            out[t] = rec.area(side)
        return out

    def interface_length(self) -> float:
        return sum(rec.length for rec in self.cuts.values())


def classify(mesh: Mesh, levelset: LevelSet, snap_tol: float = 1e-12, tol: float = 1e-13) -> CutGeometry:
    """Classify triangles and build the cut record of each interface element."""
    V = mesh.vertices
    phi = levelset(V[:, 0], V[:, 1])
    snapped = np.abs(phi) < snap_tol * mesh.h
    phi_s = np.where(snapped, SNAP_VALUE, phi)
    minus = phi_s > 0

    E = mesh.edges
    edge_cut = minus[E[:, 0]] != minus[E[:, 1]]
    points = np.full((len(E), 2), np.nan)
    ids = np.flatnonzero(edge_cut)
    if len(ids):
        e0, e1 = E[ids, 0], E[ids, 1]
        q = np.empty((len(ids), 2))
        s0, s1 = snapped[e0], snapped[e1]
        q[s0] = V[e0[s0]]
        q[s1] = V[e1[s1]]
        free = ~(s0 | s1)
        if free.any():
            q[free] = _bisect(levelset, V[e0[free]], V[e1[free]], tol, 200, phi[e0[free]], phi[e1[free]])
        points[ids] = q

    tri_minus = minus[mesh.triangles]
    n_minus = tri_minus.sum(axis=1)
    classes = np.where(n_minus == 3, MINUS, np.where(n_minus == 0, PLUS, CUT))
    n_cut_edges = edge_cut[mesh.tri_edges].sum(axis=1)
    bad = np.flatnonzero((n_cut_edges == 1) | (n_cut_edges == 3))
    if len(bad):
        raise InterfaceResolutionError(f"elements {bad.tolist()} have an odd number of cut edges")

    geom = CutGeometry(mesh, levelset, phi, minus, snapped, edge_cut, points, classes)
    for t in np.flatnonzero(classes == CUT):
        sgn = tri_minus[t]
        lone = int(np.flatnonzero(sgn == (sgn.sum() == 1))[0])
        a, b = (lone + 1) % 3, (lone + 2) % 3
        # local edge k is opposite vertex k, so lone->a is edge b
        pts = np.array([points[mesh.tri_edges[t, b]], points[mesh.tri_edges[t, a]]])
        try:
            rec = build_cut(mesh, t, pts, sgn)
        except DegenerateCutError:
            rec = None
        if rec is None or min(polygon_area(rec.small_polygon), polygon_area(rec.large_polygon)) <= 0.0:
            # the interface only touches a vertex or runs along a whole edge
            geom.classes[t] = _majority_class(mesh.tri_coords()[t], lone, bool(sgn[lone]), pts)
            continue
        geom.cuts[int(t)] = rec
    _check_separation(mesh, geom.classes)
    return geom


def _check_separation(mesh: Mesh, classes):
    """Reject interfaces running along mesh edges.

    After degenerate cuts are reclassified, a PLUS and a MINUS element can
    only be neighbours when the interface follows their common edge; the
    interface coupling then has no cut segment to live on.
    """
    inner = mesh.edge_tris[:, 1] >= 0
    a = classes[mesh.edge_tris[inner, 0]]
    b = classes[mesh.edge_tris[inner, 1]]
    bad = np.flatnonzero(inner)[(a * b) == PLUS * MINUS]
    if len(bad):
        raise InterfaceResolutionError(f"interface runs along mesh edges {bad[:10].tolist()}")


def _majority_class(corners, lone, lone_in_minus, pts):
    """Class of a degenerate cut element: the side keeping the larger part."""
    a, b = (lone + 1) % 3, (lone + 2) % 3
    small = abs(polygon_area([corners[lone], pts[0], pts[1]]))
    large = abs(polygon_area([pts[0], corners[a], corners[b], pts[1]]))
    lone_side = MINUS if lone_in_minus else PLUS
    return lone_side if small >= large else -lone_side


def build_cut(mesh: Mesh, tri: int, points, minus_flags) -> CutRecord:
    """Cut record for triangle ``tri`` given its vertex sides and intersections.

    ``points`` are the intersections on the two edges leaving the lone vertex,
    in counterclockwise order.
    """
    sgn = np.asarray(minus_flags, dtype=bool)
    lone = int(np.flatnonzero(sgn == (sgn.sum() == 1))[0])
    a, b = (lone + 1) % 3, (lone + 2) % 3
    corners = mesh.tri_coords()[tri]
    pts = np.asarray(points, dtype=float)
    d = pts[1] - pts[0]
    length = np.hypot(*d)
    if length < 1e-14 * mesh.h:
        raise DegenerateCutError(f"interface segment of element {tri} has length {length:g}")
    nrm = np.array([d[1], -d[0]]) / length
    plus_vertex = corners[lone] if not sgn[lone] else corners[a]
    if np.dot(plus_vertex - pts.mean(axis=0), nrm) < 0:
        nrm = -nrm
    e_a, e_b = int(mesh.tri_edges[tri, b]), int(mesh.tri_edges[tri, a])
    return CutRecord(int(tri), corners, lone, bool(sgn[lone]), (e_a, e_b), pts, nrm)


@dataclass
class AssumptionReport:
    """Outcome of the interface-resolution checks."""

    edges_ok: bool
    bad_edges: list
    min_area_ratio: float  # min |K_h^-| / h^4 over interface elements
    area_ok: bool
    bad_elements: list
    c: float
    small_elements: list = field(default_factory=list)  # |K_h^-| < c h^4

    @property
    def ok(self) -> bool:
        return self.edges_ok and self.area_ok and not self.bad_elements

    @property
    def fatal(self) -> bool:
        """Violations that make the discrete problem ill-posed.

        Extra crossings of an edge (and the slivers they leave inside
        non-interface elements) only perturb the geometry; a vanishing
        ``K_h^-`` destroys the stability of the mixed block.
        """
        return not self.area_ok

    def summary(self) -> str:
        return (
            f"edges_ok={self.edges_ok} ({len(self.bad_edges)} bad), "
            f"min|K_h^-|/h^4={self.min_area_ratio:.3e} (c={self.c:g}), "
            f"{len(self.bad_elements)} elements with unresolved interface"
        )


def verify_assumptions(mesh: Mesh, geometry: CutGeometry, c: float = 1e-8, samples_per_edge: int = 64) -> AssumptionReport:
    """Sample the level set to check that the mesh resolves the interface.

    (i) cut edges must show exactly one sign change along the edge and uncut
    edges none; (ii) ``|K_h^-| >= c h^4`` on interface elements; (iii)
    non-interface elements must not contain interface points at interior
    sample locations.
    """
    ls = geometry.levelset
    thresh = 1e-12 * mesh.h

    def side(v):
        return v > -thresh

    t = np.linspace(0.0, 1.0, samples_per_edge + 1)
    P0 = mesh.vertices[mesh.edges[:, 0]]
    P1 = mesh.vertices[mesh.edges[:, 1]]
    pts = P0[:, None, :] + t[None, :, None] * (P1 - P0)[:, None, :]
    s = side(ls(pts[..., 0], pts[..., 1]))
    # endpoints follow the snapped vertex classification
    s[:, 0] = geometry.vertex_minus[mesh.edges[:, 0]]
    s[:, -1] = geometry.vertex_minus[mesh.edges[:, 1]]
    changes = np.sum(s[:, 1:] != s[:, :-1], axis=1)
    expected = geometry.edge_cut.astype(int)
    bad_edges = np.flatnonzero(changes != expected).tolist()

    areas = geometry.side_areas(MINUS)
    cut = geometry.cut_tris
    ratio = float(np.min(areas[cut]) / mesh.h**4) if len(cut) else np.inf
    small = cut[areas[cut] < c * mesh.h**4].tolist()

    # interior barycentric samples of non-interface elements
    m = 6
    bary = np.array([(i, j, m - i - j) for i in range(1, m) for j in range(1, m - i) if m - i - j > 0], float) / m
    coords = mesh.tri_coords()
    inner = np.einsum("kv,tvd->tkd", bary, coords)
    si = side(ls(inner[..., 0], inner[..., 1]))
    cls = geometry.classes
    wrong = ((cls == PLUS)[:, None] & si) | ((cls == MINUS)[:, None] & ~si)
    bad_elements = np.flatnonzero(wrong.any(axis=1)).tolist()
    return AssumptionReport(not bad_edges, bad_edges, ratio, ratio >= c, bad_elements, c, small)
