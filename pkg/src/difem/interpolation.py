"""Interface patches, RT0 interpolations and the cut-cell P0 projection.

Verification-only: the solver never calls these.  The modified interpolation
keeps canonical fluxes on every edge interior to ``Omega^-`` and rebalances the
remaining edges of interface elements so that

    div(Pi* tau)|_K = (1/|K_h^-|) * int_{K_h^-} div(tau)

holds elementwise, with the integral taken by the scheme quadrature.

Interface elements are chained through their intersecting edges (edges with
one endpoint on each side).  Along a chain each element solves for exactly one
edge flux:

* an element with a single ``Omega^+`` vertex solves its outgoing
  intersecting edge;
* an element with two ``Omega^+`` vertices solves its ``Omega^+`` edge and
  leaves its outgoing intersecting edge canonical, which anchors the next
  patch.

Closed chains run counterclockwise and start right after the two-vertex
element holding the lowest-indexed ``Omega^+`` vertex.  Open chains end on the
boundary or next to a non-interface element.  They start from an end whose
edge is shared with a ``Omega^-`` element if there is one, otherwise from the
crossing smallest in ``(x, y)`` order.  The first incoming edge is canonical.
When the last element has a single ``Omega^+`` vertex its outgoing edge is
solved, or, if that edge is shared with a ``Omega^-`` element, the trailing
run is solved backwards.  Edges of non-interface ``Omega^-`` elements always
keep their canonical flux.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import side_rules
from .exceptions import DegenerateCutError, PatchError
from .geometry import CUT, MINUS
from .quadrature import gauss_segment
from .spaces import rt0_factors

Vector = Callable[[np.ndarray, np.ndarray], tuple]
Scalar = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Patch:
    """Interface elements sharing the ``Omega^+`` vertex ``vertex``.

    ``edges`` lists ``e^1 .. e^{n}`` followed by the closing ``Omega^+`` edge
    when the patch ends in a two-vertex element.  ``tilde_edges`` are the
    ``Omega^-`` edges of the single-vertex elements.
    """

    vertex: int
    elements: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    tilde_edges: list = field(default_factory=list)
    closed: bool = False  # ends with a two-vertex element

    @property
    def n(self) -> int:
        return len(self.elements)


@dataclass
class Chain:
    elements: list  # ordered interface elements
    links: list  # intersecting edges, len(elements) + 1 (cyclic: last == first)
    cyclic: bool


@dataclass
class InterfacePatchSet:
    chains: list
    patches: list
    solved: dict  # element -> edge whose flux it determines
    order: list = field(default_factory=list)  # (element, edge) in solve order

    @property
    def vertices(self) -> list:
        return [p.vertex for p in self.patches]

    @property
    def cyclic(self) -> bool:
        return bool(self.chains) and all(c.cyclic for c in self.chains)

    def elements(self) -> list:
        return [t for p in self.patches for t in p.elements]


# -- patch construction ------------------------------------------------------

def _intersecting_edges(mesh, geometry, tri) -> list:
    vm = geometry.vertex_minus
    out = []
    for e in mesh.tri_edges[tri]:
        a, b = mesh.edges[e]
        if vm[a] != vm[b]:
            out.append(int(e))
    return out


def _plus_vertices(mesh, geometry, tri) -> list:
    return [int(v) for v in mesh.triangles[tri] if not geometry.vertex_minus[v]]


def _plus_end(mesh, geometry, edge) -> int:
    a, b = mesh.edges[edge]
    return int(a) if not geometry.vertex_minus[a] else int(b)


def build_patches(mesh, geometry) -> InterfacePatchSet:
    """Chain the interface elements and split the chains into vertex patches.

    Raises
    ------
    PatchError
        If an interface element does not have exactly two intersecting
        edges, the flux unknowns of a chain cannot be assigned one per
        element, or a closed chain has no element with two ``Omega^+``
        vertices.
    """
    cut = set(int(t) for t in np.flatnonzero(geometry.classes == CUT))
    inter = {}
    for t in sorted(cut):
        es = _intersecting_edges(mesh, geometry, t)
        if len(es) != 2:
            raise PatchError(f"interface element {t} has {len(es)} intersecting edges")
        inter[t] = es

    def across(t, e):
        a, b = mesh.edge_tris[e]
        other = int(b) if a == t else int(a)
        return other if other in cut else None

    # edges whose flux must stay canonical because a non-interface element of
    # T_h^- uses them
    minus_full = np.flatnonzero(geometry.classes == MINUS)
    fixed = set(int(e) for e in np.unique(mesh.tri_edges[minus_full])) if len(minus_full) else set()

    seen: set = set()
    chains = []
    ends = []
    for t in sorted(cut):
        for e in inter[t]:
            if across(t, e) is None:
                ends.append((e in fixed, tuple(geometry.edge_points[e]), t, e))
    # chains leaving a fixed edge first, then by crossing point
    for _, _, t, e in sorted(ends, key=lambda z: (not z[0], z[1])):
        if t in seen:
            continue
        chains.append(_walk(t, e, inter, across, seen, cyclic=False))
    for t in sorted(cut):
        if t in seen:
            continue
        chains.append(_walk(t, inter[t][0], inter, across, seen, cyclic=True))
    chains = [_orient_cycle(mesh, geometry, c) if c.cyclic else c for c in chains]

    claimed: dict = {}
    order = []
    patches = []
    for c in chains:
        unknowns = _assign_unknowns(mesh, geometry, c, fixed, claimed)
        order.extend(_peel(mesh, c, unknowns))
        patches.extend(_split_patches(mesh, geometry, c))
    return InterfacePatchSet(chains, patches, dict(order), order)


def _walk(start, entry, inter, across, seen, cyclic) -> Chain:
    elems, links = [], [entry]
    t, e = start, entry
    while True:
        elems.append(t)
        seen.add(t)
        out = inter[t][1] if inter[t][0] == e else inter[t][0]
        links.append(out)
        nxt = across(t, out)
        if nxt is None or nxt == start:
            break
        if nxt in seen:
            raise PatchError(f"interface element {nxt} reached twice while chaining")
        t, e = nxt, out
    if cyclic and links[-1] != links[0]:
        raise PatchError("closed interface chain does not close")
    return Chain(elems, links, cyclic)


def _orient_cycle(mesh, geometry, chain: Chain) -> Chain:
    pts = np.array([geometry.edge_points[e] for e in chain.links[:-1]])
    x, y = pts[:, 0], pts[:, 1]
    signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    elems, links = list(chain.elements), list(chain.links)
    if signed < 0:
        elems = elems[::-1]
        links = links[::-1]
    # rotate so the chain starts after the two-vertex element holding the
    # lowest-indexed Omega^+ vertex
    best = None
    for k, t in enumerate(elems):
        pv = _plus_vertices(mesh, geometry, t)
        if len(pv) == 2:
            key = min(pv)
            if best is None or key < best[0]:
                best = (key, k)
    if best is None:
        raise PatchError("closed interface chain has no element with two Omega^+ vertices")
    k = (best[1] + 1) % len(elems)
    elems = elems[k:] + elems[:k]
    core = links[:-1]
    core = core[k:] + core[:k]
    return Chain(elems, core + [core[0]], True)


def _plus_edge(mesh, chain, k) -> int:
    t = chain.elements[k]
    return [int(e) for e in mesh.tri_edges[t] if e not in (chain.links[k], chain.links[k + 1])][0]


def _assign_unknowns(mesh, geometry, chain: Chain, fixed: set, claimed: dict) -> set:
    """Edges whose fluxes the chain determines, one per element."""
    n = len(chain.elements)
    lone = [len(_plus_vertices(mesh, geometry, t)) == 1 for t in chain.elements]
    unknown = []
    for k in range(n):
        if lone[k]:
            unknown.append(chain.links[k + 1])
            continue
        e = _plus_edge(mesh, chain, k)
        if e in claimed or e in fixed:
            # Omega^+ edge already balanced by another chain: fall back to the
            # outgoing intersecting edge
            e = chain.links[k + 1]
            if chain.cyclic and k == n - 1:
                raise PatchError(f"no free flux left for interface element {chain.elements[k]}")
        unknown.append(e)
    if not chain.cyclic and lone[-1] and chain.links[-1] in fixed:
        # trailing single-vertex run ending on a fixed edge: solve it
        # backwards, taking the run's incoming edges instead
        k = n - 1
        while k >= 0 and lone[k]:
            unknown[k] = chain.links[k]
            k -= 1
        if k < 0 and chain.links[0] in fixed:
            raise PatchError(f"interface chain from element {chain.elements[0]} has no free flux")
        if k >= 0 and unknown[k] == chain.links[k + 1]:
            raise PatchError(f"no free flux left for interface element {chain.elements[k]}")
    for k, e in enumerate(unknown):
        if e in claimed or e in fixed:
            raise PatchError(f"flux of edge {e} cannot be assigned to interface element {chain.elements[k]}")
        claimed[e] = chain.elements[k]
    return set(unknown)


def _peel(mesh, chain: Chain, unknowns: set) -> list:
    """Order the elements so each has one undetermined edge when visited."""
    pending = list(chain.elements)
    open_edges = set(unknowns)
    order = []
    while pending:
        progress = False
        rest = []
        for t in pending:
            mine = [int(e) for e in mesh.tri_edges[t] if int(e) in open_edges]
            if len(mine) == 1:
                order.append((t, mine[0]))
                open_edges.discard(mine[0])
                progress = True
            else:
                rest.append(t)
        if not progress:
            raise PatchError(f"flux balance of interface elements {rest[:5]} cannot be resolved")
        pending = rest
    return order


def _split_patches(mesh, geometry, chain: Chain) -> list:
    patches: list[Patch] = []
    current = None
    for k, t in enumerate(chain.elements):
        e_in, e_out = chain.links[k], chain.links[k + 1]
        v = _plus_end(mesh, geometry, e_in)
        if current is None or current.closed or current.vertex != v:
            current = Patch(v, edges=[e_in])
            patches.append(current)
        current.elements.append(t)
        if len(_plus_vertices(mesh, geometry, t)) == 1:
            current.tilde_edges.extend(int(e) for e in mesh.tri_edges[t] if e not in (e_in, e_out))
            current.edges.append(e_out)
        else:
            current.edges.append(_plus_edge(mesh, chain, k))
            current.closed = True
    return patches


# -- interpolation -----------------------------------------------------------

def edge_normals(mesh) -> np.ndarray:
    """Global unit normal of every edge (outward for its first triangle)."""
    p0 = mesh.vertices[mesh.edges[:, 0]]
    d = mesh.vertices[mesh.edges[:, 1]] - p0
    n = np.column_stack([d[:, 1], -d[:, 0]]) / np.hypot(d[:, 0], d[:, 1])[:, None]
    owner = mesh.edge_tris[:, 0]
    centroid = mesh.tri_coords()[owner].mean(axis=1)
    flip = np.einsum("ed,ed->e", n, p0 - centroid) < 0
    n[flip] *= -1
    return n


def canonical_rt_interpolate(field: Vector, layout) -> np.ndarray:
    """Mean normal traces ``d_e`` on every sigma edge (4-point Gauss)."""
    mesh = layout.mesh
    edges = layout.rt_edges
    g, w = np.polynomial.legendre.leggauss(4)
    t = 0.5 * (g + 1.0)
    p0 = mesh.vertices[mesh.edges[edges, 0]]
    p1 = mesh.vertices[mesh.edges[edges, 1]]
    pts = p0[:, None, :] + t[None, :, None] * (p1 - p0)[:, None, :]
    vx, vy = field(pts[..., 0], pts[..., 1])
    n = edge_normals(mesh)[edges]
    vn = np.asarray(vx) * n[:, 0, None] + np.asarray(vy) * n[:, 1, None]
    return 0.5 * (vn * w).sum(axis=1)


def l2_project_p0(fun: Scalar, layout, geometry, min_area: float = 0.0) -> np.ndarray:
    """Cut-cell averages ``(1/|K_h^-|) int_{K_h^-} fun`` with the scheme rule."""
    _, pts, w = side_rules(geometry, MINUS)
    area = w.sum(axis=1)
    bad = np.flatnonzero(area <= min_area)
    if len(bad):
        raise DegenerateCutError(f"element {int(layout.p0_tris[bad[0]])} has |K_h^-| = {area[bad[0]]:.3e}")
    vals = np.asarray(fun(pts[..., 0], pts[..., 1]), dtype=float) * np.ones_like(w)
    return (w * vals).sum(axis=1) / area


def modified_rt_interpolate(field: Vector, div: Scalar, layout, patches: InterfacePatchSet, geometry) -> np.ndarray:
    """Coefficients of the modified interpolation ``Pi*_RT``."""
    mesh = layout.mesh
    d = canonical_rt_interpolate(field, layout)
    lengths = mesh.edge_lengths()
    flux = d * lengths[layout.rt_edges]  # |e| d_e
    pi0 = l2_project_p0(div, layout, geometry)
    sign = mesh.edge_sign()
    areas = mesh.areas()
    for t, target in patches.order:
        edges = mesh.tri_edges[t]
        s = sign[t]
        total = areas[t] * pi0[layout.p0_index[t]]
        k_target = int(np.flatnonzero(edges == target)[0])
        for k, e in enumerate(edges):
            if k != k_target:
                total -= s[k] * flux[layout.rt_index[e]]
        flux[layout.rt_index[target]] = total / s[k_target]
    return flux / lengths[layout.rt_edges]


def rt_divergence(coeffs, layout) -> np.ndarray:
    """Elementwise divergence of an RT0 field on ``T_h^-``."""
    mesh = layout.mesh
    tris = layout.p0_tris
    c = rt0_factors(mesh)[tris]
    return 2.0 * (c * np.asarray(coeffs)[layout.rt_index[mesh.tri_edges[tris]]]).sum(axis=1)


def check_commuting(field: Vector, div: Scalar, layout, patches, geometry) -> tuple[float, float]:
    """Max and mean of ``|div Pi* tau - Pi_h^0 div tau|`` over ``T_h^-``.

    Both are relative to ``max(|Pi_h^0 div tau|, |d_e| / h)``, the natural size
    of the divergence of an RT0 field with these fluxes.
    """
    coeffs = modified_rt_interpolate(field, div, layout, patches, geometry)
    lhs = rt_divergence(coeffs, layout)
    rhs = l2_project_p0(div, layout, geometry)
    scale = max(np.abs(rhs).max(initial=0.0), np.abs(coeffs).max(initial=0.0) / layout.mesh.cell_size, 1e-300)
    defect = np.abs(lhs - rhs) / scale
    return float(defect.max(initial=0.0)), float(defect.mean()) if len(defect) else 0.0


# -- random fields for property checks ---------------------------------------

@dataclass(frozen=True)
class QuadraticField:
    """Vector field whose components are quadratic polynomials.

    ``coeffs`` has shape ``(2, 6)`` over the monomials ``1, x, y, x^2, xy, y^2``.
    """

    coeffs: np.ndarray

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 1.0) -> "QuadraticField":
        return cls(scale * rng.standard_normal((2, 6)))

    def __call__(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        m = (np.ones_like(x), x, y, x * x, x * y, y * y)
        a, b = self.coeffs
        return sum(c * v for c, v in zip(a, m)), sum(c * v for c, v in zip(b, m))

    def div(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        a, b = self.coeffs
        # d/dx of first component plus d/dy of second
        return (a[1] + 2 * a[3] * x + a[4] * y) + (b[2] + b[4] * x + 2 * b[5] * y)


def commuting_report(rows) -> str:
    """CSV with columns level, example, max_defect, mean_defect."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["level", "example", "max_defect", "mean_defect"])
    for level, example, mx, mean in rows:
        wr.writerow([level, example, f"{mx:.3E}", f"{mean:.3E}"])
    return buf.getvalue()


def segment_flux(field: Vector, p0, p1, normal) -> float:
    """``int_[p0,p1] field . normal`` with 4-point Gauss (oracle helper)."""
    pts, w = gauss_segment(p0, p1, 4)
    vx, vy = field(pts[:, 0], pts[:, 1])
    return float(np.sum(w * (np.asarray(vx) * normal[0] + np.asarray(vy) * normal[1])))
