"""Discrete spaces: continuous P1 on T_h^+, RT0 and P0 on T_h^-.

Unknowns are ordered (sigma block, u^- block, u^+ block).  RT0 basis
functions are normalized so that the mean normal trace on their edge is one
(in the direction of the global edge normal).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, FieldUndefinedError
from .geometry import CutGeometry
from .mesh import INTERIOR, SIDE_NAMES, Mesh


@dataclass(frozen=True, eq=False)
class DofLayout:
    mesh: Mesh
    geometry: CutGeometry
    rt_edges: np.ndarray  # global edge ids carrying sigma dofs
    p0_tris: np.ndarray  # triangles carrying u^- dofs
    p1_vertices: np.ndarray  # vertices carrying u^+ dofs
    rt_index: np.ndarray  # edge -> sigma dof (-1 if none)
    p0_index: np.ndarray
    p1_index: np.ndarray
    dirichlet: np.ndarray  # bool over p1 dofs
    dirichlet_values: np.ndarray
    flux_fixed: np.ndarray  # bool over rt dofs
    flux_values: np.ndarray

    @property
    def n_sigma(self) -> int:
        return len(self.rt_edges)

    @property
    def n_um(self) -> int:
        return len(self.p0_tris)

    @property
    def n_up(self) -> int:
        return len(self.p1_vertices)

    @property
    def offsets(self) -> tuple[int, int, int]:
        return 0, self.n_sigma, self.n_sigma + self.n_um

    @property
    def size(self) -> int:
        return self.n_sigma + self.n_um + self.n_up

    def constrained(self) -> tuple[np.ndarray, np.ndarray]:
        """Global indices and prescribed values of eliminated unknowns."""
        _, _, o_up = self.offsets
        idx = np.concatenate([np.flatnonzero(self.flux_fixed), o_up + np.flatnonzero(self.dirichlet)])
        val = np.concatenate([self.flux_values[self.flux_fixed], self.dirichlet_values[self.dirichlet]])
        return idx, val

    def split(self, x):
        """Split a global vector into (sigma, u^-, u^+) coefficient blocks."""
        _, a, b = self.offsets
        return x[:a], x[a:b], x[b:]


def _index(n, ids):
    out = -np.ones(n, dtype=np.int64)
    out[ids] = np.arange(len(ids))
    return out


def boundary_portion(geometry: CutGeometry, edge: int, side: int):
    """Part of a mesh edge lying on ``side`` of the interface, or ``None``."""
    mesh = geometry.mesh
    a, b = mesh.edges[edge]
    pa, pb = mesh.vertices[a], mesh.vertices[b]
    in_minus = geometry.vertex_minus[[a, b]]
    want = side < 0
    if in_minus[0] == want and in_minus[1] == want:
        return pa, pb
    if in_minus[0] != want and in_minus[1] != want:
        return None
    q = geometry.edge_points[edge]
    seg = (pa, q) if in_minus[0] == want else (q, pb)
    if np.hypot(*(seg[1] - seg[0])) == 0.0:
        return None
    return seg


def build_layout(mesh: Mesh, geometry: CutGeometry, problem) -> DofLayout:
    """Allocate dofs and apply essential boundary data of ``problem``."""
    for tag, name in SIDE_NAMES.items():
        if problem.boundary.get(name) not in ("dirichlet", "neumann"):
            raise ConfigError(f"no boundary condition assigned to the {name} side")

    plus_tris = geometry.plus_tris
    minus_tris = geometry.minus_tris
    rt_edges = np.unique(mesh.tri_edges[minus_tris]) if len(minus_tris) else np.empty(0, np.int64)
    p1_vertices = np.unique(mesh.triangles[plus_tris]) if len(plus_tris) else np.empty(0, np.int64)
    rt_index = _index(len(mesh.edges), rt_edges)
    p0_index = _index(len(mesh.triangles), minus_tris)
    p1_index = _index(len(mesh.vertices), p1_vertices)

    kind = {tag: problem.boundary[name] for tag, name in SIDE_NAMES.items()}
    bnd = mesh.boundary_edges()

    # test functions vanish on the Omega^+ part of Dirichlet sides; a P1 trace
    # vanishes on a sub-segment only if it vanishes at both edge ends, so every
    # vertex of such an edge is prescribed (with the smooth u^+ branch)
    dirichlet = np.zeros(len(p1_vertices), dtype=bool)
    values = np.zeros(len(p1_vertices))
    for e in bnd:
        if kind[mesh.edge_tags[e]] != "dirichlet" or boundary_portion(geometry, e, 1) is None:
            continue
        for v in mesh.edges[e]:
            k = p1_index[v]
            if k >= 0 and not dirichlet[k]:
                dirichlet[k] = True
                x, y = mesh.vertices[v]
                values[k] = problem.u_plus(x, y)

    flux_fixed = np.zeros(len(rt_edges), dtype=bool)
    flux_values = np.zeros(len(rt_edges))
    for e in bnd:
        k = rt_index[e]
        if k < 0 or kind[mesh.edge_tags[e]] != "neumann":
            continue
        seg = boundary_portion(geometry, e, -1)
        if seg is None:
            continue
        mid = 0.5 * (seg[0] + seg[1])
        flux_fixed[k] = True
        flux_values[k] = problem.beta_minus * problem.neumann_minus(mid[0], mid[1], int(mesh.edge_tags[e]))

    return DofLayout(
        mesh, geometry, rt_edges, minus_tris, p1_vertices, rt_index, p0_index, p1_index,
        dirichlet, values, flux_fixed, flux_values,
    )


# -- basis functions ---------------------------------------------------------

def barycentric(corners, pts) -> np.ndarray:
    """Barycentric coordinates of points ``(m, 2)`` w.r.t. a triangle."""
    p = np.asarray(corners, float)
    T = np.column_stack([p[1] - p[0], p[2] - p[0]])
    lam12 = np.linalg.solve(T, (np.atleast_2d(pts) - p[0]).T).T
    return np.column_stack([1.0 - lam12.sum(axis=1), lam12])


def p1_gradients(corners) -> np.ndarray:
    """Constant gradients ``(3, 2)`` of the hat functions of a triangle."""
    p = np.asarray(corners, float)
    T = np.column_stack([p[1] - p[0], p[2] - p[0]])
    Tinv = np.linalg.inv(T)
    return np.vstack([-Tinv.sum(axis=0), Tinv])


def all_p1_gradients(mesh: Mesh) -> np.ndarray:
    """Hat-function gradients of every triangle, shape ``(nt, 3, 2)``."""
    p = mesh.tri_coords()
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    g1 = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    return np.stack([-(g1 + g2), g1, g2], axis=1)


def eval_p1(mesh: Mesh, tri: int, local: int, point):
    corners = mesh.tri_coords()[tri]
    lam = barycentric(corners, point)[:, local]
    grad = p1_gradients(corners)[local]
    return (float(lam[0]) if np.ndim(point) == 1 else lam), grad


def rt0_factors(mesh: Mesh) -> np.ndarray:
    """``s |e| / (2 |K|)`` for every local edge, shape ``(nt, 3)``."""
    lengths = mesh.edge_lengths()[mesh.tri_edges]
    return mesh.edge_sign() * lengths / (2.0 * mesh.areas()[:, None])


def eval_rt0(mesh: Mesh, tri: int, local: int, point) -> np.ndarray:
    """RT0 basis of local edge ``local`` (opposite vertex ``local``)."""
    c = rt0_factors(mesh)[tri, local]
    p = mesh.tri_coords()[tri, local]
    return c * (np.asarray(point, float) - p)


def div_rt0(mesh: Mesh, tri: int, local: int) -> float:
    return float(2.0 * rt0_factors(mesh)[tri, local])


def field_eval(layout: DofLayout, coeffs, tri: int, point) -> dict:
    """Evaluate the discrete fields living on ``tri`` at ``point``.

    Returns a dict with the keys ``sigma``, ``u_minus`` and ``u_plus`` for the
    fields whose space covers the element.
    """
    mesh = layout.mesh
    sig, um, up = layout.split(np.asarray(coeffs, float))
    point = np.asarray(point, float)
    out = {}
    if layout.p0_index[tri] >= 0:
        dofs = layout.rt_index[mesh.tri_edges[tri]]
        out["sigma"] = sum(sig[d] * eval_rt0(mesh, tri, k, point) for k, d in enumerate(dofs))
        out["u_minus"] = float(um[layout.p0_index[tri]])
    if np.all(layout.p1_index[mesh.triangles[tri]] >= 0) and tri in set(layout.geometry.plus_tris.tolist()):
        lam = barycentric(mesh.tri_coords()[tri], point)[0]
        out["u_plus"] = float(np.dot(lam, up[layout.p1_index[mesh.triangles[tri]]]))
    if not out:
        raise FieldUndefinedError(f"no discrete field is defined on element {tri}")
    return out


def interior_edges_of(mesh: Mesh, tris) -> np.ndarray:
    return np.array([e for e in np.unique(mesh.tri_edges[tris]) if mesh.edge_tags[e] == INTERIOR])
