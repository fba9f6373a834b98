"""Structured triangulations of axis-aligned squares.

The level-``L`` mesh of ``[a, b]^2`` is a ``2^L x 2^L`` grid of squares, each
split by its south-west to north-east diagonal.  Numbering is fixed:

* vertex ``(i, j)`` (column ``i``, row ``j``) has index ``j * (n + 1) + i``;
* edges are numbered horizontal first (row-major), then vertical, then
  diagonal;
* cell ``(i, j)`` holds triangle ``2 * (j * n + i)`` = ``(v00, v10, v11)`` and
  triangle ``2 * (j * n + i) + 1`` = ``(v00, v11, v01)``.

Local edge ``k`` of a triangle is the edge opposite its local vertex ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INTERIOR, BOTTOM, RIGHT, TOP, LEFT = 0, 1, 2, 3, 4
SIDE_NAMES = {BOTTOM: "bottom", RIGHT: "right", TOP: "top", LEFT: "left"}


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable uniform triangulation with full connectivity.

    Attributes
    ----------
    vertices : (nv, 2) float array
    edges : (ne, 2) int array of vertex indices
    edge_tags : (ne,) int array, 0 for interior else the side id (1..4)
    triangles : (nt, 3) int array, counterclockwise
    tri_edges : (nt, 3) int array, ``tri_edges[t, k]`` is opposite vertex ``k``
    edge_tris : (ne, 2) int array, adjacent triangles (lower index first, -1 if
        boundary)
    level : refinement level
    domain : ``(a, b)`` so that the domain is ``[a, b]^2``
    """

    vertices: np.ndarray
    edges: np.ndarray
    edge_tags: np.ndarray
    triangles: np.ndarray
    tri_edges: np.ndarray
    edge_tris: np.ndarray
    level: int
    domain: tuple[float, float]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_cells(self) -> int:
        return 2**self.level

    @property
    def cell_size(self) -> float:
        a, b = self.domain
        return (b - a) / self.n_cells

    @property
    def h(self) -> float:
        """Maximal triangle diameter (the hypotenuse length)."""
        return float(np.sqrt(2.0) * self.cell_size)

    def tri_coords(self) -> np.ndarray:
        """Corner coordinates, shape ``(nt, 3, 2)``."""
        if "tri_coords" not in self._cache:
            self._cache["tri_coords"] = self.vertices[self.triangles]
        return self._cache["tri_coords"]

    def areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            p = self.tri_coords()
            d1 = p[:, 1] - p[:, 0]
            d2 = p[:, 2] - p[:, 0]
            self._cache["areas"] = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        return self._cache["areas"]

    def edge_lengths(self) -> np.ndarray:
        if "edge_lengths" not in self._cache:
            d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
            self._cache["edge_lengths"] = np.hypot(d[:, 0], d[:, 1])
        return self._cache["edge_lengths"]

    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tags != INTERIOR)

    def edge_sign(self) -> np.ndarray:
        """Orientation sign of each local edge, shape ``(nt, 3)``.

        The global normal of an interior edge points from its lower-indexed
        triangle to the higher-indexed one; boundary normals point outward.
        A local sign is +1 when the global normal is outward for that triangle.
        """
        if "edge_sign" not in self._cache:
            owner = self.edge_tris[self.tri_edges, 0]
            t = np.arange(len(self.triangles))[:, None]
            self._cache["edge_sign"] = np.where(owner == t, 1.0, -1.0)
        return self._cache["edge_sign"]


def build_mesh(domain: tuple[float, float] = (0.0, 1.0), level: int = 0) -> Mesh:
    """Level-``level`` north-east split triangulation of ``[a, b]^2``."""
    a, b = float(domain[0]), float(domain[1])
    if level < 0:
        raise ValueError("level must be nonnegative")
    if not b > a:
        raise ValueError("domain must have positive side length")
    n = 2**level
    coords = a + (b - a) * np.arange(n + 1) / n
    X, Y = np.meshgrid(coords, coords)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    I, J = np.meshgrid(np.arange(n), np.arange(n + 1))
    horiz = np.column_stack([vid(I, J).ravel(), vid(I + 1, J).ravel()])
    I, J = np.meshgrid(np.arange(n + 1), np.arange(n))
    vert = np.column_stack([vid(I, J).ravel(), vid(I, J + 1).ravel()])
    I, J = np.meshgrid(np.arange(n), np.arange(n))
    diag = np.column_stack([vid(I, J).ravel(), vid(I + 1, J + 1).ravel()])
    edges = np.vstack([horiz, vert, diag]).astype(np.int64)

    n_h = n * (n + 1)
    n_v = (n + 1) * n

    def hid(i, j):
        return j * n + i

    def vtid(i, j):
        return n_h + j * (n + 1) + i

    def did(i, j):
        return n_h + n_v + j * n + i

    I, J = I.ravel(), J.ravel()
    v00, v10, v11, v01 = vid(I, J), vid(I + 1, J), vid(I + 1, J + 1), vid(I, J + 1)
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    tri_edges = np.empty_like(triangles)
    tri_edges[0::2] = np.column_stack([vtid(I + 1, J), did(I, J), hid(I, J)])
    tri_edges[1::2] = np.column_stack([hid(I, J + 1), vtid(I, J), did(I, J)])

    edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
    for t, row in enumerate(tri_edges):
        for e in row:
            if edge_tris[e, 0] < 0:
                edge_tris[e, 0] = t
            else:
                edge_tris[e, 1] = t
    # triangles are visited in increasing order, so column 0 is the lower index

    tags = np.zeros(len(edges), dtype=np.int64)
    p0, p1 = vertices[edges[:, 0]], vertices[edges[:, 1]]
    on_bnd = edge_tris[:, 1] < 0
    tags[on_bnd & (p0[:, 1] == a) & (p1[:, 1] == a)] = BOTTOM
    tags[on_bnd & (p0[:, 0] == b) & (p1[:, 0] == b)] = RIGHT
    tags[on_bnd & (p0[:, 1] == b) & (p1[:, 1] == b)] = TOP
    tags[on_bnd & (p0[:, 0] == a) & (p1[:, 0] == a)] = LEFT

    return Mesh(vertices, edges, tags, triangles, tri_edges, edge_tris, level, (a, b))


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement; identical to ``build_mesh(domain, level + 1)``."""
    return build_mesh(mesh.domain, mesh.level + 1)


def parent_map(coarse: Mesh, fine: Mesh) -> np.ndarray:
    """Parent triangle in ``coarse`` of every triangle of ``fine``."""
    if fine.level < coarse.level or fine.domain != coarse.domain:
        raise ValueError("fine mesh must refine the coarse one")
    a, _ = coarse.domain
    c = fine.tri_coords().mean(axis=1)
    size = coarse.cell_size
    i = np.floor((c[:, 0] - a) / size).astype(np.int64)
    j = np.floor((c[:, 1] - a) / size).astype(np.int64)
    # inside a cell, the lower triangle lies below the diagonal
    upper = (c[:, 1] - a - j * size) > (c[:, 0] - a - i * size)
    return 2 * (j * coarse.n_cells + i) + upper.astype(np.int64)


def edge_midpoint_length(mesh: Mesh, edge: int) -> tuple[np.ndarray, float]:
    p0, p1 = mesh.vertices[mesh.edges[edge]]
    return 0.5 * (p0 + p1), float(np.hypot(*(p1 - p0)))


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text dump with full double precision."""
    lines = [
        f"vertices {len(mesh.vertices)} edges {len(mesh.edges)} "
        f"triangles {len(mesh.triangles)} level {mesh.level}"
    ]
    for k, (x, y) in enumerate(mesh.vertices):
        lines.append(f"v {k} {x:.17g} {y:.17g}")
    for k, ((p, q), tag) in enumerate(zip(mesh.edges, mesh.edge_tags)):
        lines.append(f"e {k} {p} {q} {tag}")
    for k, (tri, ed) in enumerate(zip(mesh.triangles, mesh.tri_edges)):
        lines.append(f"t {k} {tri[0]} {tri[1]} {tri[2]} {ed[0]} {ed[1]} {ed[2]}")
    return "\n".join(lines) + "\n"
