"""Assembly and solution of the coupled saddle-point system.

Unknown ordering is (sigma, u^-, u^+).  The matrix is

    [ M    B^T   C  ]
    [ B    0     0  ]
    [ C^T  0    -K  ]

with ``M`` the weighted RT0 mass on the ``Omega^-`` parts, ``B`` the
divergence pairing, ``C = -<v^+, tau.n>`` on the discrete interface and ``K``
the P1 stiffness on the ``Omega^+`` parts.  All integrals use the scheme
quadrature: three-point rule on triangles, subtraction rule on four-sided
subcells, midpoint rule on interface segments.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import AssemblyError, ResourceError, SingularSystemError
from .geometry import MINUS, PLUS
from .mesh import SIDE_NAMES
from .quadrature import TRI3_BARY, TRI3_WEIGHTS
from .spaces import DofLayout, all_p1_gradients, boundary_portion, rt0_factors

log = logging.getLogger(__name__)


@dataclass
class SaddleSystem:
    """Assembled system before and after elimination of essential dofs."""

    layout: DofLayout
    raw: sp.csr_matrix  # no constraints applied
    rhs_raw: np.ndarray
    matrix: sp.csr_matrix  # constrained rows/cols replaced by identity
    rhs: np.ndarray
    blocks: dict = field(default_factory=dict)  # M, B, C, K as csr


@dataclass
class SolutionFields:
    layout: DofLayout
    x: np.ndarray
    residual: float
    relative_residual: float
    min_pivot_ratio: float

    @property
    def sigma(self):
        return self.layout.split(self.x)[0]

    @property
    def u_minus(self):
        return self.layout.split(self.x)[1]

    @property
    def u_plus(self):
        return self.layout.split(self.x)[2]


def side_rules(geometry, side: int):
    """Six-point padded rules on the ``side`` part of every relevant element.

    Returns ``(tris, pts, w)`` with ``pts`` of shape ``(n, 6, 2)``; uncut
    elements use the three-point rule followed by three zero-weight nodes.
    """
    mesh = geometry.mesh
    tris = geometry.minus_tris if side == MINUS else geometry.plus_tris
    coords = mesh.tri_coords()[tris]
    pts = np.zeros((len(tris), 6, 2))
    w = np.zeros((len(tris), 6))
    pts[:, :3] = np.einsum("qk,tkd->tqd", TRI3_BARY, coords)
    pts[:, 3:] = pts[:, :3]
    w[:, :3] = TRI3_WEIGHTS[None, :] * mesh.areas()[tris, None]
    pos = {int(t): k for k, t in enumerate(tris)}
    for t, rec in geometry.cuts.items():
        p, ww = rec.rule(side)
        k = pos[t]
        pts[k, : len(ww)] = p
        w[k, : len(ww)] = ww
        w[k, len(ww):] = 0.0
    return tris, pts, w


def _rt_values(mesh, tris, pts):
    """RT0 basis values ``(n, q, 3, 2)`` at points ``(n, q, 2)``."""
    c = rt0_factors(mesh)[tris]
    corners = mesh.tri_coords()[tris]
    return c[:, None, :, None] * (pts[:, :, None, :] - corners[:, None, :, :])


def _barycentric_many(mesh, tris, pts):
    """Barycentric coordinates ``(n, q, 3)`` of points in their own elements."""
    corners = mesh.tri_coords()[tris]
    g = all_p1_gradients(mesh)[tris]
    d = pts - corners[:, None, 0, :]
    lam12 = np.einsum("nqd,nkd->nqk", d, g[:, 1:, :])
    return np.concatenate([1.0 - lam12.sum(axis=2, keepdims=True), lam12], axis=2)


def assemble(mesh, geometry, layout: DofLayout, problem) -> SaddleSystem:
    """Assemble matrix and load vector, then eliminate essential dofs."""
    n_s, n_m, n_p = layout.n_sigma, layout.n_um, layout.n_up
    o_m, o_p = n_s, n_s + n_m
    N = layout.size
    rows, cols, vals = [], [], []
    rhs = np.zeros(N)

    def add(r, c, v):
        rows.append(np.ravel(r))
        cols.append(np.ravel(c))
        vals.append(np.ravel(v))

    # Omega^- side: mass, divergence, source
    tris, pts, w = side_rules(geometry, MINUS)
    if len(tris):
        dof = layout.rt_index[mesh.tri_edges[tris]]  # (n, 3)
        phi = _rt_values(mesh, tris, pts)
        # explicit products keep the local matrix exactly symmetric
        dots = (phi[:, :, :, None, :] * phi[:, :, None, :, :]).sum(axis=-1)
        Mloc = (w[:, :, None, None] * dots).sum(axis=1) / problem.beta_minus
        add(np.repeat(dof, 3, axis=1), np.tile(dof, (1, 3)), Mloc)
        area = w.sum(axis=1)
        div = 2.0 * rt0_factors(mesh)[tris]
        Bloc = div * area[:, None]  # (n, 3)
        pdof = o_m + layout.p0_index[tris]
        add(np.repeat(pdof, 3), dof, Bloc)
        add(dof, np.repeat(pdof, 3), Bloc)
        fval = problem.f_minus(pts[..., 0], pts[..., 1])
        np.add.at(rhs, pdof, -np.sum(w * fval, axis=1))

    # Omega^+ side: stiffness, source
    tris, pts, w = side_rules(geometry, PLUS)
    if len(tris):
        vdof = o_p + layout.p1_index[mesh.triangles[tris]]
        g = all_p1_gradients(mesh)[tris]
        area = w.sum(axis=1)
        Kloc = problem.beta_plus * (g[:, :, None, :] * g[:, None, :, :]).sum(axis=-1) * area[:, None, None]
        add(np.repeat(vdof, 3, axis=1), np.tile(vdof, (1, 3)), -Kloc)
        lam = _barycentric_many(mesh, tris, pts)
        fval = problem.f_plus(pts[..., 0], pts[..., 1])
        np.add.at(rhs, vdof, -np.einsum("nq,nq,nqi->ni", w, fval, lam))

    # interface coupling on the discrete segments
    if geometry.cuts:
        ct = np.array(sorted(geometry.cuts))
        recs = [geometry.cuts[t] for t in ct]
        mid = np.array([r.midpoint for r in recs])[:, None, :]
        nrm = np.array([r.normal for r in recs])
        length = np.array([r.length for r in recs])
        phi = _rt_values(mesh, ct, mid)[:, 0]  # (n, 3, 2)
        flux = np.einsum("nid,nd->ni", phi, nrm)
        lam = _barycentric_many(mesh, ct, mid)[:, 0]  # (n, 3)
        Cloc = -length[:, None, None] * flux[:, :, None] * lam[:, None, :]
        sdof = layout.rt_index[mesh.tri_edges[ct]]
        vdof = o_p + layout.p1_index[mesh.triangles[ct]]
        add(np.repeat(sdof, 3, axis=1), np.tile(vdof, (1, 3)), Cloc)
        add(np.tile(vdof, (1, 3)), np.repeat(sdof, 3, axis=1), Cloc)

    _boundary_terms(mesh, geometry, layout, problem, rhs)

    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    ).tocsr()
    A.sum_duplicates()
    if not np.all(np.isfinite(A.data)) or not np.all(np.isfinite(rhs)):
        raise AssemblyError("non-finite entries in the assembled system")

    blocks = {
        "M": A[:n_s, :n_s],
        "B": A[o_m:o_p, :n_s],
        "C": A[:n_s, o_p:],
        "K": -A[o_p:, o_p:],
    }
    matrix, reduced = eliminate(A, rhs, *layout.constrained())
    return SaddleSystem(layout, A, rhs, matrix, reduced, blocks)


def _boundary_terms(mesh, geometry, layout, problem, rhs):
    """Dirichlet data on the Omega^- part of the boundary and Neumann data on
    the Omega^+ part; both use the midpoint rule on the (sub-)edge."""
    o_p = layout.n_sigma + layout.n_um
    kinds = problem.boundary
    for e in mesh.boundary_edges():
        tag = int(mesh.edge_tags[e])
        kind = kinds[SIDE_NAMES[tag]]
        k = layout.rt_index[e]
        if kind == "dirichlet" and k >= 0 and not layout.flux_fixed[k]:
            seg = boundary_portion(geometry, e, MINUS)
            if seg is not None:
                m = 0.5 * (seg[0] + seg[1])
                # basis normal trace is one on its own (outward) boundary edge
                rhs[k] += np.hypot(*(seg[1] - seg[0])) * problem.u_minus(m[0], m[1])
        if kind == "neumann":
            a, b = mesh.edges[e]
            if layout.p1_index[a] < 0 or layout.p1_index[b] < 0:
                continue
            seg = boundary_portion(geometry, e, PLUS)
            if seg is None:
                continue
            m = 0.5 * (seg[0] + seg[1])
            L = np.hypot(*(seg[1] - seg[0]))
            pa, pb = mesh.vertices[a], mesh.vertices[b]
            t = np.dot(m - pa, pb - pa) / np.dot(pb - pa, pb - pa)
            gN = problem.beta_plus * problem.neumann_plus(m[0], m[1], tag)
            rhs[o_p + layout.p1_index[a]] -= L * gN * (1.0 - t)
            rhs[o_p + layout.p1_index[b]] -= L * gN * t


def eliminate(A, b, idx, values):
    """Symmetric elimination of prescribed unknowns.

    Known columns move to the right-hand side; rows and columns of the
    eliminated unknowns become identity with the prescribed value.
    """
    N = A.shape[0]
    x0 = np.zeros(N)
    x0[idx] = values
    rhs = b - A @ x0
    keep = np.ones(N)
    keep[idx] = 0.0
    D = sp.diags(keep)
    Ac = (D @ A @ D).tocsr()
    Ac = Ac + sp.diags(1.0 - keep)
    Ac = Ac.tocsr()
    Ac.eliminate_zeros()
    rhs[idx] = values
    return Ac, rhs


def solve(system: SaddleSystem, refine_steps: int = 2) -> SolutionFields:
    """Scaled sparse LU solve with a posteriori residual check."""
    A = system.matrix.tocsc()
    b = system.rhs
    if A.shape[0] == 0:
        return SolutionFields(system.layout, np.zeros(0), 0.0, 0.0, 1.0)
    rowmax = np.asarray(abs(A).max(axis=1).todense()).ravel()
    if np.any(rowmax == 0.0):
        raise SingularSystemError(f"{int(np.sum(rowmax == 0))} zero rows in the system")
    s = 1.0 / np.sqrt(rowmax)
    S = sp.diags(s)
    As = (S @ A @ S).tocsc()
    try:
        lu = spla.splu(As, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(str(exc)) from exc
    piv = np.abs(lu.U.diagonal())
    ratio = float(piv.min() / piv.max())
    if ratio < 1e-14:
        raise SingularSystemError(f"pivot ratio {ratio:.2e} below 1e-14")
    y = lu.solve(s * b)
    x = s * y
    for _ in range(refine_steps):
        r = b - A @ x
        x = x + s * lu.solve(s * r)
    r = b - A @ x
    res = float(np.linalg.norm(r))
    scale = spla.norm(A, np.inf) * np.linalg.norm(x) + np.linalg.norm(b)
    rel = res / scale if scale > 0 else res
    if rel > 1e-10:
        log.warning("relative residual %.2e exceeds 1e-10", rel)
    return SolutionFields(system.layout, x, res, rel, ratio)


def norm_matrices(system: SaddleSystem):
    """Gram matrices of the discrete norms restricted to free sigma dofs.

    ``N1`` carries the weighted mass plus the squared divergence, ``N0`` the
    P0 mass on the ``Omega^-`` parts.
    """
    layout = system.layout
    geometry = layout.geometry
    mesh = layout.mesh
    tris = geometry.minus_tris
    area = geometry.side_areas(MINUS)[tris]
    div = 2.0 * rt0_factors(mesh)[tris]
    dof = layout.rt_index[mesh.tri_edges[tris]]
    D = sp.coo_matrix(
        (div.ravel(), (np.repeat(np.arange(len(tris)), 3), dof.ravel())),
        shape=(len(tris), layout.n_sigma),
    ).tocsr()
    N1 = system.blocks["M"] + D.T @ sp.diags(area) @ D
    N0 = sp.diags(area)
    free = ~layout.flux_fixed
    return N1.tocsr()[free][:, free], N0.tocsr(), system.blocks["B"].tocsr()[:, free]


def estimate_infsup(system: SaddleSystem, max_size: int = 6000) -> float:
    """Smallest generalized singular value of the divergence pairing.

    Solves ``B N1^{-1} B^T x = lam N0 x`` densely and returns ``sqrt(lam_min)``.
    """
    N1, N0, B = norm_matrices(system)
    if max(N1.shape[0], N0.shape[0]) > max_size:
        raise ResourceError(f"dense inf-sup problem of size {N1.shape[0]} exceeds cap {max_size}")
    N1d = N1.toarray()
    Bd = B.toarray()
    X = scipy.linalg.solve(N1d, Bd.T, assume_a="pos")
    S = Bd @ X
    S = 0.5 * (S + S.T)
    lam = scipy.linalg.eigh(S, N0.toarray(), eigvals_only=True, subset_by_index=[0, 0])
    return float(np.sqrt(max(lam[0], 0.0)))


def dump_matrix(A) -> str:
    """Coordinate text dump ``row col value`` with 17 significant digits."""
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    lines = [f"{C.shape[0]} {C.shape[1]} {C.nnz}"]
    lines += [f"{C.row[k]} {C.col[k]} {C.data[k]:.17g}" for k in order]
    return "\n".join(lines) + "\n"
