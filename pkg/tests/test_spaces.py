import dataclasses

import numpy as np
import pytest

from difem.exceptions import ConfigError
from difem.geometry import CUT, MINUS, PLUS, classify
from difem.interpolation import edge_normals
from difem.mesh import INTERIOR, build_mesh
from difem.problems import catalog
from difem.spaces import (
    barycentric,
    boundary_portion,
    build_layout,
    div_rt0,
    eval_p1,
    eval_rt0,
    field_eval,
    interior_edges_of,
    p1_gradients,
)


@pytest.fixture(scope="module")
def setup():
    p = catalog(1, 10.0)
    mesh = build_mesh(p.domain, 3)
    g = classify(mesh, p.levelset)
    return p, mesh, g, build_layout(mesh, g, p)


def test_dof_counts(setup):
    p, mesh, g, lay = setup
    assert lay.n_sigma == len(np.unique(mesh.tri_edges[g.minus_tris]))
    assert lay.n_um == len(g.minus_tris)
    assert lay.n_up == len(np.unique(mesh.triangles[g.plus_tris]))
    assert lay.size == lay.n_sigma + lay.n_um + lay.n_up
    x = np.arange(lay.size, dtype=float)
    s, um, up = lay.split(x)
    assert len(s) == lay.n_sigma and len(um) == lay.n_um and len(up) == lay.n_up


def test_rt0_normal_traces(setup):
    _, mesh, _, _ = setup
    n = edge_normals(mesh)
    for t in range(0, len(mesh.triangles), 7):
        for k in range(3):
            for j in range(3):
                e = mesh.tri_edges[t, j]
                a, b = mesh.vertices[mesh.edges[e]]
                for s in (0.1, 0.5, 0.8):
                    v = eval_rt0(mesh, t, k, a + s * (b - a))
                    assert np.dot(v, n[e]) == pytest.approx(1.0 if j == k else 0.0, abs=1e-12)


def test_rt0_divergence_theorem(setup):
    _, mesh, _, _ = setup
    # int_K div phi_k = flux through edge k along the outward normal
    sign = mesh.edge_sign()
    for t in range(0, len(mesh.triangles), 5):
        for k in range(3):
            L = mesh.edge_lengths()[mesh.tri_edges[t, k]]
            assert div_rt0(mesh, t, k) * mesh.areas()[t] == pytest.approx(sign[t, k] * L)


def test_p1_basis():
    corners = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 0.8]])
    lam = barycentric(corners, corners)
    assert np.allclose(lam, np.eye(3))
    g = p1_gradients(corners)
    assert np.allclose(g.sum(axis=0), 0.0)
    pts = np.array([[0.4, 0.3], [0.2, 0.2]])
    assert np.allclose(barycentric(corners, pts).sum(axis=1), 1.0)
    assert np.allclose(barycentric(corners, pts) @ corners, pts)


def test_eval_p1_matches_gradient(setup):
    _, mesh, _, _ = setup
    c = mesh.tri_coords()[3]
    v0, g = eval_p1(mesh, 3, 1, c.mean(axis=0))
    v1, _ = eval_p1(mesh, 3, 1, c.mean(axis=0) + np.array([1e-3, 2e-3]))
    assert v1 - v0 == pytest.approx(g @ [1e-3, 2e-3])
    assert v0 == pytest.approx(1 / 3)


def test_boundary_portion(setup):
    _, mesh, g, _ = setup
    for e in mesh.boundary_edges():
        plus = boundary_portion(g, e, PLUS)
        minus = boundary_portion(g, e, MINUS)
        L = mesh.edge_lengths()[e]
        lp = 0.0 if plus is None else np.hypot(*(plus[1] - plus[0]))
        lm = 0.0 if minus is None else np.hypot(*(minus[1] - minus[0]))
        assert lp + lm == pytest.approx(L)
        if g.edge_cut[e] and not g.snapped[mesh.edges[e]].any():
            assert lp > 0 and lm > 0


def test_dirichlet_and_neumann_data(setup):
    p, mesh, g, lay = setup
    # every p1 dof on a Dirichlet side with an Omega^+ part is prescribed exactly
    vals = lay.dirichlet_values[lay.dirichlet]
    verts = lay.p1_vertices[lay.dirichlet]
    assert np.allclose(vals, p.u_plus(*mesh.vertices[verts].T))
    assert lay.dirichlet.sum() > 0
    # top side is Neumann and lies in Omega^-: its fluxes are essential
    top = [e for e in mesh.boundary_edges() if mesh.edge_tags[e] == 3]
    assert all(lay.flux_fixed[lay.rt_index[e]] for e in top)


def test_missing_boundary_condition(setup):
    p, mesh, g, _ = setup
    bad = dataclasses.replace(p, boundary={"bottom": "dirichlet"})
    with pytest.raises(ConfigError):
        build_layout(mesh, g, bad)


def test_field_eval_on_cut_element(setup):
    _, mesh, g, lay = setup
    t = int(g.cut_tris[0])
    x = np.random.default_rng(1).standard_normal(lay.size)
    out = field_eval(lay, x, t, mesh.tri_coords()[t].mean(axis=0))
    assert set(out) == {"sigma", "u_minus", "u_plus"}
    tm = int(np.flatnonzero(g.classes == MINUS)[0])
    assert set(field_eval(lay, x, tm, mesh.tri_coords()[tm].mean(axis=0))) == {"sigma", "u_minus"}


def test_interior_edges_of(setup):
    _, mesh, g, _ = setup
    e = interior_edges_of(mesh, g.cut_tris)
    assert np.all(mesh.edge_tags[e] == INTERIOR)
    assert np.all(g.classes[g.cut_tris] == CUT)
