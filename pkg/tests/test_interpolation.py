import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from shapely.geometry import Polygon

from difem.exceptions import DegenerateCutError
from difem.geometry import MINUS, classify
from difem.interpolation import (
    QuadraticField,
    build_patches,
    canonical_rt_interpolate,
    check_commuting,
    commuting_report,
    edge_normals,
    l2_project_p0,
    modified_rt_interpolate,
    rt_divergence,
    segment_flux,
)
from difem.mesh import build_mesh
from difem.problems import catalog
from difem.reporting import compute_errors
from difem.spaces import build_layout, field_eval


def setup(example, level, beta=1.0):
    p = catalog(example, beta)
    mesh = build_mesh(p.domain, level)
    g = classify(mesh, p.levelset)
    lay = build_layout(mesh, g, p)
    return p, mesh, g, lay, build_patches(mesh, g)


@pytest.fixture(scope="module", params=[(1, 3), (2, 3), (3, 4), (4, 3)])
def case(request):
    return setup(*request.param)


def test_edge_normals_unit_and_outward():
    mesh = build_mesh((0.0, 1.0), 2)
    n = edge_normals(mesh)
    assert np.allclose(np.hypot(*n.T), 1.0)
    bnd = mesh.boundary_edges()
    mid = mesh.vertices[mesh.edges[bnd]].mean(axis=1)
    assert np.all(np.einsum("ed,ed->e", n[bnd], mid - 0.5) > 0)


def test_patch_structure(case):
    _, mesh, g, lay, ps = case
    cut = set(g.cut_tris.tolist())
    # each interface element solves exactly one edge, and no two share it
    assert set(ps.solved) == cut
    assert len(set(ps.solved.values())) == len(ps.solved)
    assert [t for t, _ in ps.order] and set(t for t, _ in ps.order) == cut
    # edges of elements entirely in Omega^- keep their canonical flux
    minus_edges = set(mesh.tri_edges[g.classes == MINUS].ravel().tolist())
    assert not minus_edges & set(ps.solved.values())
    for t, e in ps.solved.items():
        assert e in mesh.tri_edges[t]


def test_constant_field_reproduced(case):
    _, mesh, g, lay, ps = case
    f = lambda x, y: (0 * x + 0.7, 0 * y - 1.9)  # noqa: E731
    d = canonical_rt_interpolate(f, lay)
    n = edge_normals(mesh)[lay.rt_edges]
    assert np.allclose(d, n @ [0.7, -1.9], atol=1e-14)
    dm = modified_rt_interpolate(f, lambda x, y: 0 * x, lay, ps, g)
    assert np.allclose(dm, d, atol=1e-12)


def test_linear_rt_field_reproduced(case):
    _, mesh, g, lay, ps = case
    # (a + c x, b + c y) lies in RT0: both interpolants are exact
    f = lambda x, y: (0.3 + 2.0 * x, -1.0 + 2.0 * y)  # noqa: E731
    dm = modified_rt_interpolate(f, lambda x, y: 4.0 + 0 * x, lay, ps, g)
    coeffs = np.zeros(lay.size)
    coeffs[: lay.n_sigma] = dm
    rng = np.random.default_rng(0)
    for t in rng.choice(lay.p0_tris, 10):
        c = mesh.tri_coords()[t]
        pt = rng.dirichlet(np.ones(3)) @ c
        s = field_eval(lay, coeffs, t, pt)["sigma"]
        assert np.allclose(s, f(*pt), atol=1e-11)


def test_canonical_edge_integral_y_squared():
    p, mesh, g, lay, _ = setup(2, 2)
    d = canonical_rt_interpolate(lambda x, y: (y * y, 0 * x), lay)
    n = edge_normals(mesh)
    for k, e in enumerate(lay.rt_edges):
        a, b = mesh.vertices[mesh.edges[e]]
        # exact: n_x/|e| int_e y^2 ds = n_x (ya^2 + ya yb + yb^2) / 3
        exact = n[e, 0] * (a[1] ** 2 + a[1] * b[1] + b[1] ** 2) / 3
        assert d[k] == pytest.approx(exact, abs=1e-14)
        L = mesh.edge_lengths()[e]
        assert segment_flux(lambda x, y: (y * y, 0 * x), a, b, n[e]) / L == pytest.approx(exact, abs=1e-14)


def test_modified_agrees_away_from_interface(case):
    _, mesh, g, lay, ps = case
    f = QuadraticField.random(np.random.default_rng(5))
    d = canonical_rt_interpolate(f, lay)
    dm = modified_rt_interpolate(f, f.div, lay, ps, g)
    touched = np.isin(lay.rt_edges, list(ps.solved.values()))
    assert np.allclose(d[~touched], dm[~touched], rtol=1e-13, atol=1e-15)


def test_commuting(case):
    _, mesh, g, lay, ps = case
    rng = np.random.default_rng(11)
    for _ in range(5):
        f = QuadraticField.random(rng)
        mx, mean = check_commuting(f, f.div, lay, ps, g)
        assert mx <= 1e-10 and mean <= mx


def test_divergence_of_interpolant_is_cell_mean(case):
    _, mesh, g, lay, ps = case
    f = QuadraticField.random(np.random.default_rng(2))
    dm = modified_rt_interpolate(f, f.div, lay, ps, g)
    div = rt_divergence(dm, lay)
    ref = l2_project_p0(f.div, lay, g)
    assert np.allclose(div, ref, atol=1e-10 * (1 + np.abs(ref).max()))


def test_l2_projection():
    p, mesh, g, lay, _ = setup(2, 3)
    assert np.allclose(l2_project_p0(lambda x, y: 2.5 + 0 * x, lay, g), 2.5)
    # a linear function is averaged exactly: compare with the subcell centroid value
    mean = l2_project_p0(lambda x, y: x, lay, g)
    for k, t in enumerate(lay.p0_tris):
        rec = g.cuts.get(int(t))
        poly = mesh.tri_coords()[t] if rec is None else rec.polygon(MINUS)
        assert mean[k] == pytest.approx(Polygon(poly).centroid.x, abs=1e-13)
    with pytest.raises(DegenerateCutError):
        l2_project_p0(lambda x, y: x, lay, g, min_area=1e9)


def test_approximation_rate():
    # ||sigma - Pi* sigma|| on Omega_h^- decreases at least linearly
    errs = []
    for level in range(3, 7):
        p, mesh, g, lay, ps = setup(2, level, 10.0)
        dm = modified_rt_interpolate(p.sigma_minus, lambda x, y: -p.f_minus(x, y), lay, ps, g)
        x = np.zeros(lay.size)
        x[: lay.n_sigma] = dm
        errs.append(compute_errors(x, p, g, lay).absolute["e_sigma"])
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= 0.9), rates


def test_boundedness():
    # the rebalanced fluxes stay comparable to the canonical ones
    rng = np.random.default_rng(3)
    for ex in (1, 2, 3, 4):
        p, mesh, g, lay, ps = setup(ex, 4)
        f = QuadraticField.random(rng)
        d = canonical_rt_interpolate(f, lay)
        dm = modified_rt_interpolate(f, f.div, lay, ps, g)
        assert np.abs(dm).max() <= 50 * np.abs(d).max()


def test_quadratic_field_divergence():
    f = QuadraticField.random(np.random.default_rng(9))
    x, y, h = 0.3, -0.4, 1e-5
    fd = (f(x + h, y)[0] - f(x - h, y)[0] + f(x, y + h)[1] - f(x, y - h)[1]) / (2 * h)
    assert f.div(x, y) == pytest.approx(fd, rel=1e-8)


def test_commuting_report():
    text = commuting_report([(2, 1, 1e-16, 5e-17)])
    assert text.splitlines() == ["level,example,max_defect,mean_defect", "2,1,1.000E-16,5.000E-17"]


@settings(max_examples=15, deadline=None)
@given(coeffs=st.lists(st.floats(-10, 10, allow_nan=False), min_size=12, max_size=12))
def test_commuting_property_random(coeffs):
    p, mesh, g, lay, ps = _EX3
    f = QuadraticField(np.array(coeffs).reshape(2, 6))
    if not np.any(f.coeffs):
        return
    mx, _ = check_commuting(f, f.div, lay, ps, g)
    assert mx <= 1e-10


_EX3 = setup(3, 3)
