import numpy as np
import pytest
import scipy.sparse as sp

from difem.assembly import SaddleSystem, assemble, dump_matrix, eliminate, estimate_infsup, solve
from difem.exceptions import SingularSystemError
from difem.geometry import MINUS, PLUS, classify
from difem.mesh import build_mesh
from difem.problems import catalog
from difem.quadrature import reference_rule
from difem.reporting import subcell_triangles
from difem.spaces import build_layout, rt0_factors


def build(example, beta, level):
    p = catalog(example, beta)
    mesh = build_mesh(p.domain, level)
    g = classify(mesh, p.levelset)
    lay = build_layout(mesh, g, p)
    return p, mesh, g, lay, assemble(mesh, g, lay, p)


@pytest.fixture(scope="module", params=[(1, 10.0, 3), (2, 0.001, 3), (3, 100.0, 3), (4, 1.0, 3)])
def system(request):
    return build(*request.param)


def test_exact_symmetry(system):
    *_, sysm = system
    for A in (sysm.raw, sysm.matrix):
        D = (A - A.T).tocsr()
        D.eliminate_zeros()
        assert D.nnz == 0


def test_zero_blocks(system):
    *_, lay, sysm = system
    _, o_m, o_p = lay.offsets
    A = sysm.raw.tocsr()
    assert abs(A[o_m:o_p, o_m:o_p]).sum() == 0.0
    assert abs(A[o_m:o_p, o_p:]).sum() == 0.0


def test_mass_block_matches_reference_rule(system):
    p, mesh, g, lay, sysm = system
    # oracle: RT0 mass integrated by a degree-4 rule on fan triangles
    owner, tris = subcell_triangles(g, MINUS)
    pts, w = reference_rule(tris, 4)
    c = rt0_factors(mesh)[owner]
    corners = mesh.tri_coords()[owner]
    phi = c[:, None, :, None] * (pts[:, :, None, :] - corners[:, None, :, :])
    loc = np.einsum("mq,mqid,mqjd->mij", w, phi, phi) / p.beta_minus
    dof = lay.rt_index[mesh.tri_edges[owner]]
    M = sp.coo_matrix(
        (loc.ravel(), (np.repeat(dof, 3, axis=1).ravel(), np.tile(dof, (1, 3)).ravel())),
        shape=(lay.n_sigma, lay.n_sigma),
    ).toarray()
    got = sysm.blocks["M"].toarray()
    assert np.max(np.abs(got - M)) <= 1e-12 * np.max(np.abs(M))


def test_stiffness_block_area_weighted(system):
    p, mesh, g, lay, sysm = system
    K = sysm.blocks["K"]
    # constants are in the kernel of the stiffness
    assert np.max(np.abs(K @ np.ones(lay.n_up))) < 1e-10 * abs(K).max()
    # the energy of a linear function is its gradient squared times |Omega_h^+|
    xy = mesh.vertices[lay.p1_vertices]
    v = 2 * xy[:, 0] - xy[:, 1]
    area = g.side_areas(PLUS).sum()
    assert v @ (K @ v) == pytest.approx(5 * area, rel=1e-12)


def test_divergence_block(system):
    p, mesh, g, lay, sysm = system
    B = sysm.blocks["B"].toarray()
    # B applied to the canonical fluxes of a constant field vanishes
    from difem.interpolation import canonical_rt_interpolate

    d = canonical_rt_interpolate(lambda x, y: (0 * x + 1.3, 0 * y - 0.7), lay)
    assert np.max(np.abs(B @ d)) < 1e-12
    # and of x gives |K_h^-| (div = 1)
    d = canonical_rt_interpolate(lambda x, y: (x, 0 * y), lay)
    assert np.allclose(B @ d, g.side_areas(MINUS)[lay.p0_tris], rtol=1e-12)


def test_solve_residual(system):
    *_, sysm = system
    sol = solve(sysm)
    assert sol.relative_residual < 1e-10
    assert sol.min_pivot_ratio >= 1e-14


@pytest.mark.parametrize("s", [1e-3, 7.0, 1e4])
def test_scaling_equivariance(s):
    p = catalog(2, 10.0)
    mesh = build_mesh(p.domain, 3)
    g = classify(mesh, p.levelset)
    x = []
    for q in (p, p.scaled(s)):
        lay = build_layout(mesh, g, q)
        x.append(solve(assemble(mesh, g, lay, q)).x)
    assert np.allclose(x[1], s * x[0], rtol=1e-10, atol=1e-12 * s * np.abs(x[0]).max())


def test_mass_positive_definite():
    *_, lay, sysm = build(2, 1.0, 2)
    M = sysm.blocks["M"].toarray()
    assert np.linalg.eigvalsh(M).min() > 0


def test_singular_system_raises():
    *_, lay, sysm = build(2, 1.0, 2)
    A = sysm.matrix.tolil()
    A[0, :] = 0.0
    A[:, 0] = 0.0
    bad = SaddleSystem(lay, sysm.raw, sysm.rhs_raw, A.tocsr(), sysm.rhs)
    with pytest.raises(SingularSystemError):
        solve(bad)


def test_eliminate():
    A = sp.csr_matrix(np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]]))
    b = np.array([1.0, 2.0, 3.0])
    Ac, rc = eliminate(A, b, np.array([2]), np.array([5.0]))
    x = np.linalg.solve(Ac.toarray(), rc)
    assert x[2] == 5.0
    # first two rows of the original system hold
    assert np.allclose((A @ x)[:2], b[:2])
    assert (abs(Ac - Ac.T)).sum() == 0


def test_infsup_positive():
    *_, sysm = build(2, 1.0, 2)
    assert estimate_infsup(sysm) > 0.1


def test_dump_matrix_roundtrip():
    A = sp.random(6, 6, density=0.4, random_state=3, format="csr")
    text = dump_matrix(A).splitlines()
    n, m, nnz = map(int, text[0].split())
    B = np.zeros((n, m))
    for ln in text[1:]:
        i, j, v = ln.split()
        B[int(i), int(j)] = float(v)
    assert nnz == A.nnz and np.array_equal(B, A.toarray())
