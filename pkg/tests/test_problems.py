import numpy as np
import pytest

from difem.exceptions import ConfigError, UnknownExampleError
from difem.geometry import edge_intersection
from difem.problems import catalog, patch_problem

BETAS = [0.001, 1.0, 1000.0]
H = 1e-4


def fd_grad(u, x, y):
    return (u(x + H, y) - u(x - H, y)) / (2 * H), (u(x, y + H) - u(x, y - H)) / (2 * H)


def fd_flux_div(beta, u, x, y):
    """div(beta grad u): five-point Laplacian, Richardson-extrapolated to O(h^4)."""
    def lap(h):
        return (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4 * u(x, y)) / h**2

    return beta * (4 * lap(1e-3) - lap(2e-3)) / 3


def sample_side(p, side, n, rng):
    a, b = p.domain
    pts = rng.uniform(a + 0.05, b - 0.05, (20 * n, 2))
    phi = p.levelset(pts[:, 0], pts[:, 1])
    # keep clear of the interface and of the flower centre
    gap = 0.02 * np.abs(phi).max()
    keep = (phi > gap) if side < 0 else (phi < -gap)
    keep &= np.hypot(pts[:, 0], pts[:, 1]) > 0.05
    return pts[keep][:n]


@pytest.mark.parametrize("example", [1, 2, 3, 4])
@pytest.mark.parametrize("beta", BETAS)
def test_gradients_and_sources(example, beta):
    p = catalog(example, beta)
    rng = np.random.default_rng(example)
    for side, u, grad, f, b in (
        (-1, p.u_minus, p.grad_minus, p.f_minus, p.beta_minus),
        (1, p.u_plus, p.grad_plus, p.f_plus, p.beta_plus),
    ):
        pts = sample_side(p, side, 15, rng)
        assert len(pts) > 5
        x, y = pts.T
        gx, gy = grad(x, y)
        fx, fy = fd_grad(u, x, y)
        scale = 1 + np.abs(gx).max() + np.abs(gy).max()
        assert np.max(np.abs(gx - fx)) < 1e-6 * scale
        assert np.max(np.abs(gy - fy)) < 1e-6 * scale
        lhs = -fd_flux_div(b, u, x, y)
        fv = f(x, y) * np.ones_like(x)
        assert np.max(np.abs(lhs - fv)) < 1e-4 * (1 + np.abs(fv).max())


@pytest.mark.parametrize("example", [1, 2, 3, 4])
@pytest.mark.parametrize("beta", BETAS)
def test_interface_conditions(example, beta):
    p = catalog(example, beta)
    mesh_pts = []
    rng = np.random.default_rng(10 + example)
    a, b = p.domain
    # interface points by bisection between sampled points of opposite sides
    inside = sample_side(p, -1, 30, rng)
    outside = sample_side(p, 1, 30, rng)
    for q0, q1 in zip(inside, outside):
        try:
            mesh_pts.append(edge_intersection(p.levelset, q0, q1, tol=1e-15))
        except Exception:
            continue
    pts = np.array(mesh_pts)
    pts = pts[np.abs(p.levelset(*pts.T)) < 1e-10]
    assert len(pts) >= 10
    x, y = pts.T
    um, up = p.u_minus(x, y), p.u_plus(x, y)
    assert np.max(np.abs(um - up)) < 1e-8 * (1 + np.abs(up).max())
    gphi = np.array(fd_grad(p.levelset, x, y))
    n = gphi / np.linalg.norm(gphi, axis=0)
    fm = p.beta_minus * np.sum(np.array(p.grad_minus(x, y)) * n, axis=0)
    fp = p.beta_plus * np.sum(np.array(p.grad_plus(x, y)) * n, axis=0)
    assert np.max(np.abs(fm - fp)) < 1e-8 * (1 + np.abs(fp).max())


def test_catalog_errors():
    with pytest.raises(UnknownExampleError):
        catalog(7, 1.0)
    with pytest.raises(ConfigError):
        catalog(2, 0.0)
    with pytest.raises(ConfigError):
        catalog(2, -1.0)


def test_scaled_problem():
    p = catalog(2, 3.0)
    q = p.scaled(2.5)
    assert q.u_plus(0.3, 0.4) == pytest.approx(2.5 * p.u_plus(0.3, 0.4))
    assert q.f_minus(0.3, 0.4) == pytest.approx(2.5 * p.f_minus(0.3, 0.4))


@pytest.mark.parametrize("beta", [0.01, 2.0, 100.0])
def test_patch_problem_is_discrete(beta):
    p = patch_problem(beta)
    x = np.array([0.1, 0.9, 0.4])
    y = np.array([0.2, 0.3, 0.8])
    # affine in each branch: second differences vanish
    for u in (p.u_minus, p.u_plus):
        second = u(x + 0.1, y) - 2 * u(x, y) + u(x - 0.1, y)
        assert np.allclose(second, 0.0, atol=1e-13 * (1 + np.abs(u(x, y)).max()))
    # flux continuity across the line
    nrm = np.array([1.0, 0.3]) / np.hypot(1.0, 0.3)
    gm = np.array([g[0] for g in p.grad_minus(x, y)])
    gp = np.array([g[0] for g in p.grad_plus(x, y)])
    assert beta * gm @ nrm == pytest.approx(gp @ nrm, rel=1e-13)
    # continuity on the line
    t = np.linspace(0, 1, 5)
    lx, ly = 0.61 - 0.3 * t, t
    assert np.allclose(p.u_minus(lx, ly), p.u_plus(lx, ly), atol=1e-14)
