"""Built-in interface problems with closed-form solutions.

Every problem is posed as ``-div(beta grad u) = f`` with ``[u] = 0`` and
``[beta grad u . n] = 0`` across the interface; ``beta^+ = 1`` throughout.
Sources are hand-derived and checked against finite differences in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ConfigError, UnknownExampleError
from .levelset import LevelSet, affine, circle, two_circles
from .mesh import BOTTOM, LEFT, RIGHT, TOP

Scalar = Callable[[np.ndarray, np.ndarray], np.ndarray]
Vector = Callable[[np.ndarray, np.ndarray], tuple]

OUTWARD = {BOTTOM: (0.0, -1.0), RIGHT: (1.0, 0.0), TOP: (0.0, 1.0), LEFT: (-1.0, 0.0)}
ALL_DIRICHLET = {"bottom": "dirichlet", "right": "dirichlet", "top": "dirichlet", "left": "dirichlet"}


@dataclass(frozen=True)
class ProblemSpec:
    """Interface problem with exact solution branches.

    ``u_minus``/``grad_minus``/``f_minus`` describe the solution on the side
    where the level set is positive.
    """

    name: str
    domain: tuple[float, float]
    levelset: LevelSet
    beta_minus: float
    beta_plus: float
    u_plus: Scalar
    u_minus: Scalar
    grad_plus: Vector
    grad_minus: Vector
    f_plus: Scalar
    f_minus: Scalar
    boundary: dict = field(default_factory=lambda: dict(ALL_DIRICHLET))
    levels: tuple[int, int] = (2, 6)

    def __post_init__(self):
        if not (self.beta_minus > 0 and self.beta_plus > 0):
            raise ConfigError("coefficients must be positive")

    def sigma_minus(self, x, y):
        gx, gy = self.grad_minus(x, y)
        return self.beta_minus * gx, self.beta_minus * gy

    def neumann_minus(self, x, y, tag: int):
        """``du^-/dn`` on the side ``tag`` (outward normal)."""
        nx, ny = OUTWARD[tag]
        gx, gy = self.grad_minus(x, y)
        return gx * nx + gy * ny

    def neumann_plus(self, x, y, tag: int):
        nx, ny = OUTWARD[tag]
        gx, gy = self.grad_plus(x, y)
        return gx * nx + gy * ny

    def scaled(self, s: float) -> "ProblemSpec":
        """Same problem with solution and data multiplied by ``s``."""
        def mul(fun):
            return lambda x, y: s * fun(x, y)

        def mulv(fun):
            return lambda x, y: tuple(s * c for c in fun(x, y))

        return ProblemSpec(
            self.name, self.domain, self.levelset, self.beta_minus, self.beta_plus,
            mul(self.u_plus), mul(self.u_minus), mulv(self.grad_plus), mulv(self.grad_minus),
            mul(self.f_plus), mul(self.f_minus), dict(self.boundary), self.levels,
        )


# -- example 1: sinusoidal open interface ------------------------------------

def _example1(bm: float) -> ProblemSpec:
    pi = np.pi

    def w(x, y):
        # cos(pi x) cos(pi y) (0.5 + 0.2 sin(pi x) - y)
        return np.cos(pi * x) * np.cos(pi * y) * (0.5 + 0.2 * np.sin(pi * x) - y)

    def grad_w(x, y):
        c = np.cos(pi * x) * np.cos(pi * y)
        p = 0.5 + 0.2 * np.sin(pi * x) - y
        cx = -pi * np.sin(pi * x) * np.cos(pi * y)
        cy = -pi * np.cos(pi * x) * np.sin(pi * y)
        return cx * p + c * 0.2 * pi * np.cos(pi * x), cy * p - c

    def lap_w(x, y):
        c = np.cos(pi * x) * np.cos(pi * y)
        p = 0.5 + 0.2 * np.sin(pi * x) - y
        cx = -pi * np.sin(pi * x) * np.cos(pi * y)
        cy = -pi * np.cos(pi * x) * np.sin(pi * y)
        return -2 * pi**2 * c * p + 2 * (cx * 0.2 * pi * np.cos(pi * x) - cy) - c * 0.2 * pi**2 * np.sin(pi * x)

    def f(x, y):
        return -bm * lap_w(x, y)

    return ProblemSpec(
        name="example1",
        domain=(0.0, 1.0),
        # Omega^- lies above the curve
        levelset=LevelSet("example1"),
        beta_minus=bm,
        beta_plus=1.0,
        u_plus=lambda x, y: bm * w(x, y),
        u_minus=w,
        grad_plus=lambda x, y: tuple(bm * g for g in grad_w(x, y)),
        grad_minus=grad_w,
        f_plus=f,
        f_minus=f,
        boundary={"bottom": "dirichlet", "right": "dirichlet", "top": "neumann", "left": "dirichlet"},
        levels=(3, 7),
    )


# -- example 2: circle --------------------------------------------------------

def _example2(bm: float) -> ProblemSpec:
    r2 = 1.1**2

    def u_minus(x, y):
        return np.exp(x * x + y * y - r2) + bm * r2 - 1.0

    def grad_minus(x, y):
        e = np.exp(x * x + y * y - r2)
        return 2 * x * e, 2 * y * e

    def f_minus(x, y):
        rho = x * x + y * y
        return -bm * np.exp(rho - r2) * (4.0 + 4.0 * rho)

    return ProblemSpec(
        name="example2",
        domain=(-2.0, 2.0),
        levelset=circle(1.1),
        beta_minus=bm,
        beta_plus=1.0,
        u_plus=lambda x, y: bm * (x * x + y * y),
        u_minus=u_minus,
        grad_plus=lambda x, y: (2 * bm * x, 2 * bm * y),
        grad_minus=grad_minus,
        f_plus=lambda x, y: -4.0 * bm + 0.0 * x,
        f_minus=f_minus,
        levels=(2, 6),
    )


# -- example 3: two close circles -------------------------------------------

def _example3(bm: float) -> ProblemSpec:
    r2 = 0.19**2
    c1, c2 = (0.3, 0.5), (0.7, 0.5)

    def parts(x, y):
        a = (x - c1[0]) ** 2 + (y - c1[1]) ** 2 - r2
        b = (x - c2[0]) ** 2 + (y - c2[1]) ** 2 - r2
        ga = (2 * (x - c1[0]), 2 * (y - c1[1]))
        gb = (2 * (x - c2[0]), 2 * (y - c2[1]))
        return a, b, ga, gb

    def w(x, y):
        a, b, _, _ = parts(x, y)
        return a * b

    def grad_w(x, y):
        a, b, ga, gb = parts(x, y)
        return b * ga[0] + a * gb[0], b * ga[1] + a * gb[1]

    def f(x, y):
        a, b, ga, gb = parts(x, y)
        return -(4 * a + 4 * b + 2 * (ga[0] * gb[0] + ga[1] * gb[1]))

    return ProblemSpec(
        name="example3",
        domain=(0.0, 1.0),
        levelset=two_circles(0.19, (c1, c2)),
        beta_minus=bm,
        beta_plus=1.0,
        u_plus=w,
        u_minus=lambda x, y: w(x, y) / bm,
        grad_plus=grad_w,
        grad_minus=lambda x, y: tuple(g / bm for g in grad_w(x, y)),
        f_plus=f,
        f_minus=f,
        levels=(2, 6),
    )


# -- example 4: flower --------------------------------------------------------

def _flower_parts(x, y):
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    s5, c5 = np.sin(5 * th), np.cos(5 * th)
    p = 2.0 ** (s5 - 3.0)
    ln2 = np.log(2.0)
    c = 0.5 - p
    dc = -5.0 * ln2 * p * c5
    ddc = -25.0 * ln2 * p * (ln2 * c5 * c5 - s5)
    return r, th, c, dc, ddc


def _example4(bm: float) -> ProblemSpec:
    def w(x, y):
        r, _, c, _, _ = _flower_parts(x, y)
        return r**3 - r * r * c

    def grad_w(x, y):
        r, th, c, dc, _ = _flower_parts(x, y)
        wr = 3 * r * r - 2 * r * c
        wt = -r * dc  # (1/r) dw/dtheta
        ct, st = np.cos(th), np.sin(th)
        return wr * ct - wt * st, wr * st + wt * ct

    def f(x, y):
        r, _, c, _, ddc = _flower_parts(x, y)
        return -(9 * r - 4 * c - ddc)

    return ProblemSpec(
        name="example4",
        domain=(-1.0, 1.0),
        levelset=LevelSet("flower"),
        beta_minus=bm,
        beta_plus=1.0,
        u_plus=w,
        u_minus=lambda x, y: w(x, y) / bm,
        grad_plus=grad_w,
        grad_minus=lambda x, y: tuple(g / bm for g in grad_w(x, y)),
        f_plus=f,
        f_minus=f,
        levels=(2, 6),
    )


_BUILDERS = {1: _example1, 2: _example2, 3: _example3, 4: _example4}


def catalog(example: int, beta_minus: float) -> ProblemSpec:
    """Problem of built-in example ``example`` (1..4) with the given ``beta^-``."""
    if example not in _BUILDERS:
        raise UnknownExampleError(f"unknown example {example!r}; choose 1, 2, 3 or 4")
    if not beta_minus > 0:
        raise ConfigError("beta_minus must be positive")
    return _BUILDERS[example](float(beta_minus))


def patch_problem(
    beta_minus: float = 2.0,
    normal=(1.0, 0.3),
    offset: float = -0.61,
    slope=(1.0, -0.4),
    shift: float = 0.25,
) -> ProblemSpec:
    """Piecewise-linear solution across an affine interface on the unit square.

    ``u^+ = slope . x + shift`` and ``u^- = u^+ + k phi`` with ``k`` fixed by
    flux continuity, so both branches lie in the discrete spaces and ``f = 0``.
    """
    nx, ny = normal
    nrm = np.hypot(nx, ny)
    gx, gy = slope
    gn = (gx * nx + gy * ny) / nrm
    k = (1.0 / beta_minus - 1.0) * gn / nrm
    ls = affine(nx, ny, offset)

    def u_plus(x, y):
        return gx * x + gy * y + shift

    def u_minus(x, y):
        return u_plus(x, y) + k * (nx * x + ny * y + offset)

    zero = lambda x, y: 0.0 * np.asarray(x, float)  # noqa: E731
    return ProblemSpec(
        name="patch",
        domain=(0.0, 1.0),
        levelset=ls,
        beta_minus=float(beta_minus),
        beta_plus=1.0,
        u_plus=u_plus,
        u_minus=u_minus,
        grad_plus=lambda x, y: (gx + zero(x, y), gy + zero(x, y)),
        grad_minus=lambda x, y: (gx + k * nx + zero(x, y), gy + k * ny + zero(x, y)),
        f_plus=zero,
        f_minus=zero,
        levels=(2, 5),
    )
