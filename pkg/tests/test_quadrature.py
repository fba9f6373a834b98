from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from difem.quadrature import (
    cut_side_rule,
    fan_triangles,
    gauss_segment,
    integrate_reference,
    integrate_segment,
    integrate_tri3,
    polygon_area,
    reference_rule,
    reference_triangle_rule,
    segment_rule,
    tri3_rule,
)

UNIT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def monomial_moment(a: int, b: int) -> float:
    """int over the unit triangle of x^a y^b = a! b! / (a + b + 2)!"""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def test_polygon_area_signed():
    assert polygon_area(UNIT) == 0.5
    assert polygon_area(UNIT[::-1]) == -0.5
    assert polygon_area([[0, 0], [2, 0], [2, 1], [0, 1]]) == 2.0


@pytest.mark.parametrize("a,b", [(a, b) for a in range(3) for b in range(3) if a + b <= 2])
def test_tri3_exact_on_p2_monomials(a, b):
    got = integrate_tri3(lambda x, y: x**a * y**b, UNIT)
    assert got == pytest.approx(monomial_moment(a, b), rel=1e-14)


def test_tri3_not_exact_on_cubic():
    got = integrate_tri3(lambda x, y: x**3, UNIT)
    assert abs(got - monomial_moment(3, 0)) > 1e-4


def test_tri3_nodes():
    pts, w = tri3_rule(UNIT)
    assert w.sum() == pytest.approx(0.5)
    assert np.allclose(pts[0], [1 / 6, 1 / 6])


@pytest.mark.parametrize("degree", [1, 4, 6, 8, 11])
def test_reference_rule_degree(degree):
    bary, w = reference_triangle_rule(degree)
    assert w.sum() == pytest.approx(1.0)
    x, y = bary[:, 1], bary[:, 2]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = 0.5 * np.sum(w * x**a * y**b)
            assert got == pytest.approx(monomial_moment(a, b), rel=1e-12)


def test_segment_rule_exact_p1():
    a, b = np.array([0.2, -1.0]), np.array([1.5, 0.4])
    f = lambda x, y: 3 - 2 * x + 0.5 * y  # noqa: E731
    L = np.hypot(*(b - a))
    assert integrate_segment(f, (a, b)) == pytest.approx(L * 0.5 * (f(*a) + f(*b)), rel=1e-15)
    pts, w = segment_rule(a, b)
    assert w[0] == pytest.approx(L)


def test_gauss_segment_degree7():
    pts, w = gauss_segment((0.0, 0.0), (2.0, 0.0), 4)
    assert np.sum(w * pts[:, 0] ** 7) == pytest.approx(2.0**8 / 8, rel=1e-13)


def test_subtraction_rule_matches_large_part():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.9]])
    small = np.array([tri[0], 0.4 * tri[1], 0.7 * tri[2]])
    large = np.array([small[1], tri[1], tri[2], small[2]])
    pts, w = cut_side_rule(tri, small, small_is_side=False)
    assert w.sum() == pytest.approx(polygon_area(large), rel=1e-14)
    f = lambda x, y: 1 + x * y - y * y  # noqa: E731
    got = float(np.dot(w, f(pts[:, 0], pts[:, 1])))
    assert got == pytest.approx(integrate_reference(f, large, 4), rel=1e-13)
    ps, ws = cut_side_rule(tri, small, small_is_side=True)
    assert len(ws) == 3


def test_fan_independent_of_start():
    poly = np.array([[0.1, 0.0], [1.0, 0.2], [0.8, 1.0], [0.0, 0.7]])
    f = lambda x, y: np.exp(x) * np.cos(y)  # noqa: E731
    a = integrate_reference(f, poly, 10)
    b = integrate_reference(f, np.roll(poly, 2, axis=0), 10)
    assert a == pytest.approx(b, rel=1e-13)
    assert len(fan_triangles(poly)) == 2


@settings(max_examples=50, deadline=None)
@given(
    corners=st.lists(st.floats(-3, 3, allow_nan=False), min_size=6, max_size=6),
    coef=st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6),
)
def test_tri3_affine_invariance(corners, coef):
    tri = np.array(corners).reshape(3, 2)
    area = abs(polygon_area(tri))
    if area < 1e-3:
        return
    c = coef

    def f(x, y):
        return c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y

    # oracle: map the unit-triangle moments through the affine map
    pts, w = reference_rule(tri[None], 2)
    exact = float(np.sum(w * f(pts[..., 0], pts[..., 1])))
    scale = area * (1 + sum(abs(v) for v in c)) * 10
    assert abs(integrate_tri3(f, tri) - exact) <= 1e-12 * scale
