import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anidmp.mesh import element_geometry
from anidmp.tensor import (EXAMPLE1, EXAMPLE2, EXAMPLE3, ConstantField, DiffusionTensor,
                           FieldError, RotatedEigenField, eig_sym2, element_average, evaluate,
                           field_from_spec, parse_expression, sqrt_and_inv_sqrt)


def scalar_rotated(theta, k1, k2):
    # plain-math oracle for R diag(k1, k2) R^T
    c, s = math.cos(theta), math.sin(theta)
    return [[k1 * c * c + k2 * s * s, (k1 - k2) * c * s],
            [(k1 - k2) * c * s, k1 * s * s + k2 * c * c]]


def test_example1_values():
    t = evaluate(EXAMPLE1, 0.3, 0.9)
    assert np.allclose(t.matrix, [[50.5, 49.5], [49.5, 50.5]], rtol=1e-14)
    lmin, lmax, v = eig_sym2(t)
    assert (lmin, lmax) == pytest.approx((1.0, 100.0))
    assert abs(v @ [1, 1]) == pytest.approx(math.sqrt(2))


def test_rotated_identity():
    f = RotatedEigenField(lambda x, y: 0 * x, lambda x, y: 1 + 0 * x, lambda x, y: 1 + 0 * x)
    assert np.allclose(evaluate(f, 0.2, 0.4).matrix, np.eye(2))


def test_example3_at_origin():
    t = evaluate(EXAMPLE3, 0.0, 0.0)
    ref = scalar_rotated(0.5 * math.atan(1.0), 100.0, 10 * math.sin(math.pi / 6))
    assert np.allclose(t.matrix, ref, rtol=1e-14)


def test_example2_tangent_direction():
    # principal direction is tangent to circles about the centre
    for x, y in [(0.9, 0.5), (0.5, 0.1), (0.2, 0.8)]:
        _, lmax, v = eig_sym2(evaluate(EXAMPLE2, x, y))
        assert lmax == pytest.approx(100.0)
        assert abs(v @ [x - 0.5, y - 0.5]) < 1e-12
    assert np.allclose(evaluate(EXAMPLE2, 0.5, 0.5).matrix, [[100, 0], [0, 1]])


@pytest.mark.parametrize("field", [EXAMPLE1, EXAMPLE2, EXAMPLE3])
def test_spd_on_grid(field):
    g = np.linspace(0, 1, 101)
    x, y = np.meshgrid(g, g)
    d11, d12, d22 = field.components(x, y)
    assert np.all(d11 > 0) and np.all(d11 * d22 - d12 ** 2 > 0)


def test_example3_eigen_ranges():
    g = np.linspace(0, 1, 101)
    x, y = np.meshgrid(g, g)
    r = x * x + y * y
    k1 = 100 * np.cos(r * np.pi / 6)
    k2 = 10 * np.sin((r + 1) * np.pi / 6)
    assert k1.min() >= 50 - 1e-12 and k1.max() <= 100
    assert k2.min() >= 5 - 1e-12 and k2.max() <= 10 + 1e-12


def test_nonpositive_eigenvalue_rejected():
    f = RotatedEigenField(lambda x, y: 0 * x, lambda x, y: x - 0.5, lambda x, y: 1 + 0 * x)
    with pytest.raises(FieldError):
        evaluate(f, 0.2, 0.2)
    with pytest.raises(FieldError):
        DiffusionTensor(1.0, 2.0, 1.0)


def test_constant_average_exact(unit_right_triangle):
    c = ConstantField(DiffusionTensor(3.0, 0.5, 2.0))
    for rule in ("vertex", "midpoint", "centroid"):
        t = element_average(c, element_geometry(unit_right_triangle, None), rule)
        assert np.array_equal(t.matrices[0], [[3.0, 0.5], [0.5, 2.0]])


def dense_mean(fn, tri, n=400):
    # fine midpoint-of-subtriangle oracle for the mean over a triangle
    a, b, c = tri
    tot, cnt = 0.0, 0
    for i in range(n):
        for j in range(n - i):
            for u, v in ((i + 1 / 3, j + 1 / 3),) + (((i + 2 / 3, j + 2 / 3),) if i + j < n - 1 else ()):
                p = a + (b - a) * u / n + (c - a) * v / n
                tot += fn(*p)
                cnt += 1
    return tot / cnt


def test_affine_field_average(unit_right_triangle):
    f = RotatedEigenField(lambda x, y: 0 * x, lambda x, y: 1 + x, lambda x, y: 1 + x)
    g = element_geometry(unit_right_triangle, None)
    oracle = dense_mean(lambda x, y: 1 + x, unit_right_triangle, 60)
    assert oracle == pytest.approx(4 / 3, rel=1e-12)
    for rule in ("vertex", "midpoint", "centroid"):
        t = element_average(f, g, rule)
        assert np.allclose(t.matrices[0], (4 / 3) * np.eye(2), rtol=1e-14)


def test_midpoint_rule_exact_for_quadratics(unit_right_triangle):
    f = RotatedEigenField(lambda x, y: 0 * x, lambda x, y: 1 + x * y + y * y,
                          lambda x, y: 1 + x * x)
    t = element_average(f, element_geometry(unit_right_triangle, None), "midpoint")
    # exact means over the unit right triangle: <xy> = 1/12, <y^2> = <x^2> = 1/6
    assert t.matrices[0, 0, 0] == pytest.approx(1 + 1 / 12 + 1 / 6, rel=1e-14)
    assert t.matrices[0, 1, 1] == pytest.approx(1 + 1 / 6, rel=1e-14)


def test_example2_average_close_to_centroid():
    errs = []
    for h in (0.02, 0.01):
        tri = np.array([[0.85, 0.2], [0.85 + h, 0.2], [0.85, 0.2 + h]])
        g = element_geometry(tri, None)
        a = element_average(EXAMPLE2, g, "midpoint").matrices[0]
        c = element_average(EXAMPLE2, g, "centroid").matrices[0]
        errs.append(np.abs(a - c).max())
    assert errs[1] < errs[0] / 3.5


def test_eig_sym2_cases():
    assert eig_sym2(np.eye(2))[:2] == (1.0, 1.0)
    assert eig_sym2(np.array([[2.0, 1], [1, 2]]))[:2] == pytest.approx((1.0, 3.0))


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3), st.floats(-6, 6), st.floats(-6, 6), st.floats(0, math.pi))
def test_eig_reconstruction(log_scale, l1, l2, angle):
    k1, k2 = math.exp(l1), math.exp(l2)
    m = np.array(scalar_rotated(angle, k1, k2)) * math.exp(log_scale)
    lmin, lmax, v = eig_sym2(m)
    w = np.array([-v[1], v[0]])
    rec = lmax * np.outer(v, v) + lmin * np.outer(w, w)
    assert np.allclose(rec, m, rtol=1e-12, atol=1e-12 * np.abs(m).max())
    assert lmin <= lmax


def test_sqrt_cases():
    s, si = sqrt_and_inv_sqrt(np.eye(2))
    assert np.allclose(s, np.eye(2)) and np.allclose(si, np.eye(2))
    s, si = sqrt_and_inv_sqrt(np.diag([4.0, 9.0]))
    assert np.allclose(s, np.diag([2, 3])) and np.allclose(si, np.diag([0.5, 1 / 3]))


def test_sqrt_example1():
    m = evaluate(EXAMPLE1, 0, 0).matrix
    s, si = sqrt_and_inv_sqrt(m)
    assert np.allclose(s @ s, m, rtol=1e-12)
    assert np.allclose(s @ si, np.eye(2), atol=1e-12)
    d = np.array([1.0, 1.0]) / math.sqrt(2)
    assert np.linalg.norm(si @ d) == pytest.approx(0.1)


def test_expression_parser():
    f = parse_expression("0.5*arctan(cos(pi*x/4)) - -y")
    x, y = np.array([0.0, 1.0]), np.array([2.0, 3.0])
    assert np.allclose(f(x, y), 0.5 * np.arctan(np.cos(np.pi * x / 4)) + y)
    for bad in ("__import__('os')", "x**2", "exp(x)", "z + 1", "x if y else 1"):
        with pytest.raises(FieldError):
            parse_expression(bad)


def test_field_from_spec():
    assert field_from_spec({"builtin": "example2"}) is EXAMPLE2
    c = field_from_spec({"constant": [2, 0, 3]})
    assert np.allclose(evaluate(c, 0, 0).matrix, np.diag([2, 3]))
    r = field_from_spec({"rotated": {"theta": "pi/4", "k1": "100", "k2": "1"}})
    assert np.allclose(evaluate(r, 0.1, 0.2).matrix, evaluate(EXAMPLE1, 0, 0).matrix)
    for bad in ({"builtin": "example9"}, {"constant": [1, 2]}, {"rotated": {"k1": "1"}}, {}):
        with pytest.raises(FieldError):
            field_from_spec(bad)
