import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vemmhd.mesh import build_mesh
from vemmhd.poly import (DegreeOverflowError, MonomialBasis, TriangulationError, cross_sv, cross_vv, curl_scalar,
                         curl_vector, degrees, dim_poly, divergence, edge_quadrature, exponents, gauss_lobatto,
                         gradient, monomial_index, monomial_integral, polygon_quadrature, times_xperp, triangulate)

from conftest import NONCONVEX, PENTAGON, UNIT


def test_dimensions_and_graded_order():
    assert [dim_poly(k) for k in range(4)] == [1, 3, 6, 10]
    assert dim_poly(-1) == 0
    for k in range(1, 4):
        assert exponents(k)[: dim_poly(k - 1)] == exponents(k - 1)
        assert all(monomial_index(a, b) == i for i, (a, b) in enumerate(exponents(k)))
    np.testing.assert_array_equal(degrees(2), [0, 1, 1, 2, 2, 2])


@pytest.mark.parametrize("k", [1, 2, 3])
def test_decomposition_dimensions(k):
    # [P_k]^2 = grad P_{k+1} + x_perp P_{k-1}
    assert (dim_poly(k + 1) - 1) + dim_poly(k - 1) == 2 * dim_poly(k)


def test_unit_square_x_squared():
    q = polygon_quadrature(UNIT, 2)
    assert abs(q.integrate(q.points[:, 0] ** 2) - 1 / 3) <= 1e-14


def test_unit_square_constant_order0():
    q = polygon_quadrature(UNIT, 0)
    assert q.integrate(np.ones(len(q))) == pytest.approx(1.0, abs=1e-15)


def test_pentagon_x2y2_against_oracles():
    q = polygon_quadrature(PENTAGON, 4, center=PENTAGON.mean(axis=0))
    val = q.integrate(q.points[:, 0] ** 2 * q.points[:, 1] ** 2)
    # refinement oracle: same integral by a much higher-order rule on a different triangulation
    fine = polygon_quadrature(PENTAGON, 14)
    ref = fine.integrate(fine.points[:, 0] ** 2 * fine.points[:, 1] ** 2)
    assert abs(val - ref) <= 1e-12
    assert abs(val - monomial_integral(PENTAGON, 2, 2)) <= 1e-12


def test_edge_quadrature_examples():
    q = edge_quadrature([0, 0], [1, 0], 1)
    assert q.integrate(q.points[:, 0]) == pytest.approx(0.5, abs=1e-15)
    q = edge_quadrature([0, 0], [3, 4], 0)
    assert q.integrate(np.ones(len(q))) == pytest.approx(5.0, abs=1e-14)
    q = edge_quadrature([0, 0], [2, 0], 3)
    assert abs(q.integrate(q.points[:, 0] ** 3) - 4.0) <= 1e-13


def test_gauss_lobatto_nodes():
    np.testing.assert_allclose(gauss_lobatto(3), [0, 0.5, 1], atol=1e-15)
    np.testing.assert_allclose(gauss_lobatto(4), [0, 0.5 - np.sqrt(5) / 10, 0.5 + np.sqrt(5) / 10, 1], atol=1e-15)


@pytest.mark.parametrize("verts", [UNIT, PENTAGON, NONCONVEX], ids=["square", "pentagon", "nonconvex"])
def test_weights_sum_to_area(verts):
    q = polygon_quadrature(verts, 5)
    assert q.weights.sum() == pytest.approx(monomial_integral(verts, 0, 0), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(order=st.integers(1, 8), seed=st.integers(0, 2**31 - 1),
       which=st.sampled_from(["square", "pentagon", "nonconvex"]))
def test_random_polynomial_exactness(order, seed, which):
    verts = {"square": UNIT, "pentagon": PENTAGON, "nonconvex": NONCONVEX}[which]
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(dim_poly(order))
    q = polygon_quadrature(verts, order)
    B = MonomialBasis(order)
    num = q.integrate(B.eval(q.points) @ c)
    exact = sum(ci * monomial_integral(verts, a, b) for ci, (a, b) in zip(c, exponents(order)))
    assert abs(num - exact) <= 1e-12 * max(1.0, np.abs(c).sum())


def test_nonconvex_triangulation_falls_back():
    tris = triangulate(NONCONVEX, center=NONCONVEX.mean(axis=0))
    area = sum(0.5 * abs((t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1]) - (t[1, 1] - t[0, 1]) * (t[2, 0] - t[0, 0])) for t in tris)
    assert area == pytest.approx(monomial_integral(NONCONVEX, 0, 0), rel=1e-14)


def test_self_intersecting_polygon_rejected():
    with pytest.raises(TriangulationError):
        triangulate(np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float))


def test_grad_of_scaled_square():
    xe, h = np.array([0.3, -0.2]), 0.7
    B = MonomialBasis(2, xe, h)
    c = np.zeros(6)
    c[monomial_index(2, 0)] = 1.0
    g = gradient(B, c)
    expected = np.zeros(6)
    expected[monomial_index(1, 0)] = 2 / h
    np.testing.assert_allclose(g[0], expected, atol=1e-15)
    np.testing.assert_allclose(g[1], 0.0, atol=1e-15)


def test_div_of_identity_field():
    B = MonomialBasis(1, (0, 0), 1.0)
    v = np.array([[0, 1, 0], [0, 0, 1]], dtype=float)  # (x, y)
    np.testing.assert_allclose(divergence(B, v), [2, 0, 0], atol=1e-15)


def test_curl_of_gradient_vanishes():
    B = MonomialBasis(2, (0.1, 0.2), 0.5)
    c = np.zeros(6)
    c[monomial_index(1, 1)] = 1.0  # xy
    np.testing.assert_allclose(curl_vector(B, gradient(B, c)), 0.0, atol=1e-14)
    np.testing.assert_allclose(divergence(B, curl_scalar(B, c)), 0.0, atol=1e-14)


def test_calculus_matches_pointwise_derivatives(rng):
    B = MonomialBasis(3, (0.2, 0.4), 0.8)
    c = rng.standard_normal(len(B))
    pts = rng.random((7, 2))
    G = B.grad(pts)
    g = gradient(B, c)
    np.testing.assert_allclose(B.eval(pts) @ g[0], G[:, 0, :] @ c, atol=1e-12)
    np.testing.assert_allclose(B.eval(pts) @ g[1], G[:, 1, :] @ c, atol=1e-12)


def test_degree_overflow_is_explicit():
    B = MonomialBasis(1)
    with pytest.raises(DegreeOverflowError):
        times_xperp(B, [0, 1, 0])
    with pytest.raises(DegreeOverflowError):
        gradient(B, [0, 0, 0, 1])


def test_xperp_convention():
    B = MonomialBasis(1, (0.0, 0.0), 1.0)
    np.testing.assert_allclose(times_xperp(B, [1.0]), [[0, 0, -1], [0, 1, 0]], atol=0)


def test_cross_conventions():
    np.testing.assert_allclose(cross_sv(2.0, np.array([1.0, 3.0])), [-6.0, 2.0])
    assert cross_vv(np.array([1.0, 2.0]), np.array([3.0, 5.0])) == pytest.approx(-1.0)


@pytest.mark.parametrize("k", [1, 2])
def test_gram_conditioning_uniform_under_refinement(k):
    conds = []
    for level in (1, 2, 3, 4):
        m = build_mesh("square", level)
        g = m.geometry(0)
        B = MonomialBasis(k, g.centroid, g.diameter)
        q = polygon_quadrature(g.vertices, 2 * k, center=g.centroid)
        V = B.eval(q.points)
        conds.append(np.linalg.cond((V.T * q.weights) @ V))
    assert max(conds) < 1e3
    assert max(conds) / min(conds) < 1 + 1e-8
