import numpy as np
import pytest

from vemmhd.analysis import example1_solution
from vemmhd.mesh import FAMILIES, build_mesh
from vemmhd.poly import MonomialBasis, dim_poly, edge_quadrature, gauss_lobatto, polygon_quadrature
from vemmhd.spaces import (MAGNETIC, PRESSURE, VELOCITY, ElementQualityError, UnsupportedDegreeError, build_layout,
                           build_local, build_projectors, divergence_polynomial, interpolate, pressure_basis,
                           pressure_mean_row, project_pressure)

from conftest import NONCONVEX, PENTAGON, UNIT, mesh_of, single_cell

CELLS = {"square": UNIT, "pentagon": PENTAGON, "nonconvex": NONCONVEX}


def edge_trace(proj, dofs, i, t):
    """Edge-i trace of a local dof vector at parameters t in [0, 1] (vertex i -> i + 1)."""
    nv = len(proj.rel_vertices)
    npe = len(proj.node_params)
    vals = dofs[: 2 * proj.n_nodes].reshape(-1, 2)
    nodes = np.concatenate([[0.0], proj.node_params, [1.0]])
    nv_vals = np.vstack([vals[i], vals[nv + i * npe: nv + (i + 1) * npe], vals[(i + 1) % nv]])
    L = np.ones((len(t), len(nodes)))
    for a, xa in enumerate(nodes):
        for b, xb in enumerate(nodes):
            if a != b:
                L[:, a] *= (t - xb) / (xa - xb)
    return L @ nv_vals


def boundary_integrals(proj, fn_of_points_and_trace, order=8):
    v = proj.vertices
    total = 0.0
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        q = edge_quadrature(a, b, order)
        t = (q.points - a) @ (b - a) / np.dot(b - a, b - a)
        d = b - a
        n = np.array([d[1], -d[0]]) / np.hypot(*d)
        total = total + q.integrate(fn_of_points_and_trace(q.points, t, i, n))
    return total


def poly_field(c, basis):
    m = len(basis)
    return lambda x: np.column_stack([basis.eval(x) @ c[:m], basis.eval(x) @ c[m:]])


# -- layouts -------------------------------------------------------------------


def test_velocity_k1_count_5x5():
    assert build_layout(build_mesh("square", 1), VELOCITY, 1).n_dofs == 2 * (36 + 60)


def test_single_square_pressure_and_magnetic_counts():
    m = single_cell(UNIT)
    assert build_layout(m, PRESSURE, 1).n_dofs == 1
    assert build_layout(m, MAGNETIC, 1).n_dofs == 8


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k", [1, 2])
def test_layout_counts_by_formula(family, k):
    m = mesh_of(family, 1)
    nv, ne, nc = m.n_vertices, m.n_edges, m.n_cells
    khat = max(2, k)
    vel = 2 * nv + 2 * ne * (khat - 1) + nc * (max(dim_poly(k - 3), 0) + dim_poly(k - 1) - 1)
    mag = 2 * nv + 2 * ne * (k - 1) + nc * 2 * max(dim_poly(k - 2), 0)
    assert build_layout(m, VELOCITY, k).n_dofs == vel
    assert build_layout(m, MAGNETIC, k).n_dofs == mag
    assert build_layout(m, PRESSURE, k).n_dofs == nc * dim_poly(k - 1)


def test_edge_points_are_internal_gauss_lobatto():
    lay = build_layout(mesh_of("square", 1), VELOCITY, 2)
    np.testing.assert_allclose(lay.edge_params, gauss_lobatto(3)[1:-1])
    lay = build_layout(mesh_of("square", 1), VELOCITY, 1)
    np.testing.assert_allclose(lay.edge_params, [0.5])


def test_unsupported_degree():
    with pytest.raises(UnsupportedDegreeError):
        build_layout(mesh_of("square", 1), VELOCITY, 3)
    with pytest.raises(UnsupportedDegreeError):
        build_local(UNIT, MAGNETIC, 0)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("kind", [VELOCITY, MAGNETIC])
def test_shared_dofs_consistent(family, kind):
    m = mesh_of(family, 1)
    lay = build_layout(m, kind, 2)
    projs = build_projectors(m, kind, 2)
    f = lambda x: np.column_stack([np.sin(3 * x[:, 0] + x[:, 1]), np.cos(x[:, 0] * x[:, 1])])
    glob = interpolate(f, lay, m, projs)
    for c, proj in enumerate(projs):
        np.testing.assert_allclose(glob[lay.cell_dofs[c]], proj.interpolate(f), atol=1e-14)
    # every global dof is seen by some cell
    assert np.array_equal(np.unique(np.concatenate(lay.cell_dofs)), np.arange(lay.n_dofs))


# -- projectors -----------------------------------------------------------------


@pytest.mark.parametrize("cell", list(CELLS))
@pytest.mark.parametrize("kind", [VELOCITY, MAGNETIC])
@pytest.mark.parametrize("k", [1, 2])
def test_polynomial_reproduction(cell, kind, k):
    p = build_local(CELLS[cell], kind, k)
    I = np.eye(p.dof_matrix.shape[1])
    assert np.max(np.abs(p.pi_nabla @ p.dof_matrix - I)) <= 1e-12
    assert np.max(np.abs(p.pi_zero @ p.dof_matrix - I)) <= 1e-12


@pytest.mark.parametrize("cell", list(CELLS))
@pytest.mark.parametrize("kind", [VELOCITY, MAGNETIC])
def test_dof_matrix_matches_interpolation(cell, kind, rng):
    p = build_local(CELLS[cell], kind, 2)
    c = rng.standard_normal(p.dof_matrix.shape[1])
    np.testing.assert_allclose(p.interpolate(poly_field(c, p.basis())), p.dof_matrix @ c, atol=1e-12)


@pytest.mark.parametrize("cell", list(CELLS))
@pytest.mark.parametrize("kind", [VELOCITY, MAGNETIC])
@pytest.mark.parametrize("k", [1, 2])
def test_boundary_mean_constraint(cell, kind, k, rng):
    p = build_local(CELLS[cell], kind, k)
    dofs = rng.standard_normal(p.n)
    B = p.basis()
    diff = boundary_integrals(p, lambda x, t, i, n: p.eval_pi_nabla(dofs, x) - edge_trace(p, dofs, i, t))
    assert np.max(np.abs(diff)) <= 1e-12


@pytest.mark.parametrize("cell", list(CELLS))
@pytest.mark.parametrize("kind", [VELOCITY, MAGNETIC])
def test_idempotence(cell, kind, rng):
    p = build_local(CELLS[cell], kind, 2)
    dofs = rng.standard_normal(p.n)
    for pi in (p.pi_nabla, p.pi_zero):
        c = pi @ dofs
        again = pi @ p.interpolate(poly_field(c, p.basis()))
        np.testing.assert_allclose(again, c, atol=1e-11)


def test_affine_velocity_reproduced():
    p = build_local(PENTAGON, VELOCITY, 1)
    f = lambda x: np.column_stack([0.3 + 2 * x[:, 0] - x[:, 1], -1 + x[:, 0] + 4 * x[:, 1]])
    dofs = p.interpolate(f)
    pts = np.array([[0.1, 0.2], [-0.3, 0.4]])
    np.testing.assert_allclose(p.eval_pi_nabla(dofs, pts), f(pts), atol=1e-13)
    np.testing.assert_allclose(p.eval_pi_zero(dofs, pts), f(pts), atol=1e-13)


def test_constant_velocity_l2_projection():
    p = build_local(NONCONVEX, VELOCITY, 2)
    dofs = p.interpolate(lambda x: np.tile([2.0, -1.0], (len(x), 1)))
    np.testing.assert_allclose(p.eval_pi_zero(dofs, np.array([[0.5, 0.5]])), [[2.0, -1.0]], atol=1e-13)


def test_integration_by_parts_oracle_unit_square(rng):
    # k = 1: for q in P_1, int grad(Pi v) : grad q = sum over edges of int (grad q . n) . v_trace
    p = build_local(UNIT, VELOCITY, 1)
    dofs = rng.standard_normal(p.n)
    B = p.basis()
    nk = len(B)
    cN = p.pi_nabla @ dofs
    G = np.block([[p.gram_grad, np.zeros((nk, nk))], [np.zeros((nk, nk)), p.gram_grad]])
    lhs = G @ cN
    rhs = np.zeros(2 * nk)
    for comp in range(2):
        for a in range(nk):
            rhs[comp * nk + a] = boundary_integrals(
                p, lambda x, t, i, n: (B.grad(x)[:, :, a] @ n) * edge_trace(p, dofs, i, t)[:, comp])
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("cell", list(CELLS))
def test_magnetic_curl_div_examples(cell):
    for k in (1, 2):
        p = build_local(CELLS[cell], MAGNETIC, k)
        rot = p.interpolate(lambda x: np.column_stack([x[:, 1], -x[:, 0]]))
        ident = p.interpolate(lambda x: np.column_stack([x[:, 0], x[:, 1]]))
        const = p.interpolate(lambda x: np.tile([1.0, 0.0], (len(x), 1)))
        e0 = np.eye(dim_poly(k - 1))[0]
        np.testing.assert_allclose(p.curl @ rot, -2 * e0, atol=1e-12)
        np.testing.assert_allclose(p.div @ rot, 0.0, atol=1e-12)
        np.testing.assert_allclose(p.div @ ident, 2 * e0, atol=1e-12)
        np.testing.assert_allclose(p.curl @ const, 0.0, atol=1e-12)
        np.testing.assert_allclose(p.div @ const, 0.0, atol=1e-12)
        np.testing.assert_allclose(p.pi_nabla @ const, np.eye(p.dof_matrix.shape[1])[0], atol=1e-12)


@pytest.mark.parametrize("cell", list(CELLS))
def test_velocity_gradient_projection_exact_on_polynomials(cell, rng):
    p = build_local(CELLS[cell], VELOCITY, 2)
    c = rng.standard_normal(p.dof_matrix.shape[1])
    B = p.basis()
    m, m1 = len(B), dim_poly(1)
    g = p.grad @ (p.dof_matrix @ c)  # (2, 2, dim P_1)
    for i in range(2):
        ci = c[i * m:(i + 1) * m]
        np.testing.assert_allclose(g[i, 0], (B.dx @ ci)[:m1], atol=1e-11)
        np.testing.assert_allclose(g[i, 1], (B.dy @ ci)[:m1], atol=1e-11)


def test_estimate_curl_vs_gradient_direction():
    # ||(I - P0_{k-1}) curl c|| <= sqrt(2) ||grad (I - P_nabla) c|| with exact projections of smooth fields
    fields = [
        (lambda x: np.column_stack([np.sin(2 * x[:, 0]) * x[:, 1], np.exp(x[:, 0] - x[:, 1])]),
         lambda x: np.stack([np.stack([2 * np.cos(2 * x[:, 0]) * x[:, 1], np.sin(2 * x[:, 0])], -1),
                             np.stack([np.exp(x[:, 0] - x[:, 1]), -np.exp(x[:, 0] - x[:, 1])], -1)], 1)),
        (lambda x: np.column_stack([x[:, 1] ** 3, np.cos(3 * x[:, 0] * x[:, 1])]),
         lambda x: np.stack([np.stack([0 * x[:, 0], 3 * x[:, 1] ** 2], -1),
                             np.stack([-3 * x[:, 1] * np.sin(3 * x[:, 0] * x[:, 1]),
                                       -3 * x[:, 0] * np.sin(3 * x[:, 0] * x[:, 1])], -1)], 1)),
    ]
    for verts in CELLS.values():
        for k in (1, 2):
            g = single_cell(verts).geometry(0)
            q = polygon_quadrature(verts, 12)
            B, Bl = MonomialBasis(k, g.centroid, g.diameter), MonomialBasis(k - 1, g.centroid, g.diameter)
            V, Vl, G = B.eval(q.points), Bl.eval(q.points), B.grad(q.points)
            for f, df in fields:
                D = df(q.points)  # D[:, i, j] = d_j f_i
                curl = D[:, 1, 0] - D[:, 0, 1]
                Ml = (Vl.T * q.weights) @ Vl
                pc = Vl @ np.linalg.solve(Ml, Vl.T @ (q.weights * curl))
                lhs = np.sqrt(q.weights @ (curl - pc) ** 2)
                # exact H1 projection per component, constant fixed by the boundary mean
                K = np.einsum("q,qdi,qdj->ij", q.weights, G, G)
                rhs2 = 0.0
                fv = f(q.points)
                for i in range(2):
                    rhs_i = np.einsum("q,qdj,qd->j", q.weights, G, D[:, i, :])
                    K2 = K.copy()
                    K2[0] = boundary_integrals(_Shim(g), lambda x, t, e, n: B.eval(x))
                    r2 = rhs_i.copy()
                    r2[0] = boundary_integrals(_Shim(g), lambda x, t, e, n: f(x)[:, i])
                    a = np.linalg.solve(K2, r2)
                    rhs2 += q.weights @ np.sum((D[:, i, :] - np.einsum("qdj,j->qd", G, a)) ** 2, axis=1)
                assert lhs <= np.sqrt(2) * np.sqrt(rhs2) + 1e-14


class _Shim:
    def __init__(self, g):
        self.vertices = g.vertices


def test_ill_conditioned_cell_raises():
    with pytest.raises(ElementQualityError):
        build_local([[0, 0], [1, 0], [1, 1e-9], [0, 1e-9]], VELOCITY, 2)


# -- pressure and divergence ---------------------------------------------------------


def test_pressure_basis_sizes_and_mean_row():
    m = mesh_of("square", 1)
    assert len(pressure_basis(m, 0, 1)) == 1
    assert len(pressure_basis(m, 0, 2)) == 3
    row = pressure_mean_row(m, 1)
    np.testing.assert_allclose(row, m.areas(), atol=1e-15)
    assert row.sum() == pytest.approx(1.0, abs=1e-14)
    assert pressure_mean_row(m, 2).reshape(-1, 3)[:, 1:] == pytest.approx(0.0, abs=1e-14)


def test_project_pressure_exact_on_linear():
    m = mesh_of("voronoi", 1)
    p = project_pressure(lambda x: 1 + x[:, 0] - 2 * x[:, 1], m, 2)
    for c in range(m.n_cells):
        pb = pressure_basis(m, c, 2)
        pt = m.geometry(c).centroid[None, :] + 0.01
        assert pb.basis.eval(pt) @ p[3 * c:3 * c + 3] == pytest.approx(1 + pt[0, 0] - 2 * pt[0, 1], abs=1e-12)


@pytest.mark.parametrize("cell", list(CELLS))
@pytest.mark.parametrize("k", [1, 2])
def test_divergence_polynomial_examples(cell, k):
    p = build_local(CELLS[cell], VELOCITY, k)
    e0 = np.eye(dim_poly(k - 1))[0]
    np.testing.assert_allclose(divergence_polynomial(p, p.interpolate(lambda x: np.column_stack([x[:, 0], -x[:, 1]]))),
                               0.0, atol=1e-12)
    np.testing.assert_allclose(divergence_polynomial(p, p.interpolate(lambda x: x.copy())), 2 * e0, atol=1e-12)


@pytest.mark.parametrize("cell", list(CELLS))
@pytest.mark.parametrize("k", [1, 2])
def test_divergence_mean_is_boundary_flux(cell, k, rng):
    p = build_local(CELLS[cell], VELOCITY, k)
    dofs = rng.standard_normal(p.n)
    d = divergence_polynomial(p, dofs)
    mean = (p.gram_low[0] @ d) / p.area
    flux = boundary_integrals(p, lambda x, t, i, n: edge_trace(p, dofs, i, t) @ n)
    assert abs(mean - flux / p.area) <= 1e-13 * max(1.0, abs(mean))


def test_interpolate_zero_field():
    m = mesh_of("nonconvex", 1)
    for kind in (VELOCITY, MAGNETIC):
        lay = build_layout(m, kind, 2)
        assert not np.any(interpolate(lambda x: np.zeros((len(x), 2)), lay, m))


def _interp_div(family, level, k):
    m = mesh_of(family, level)
    sol = example1_solution()
    lay = build_layout(m, VELOCITY, k)
    projs = build_projectors(m, VELOCITY, k)
    u = interpolate(lambda x: sol.u(x, 0.0), lay, m, projs)
    return m, projs, [divergence_polynomial(p, u[lay.cell_dofs[c]]) for c, p in enumerate(projs)], sol


def test_example1_initial_velocity_divergence_free_square_k1():
    _, _, divs, _ = _interp_div("square", 1, 1)
    assert max(np.max(np.abs(d)) for d in divs) <= 1e-11


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k", [1, 2])
def test_interpolant_divergence_is_edge_rule_flux_defect(family, k):
    # the mean divergence of the interpolant is the Lobatto-rule flux of u, whose exact flux vanishes
    m, projs, divs, sol = _interp_div(family, 1, k)
    npe = len(projs[0].node_params)
    nodes = gauss_lobatto(npe + 2)
    # Lobatto weights on [0, 1] from exactness on monomials
    V = np.vander(nodes, len(nodes), increasing=True).T
    w = np.linalg.solve(V, 1.0 / np.arange(1, len(nodes) + 1))
    for c, p in enumerate(projs):
        v = p.vertices
        flux = 0.0
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            d = b - a
            pts = a + nodes[:, None] * d
            flux += w @ (sol.u(pts, 0.0) @ np.array([d[1], -d[0]]))
        assert (p.gram_low[0] @ divs[c]) == pytest.approx(flux, abs=1e-13)


@pytest.mark.parametrize("family", ["nonconvex", "voronoi"])
def test_interpolant_divergence_decays(family):
    worst = []
    for level in (1, 2, 3):
        _, projs, divs, _ = _interp_div(family, level, 1)
        worst.append(max(np.sqrt(d @ p.gram_low @ d) for d, p in zip(divs, projs)))
    assert worst[2] < worst[1] < worst[0]
    assert worst[0] / worst[2] > 16


def test_congruent_cells_share_templates():
    projs = build_projectors(mesh_of("square", 2), VELOCITY, 1)
    assert len({id(p.pi_zero) for p in projs}) == 1
    assert not np.allclose(projs[0].center, projs[1].center)
