import math

import numpy as np
import pytest

from vemmhd.mesh import (FAMILIES, MeshConformityError, MeshError, MeshSizeError, PolygonalMesh, Rectangle,
                         build_mesh, check_regularity, classify_boundary, element_geometry, level_for_size,
                         mesh_size, parse_mesh, polygon_geometry, polygon_kernel, square_mesh, write_mesh)

from conftest import mesh_of


def test_square_level1_counts_and_size():
    m = build_mesh("square", 1)
    assert m.n_cells == 25
    assert round(mesh_size(m), 4) == 0.2828


def test_square_level2_counts_and_size():
    m = build_mesh("square", 2)
    assert m.n_cells == 100
    assert round(mesh_size(m), 4) == 0.1414


def test_voronoi_partition_area():
    m = build_mesh("voronoi", 1)
    assert abs(m.areas().sum() - 1.0) <= 1e-12


@pytest.mark.parametrize("level", [0, 7, 2.5])
def test_unsupported_level(level):
    with pytest.raises(MeshSizeError):
        build_mesh("square", level)


def test_unknown_family():
    with pytest.raises(ValueError):
        build_mesh("hexagon", 1)


def test_unit_square_cell_geometry():
    g = polygon_geometry([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert g.area == pytest.approx(1.0, abs=1e-15)
    assert g.diameter == pytest.approx(math.sqrt(2), abs=1e-15)
    np.testing.assert_allclose(g.centroid, [0.5, 0.5], atol=1e-15)


def test_right_triangle_geometry():
    g = polygon_geometry([[0, 0], [1, 0], [0, 1]])
    assert g.area == pytest.approx(0.5, abs=1e-15)
    assert g.diameter == pytest.approx(math.sqrt(2), abs=1e-15)


def test_regular_hexagon_area():
    th = np.arange(6) * np.pi / 3
    g = polygon_geometry(np.column_stack([np.cos(th), np.sin(th)]))
    assert abs(g.area - 3 * math.sqrt(3) / 2) <= 1e-12


def test_normals_unit_and_outward():
    g = polygon_geometry([[0, 0], [2, 0], [2, 2], [1, 0.8], [0, 2]])
    np.testing.assert_allclose(np.linalg.norm(g.normals, axis=1), 1.0, atol=1e-14)
    # divergence theorem on x: area = 1/2 ∮ x . n
    mids = 0.5 * (g.vertices + np.roll(g.vertices, -1, axis=0))
    assert 0.5 * np.sum(g.edge_lengths * np.sum(mids * g.normals, axis=1)) == pytest.approx(g.area, rel=1e-14)


def test_degenerate_cell_rejected():
    with pytest.raises(MeshError):
        polygon_geometry([[0, 0], [1, 0], [2, 0]])


def test_mesh_size_single_cell_and_scaling():
    one = PolygonalMesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2, 3]])
    assert mesh_size(one) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert mesh_size(square_mesh(10)) == pytest.approx(0.5 * mesh_size(square_mesh(5)), rel=1e-15)


def test_square_refinement_halves_h():
    hs = [mesh_size(build_mesh("square", l)) for l in (1, 2, 3)]
    assert hs[0] / hs[1] == pytest.approx(2.0, rel=1e-14)
    assert hs[1] / hs[2] == pytest.approx(2.0, rel=1e-14)


def test_regularity_square_no_violations():
    rep = check_regularity(build_mesh("square", 2), 0.1)
    assert rep.ok and rep.varrho_used == 0.1
    assert 0 < rep.min_vertex_separation_ratio <= 1


def test_regularity_close_vertices_flagged():
    m = PolygonalMesh([[0, 0], [1, 0], [1 + 1e-9, 1e-9], [1, 1], [0, 1]], [[0, 1, 2, 3, 4]],
                      Rectangle(0, 0, 1 + 1e-9, 1), validate=False)
    rep = check_regularity(m, 0.1)
    assert rep.separation_violations == [0]


def test_l_shaped_cell_star_shaped():
    verts = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]
    m = PolygonalMesh(verts, [list(range(6))], Rectangle(0, 0, 2, 2), validate=False)
    rep = check_regularity(m, 0.1)
    assert bool(rep.star_shaped_flags[0]) and not bool(rep.convex_flags[0])
    assert len(polygon_kernel(np.array(verts, dtype=float))) >= 3


def test_nonconvex_family_cells_star_shaped():
    rep = check_regularity(build_mesh("nonconvex", 2), 0.1)
    assert not rep.star_violations
    assert np.sum(~rep.convex_flags) > 0


def test_classify_boundary_examples():
    m = build_mesh("square", 1)
    tags = classify_boundary(m)
    v_left = int(np.flatnonzero(np.all(np.isclose(m.vertices, [0.0, 0.4]), axis=1))[0])
    assert tags.vertex_sides[v_left] == ("left",)
    np.testing.assert_array_equal(tags.vertex_normals(v_left)[0], [-1.0, 0.0])
    v_corner = int(np.flatnonzero(np.all(np.isclose(m.vertices, [1.0, 1.0]), axis=1))[0])
    assert set(tags.vertex_sides[v_corner]) == {"right", "top"} and tags.is_corner(v_corner)
    top = [e for e, s in tags.edge_sides.items() if s == "top"]
    assert len(top) == 5
    assert all(np.allclose(m.vertices[m.edges[e]][:, 1], 1.0) for e in top)


def test_classify_off_boundary_raises():
    m = PolygonalMesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2, 3]])
    with pytest.raises(MeshConformityError):
        classify_boundary(m, Rectangle(0, 0, 2, 2))


@pytest.mark.parametrize("family", FAMILIES)
def test_mesh_invariants(family):
    m = mesh_of(family, 2)
    assert m.euler_characteristic() == 1
    assert abs(m.areas().sum() - 1.0) <= 1e-12
    for c in range(m.n_cells):
        g = m.geometry(c)
        assert np.max(np.abs(g.edge_lengths @ g.normals)) <= 1e-12
    interior = m.edge_cells[:, 1] >= 0
    assert np.all(m.edge_cells[:, 0] >= 0)
    assert len(m.boundary_edges) == np.sum(~interior)
    assert element_geometry(m, 0).area > 0


@pytest.mark.parametrize("family", FAMILIES)
def test_deterministic(family):
    a, b = build_mesh(family, 1), build_mesh(family, 1)
    assert np.array_equal(a.vertices, b.vertices)
    assert all(np.array_equal(x, y) for x, y in zip(a.cells, b.cells))


@pytest.mark.parametrize("family", FAMILIES)
def test_text_round_trip(family, tmp_path):
    m = mesh_of(family, 1)
    text = write_mesh(m, tmp_path / "m.txt")
    back = parse_mesh(text)
    assert np.array_equal(back.vertices, m.vertices)
    assert all(np.array_equal(x, y) for x, y in zip(back.cells, m.cells))
    assert write_mesh(back) == text


def test_parse_mesh_malformed():
    with pytest.raises(MeshError):
        parse_mesh("4 1\n0 0\n1 0\n1 1\n")
    with pytest.raises(MeshError):
        parse_mesh("3 1\n0 0\n1 0\n0 1\n3 0 1 2\n9")


def test_clockwise_cell_rejected():
    with pytest.raises(MeshError):
        PolygonalMesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 3, 2, 1]])


def test_level_for_size():
    assert level_for_size(0.0177) == 5
    assert level_for_size(0.0354) == 4
    assert level_for_size(0.0707) == 3
    with pytest.raises(MeshSizeError):
        level_for_size(1e-4)
