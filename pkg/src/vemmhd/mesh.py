"""Polygonal meshes of axis-aligned rectangles.

Cells are stored as counterclockwise vertex loops; edges and boundary
information are derived on construction and never read from input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Voronoi, cKDTree

from .poly import is_simple, signed_area


class MeshError(ValueError):
    """Invalid mesh topology or geometry."""


class GeometryError(MeshError):
    """Degenerate cell (zero area, wrong orientation, self-intersection)."""


class MeshConformityError(MeshError):
    """Boundary entity does not lie on the rectangle boundary."""


class MeshSizeError(MeshError):
    """Unsupported refinement level."""


@dataclass(frozen=True)
class Rectangle:
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0


UNIT_SQUARE = Rectangle()

SIDES = ("left", "right", "bottom", "top")
SIDE_NORMALS = {
    "left": np.array([-1.0, 0.0]),
    "right": np.array([1.0, 0.0]),
    "bottom": np.array([0.0, -1.0]),
    "top": np.array([0.0, 1.0]),
}


@dataclass(frozen=True)
class ElementGeometry:
    """Geometric data of one cell. Edge ``i`` runs from vertex ``i`` to ``i+1``."""

    vertices: np.ndarray
    area: float
    diameter: float
    centroid: np.ndarray
    edge_lengths: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


@dataclass
class RegularityReport:
    min_vertex_separation_ratio: float
    separation_ratios: np.ndarray
    star_shaped_flags: np.ndarray
    convex_flags: np.ndarray
    varrho_used: float
    separation_violations: list = field(default_factory=list)
    star_violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.separation_violations and not self.star_violations


def _geometry_from_vertices(verts: np.ndarray) -> ElementGeometry:
    verts = np.asarray(verts, dtype=float)
    area = signed_area(verts)
    if not area > 0.0:
        raise GeometryError(f"cell has non-positive signed area {area:.3e}")
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    diff = verts[:, None, :] - verts[None, :, :]
    diameter = float(np.sqrt(np.max(np.sum(diff**2, axis=-1))))
    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths == 0.0):
        raise GeometryError("cell has a zero-length edge")
    tangents = edges / lengths[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    return ElementGeometry(
        vertices=verts,
        area=area,
        diameter=diameter,
        centroid=np.array([cx, cy]),
        edge_lengths=lengths,
        normals=normals,
        tangents=tangents,
    )


class PolygonalMesh:
    """Conforming polygonal mesh.

    Args:
        vertices: (nv, 2) coordinates.
        cells: sequence of counterclockwise vertex-index loops.
        domain: the rectangle covered by the mesh (used for boundary tags).
        validate: run simplicity/orientation/edge-count checks.
    """

    def __init__(self, vertices, cells, domain: Rectangle = UNIT_SQUARE, validate: bool = True):
        verts = np.array(vertices, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(verts)):
            raise MeshError("non-finite vertex coordinates")
        verts.setflags(write=False)
        self.vertices = verts
        self.cells = tuple(np.array(c, dtype=np.intp) for c in cells)
        for c in self.cells:
            c.setflags(write=False)
        self.domain = domain
        self._build_edges()
        self._geometry: list[ElementGeometry | None] = [None] * len(self.cells)
        if validate:
            self.validate()

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def _build_edges(self):
        index: dict[tuple[int, int], int] = {}
        edges: list[tuple[int, int]] = []
        owners: list[list[int]] = []
        cell_edges = []
        cell_signs = []
        for ci, loop in enumerate(self.cells):
            if len(loop) < 3:
                raise MeshError(f"cell {ci} has fewer than 3 vertices")
            if np.any(loop < 0) or np.any(loop >= len(self.vertices)):
                raise MeshError(f"cell {ci} references a missing vertex")
            ids = np.empty(len(loop), dtype=np.intp)
            signs = np.empty(len(loop), dtype=np.int8)
            for i in range(len(loop)):
                a, b = int(loop[i]), int(loop[(i + 1) % len(loop)])
                if a == b:
                    raise MeshError(f"cell {ci} repeats vertex {a}")
                key = (a, b) if a < b else (b, a)
                e = index.get(key)
                if e is None:
                    e = len(edges)
                    index[key] = e
                    edges.append(key)
                    owners.append([])
                owners[e].append(ci)
                ids[i] = e
                signs[i] = 1 if a < b else -1
            cell_edges.append(ids)
            cell_signs.append(signs)
        self.edges = np.array(edges, dtype=np.intp).reshape(-1, 2)
        edge_cells = np.full((len(edges), 2), -1, dtype=np.intp)
        for e, own in enumerate(owners):
            if len(own) > 2:
                raise MeshError(f"edge {edges[e]} borders {len(own)} cells")
            edge_cells[e, : len(own)] = own
        self.edge_cells = edge_cells
        self.cell_edges = tuple(cell_edges)
        self.cell_edge_signs = tuple(cell_signs)
        self.boundary_edges = np.flatnonzero(edge_cells[:, 1] < 0)
        self.boundary_vertices = np.unique(self.edges[self.boundary_edges].ravel())
        self.is_boundary_vertex = np.zeros(len(self.vertices), dtype=bool)
        self.is_boundary_vertex[self.boundary_vertices] = True
        self.is_boundary_edge = edge_cells[:, 1] < 0

    def geometry(self, cell: int) -> ElementGeometry:
        g = self._geometry[cell]
        if g is None:
            try:
                g = _geometry_from_vertices(self.vertices[self.cells[cell]])
            except GeometryError as exc:
                raise GeometryError(f"cell {cell}: {exc}") from None
            self._geometry[cell] = g
        return g

    def cell_vertices(self, cell: int) -> np.ndarray:
        return self.vertices[self.cells[cell]]

    def areas(self) -> np.ndarray:
        return np.array([self.geometry(c).area for c in range(self.n_cells)])

    def diameters(self) -> np.ndarray:
        return np.array([self.geometry(c).diameter for c in range(self.n_cells)])

    def validate(self):
        for ci, loop in enumerate(self.cells):
            verts = self.vertices[loop]
            if signed_area(verts) <= 0.0:
                raise GeometryError(f"cell {ci} is not counterclockwise")
            if len(loop) > 3 and not is_simple(verts):
                raise GeometryError(f"cell {ci} is self-intersecting")
        total = float(np.sum(self.areas()))
        if abs(total - self.domain.area) > 1e-12 * self.domain.area:
            raise MeshError(f"cell areas sum to {total!r}, domain area is {self.domain.area!r}")

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_cells

    def __repr__(self):
        return f"PolygonalMesh(nv={self.n_vertices}, ne={self.n_edges}, nc={self.n_cells})"


def element_geometry(mesh: PolygonalMesh, cell: int) -> ElementGeometry:
    return mesh.geometry(cell)


def polygon_geometry(vertices) -> ElementGeometry:
    """Geometry of a standalone polygon given by its ccw vertex loop."""
    return _geometry_from_vertices(np.asarray(vertices, dtype=float))


def mesh_size(mesh: PolygonalMesh) -> float:
    return float(np.max(mesh.diameters()))


# ---------------------------------------------------------------------------
# regularity


def polygon_kernel(verts: np.ndarray) -> np.ndarray:
    """Kernel of a simple ccw polygon by successive half-plane clipping."""
    kernel = np.asarray(verts, dtype=float).copy()
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        t = b - a
        if len(kernel) == 0:
            break
        side = t[0] * (kernel[:, 1] - a[1]) - t[1] * (kernel[:, 0] - a[0])
        out = []
        m = len(kernel)
        for j in range(m):
            p, q = kernel[j], kernel[(j + 1) % m]
            sp, sq = side[j], side[(j + 1) % m]
            if sp >= 0:
                out.append(p)
            if (sp >= 0) != (sq >= 0):
                s = sp / (sp - sq)
                out.append(p + s * (q - p))
        kernel = np.array(out).reshape(-1, 2)
    return kernel


def is_convex(verts: np.ndarray, tol: float = 1e-14) -> bool:
    e = np.roll(verts, -1, axis=0) - verts
    en = np.roll(e, -1, axis=0)
    cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    scale = np.max(np.abs(e)) ** 2
    return bool(np.all(cross >= -tol * scale))


def check_regularity(mesh: PolygonalMesh, varrho: float = 0.1) -> RegularityReport:
    if not 0.0 < varrho < 1.0:
        raise ValueError("varrho must lie in (0, 1)")
    ratios = np.empty(mesh.n_cells)
    star = np.empty(mesh.n_cells, dtype=bool)
    convex = np.empty(mesh.n_cells, dtype=bool)
    for c in range(mesh.n_cells):
        g = mesh.geometry(c)
        v = g.vertices
        d = np.sqrt(np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1))
        np.fill_diagonal(d, np.inf)
        ratios[c] = float(np.min(d)) / g.diameter
        convex[c] = is_convex(v)
        if convex[c]:
            star[c] = True
        else:
            ker = polygon_kernel(v)
            star[c] = len(ker) >= 3 and signed_area(ker) > 1e-12 * g.area
    return RegularityReport(
        min_vertex_separation_ratio=float(np.min(ratios)),
        separation_ratios=ratios,
        star_shaped_flags=star,
        convex_flags=convex,
        varrho_used=varrho,
        separation_violations=[int(c) for c in np.flatnonzero(ratios < varrho)],
        star_violations=[int(c) for c in np.flatnonzero(~star)],
    )


# ---------------------------------------------------------------------------
# boundary classification


@dataclass
class BoundaryTags:
    vertex_sides: dict
    edge_sides: dict

    def vertex_normals(self, v: int) -> list[np.ndarray]:
        return [SIDE_NORMALS[s] for s in self.vertex_sides[v]]

    def is_corner(self, v: int) -> bool:
        return len(self.vertex_sides[v]) == 2


def point_sides(p, domain: Rectangle, tol: float = 1e-12) -> tuple[str, ...]:
    sides = []
    scale = max(domain.width, domain.height)
    if abs(p[0] - domain.x0) <= tol * scale:
        sides.append("left")
    if abs(p[0] - domain.x1) <= tol * scale:
        sides.append("right")
    if abs(p[1] - domain.y0) <= tol * scale:
        sides.append("bottom")
    if abs(p[1] - domain.y1) <= tol * scale:
        sides.append("top")
    return tuple(sides)


def classify_boundary(mesh: PolygonalMesh, domain: Rectangle | None = None) -> BoundaryTags:
    """Tag boundary vertices and edges with the rectangle sides they lie on."""
    domain = domain or mesh.domain
    vs = {}
    for v in mesh.boundary_vertices:
        sides = point_sides(mesh.vertices[v], domain)
        if not sides:
            raise MeshConformityError(f"boundary vertex {v} at {mesh.vertices[v]} is off the rectangle")
        vs[int(v)] = sides
    es = {}
    for e in mesh.boundary_edges:
        a, b = mesh.edges[e]
        common = set(vs[int(a)]) & set(vs[int(b)])
        if len(common) != 1:
            raise MeshConformityError(f"boundary edge {e} does not lie on a single side")
        es[int(e)] = common.pop()
    return BoundaryTags(vertex_sides=vs, edge_sides=es)


# ---------------------------------------------------------------------------
# generators

MAX_LEVEL = 6


def cells_per_side(level: int) -> int:
    return 5 * 2 ** (level - 1)


def square_mesh(n: int, domain: Rectangle = UNIT_SQUARE, ny: int | None = None) -> PolygonalMesh:
    ny = n if ny is None else ny
    xs = np.linspace(domain.x0, domain.x1, n + 1)
    ys = np.linspace(domain.y0, domain.y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    cells = [
        [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
        for j in range(ny)
        for i in range(n)
    ]
    return PolygonalMesh(verts, cells, domain)


def nonconvex_mesh(n: int, domain: Rectangle = UNIT_SQUARE, shift: float = 0.25) -> PolygonalMesh:
    """Grid of octagons whose interior edge midpoints are pushed by ``shift``.

    Every interior cell is dented on its left and bottom sides and bulged on
    its right and top sides, so all interior cells are nonconvex but remain
    star-shaped.
    """
    sx, sy = domain.width / n, domain.height / n
    xs = np.linspace(domain.x0, domain.x1, n + 1)
    ys = np.linspace(domain.y0, domain.y1, n + 1)
    verts = []
    corner = np.empty((n + 1, n + 1), dtype=np.intp)
    for j in range(n + 1):
        for i in range(n + 1):
            corner[i, j] = len(verts)
            verts.append((xs[i], ys[j]))
    vmid = np.empty((n + 1, n), dtype=np.intp)
    for i in range(n + 1):
        dx = shift * sx if 0 < i < n else 0.0
        for j in range(n):
            vmid[i, j] = len(verts)
            verts.append((xs[i] + dx, ys[j] + 0.5 * sy))
    hmid = np.empty((n, n + 1), dtype=np.intp)
    for j in range(n + 1):
        dy = shift * sy if 0 < j < n else 0.0
        for i in range(n):
            hmid[i, j] = len(verts)
            verts.append((xs[i] + 0.5 * sx, ys[j] + dy))
    cells = []
    for j in range(n):
        for i in range(n):
            cells.append(
                [
                    corner[i, j], hmid[i, j], corner[i + 1, j], vmid[i + 1, j],
                    corner[i + 1, j + 1], hmid[i, j + 1], corner[i, j + 1], vmid[i, j],
                ]
            )
    return PolygonalMesh(np.array(verts), cells, domain)


def _bounded_voronoi(points: np.ndarray, domain: Rectangle, margin: float | None = None):
    """Voronoi cells of ``points`` clipped to the rectangle via mirror images.

    Only seeds within ``margin`` of a side are mirrored across it; the full
    mirror set is used as a fallback if any region comes out unbounded.
    """
    p = points
    if margin is None:
        margin = np.inf
    near = [
        (p[:, 0] - domain.x0 < margin, lambda q: np.column_stack([2 * domain.x0 - q[:, 0], q[:, 1]])),
        (domain.x1 - p[:, 0] < margin, lambda q: np.column_stack([2 * domain.x1 - q[:, 0], q[:, 1]])),
        (p[:, 1] - domain.y0 < margin, lambda q: np.column_stack([q[:, 0], 2 * domain.y0 - q[:, 1]])),
        (domain.y1 - p[:, 1] < margin, lambda q: np.column_stack([q[:, 0], 2 * domain.y1 - q[:, 1]])),
    ]
    vor = Voronoi(np.vstack([p] + [reflect(p[mask]) for mask, reflect in near]))
    loops = []
    for i in range(len(p)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) < 3:
            if np.isfinite(margin):
                return _bounded_voronoi(points, domain, None)
            raise MeshError("unbounded Voronoi region for an interior seed")
        reg = np.array(region)
        rel = vor.vertices[reg] - p[i]
        order = np.argsort(np.arctan2(rel[:, 1], rel[:, 0]))
        loops.append(reg[order])
    return vor.vertices, loops


def _snap_to_boundary(verts: np.ndarray, domain: Rectangle, tol: float) -> np.ndarray:
    v = verts.copy()
    for col, lo, hi in ((0, domain.x0, domain.x1), (1, domain.y0, domain.y1)):
        v[np.abs(v[:, col] - lo) < tol, col] = lo
        v[np.abs(v[:, col] - hi) < tol, col] = hi
    return v


def _compact(verts: np.ndarray, loops, merge_tol: float):
    """Merge coincident vertices, drop unused ones and repeated loop entries."""
    used = np.unique(np.concatenate(loops))
    pts = verts[used]
    tree = cKDTree(pts)
    rep = np.arange(len(pts))
    for a, b in sorted(tree.query_pairs(merge_tol)):
        ra, rb = rep[a], rep[b]
        while rep[ra] != ra:
            ra = rep[ra]
        while rep[rb] != rb:
            rb = rep[rb]
        if ra != rb:
            rep[max(ra, rb)] = min(ra, rb)
    for i in range(len(rep)):
        r = i
        while rep[r] != r:
            r = rep[r]
        rep[i] = r
    keep = np.unique(rep)
    new_index = {int(old): new for new, old in enumerate(keep)}
    remap = np.full(int(used.max()) + 1, -1, dtype=np.intp)
    remap[used] = [new_index[int(r)] for r in rep]
    out = []
    for loop in loops:
        ids = remap[loop]
        cleaned = [int(ids[i]) for i in range(len(ids)) if ids[i] != ids[i - 1]]
        out.append(cleaned)
    return pts[keep], out


def _collapse_short_edges(verts, loops, domain: Rectangle, threshold: float):
    """Merge endpoints of edges shorter than ``threshold``.

    Boundary vertices keep their side, corners never move, and an edge is
    left alone if collapsing it would reduce a neighbouring cell below four
    vertices.
    """
    verts = verts.copy()
    sides = [set(point_sides(v, domain, 1e-12)) for v in verts]
    edge_cells: dict[tuple[int, int], list[int]] = {}
    for ci, loop in enumerate(loops):
        for i in range(len(loop)):
            a, b = loop[i], loop[(i + 1) % len(loop)]
            edge_cells.setdefault((min(a, b), max(a, b)), []).append(ci)
    rep = list(range(len(verts)))
    moved = set()
    cand = sorted(edge_cells, key=lambda e: np.linalg.norm(verts[e[0]] - verts[e[1]]))
    for a, b in cand:
        if np.linalg.norm(verts[a] - verts[b]) >= threshold:
            break
        if a in moved or b in moved:
            continue
        if any(len(loops[c]) <= 4 for c in edge_cells[(a, b)]):
            continue
        sa, sb = sides[a], sides[b]
        if len(sa) == 2 and len(sb) == 2:
            continue
        if len(sa) == 2:
            target = verts[a]
        elif len(sb) == 2:
            target = verts[b]
        elif sa and sb:
            if sa != sb:
                continue
            target = 0.5 * (verts[a] + verts[b])
        elif sa:
            target = verts[a]
        elif sb:
            target = verts[b]
        else:
            target = 0.5 * (verts[a] + verts[b])
        verts[a] = target
        sides[a] = sa | sb if not (sa and sb) else sa
        rep[b] = a
        moved.update((a, b))
    out = []
    for loop in loops:
        ids = [rep[i] for i in loop]
        out.append([ids[i] for i in range(len(ids)) if ids[i] != ids[i - 1]])
    return verts, out


def _loop_centroids(verts: np.ndarray, loops) -> np.ndarray:
    sizes = np.array([len(lp) for lp in loops])
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    idx = np.concatenate(loops)
    nxt = np.concatenate([np.roll(lp, -1) for lp in loops])
    p, q = verts[idx], verts[nxt]
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    area = 0.5 * np.add.reduceat(cross, starts)
    cx = np.add.reduceat((p[:, 0] + q[:, 0]) * cross, starts) / (6.0 * area)
    cy = np.add.reduceat((p[:, 1] + q[:, 1]) * cross, starts) / (6.0 * area)
    return np.column_stack([cx, cy])


def voronoi_mesh(n_seeds: int, domain: Rectangle = UNIT_SQUARE, seed: int = 0,
                 lloyd_iterations: int = 40) -> PolygonalMesh:
    """Centroidal-Voronoi-like mesh from Lloyd-relaxed random seeds."""
    rng = np.random.default_rng(seed)
    pts = np.column_stack([
        rng.uniform(domain.x0, domain.x1, n_seeds),
        rng.uniform(domain.y0, domain.y1, n_seeds),
    ])
    scale = max(domain.width, domain.height)
    margin = 4.0 * math.sqrt(domain.area / n_seeds)
    for _ in range(lloyd_iterations):
        verts, loops = _bounded_voronoi(pts, domain, margin)
        pts = _loop_centroids(verts, loops)
    verts, loops = _bounded_voronoi(pts, domain, margin)
    verts = _snap_to_boundary(verts, domain, 1e-9 * scale)
    verts, loops = _compact(verts, loops, 1e-10 * scale)
    cell_size = math.sqrt(domain.area / n_seeds)
    verts, loops = _collapse_short_edges(verts, loops, domain, 0.1 * cell_size)
    verts, loops = _compact(verts, loops, 1e-10 * scale)
    return PolygonalMesh(verts, loops, domain)


def build_mesh(family: str, level: int, domain: Rectangle = UNIT_SQUARE) -> PolygonalMesh:
    """Mesh of the given family at refinement ``level`` (1..6).

    Level ``l`` uses ``5 * 2**(l-1)`` cells per side for the square and
    nonconvex families, and the same number of cells in total for the
    Voronoi family, seeded with ``level``.
    """
    if not isinstance(level, (int, np.integer)) or not 1 <= level <= MAX_LEVEL:
        raise MeshSizeError(f"level must be an integer in 1..{MAX_LEVEL}, got {level!r}")
    n = cells_per_side(int(level))
    if family == "square":
        return square_mesh(n, domain)
    if family == "nonconvex":
        return nonconvex_mesh(n, domain)
    if family == "voronoi":
        return voronoi_mesh(n * n, domain, seed=int(level))
    raise ValueError(f"unknown mesh family {family!r}")


FAMILIES = ("square", "nonconvex", "voronoi")


def level_for_size(h: float, family: str = "square") -> int:
    """Smallest square-family level whose mesh size does not exceed ``h`` (4 s.f.)."""
    for level in range(1, MAX_LEVEL + 1):
        if round(math.sqrt(2.0) / cells_per_side(level), 4) <= round(h, 4) + 1e-12:
            return level
    raise MeshSizeError(f"no supported level reaches h={h}")


# ---------------------------------------------------------------------------
# text format


def write_mesh(mesh: PolygonalMesh, path=None) -> str:
    lines = [f"{mesh.n_vertices} {mesh.n_cells}"]
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    lines += [" ".join([str(len(c))] + [str(int(i)) for i in c]) for c in mesh.cells]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_mesh(text: str, domain: Rectangle = UNIT_SQUARE) -> PolygonalMesh:
    tokens = text.split()
    try:
        nv, nc = int(tokens[0]), int(tokens[1])
        pos = 2
        verts = np.array([float(t) for t in tokens[pos: pos + 2 * nv]]).reshape(nv, 2)
        pos += 2 * nv
        cells = []
        for _ in range(nc):
            m = int(tokens[pos])
            cells.append([int(t) for t in tokens[pos + 1: pos + 1 + m]])
            pos += 1 + m
    except (IndexError, ValueError) as exc:
        raise MeshError(f"malformed mesh text: {exc}") from None
    if pos != len(tokens):
        raise MeshError("trailing tokens in mesh text")
    return PolygonalMesh(verts, cells, domain)


def read_mesh(path, domain: Rectangle = UNIT_SQUARE) -> PolygonalMesh:
    return parse_mesh(Path(path).read_text(), domain)
