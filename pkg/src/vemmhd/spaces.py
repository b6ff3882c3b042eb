"""Degree-of-freedom layouts and local projectors of the discrete spaces.

Three spaces are supported on every polygon E, for degree k in {1, 2}:

velocity
    Enhanced divergence-free (Stokes-like) virtual element space. Dofs are
    the values at the vertices, the values at ``max(2, k) - 1`` interior
    Gauss-Lobatto points of each edge, the moments ``(1/|E|) (v, x_perp m)``
    against ``x_perp P_{k-3}`` and the divergence moments
    ``(h_E/|E|) (div v, m)`` against ``P_{k-1} / R``.
magnetic
    Enhanced nodal space, two scalar copies. Dofs are vertex values, values
    at ``k - 1`` edge points and the moments ``(1/|E|) (m_c, q)`` for
    ``q`` in ``P_{k-2}``.
pressure
    Discontinuous ``P_{k-1}``; dofs are coefficients against scaled monomials.

Local dof order on a cell: node values (vertices in loop order, then edge
points edge by edge), two components per node interleaved, then interior
moments. Vector polynomial coefficients are stored component-major:
``[c_x (dim P_k), c_y (dim P_k)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import PolygonalMesh
from .poly import (
    MonomialBasis,
    dim_poly,
    degrees,
    edge_quadrature,
    gauss_lobatto,
    polygon_quadrature,
    times_xperp,
)

VELOCITY = "velocity"
MAGNETIC = "magnetic"
PRESSURE = "pressure"
KINDS = (VELOCITY, MAGNETIC, PRESSURE)
SUPPORTED_K = (1, 2)


class ElementQualityError(RuntimeError):
    """A local projector system is singular."""


class UnsupportedDegreeError(ValueError):
    pass


def _check_k(k):
    if k not in SUPPORTED_K:
        raise UnsupportedDegreeError(f"degree k={k!r} not supported (use 1 or 2)")


def points_per_edge(kind: str, k: int) -> int:
    if kind == VELOCITY:
        return max(2, k) - 1
    if kind == MAGNETIC:
        return k - 1
    return 0


def n_interior(kind: str, k: int) -> int:
    if kind == VELOCITY:
        return dim_poly(k - 3) + dim_poly(k - 1) - 1
    if kind == MAGNETIC:
        return 2 * dim_poly(k - 2)
    return dim_poly(k - 1)


# ---------------------------------------------------------------------------
# global layout


@dataclass
class DofLayout:
    """Global numbering of one discrete space.

    Vertex dofs come first (``2 v + c``), then edge-point dofs
    (``2 nv + 2 (e npe + j) + c``), then per-cell interior dofs.
    """

    kind: str
    k: int
    n_dofs: int
    cell_dofs: list
    points_per_edge: int
    edge_params: np.ndarray
    interior_offsets: np.ndarray
    node_points: np.ndarray = field(repr=False)
    node_dofs: np.ndarray = field(repr=False)
    node_vertex: np.ndarray = field(repr=False)
    node_edge: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.node_points)

    def vertex_dof(self, v: int, c: int) -> int:
        return 2 * v + c

    def boundary_nodes(self, mesh: PolygonalMesh) -> np.ndarray:
        on_v = (self.node_vertex >= 0) & mesh.is_boundary_vertex[np.maximum(self.node_vertex, 0)]
        on_e = (self.node_edge >= 0) & mesh.is_boundary_edge[np.maximum(self.node_edge, 0)]
        return np.flatnonzero(on_v | on_e)


def build_layout(mesh: PolygonalMesh, kind: str, k: int) -> DofLayout:
    _check_k(k)
    if kind not in KINDS:
        raise ValueError(f"unknown space kind {kind!r}")
    nv, ne, nc = mesh.n_vertices, mesh.n_edges, mesh.n_cells
    if kind == PRESSURE:
        m = dim_poly(k - 1)
        cell_dofs = [np.arange(c * m, (c + 1) * m) for c in range(nc)]
        empty = np.zeros((0, 2))
        return DofLayout(kind, k, nc * m, cell_dofs, 0, np.zeros(0), np.arange(nc + 1) * m,
                         empty, np.zeros((0, 2), dtype=np.intp), np.zeros(0, dtype=np.intp),
                         np.zeros(0, dtype=np.intp))
    npe = points_per_edge(kind, k)
    params = gauss_lobatto(npe + 2)[1:-1] if npe else np.zeros(0)
    nint = n_interior(kind, k)
    base = 2 * nv + 2 * ne * npe
    offsets = base + np.arange(nc + 1) * nint
    cell_dofs = []
    for c in range(nc):
        loop = mesh.cells[c]
        m = len(loop)
        idx = np.empty(2 * m * (1 + npe) + nint, dtype=np.intp)
        idx[0: 2 * m: 2] = 2 * loop
        idx[1: 2 * m: 2] = 2 * loop + 1
        pos = 2 * m
        for i, (e, s) in enumerate(zip(mesh.cell_edges[c], mesh.cell_edge_signs[c])):
            for j in range(npe):
                jg = j if s > 0 else npe - 1 - j
                g = 2 * nv + 2 * (e * npe + jg)
                idx[pos] = g
                idx[pos + 1] = g + 1
                pos += 2
        idx[pos:] = np.arange(offsets[c], offsets[c + 1])
        cell_dofs.append(idx)
    a, b = mesh.vertices[mesh.edges[:, 0]], mesh.vertices[mesh.edges[:, 1]]
    epts = (a[:, None, :] + params[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)
    node_points = np.vstack([mesh.vertices, epts])
    n_nodes = nv + ne * npe
    node_dofs = np.column_stack([2 * np.arange(n_nodes), 2 * np.arange(n_nodes) + 1])
    node_vertex = np.concatenate([np.arange(nv), np.full(ne * npe, -1)])
    node_edge = np.concatenate([np.full(nv, -1), np.repeat(np.arange(ne), npe)])
    return DofLayout(kind, k, int(offsets[-1]), cell_dofs, npe, params, offsets,
                     node_points, node_dofs, node_vertex, node_edge)


# ---------------------------------------------------------------------------
# local spaces


class _Edge:
    __slots__ = ("a", "b", "length", "normal", "nodes", "xq", "wq", "lag")

    def __init__(self, a, b, nodes, node_params, order):
        self.a, self.b = a, b
        d = b - a
        self.length = float(np.hypot(d[0], d[1]))
        self.normal = np.array([d[1], -d[0]]) / self.length
        self.nodes = nodes
        q = edge_quadrature(a, b, order)
        self.xq, self.wq = q.points, q.weights
        t = np.dot(q.points - a, d) / self.length**2
        self.lag = _lagrange(node_params, t)


def _lagrange(nodes, t):
    nodes = np.asarray(nodes, dtype=float)
    out = np.ones((len(t), len(nodes)))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if i != j:
                out[:, i] *= (t - xj) / (xi - xj)
    return out


@dataclass
class LocalProjectors:
    """Local projector matrices of one space on one cell.

    Geometry is stored relative to the centroid so that congruent,
    translated cells can share one instance via :meth:`translated`.

    Attributes:
        pi_nabla: (2 dim P_k, n) coefficients of the H1-seminorm projection.
        pi_zero: (2 dim P_k, n) coefficients of the L2 projection.
        grad: (2, 2, dim P_{k-1}, n); ``grad[i, j]`` projects d_j v_i onto P_{k-1}.
        div: (dim P_{k-1}, n) projected divergence (exact for velocity).
        curl: (dim P_{k-1}, n) projected scalar curl.
        dof_matrix: (n, 2 dim P_k) dofs of the scaled-monomial basis functions.
    """

    kind: str
    k: int
    n: int
    area: float
    h: float
    center: np.ndarray
    rel_vertices: np.ndarray
    node_params: np.ndarray
    quad_points_rel: np.ndarray
    quad_weights: np.ndarray
    gram: np.ndarray
    gram_grad: np.ndarray
    gram_low: np.ndarray
    pi_nabla: np.ndarray
    pi_zero: np.ndarray
    grad: np.ndarray
    div: np.ndarray
    curl: np.ndarray
    dof_matrix: np.ndarray
    divergence: np.ndarray | None = None

    def translated(self, center) -> "LocalProjectors":
        out = LocalProjectors.__new__(LocalProjectors)
        out.__dict__.update(self.__dict__)
        out.center = np.asarray(center, dtype=float)
        return out

    @property
    def vertices(self) -> np.ndarray:
        return self.rel_vertices + self.center

    @property
    def quad_points(self) -> np.ndarray:
        return self.quad_points_rel + self.center

    def basis(self, degree: int | None = None) -> MonomialBasis:
        return MonomialBasis(self.k if degree is None else degree, self.center, self.h)

    @property
    def n_nodes(self) -> int:
        nv = len(self.rel_vertices)
        return nv + nv * len(self.node_params)

    def node_points(self) -> np.ndarray:
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        t = self.node_params
        e = (v[:, None, :] + t[None, :, None] * (nxt - v)[:, None, :]).reshape(-1, 2)
        return np.vstack([v, e])

    def interpolate(self, field, order: int | None = None) -> np.ndarray:
        """Local dofs of a pointwise-evaluable vector field."""
        return _local_dofs(self, field, order)

    # values of projected functions ------------------------------------------------

    def eval_pi_zero(self, coeffs_or_dofs, pts, from_dofs: bool = True) -> np.ndarray:
        c = self.pi_zero @ coeffs_or_dofs if from_dofs else coeffs_or_dofs
        return _eval_vec(self.basis(), c, pts)

    def eval_pi_nabla(self, dofs, pts) -> np.ndarray:
        return _eval_vec(self.basis(), self.pi_nabla @ dofs, pts)


def _eval_vec(basis, c, pts):
    m = len(basis)
    vals = basis.eval(pts)
    return np.column_stack([vals @ c[:m], vals @ c[m:]])


def _quad(verts, order):
    return polygon_quadrature(verts, order, center=np.zeros(2))


def build_local(verts, kind: str, k: int) -> LocalProjectors:
    """Projectors of ``kind`` space of degree ``k`` on polygon ``verts`` (ccw)."""
    _check_k(k)
    if kind not in (VELOCITY, MAGNETIC):
        raise ValueError("local projectors exist for the velocity and magnetic spaces")
    verts = np.asarray(verts, dtype=float)
    return _LocalBuilder(verts, kind, k).result


class _LocalBuilder:
    def __init__(self, verts, kind, k):
        from .mesh import polygon_geometry

        geom = polygon_geometry(verts)
        self.kind, self.k = kind, k
        self.center = geom.centroid
        rel = verts - geom.centroid
        self.rel = rel
        self.area, self.h = geom.area, geom.diameter
        self.P = MonomialBasis(k + 1, np.zeros(2), self.h)
        nv = len(rel)
        npe = points_per_edge(kind, k)
        self.node_params = gauss_lobatto(npe + 2)[1:-1] if npe else np.zeros(0)
        self.n_nodes = nv + nv * npe
        self.nb = 2 * self.n_nodes
        self.n = self.nb + n_interior(kind, k)
        trace_deg = npe + 1
        self.edges = []
        for i in range(nv):
            nodes = [i] + [nv + i * npe + j for j in range(npe)] + [(i + 1) % nv]
            params = np.concatenate([[0.0], self.node_params, [1.0]])
            self.edges.append(_Edge(rel[i], rel[(i + 1) % nv], nodes, params, trace_deg + k + 3))
        q = _quad(rel, 2 * k + 2)
        self.xq, self.wq = q.points, q.weights
        self.Pq = self.P.eval(self.xq)
        self.nk, self.nk1, self.nk2 = dim_poly(k), dim_poly(k - 1), dim_poly(k - 2)
        nk, nk1 = self.nk, self.nk1
        self.H = self._cell_int(self.Pq[:, :nk, None] * self.Pq[:, None, :nk])
        Gq = self.P.grad(self.xq)[:, :, :nk]
        self.G = self._cell_int(np.einsum("qdi,qdj->qij", Gq, Gq))
        self.H1 = self.H[:nk1, :nk1]
        # interior dof offsets
        if kind == VELOCITY:
            self.n_perp = dim_poly(k - 3)
            self.perp0 = self.nb
            self.div0 = self.nb + self.n_perp
        else:
            self.mom0 = self.nb
        self._build()

    # integration helpers ---------------------------------------------------------

    def _cell_int(self, vals):
        return np.tensordot(self.wq, vals, axes=(0, 0))

    def _bnd(self, wfun) -> np.ndarray:
        """Row r with r . v = boundary integral of v . w, w = wfun(points, normal)."""
        row = np.zeros(self.n)
        for e in self.edges:
            W = wfun(e.xq, e.normal)
            contrib = np.einsum("g,ga,gc->ac", e.wq, e.lag, W)
            for a, node in enumerate(e.nodes):
                row[2 * node] += contrib[a, 0]
                row[2 * node + 1] += contrib[a, 1]
        return row

    def _unit(self, i, scale=1.0):
        row = np.zeros(self.n)
        row[i] = scale
        return row

    def _decompose(self, p, d):
        """Write p in [P_d]^2 as grad(rho) + x_perp psi; returns (rho, psi) coefficients."""
        nd, nd1, ndm = dim_poly(d), dim_poly(d + 1), dim_poly(d - 1)
        cols = []
        for a in range(1, nd1):
            cols.append(np.concatenate([self.P.dx[:nd, a], self.P.dy[:nd, a]]))
        for b in range(ndm):
            e = np.zeros(len(self.P))
            e[b] = 1.0
            xp = times_xperp(self.P, e)
            cols.append(np.concatenate([xp[0, :nd], xp[1, :nd]]))
        M = np.column_stack(cols)
        sol = np.linalg.solve(M, np.concatenate([p[0][:nd], p[1][:nd]]))
        rho = np.zeros(len(self.P))
        rho[1:nd1] = sol[: nd1 - 1]
        return rho, sol[nd1 - 1:]

    def _poly_vals(self, c, pts):
        c = np.asarray(c)
        return self.P.eval(pts)[:, : len(c)] @ c

    # moment functionals ------------------------------------------------------------

    def _int_v_grad_rho(self, rho):
        """Row for (v, grad rho)_E, velocity space."""
        row = self._bnd(lambda x, nrm: nrm[None, :] * self._poly_vals(rho, x)[:, None])
        rho_q = self.Pq @ rho
        w = self._cell_int(self.Pq[:, : self.nk1] * rho_q[:, None])
        return row - w @ self.Ddiv

    def _low_rows(self, p):
        """Row for (v, p)_E with p in [P_{k-2}]^2 given as (2, m) coefficients."""
        k = self.k
        row = np.zeros(self.n)
        if k < 2:
            return row
        p = np.asarray(p, dtype=float)
        if self.kind == MAGNETIC:
            for c in range(2):
                for b in range(self.nk2):
                    if b < p.shape[1] and p[c, b] != 0.0:
                        row[self.mom0 + c * self.nk2 + b] += p[c, b] * self.area
            return row
        rho, psi = self._decompose(p, k - 2)
        row += self._int_v_grad_rho(rho)
        for b, val in enumerate(psi):
            if val != 0.0:
                row[self.perp0 + b] += val * self.area
        return row

    # projectors ----------------------------------------------------------------------

    def _build(self):
        k, nk, nk1 = self.k, self.nk, self.nk1
        P = self.P
        if self.kind == VELOCITY:
            mom = np.zeros((nk1, self.n))
            mom[0] = self._bnd(lambda x, nrm: np.broadcast_to(nrm, x.shape))
            for a in range(1, nk1):
                mom[a] = self._unit(self.div0 + a - 1, self.area / self.h)
            self.Ddiv = self._solve(self.H1, mom)

        # H1-seminorm projection
        R = np.zeros((2 * nk, self.n))
        G2 = np.zeros((2 * nk, 2 * nk))
        lap = P.laplacian
        bmean = np.array([sum(np.dot(e.wq, self._poly_vals(np.eye(len(P))[a], e.xq)) for e in self.edges)
                          for a in range(nk)])
        for c in range(2):
            G2[c * nk:(c + 1) * nk, c * nk:(c + 1) * nk] = self.G
            for a in range(nk):
                def wfun(x, nrm, a=a, c=c):
                    gn = P.grad(x)[:, :, a] @ nrm
                    W = np.zeros((len(x), 2))
                    W[:, c] = gn
                    return W
                R[c * nk + a] = self._bnd(wfun)
                if k >= 2:
                    p = np.zeros((2, self.nk2))
                    p[c] = lap[: self.nk2, a]
                    R[c * nk + a] -= self._low_rows(p)
            G2[c * nk] = 0.0
            G2[c * nk, c * nk:(c + 1) * nk] = bmean
            ec = np.zeros(2)
            ec[c] = 1.0
            R[c * nk] = self._bnd(lambda x, nrm, ec=ec: np.broadcast_to(ec, x.shape))
        self.PiN = self._solve(G2, R)

        H2 = np.zeros((2 * nk, 2 * nk))
        H2[:nk, :nk] = self.H
        H2[nk:, nk:] = self.H
        F = np.zeros((2 * nk, self.n))
        if self.kind == VELOCITY:
            n_low_perp = dim_poly(k - 3)
            for c in range(2):
                for a in range(nk):
                    p = np.zeros((2, nk))
                    p[c, a] = 1.0
                    rho, psi = self._decompose(p, k)
                    row = self._int_v_grad_rho(rho)
                    for b, val in enumerate(psi):
                        if val == 0.0:
                            continue
                        if b < n_low_perp:
                            row[self.perp0 + b] += val * self.area
                        else:
                            e = np.zeros(len(P))
                            e[b] = 1.0
                            xp = times_xperp(P, e)
                            pair = np.concatenate([self.H @ xp[0, :nk], self.H @ xp[1, :nk]])
                            row += val * (pair @ self.PiN)
                    F[c * nk + a] = row
        else:
            deg = degrees(k)
            HP = H2 @ self.PiN
            for c in range(2):
                for a in range(nk):
                    if deg[a] <= k - 2:
                        F[c * nk + a] = self._unit(self.mom0 + c * self.nk2 + a, self.area)
                    else:
                        F[c * nk + a] = HP[c * nk + a]
        self.Pi0 = self._solve(H2, F)

        # projected gradient
        grad = np.zeros((2, 2, nk1, self.n))
        for i in range(2):
            for j in range(2):
                rows = np.zeros((nk1, self.n))
                dj = P.dx if j == 0 else P.dy
                for g in range(nk1):
                    def wfun(x, nrm, g=g, i=i, j=j):
                        W = np.zeros((len(x), 2))
                        W[:, i] = nrm[j] * P.eval(x)[:, g]
                        return W
                    rows[g] = self._bnd(wfun)
                    if k >= 2:
                        p = np.zeros((2, self.nk2))
                        p[i] = dj[: self.nk2, g]
                        rows[g] -= self._low_rows(p)
                grad[i, j] = self._solve(self.H1, rows)
        self.grad = grad

        # dofs of the basis functions
        D = np.zeros((self.n, 2 * nk))
        for c in range(2):
            for a in range(nk):
                def fld(x, a=a, c=c):
                    out = np.zeros((len(x), 2))
                    out[:, c] = P.eval(x)[:, a]
                    return out
                D[:, c * nk + a] = self._dofs(fld, x_shift=np.zeros(2))
        self.D = D

        self.result = LocalProjectors(
            kind=self.kind, k=k, n=self.n, area=self.area, h=self.h,
            center=self.center.copy(), rel_vertices=self.rel, node_params=self.node_params,
            quad_points_rel=self.xq, quad_weights=self.wq, gram=self.H, gram_grad=self.G,
            gram_low=self.H1, pi_nabla=self.PiN, pi_zero=self.Pi0, grad=grad,
            div=grad[0, 0] + grad[1, 1], curl=grad[1, 0] - grad[0, 1], dof_matrix=D,
            divergence=self.Ddiv if self.kind == VELOCITY else None,
        )

    def _solve(self, A, B):
        try:
            cond = np.linalg.cond(A)
            if not np.isfinite(cond) or cond > 1e13:
                raise np.linalg.LinAlgError(f"condition number {cond:.2e}")
            return np.linalg.solve(A, B)
        except np.linalg.LinAlgError as exc:
            raise ElementQualityError(f"singular local system ({exc})") from None

    def _dofs(self, field, x_shift, order=None):
        return _dofs_generic(self.kind, self.k, self.rel, self.node_params, self.area, self.h,
                             field, x_shift, order)


def _dofs_generic(kind, k, rel, node_params, area, h, field, shift, order=None):
    """Dofs of ``field`` (callable on absolute points) on a cell with relative geometry."""
    nv = len(rel)
    nxt = np.roll(rel, -1, axis=0)
    epts = (rel[:, None, :] + node_params[None, :, None] * (nxt - rel)[:, None, :]).reshape(-1, 2)
    nodes = np.vstack([rel, epts])
    vals = np.asarray(field(nodes + shift), dtype=float)
    nint = n_interior(kind, k)
    out = np.empty(2 * len(nodes) + nint)
    out[: 2 * len(nodes)] = vals.ravel()
    if nint == 0:
        return out
    order = 2 * k + 2 if order is None else order
    q = _quad(rel, order)
    fq = np.asarray(field(q.points + shift), dtype=float)
    P = MonomialBasis(k + 1, np.zeros(2), h)
    Pq = P.eval(q.points)
    pos = 2 * len(nodes)
    if kind == MAGNETIC:
        for c in range(2):
            for b in range(dim_poly(k - 2)):
                out[pos] = np.dot(q.weights, fq[:, c] * Pq[:, b]) / area
                pos += 1
        return out
    for b in range(dim_poly(k - 3)):
        e = np.zeros(len(P))
        e[b] = 1.0
        xp = times_xperp(P, e)
        w = np.column_stack([Pq @ xp[0], Pq @ xp[1]])
        out[pos] = np.dot(q.weights, np.sum(fq * w, axis=1)) / area
        pos += 1
    Gq = P.grad(q.points)
    for a in range(1, dim_poly(k - 1)):
        bnd = 0.0
        for i in range(nv):
            eq = edge_quadrature(rel[i], nxt[i], order)
            d = nxt[i] - rel[i]
            nrm = np.array([d[1], -d[0]]) / np.hypot(d[0], d[1])
            fe = np.asarray(field(eq.points + shift), dtype=float)
            bnd += np.dot(eq.weights, (fe @ nrm) * P.eval(eq.points)[:, a])
        inner = np.dot(q.weights, np.sum(fq * Gq[:, :, a], axis=1))
        out[pos] = (h / area) * (bnd - inner)
        pos += 1
    return out


def _local_dofs(proj: LocalProjectors, field, order=None):
    return _dofs_generic(proj.kind, proj.k, proj.rel_vertices, proj.node_params, proj.area,
                         proj.h, field, proj.center, order)


# ---------------------------------------------------------------------------
# per-mesh construction


def _congruence_key(rel: np.ndarray, h: float):
    return tuple(np.round(rel / h, 11).ravel().tolist())


def build_projectors(mesh: PolygonalMesh, kind: str, k: int) -> list[LocalProjectors]:
    """Local projectors for every cell; translated copies of congruent cells share matrices."""
    cache: dict = {}
    out = []
    for c in range(mesh.n_cells):
        g = mesh.geometry(c)
        rel = g.vertices - g.centroid
        key = _congruence_key(rel, g.diameter)
        tmpl = cache.get(key)
        if tmpl is None:
            try:
                tmpl = build_local(g.vertices, kind, k)
            except ElementQualityError as exc:
                raise ElementQualityError(f"cell {c}: {exc}") from None
            cache[key] = tmpl
        out.append(tmpl.translated(g.centroid))
    return out


def velocity_projectors(mesh: PolygonalMesh, k: int = 1) -> list[LocalProjectors]:
    return build_projectors(mesh, VELOCITY, k)


def magnetic_projectors(mesh: PolygonalMesh, k: int = 1) -> list[LocalProjectors]:
    return build_projectors(mesh, MAGNETIC, k)


@dataclass
class PressureBasis:
    """Local P_{k-1} scaled-monomial basis; dofs are coefficients."""

    k: int
    basis: MonomialBasis
    gram: np.ndarray
    integrals: np.ndarray

    def __len__(self):
        return len(self.basis)


def pressure_basis(mesh: PolygonalMesh, cell: int, k: int = 1) -> PressureBasis:
    _check_k(k)
    g = mesh.geometry(cell)
    B = MonomialBasis(k - 1, g.centroid, g.diameter)
    q = polygon_quadrature(g.vertices, 2 * k, center=g.centroid)
    V = B.eval(q.points)
    gram = np.einsum("q,qi,qj->ij", q.weights, V, V)
    return PressureBasis(k, B, gram, q.weights @ V)


def pressure_mean_row(mesh: PolygonalMesh, k: int = 1) -> np.ndarray:
    """Row c with c . p = integral of p over the domain."""
    return np.concatenate([pressure_basis(mesh, c, k).integrals for c in range(mesh.n_cells)])


def divergence_polynomial(proj: LocalProjectors, dofs) -> np.ndarray:
    """P_{k-1} coefficients of div v_h on one cell (exact)."""
    if proj.kind != VELOCITY:
        raise ValueError("divergence_polynomial applies to the velocity space")
    return proj.divergence @ np.asarray(dofs, dtype=float)


def interpolate(field, layout: DofLayout, mesh: PolygonalMesh, projectors=None, order=None) -> np.ndarray:
    """Global dof vector of a vector field ``field(points) -> (n, 2)``."""
    if layout.kind == PRESSURE:
        raise ValueError("use project_pressure for the pressure space")
    projectors = projectors or build_projectors(mesh, layout.kind, layout.k)
    out = np.zeros(layout.n_dofs)
    for c, proj in enumerate(projectors):
        out[layout.cell_dofs[c]] = proj.interpolate(field, order)
    return out


def project_pressure(p, mesh: PolygonalMesh, k: int = 1, order: int | None = None) -> np.ndarray:
    """L2 projection of a scalar function onto Q_h (before mean removal)."""
    order = 2 * k + 2 if order is None else order
    out = []
    for c in range(mesh.n_cells):
        pb = pressure_basis(mesh, c, k)
        g = mesh.geometry(c)
        q = polygon_quadrature(g.vertices, order, center=g.centroid)
        V = pb.basis.eval(q.points)
        out.append(np.linalg.solve(pb.gram, V.T @ (q.weights * p(q.points))))
    return np.concatenate(out)
