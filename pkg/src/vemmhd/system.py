"""Global assembly, boundary constraints and factorized linear solves."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import Coefficients, CellGroup, TrilinearAssembler, group_cells, local_d, local_matrix
from .mesh import PolygonalMesh, point_sides
from .spaces import (
    MAGNETIC,
    PRESSURE,
    VELOCITY,
    DofLayout,
    build_layout,
    build_projectors,
    pressure_mean_row,
)

log = logging.getLogger(__name__)

RESIDUAL_WARN = 1e-9


class AssemblyError(RuntimeError):
    pass


class ConstraintConflictError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# discretization container


def _assemble_groups(groups: list[CellGroup], n: int, local, m: int | None = None,
                     row_dofs=None) -> sp.csr_matrix:
    """Scatter-add ``local(template)`` over every cell group.

    ``row_dofs`` (one array per group) gives test-space indices for
    rectangular blocks; by default rows and columns share ``g.dofs``.
    """
    rows, cols, vals = [], [], []
    for i, g in enumerate(groups):
        K = local(g.template)
        r = (g.dofs if row_dofs is None else row_dofs[i])[:, :, None]
        rows.append(np.broadcast_to(r, (len(g.cells), K.shape[0], K.shape[1])).ravel())
        cols.append(np.broadcast_to(g.dofs[:, None, :], (len(g.cells), K.shape[0], K.shape[1])).ravel())
        vals.append(np.broadcast_to(K, (len(g.cells),) + K.shape).ravel())
    shape = (n, n) if m is None else (m, n)
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)
    return A.tocsr()


@dataclass
class Discretization:
    """Spaces, projectors and constant-coefficient matrices on one mesh."""

    mesh: PolygonalMesh
    k: int
    coef: Coefficients
    vel: DofLayout
    mag: DofLayout
    pre: DofLayout
    vel_proj: list
    mag_proj: list
    vel_groups: list
    mag_groups: list
    M0: sp.csr_matrix = field(repr=False)
    A0: sp.csr_matrix = field(repr=False)
    M1: sp.csr_matrix = field(repr=False)
    A1: sp.csr_matrix = field(repr=False)
    B: sp.csr_matrix = field(repr=False)  # (n_p, n_u): B[r, v] = d(v, r)
    mean_row: np.ndarray = field(repr=False)
    trilinear: TrilinearAssembler = field(repr=False)

    @property
    def n_u(self) -> int:
        return self.vel.n_dofs

    @property
    def n_b(self) -> int:
        return self.mag.n_dofs

    @property
    def n_p(self) -> int:
        return self.pre.n_dofs

    def cell_divergence(self, u) -> np.ndarray:
        """Per-cell L2 norm of div u_h."""
        out = np.empty(self.mesh.n_cells)
        for c, proj in enumerate(self.vel_proj):
            dc = proj.divergence @ u[self.vel.cell_dofs[c]]
            out[c] = np.sqrt(max(dc @ proj.gram_low @ dc, 0.0))
        return out


def discretize(mesh: PolygonalMesh, k: int = 1, coef: Coefficients = Coefficients()) -> Discretization:
    vel = build_layout(mesh, VELOCITY, k)
    mag = build_layout(mesh, MAGNETIC, k)
    pre = build_layout(mesh, PRESSURE, k)
    vp = build_projectors(mesh, VELOCITY, k)
    mp = build_projectors(mesh, MAGNETIC, k)
    vg = group_cells(vp, vel.cell_dofs)
    mg = group_cells(mp, mag.cell_dofs)
    M0 = _assemble_groups(vg, vel.n_dofs, lambda t: local_matrix(t, "m0h", coef))
    A0 = _assemble_groups(vg, vel.n_dofs, lambda t: local_matrix(t, "a0h", coef))
    M1 = _assemble_groups(mg, mag.n_dofs, lambda t: local_matrix(t, "m1h", coef))
    A1 = _assemble_groups(mg, mag.n_dofs, lambda t: local_matrix(t, "a1h", coef))
    prows = [np.array([pre.cell_dofs[c] for c in g.cells]) for g in vg]
    Bm = _assemble_groups(vg, vel.n_dofs, local_d, m=pre.n_dofs, row_dofs=prows)
    tri = TrilinearAssembler(vg, mg, vel.n_dofs, mag.n_dofs, mu=coef.mu)
    return Discretization(mesh, k, coef, vel, mag, pre, vp, mp, vg, mg, M0, A0, M1, A1, Bm,
                          pressure_mean_row(mesh, k), tri)


# ---------------------------------------------------------------------------
# constraints


@dataclass
class ConstraintSet:
    """Prescribed dof values, plus whether pressure carries a mean-zero multiplier."""

    dofs: np.ndarray
    values: np.ndarray
    pressure_mean_zero: bool = True

    def __post_init__(self):
        self.dofs = np.asarray(self.dofs, dtype=np.intp)
        self.values = np.asarray(self.values, dtype=float)
        order = np.argsort(self.dofs, kind="stable")
        d, v = self.dofs[order], self.values[order]
        dup = np.flatnonzero(np.diff(d) == 0)
        if len(dup):
            bad = dup[np.abs(v[dup] - v[dup + 1]) > 1e-14]
            if len(bad):
                raise ConstraintConflictError(f"dof {d[bad[0]]} prescribed twice with different values")
            keep = np.ones(len(d), dtype=bool)
            keep[dup + 1] = False
            d, v = d[keep], v[keep]
        self.dofs, self.values = d, v

    def with_values(self, values) -> "ConstraintSet":
        return ConstraintSet(self.dofs, values, self.pressure_mean_zero)

    @property
    def index_key(self) -> tuple:
        return (len(self.dofs), hash(self.dofs.tobytes()))

    def homogeneous(self) -> "ConstraintSet":
        return self.with_values(np.zeros(len(self.dofs)))


def merge(*sets: ConstraintSet) -> ConstraintSet:
    return ConstraintSet(np.concatenate([s.dofs for s in sets]), np.concatenate([s.values for s in sets]))


def velocity_dirichlet(disc: Discretization, g=None) -> ConstraintSet:
    """All boundary nodal dofs; values from ``g(points) -> (n, 2)`` (zero if None)."""
    lay = disc.vel
    nodes = lay.boundary_nodes(disc.mesh)
    dofs = lay.node_dofs[nodes].ravel()
    vals = np.zeros((len(nodes), 2)) if g is None else np.asarray(g(lay.node_points[nodes]), dtype=float)
    return ConstraintSet(dofs, vals.ravel())


def _node_sides(disc: Discretization, lay: DofLayout):
    nodes = lay.boundary_nodes(disc.mesh)
    return nodes, [point_sides(lay.node_points[n], disc.mesh.domain, tol=1e-9) for n in nodes]


def magnetic_normal(disc: Discretization) -> ConstraintSet:
    """b . n = 0 on the rectangle: normal component per boundary node, both at corners."""
    lay = disc.mag
    nodes, sides = _node_sides(disc, lay)
    dofs = []
    for n, s in zip(nodes, sides):
        comps = {0 if side in ("left", "right") else 1 for side in s}
        dofs.extend(lay.node_dofs[n, c] for c in sorted(comps))
    return ConstraintSet(dofs, np.zeros(len(dofs)))


def magnetic_tangential(disc: Discretization, value=(1.0, 0.0)) -> ConstraintSet:
    """n x b = n x value: b_1 fixed on top and bottom, b_2 fixed on the side walls."""
    lay = disc.mag
    nodes, sides = _node_sides(disc, lay)
    dofs, vals = [], []
    for n, s in zip(nodes, sides):
        for c in sorted({0 if side in ("top", "bottom") else 1 for side in s}):
            dofs.append(lay.node_dofs[n, c])
            vals.append(float(value[c]))
    return ConstraintSet(dofs, vals)


def magnetic_lid(disc: Discretization, value=(1.0, 0.0)) -> ConstraintSet:
    """Wall variant of the cavity data: b = value on top and bottom, b = 0 on the
    side walls and corners (tangential data plus b . n = 0 on the walls)."""
    lay = disc.mag
    nodes, sides = _node_sides(disc, lay)
    dofs, vals = [], []
    for n, s in zip(nodes, sides):
        on_wall = any(side in ("left", "right") for side in s)
        for c in range(2):
            dofs.append(lay.node_dofs[n, c])
            vals.append(0.0 if on_wall else float(value[c]))
    return ConstraintSet(dofs, vals)


def lid_velocity(speed: float = 1.0, y_top: float = 1.0):
    """Boundary data u = (speed, 0) on y = y_top away from the corners, else 0."""

    def g(pts):
        pts = np.atleast_2d(pts)
        out = np.zeros((len(pts), 2))
        top = np.abs(pts[:, 1] - y_top) < 1e-9
        inner = (pts[:, 0] > 1e-9) & (pts[:, 0] < 1.0 - 1e-9)
        out[top & inner, 0] = speed
        return out

    return g


def apply_constraints(A: sp.spmatrix, rhs: np.ndarray, cons: ConstraintSet):
    """Eliminate prescribed dofs. Returns (A_ff, rhs_f, free index array)."""
    if len(cons.dofs) and (cons.dofs.min() < 0 or cons.dofs.max() >= A.shape[0]):
        raise ConstraintConflictError("constrained dof outside the system")
    free = np.setdiff1d(np.arange(A.shape[0]), cons.dofs)
    A = A.tocsr()
    x_c = np.zeros(A.shape[0])
    x_c[cons.dofs] = cons.values
    r = rhs - A @ x_c
    return A[free][:, free], r[free], free


def expand(x_free, free, cons: ConstraintSet, n: int) -> np.ndarray:
    x = np.zeros(n)
    x[free] = x_free
    x[cons.dofs] = cons.values
    return x


# ---------------------------------------------------------------------------
# factorized operators


@dataclass
class Factorized:
    kind: str
    signature: tuple
    matrix: sp.csc_matrix
    lu: object
    free: np.ndarray
    n_full: int
    n_u: int = 0

    def solve(self, rhs_free: np.ndarray) -> np.ndarray:
        x = self.lu.solve(rhs_free)
        nb = np.linalg.norm(rhs_free)
        res = np.linalg.norm(self.matrix @ x - rhs_free)
        rel = res / nb if nb > 0 else res
        if not np.all(np.isfinite(x)):
            raise SolverError(f"{self.kind} solve produced non-finite values (residual {res:.3e})")
        if rel > RESIDUAL_WARN:
            log.warning("%s solve relative residual %.3e", self.kind, rel)
        self.last_residual = rel
        return x


class LinearOperatorCache:
    """Factorizations of a*M + b*A operators, keyed by exact coefficient signature."""

    def __init__(self, disc: Discretization):
        self.disc = disc
        self._store: dict = {}
        self.factorizations = 0
        self.hits = 0

    def _factor(self, kind, M, sig):
        try:
            lu = spla.splu(M.tocsc())
        except RuntimeError as exc:
            raise AssemblyError(f"{kind} factorization failed: {exc}") from None
        self.factorizations += 1
        return lu

    def stokes(self, a: float, b: float, cons: ConstraintSet) -> Factorized:
        """Saddle operator [[aM0 + bA0, B^T, 0], [B, 0, c], [0, c^T, 0]] with velocity dofs eliminated."""
        if not a > 0 or b < 0:
            raise AssemblyError("stokes operator needs a > 0 and b >= 0")
        sig = ("stokes", float(a), float(b), cons.index_key)
        if sig in self._store:
            self.hits += 1
            return self._store[sig]
        d = self.disc
        K = a * d.M0 + b * d.A0
        c = sp.csr_matrix(d.mean_row[:, None])
        S = sp.bmat([[K, d.B.T, None], [d.B, None, c], [None, c.T, None]], format="csr")
        n = S.shape[0]
        free = np.setdiff1d(np.arange(n), cons.dofs)
        Sf = S[free][:, free].tocsc()
        fac = Factorized("stokes", sig, Sf, self._factor("stokes", Sf, sig), free, n, d.n_u)
        fac.full = S
        self._store[sig] = fac
        return fac

    def magnetic(self, a: float, b: float, cons: ConstraintSet) -> Factorized:
        if not a > 0 or b < 0:
            raise AssemblyError("magnetic operator needs a > 0 and b >= 0")
        sig = ("magnetic", float(a), float(b), cons.index_key)
        if sig in self._store:
            self.hits += 1
            return self._store[sig]
        d = self.disc
        K = (a * d.M1 + b * d.A1).tocsr()
        free = np.setdiff1d(np.arange(K.shape[0]), cons.dofs)
        Kf = K[free][:, free].tocsc()
        fac = Factorized("magnetic", sig, Kf, self._factor("magnetic", Kf, sig), free, K.shape[0])
        fac.full = K
        self._store[sig] = fac
        return fac


def solve_stokes(fac: Factorized, f_u: np.ndarray, cons: ConstraintSet, g_p: np.ndarray | None = None):
    """Solve for (u, p) with prescribed velocity values; returns (u, p)."""
    n_u = fac.n_u
    n_p = fac.n_full - n_u - 1
    rhs = np.zeros(fac.n_full)
    rhs[:n_u] = f_u
    if g_p is not None:
        rhs[n_u:n_u + n_p] = g_p
    x_c = np.zeros(fac.n_full)
    x_c[cons.dofs] = cons.values
    r = rhs - fac.full @ x_c
    x = expand(fac.solve(r[fac.free]), fac.free, cons, fac.n_full)
    return x[:n_u], x[n_u:n_u + n_p]


def solve_magnetic(fac: Factorized, g_b: np.ndarray, cons: ConstraintSet) -> np.ndarray:
    x_c = np.zeros(fac.n_full)
    x_c[cons.dofs] = cons.values
    r = g_b - fac.full @ x_c
    return expand(fac.solve(r[fac.free]), fac.free, cons, fac.n_full)


def solve(fac: Factorized, rhs: np.ndarray, cons: ConstraintSet):
    """Generic entry: dispatch on the operator kind."""
    if fac.kind == "stokes":
        return solve_stokes(fac, rhs, cons)
    return solve_magnetic(fac, rhs, cons)
