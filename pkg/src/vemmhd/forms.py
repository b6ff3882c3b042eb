"""Local bilinear forms, trilinear form evaluations and projected loads.

Bilinear forms combine a polynomial consistency part with the plain
dof-dof stabilization applied to the projection remainder:

    m0h = (P0 u, P0 v) + |E| S((I - P0) u, (I - P0) v)
    m1h = mu [(P0 b, P0 c) + |E| S((I - P0) b, (I - P0) c)]
    a0h = nu [(grad PN u, grad PN v) + S((I - PN) u, (I - PN) v)]
    a1h = (1/sigma) [(curl0 b, curl0 c) + (div0 b, div0 c) + S((I - PN) b, (I - PN) c)]

Trilinear forms are evaluated matrix-free, cells grouped by shared
projector templates so that one einsum covers every congruent cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly import dim_poly
from .spaces import MAGNETIC, VELOCITY, LocalProjectors

FORM_TAGS = ("m0h", "m1h", "a0h", "a1h")


class FormOrderError(RuntimeError):
    """Forms requested before the projectors they depend on."""


class SlotPatternError(ValueError):
    pass


@dataclass(frozen=True)
class Coefficients:
    nu: float = 1.0
    mu: float = 1.0
    sigma: float = 1.0


@dataclass
class LocalForm:
    cell: int
    matrix: np.ndarray
    tag: str


def _h2(proj: LocalProjectors) -> np.ndarray:
    nk = len(proj.gram)
    H2 = np.zeros((2 * nk, 2 * nk))
    H2[:nk, :nk] = proj.gram
    H2[nk:, nk:] = proj.gram
    return H2


def _remainder(proj, pi):
    return np.eye(proj.n) - proj.dof_matrix @ pi


def local_matrix(proj: LocalProjectors, tag: str, coef: Coefficients = Coefficients()) -> np.ndarray:
    if proj is None:
        raise FormOrderError("projectors must be built before local forms")
    if tag == "m0h" or tag == "m1h":
        R = _remainder(proj, proj.pi_zero)
        K = proj.pi_zero.T @ _h2(proj) @ proj.pi_zero + proj.area * (R.T @ R)
        return coef.mu * K if tag == "m1h" else K
    if tag == "a0h":
        nk = len(proj.gram)
        G2 = np.zeros((2 * nk, 2 * nk))
        G2[:nk, :nk] = proj.gram_grad
        G2[nk:, nk:] = proj.gram_grad
        R = _remainder(proj, proj.pi_nabla)
        return coef.nu * (proj.pi_nabla.T @ G2 @ proj.pi_nabla + R.T @ R)
    if tag == "a1h":
        H1 = proj.gram_low
        R = _remainder(proj, proj.pi_nabla)
        K = proj.curl.T @ H1 @ proj.curl + proj.div.T @ H1 @ proj.div + R.T @ R
        return K / coef.sigma
    raise ValueError(f"unknown form tag {tag!r}")


def local_bilinear(proj: LocalProjectors, tag: str, coef: Coefficients = Coefficients(),
                   cell: int = -1) -> LocalForm:
    expected = MAGNETIC if tag in ("m1h", "a1h") else VELOCITY
    if proj is not None and proj.kind != expected:
        raise ValueError(f"{tag} acts on the {expected} space, got {proj.kind}")
    return LocalForm(cell, local_matrix(proj, tag, coef), tag)


def local_d(proj: LocalProjectors) -> np.ndarray:
    """Matrix (dim P_{k-1}, n): entry (r, i) = -(div phi_i, m_r)_E."""
    if proj.kind != VELOCITY:
        raise ValueError("local_d needs velocity projectors")
    return -proj.gram_low @ proj.divergence


# ---------------------------------------------------------------------------
# grouping of congruent cells


@dataclass
class CellGroup:
    """Cells sharing one projector template."""

    template: LocalProjectors
    cells: np.ndarray
    dofs: np.ndarray  # (n_cells_in_group, n_local)
    centers: np.ndarray

    def quad_points(self) -> np.ndarray:
        """Absolute quadrature points, shape (g, nq, 2)."""
        return self.template.quad_points_rel[None, :, :] + self.centers[:, None, :]


def group_cells(projectors, cell_dofs) -> list[CellGroup]:
    by_key: dict = {}
    for c, proj in enumerate(projectors):
        by_key.setdefault(id(proj.pi_zero), []).append(c)
    groups = []
    for cells in by_key.values():
        cells = np.array(cells)
        tmpl = projectors[cells[0]]
        dofs = np.array([cell_dofs[c] for c in cells])
        centers = np.array([projectors[c].center for c in cells])
        groups.append(CellGroup(tmpl, cells, dofs, centers))
    return groups


@dataclass
class _GroupData:
    weights: np.ndarray
    basis: np.ndarray  # (nq, nk) scaled monomials at quadrature points
    pi0_vals: np.ndarray  # (nq, 2, n) values of P0 of basis functions
    extra: dict


def _group_data(tmpl: LocalProjectors) -> _GroupData:
    B = tmpl.basis().eval(tmpl.quad_points)  # translation invariant
    nk = B.shape[1]
    P0 = tmpl.pi_zero
    vals = np.stack([B @ P0[:nk], B @ P0[nk:]], axis=1)
    return _GroupData(tmpl.quad_weights, B, vals, {})


class TrilinearAssembler:
    """Matrix-free evaluation of the convective and Lorentz trilinear forms."""

    def __init__(self, vel_groups: list[CellGroup], mag_groups: list[CellGroup], n_u: int, n_b: int,
                 mu: float = 1.0):
        self.n_u, self.n_b, self.mu = n_u, n_b, mu
        # both spaces share the cell partition; pair velocity and magnetic groups per cell
        self._pairs = []
        mag_of_cell = {}
        for gi, g in enumerate(mag_groups):
            for j, c in enumerate(g.cells):
                mag_of_cell[int(c)] = (gi, j)
        for gv in vel_groups:
            sub: dict = {}
            for j, c in enumerate(gv.cells):
                gi, jm = mag_of_cell[int(c)]
                sub.setdefault(gi, ([], []))
                sub[gi][0].append(j)
                sub[gi][1].append(jm)
            for gi, (jv, jm) in sub.items():
                gm = mag_groups[gi]
                self._pairs.append(self._prepare(gv, gm, np.array(jv), np.array(jm)))

    def _prepare(self, gv, gm, jv, jm):
        tv, tm = gv.template, gm.template
        dv, dm = _group_data(tv), _group_data(tm)
        nk1 = dim_poly(tv.k - 1)
        B1 = dv.basis[:, :nk1]
        grad_v = np.einsum("qg,ijgn->ijqn", B1, tv.grad)
        curl_b = B1 @ tm.curl  # (nq, n_b_loc)
        return dict(w=dv.weights, u_dofs=gv.dofs[jv], b_dofs=gm.dofs[jm], u_vals=dv.pi0_vals,
                    b_vals=dm.pi0_vals, grad_v=grad_v, curl_b=curl_b)

    @staticmethod
    def _fields(vals, dofs, x):
        return np.einsum("qcn,gn->gqc", vals, x[dofs])

    def c0h(self, w, u) -> np.ndarray:
        """Vector over velocity tests v of c0h(w, u, v) = ((P grad v) P0 w, P0 u)."""
        out = np.zeros(self.n_u)
        for p in self._pairs:
            W = self._fields(p["u_vals"], p["u_dofs"], w)
            U = self._fields(p["u_vals"], p["u_dofs"], u)
            r = np.einsum("q,ijqn,gqj,gqi->gn", p["w"], p["grad_v"], W, U)
            np.add.at(out, p["u_dofs"], r)
        return out

    def c1h_velocity(self, b, d) -> np.ndarray:
        """Vector over velocity tests v of c1h(b, d, v) = mu (curl0 b x P0 d, P0 v)."""
        out = np.zeros(self.n_u)
        for p in self._pairs:
            s = np.einsum("qn,gn->gq", p["curl_b"], b[p["b_dofs"]])
            D = self._fields(p["b_vals"], p["b_dofs"], d)
            cross = np.stack([-s * D[..., 1], s * D[..., 0]], axis=-1)
            r = np.einsum("q,gqc,qcn->gn", p["w"], cross, p["u_vals"])
            np.add.at(out, p["u_dofs"], r)
        return self.mu * out

    def c1h_magnetic(self, d, u) -> np.ndarray:
        """Vector over magnetic tests c of c1h(c, d, u) = mu (curl0 c x P0 d, P0 u)."""
        out = np.zeros(self.n_b)
        for p in self._pairs:
            D = self._fields(p["b_vals"], p["b_dofs"], d)
            U = self._fields(p["u_vals"], p["u_dofs"], u)
            z = D[..., 0] * U[..., 1] - D[..., 1] * U[..., 0]
            r = np.einsum("q,qn,gq->gn", p["w"], p["curl_b"], z)
            np.add.at(out, p["b_dofs"], r)
        return self.mu * out

    def evaluate(self, pattern: str, *args) -> np.ndarray | float:
        """Dispatch on a slot pattern; '*' marks the free test slot.

        Patterns: 'c0(w,u,*)', 'c1(b,d,*)', 'c1(*,d,u)', and full scalar
        contractions 'c0', 'c1' taking three dof vectors.
        """
        if pattern == "c0(w,u,*)":
            return self.c0h(*args)
        if pattern == "c1(b,d,*)":
            return self.c1h_velocity(*args)
        if pattern == "c1(*,d,u)":
            return self.c1h_magnetic(*args)
        if pattern == "c0" and len(args) == 3:
            return float(self.c0h(args[0], args[1]) @ args[2])
        if pattern == "c1" and len(args) == 3:
            return float(self.c1h_velocity(args[0], args[1]) @ args[2])
        raise SlotPatternError(f"unknown slot pattern {pattern!r} with {len(args)} arguments")


def load_vector(f, groups: list[CellGroup], n_dofs: int, t: float = 0.0) -> np.ndarray:
    """Dual vector v -> sum_E (P0 f, P0 v)_E for ``f(points, t) -> (n, 2)``."""
    out = np.zeros(n_dofs)
    for g in groups:
        d = _group_data(g.template)
        pts = g.quad_points()
        F = np.asarray(f(pts.reshape(-1, 2), t), dtype=float).reshape(len(g.cells), -1, 2)
        mom = np.einsum("q,gqc,qa->gca", d.weights, F, d.basis).reshape(len(g.cells), -1)
        np.add.at(out, g.dofs, mom @ g.template.pi_zero)
    return out
