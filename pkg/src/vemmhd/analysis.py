"""Manufactured solutions, computable error norms and convergence rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .poly import MonomialBasis, polygon_quadrature

PI = np.pi


@dataclass
class ManufacturedSolution:
    """Exact fields and matching forcings; all callables take (points (n, 2), t).

    ``grad_u`` and ``grad_b`` return (n, 2, 2) arrays with ``[:, i, j] = d_j v_i``.
    """

    u: Callable
    grad_u: Callable
    b: Callable
    grad_b: Callable
    p: Callable
    f: Callable
    g: Callable
    nu: float = 1.0
    mu: float = 1.0
    sigma: float = 1.0
    extra: dict = field(default_factory=dict)


def _tau(t):
    return np.exp(-t) * np.cos(t)


def _dtau(t):
    return -np.exp(-t) * (np.cos(t) + np.sin(t))


def _trig(x):
    x = np.atleast_2d(x)
    return (np.sin(PI * x[:, 0]), np.cos(PI * x[:, 0]), np.sin(PI * x[:, 1]), np.cos(PI * x[:, 1]))


def example1_solution(nu: float = 1.0, mu: float = 1.0, sigma: float = 1.0) -> ManufacturedSolution:
    """Smooth decaying MHD solution on the unit square with hand-derived forcings."""

    def u_shape(x):
        s1, c1, s2, c2 = _trig(x)
        return np.column_stack([PI * s1**2 * s2 * c2, -PI * s1 * c1 * s2**2])

    def u(x, t):
        return _tau(t) * u_shape(x)

    def grad_u(x, t):
        s1, c1, s2, c2 = _trig(x)
        a = PI * _tau(t)
        sx, sy = 2 * s1 * c1, 2 * s2 * c2  # sin(2 pi x), sin(2 pi y)
        cx, cy = c1**2 - s1**2, c2**2 - s2**2
        out = np.empty((len(s1), 2, 2))
        out[:, 0, 0] = a * PI / 2 * sx * sy
        out[:, 0, 1] = a * PI * s1**2 * cy
        out[:, 1, 0] = -a * PI * cx * s2**2
        out[:, 1, 1] = -a * PI / 2 * sx * sy
        return out

    def lap_u(x, t):
        s1, c1, s2, c2 = _trig(x)
        a = PI * _tau(t)
        sx, sy = 2 * s1 * c1, 2 * s2 * c2
        cx, cy = c1**2 - s1**2, c2**2 - s2**2
        l1 = a / 2 * sy * (2 * PI**2 * cx - 4 * PI**2 * s1**2)
        l2 = -a / 2 * sx * (2 * PI**2 * cy - 4 * PI**2 * s2**2)
        return np.column_stack([l1, l2])

    def b(x, t):
        s1, c1, s2, c2 = _trig(x)
        tau = _tau(t)
        return np.column_stack([tau * s1 * c2, -tau * c1 * s2])

    def grad_b(x, t):
        s1, c1, s2, c2 = _trig(x)
        tau = _tau(t)
        out = np.empty((len(s1), 2, 2))
        out[:, 0, 0] = tau * PI * c1 * c2
        out[:, 0, 1] = -tau * PI * s1 * s2
        out[:, 1, 0] = tau * PI * s1 * s2
        out[:, 1, 1] = -tau * PI * c1 * c2
        return out

    def p(x, t):
        s1, c1, s2, c2 = _trig(x)
        return _tau(t) * c1 * c2

    def grad_p(x, t):
        s1, c1, s2, c2 = _trig(x)
        tau = _tau(t)
        return np.column_stack([-tau * PI * s1 * c2, -tau * PI * c1 * s2])

    def curl_b(x, t):
        s1, c1, s2, c2 = _trig(x)
        return 2 * PI * _tau(t) * s1 * s2

    def f(x, t):
        uu, G = u(x, t), grad_u(x, t)
        du = _dtau(t) * u_shape(x)
        conv = np.einsum("nij,nj->ni", G, uu)
        bb, s = b(x, t), curl_b(x, t)
        lorentz = np.column_stack([-s * bb[:, 1], s * bb[:, 0]])
        return du - nu * lap_u(x, t) + conv + grad_p(x, t) - mu * lorentz

    def g(x, t):
        s1, c1, s2, c2 = _trig(x)
        tau, dtau = _tau(t), _dtau(t)
        bt = np.column_stack([dtau * s1 * c2, -dtau * c1 * s2])
        curlcurl = 2 * PI**2 * b(x, t)
        uu, bb = u(x, t), b(x, t)
        Gu, Gb = grad_u(x, t), grad_b(x, t)
        # w = u x b = u1 b2 - u2 b1
        dw = np.empty((len(s1), 2))
        for j in range(2):
            dw[:, j] = (Gu[:, 0, j] * bb[:, 1] + uu[:, 0] * Gb[:, 1, j]
                        - Gu[:, 1, j] * bb[:, 0] - uu[:, 1] * Gb[:, 0, j])
        curl_w = np.column_stack([dw[:, 1], -dw[:, 0]])
        return mu * bt + curlcurl / sigma - mu * curl_w

    return ManufacturedSolution(u, grad_u, b, grad_b, p, f, g, nu, mu, sigma,
                                extra={"lap_u": lap_u, "grad_p": grad_p, "curl_b": curl_b})


def divergence_at(grad, x, t) -> np.ndarray:
    G = grad(x, t)
    return G[:, 0, 0] + G[:, 1, 1]


# ---------------------------------------------------------------------------
# finite-difference oracle for the forcings


def fd_forcings(sol: ManufacturedSolution, x, t, eps: float = 1e-3):
    """Synthesize (f, g) from the u, b, p closures with central differences only.

    One Richardson step over ``eps`` and ``eps / 2`` makes the stencils fourth order.
    """
    f1, g1 = _fd_forcings(sol, x, t, eps)
    f2, g2 = _fd_forcings(sol, x, t, eps / 2)
    return (4 * f2 - f1) / 3, (4 * g2 - g1) / 3


def _fd_forcings(sol, x, t, eps):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    ex, ey = np.array([eps, 0.0]), np.array([0.0, eps])

    def d(fun, e):
        return (fun(x + e) - fun(x - e)) / (2 * eps)

    def d2(fun, e):
        return (fun(x + e) - 2 * fun(x) + fun(x - e)) / eps**2

    U = lambda y: sol.u(y, t)
    Bf = lambda y: sol.b(y, t)
    P = lambda y: sol.p(y, t)
    uu, bb = U(x), Bf(x)
    ut = (sol.u(x, t + eps) - sol.u(x, t - eps)) / (2 * eps)
    bt = (sol.b(x, t + eps) - sol.b(x, t - eps)) / (2 * eps)
    lap = d2(U, ex) + d2(U, ey)
    conv = uu[:, [0]] * d(U, ex) + uu[:, [1]] * d(U, ey)
    gp = np.column_stack([d(P, ex), d(P, ey)])

    def curl(y):
        return ((sol.b(y + ex, t)[:, 1] - sol.b(y - ex, t)[:, 1])
                - (sol.b(y + ey, t)[:, 0] - sol.b(y - ey, t)[:, 0])) / (2 * eps)

    s = curl(x)
    f = ut - sol.nu * lap + conv + gp - sol.mu * np.column_stack([-s * bb[:, 1], s * bb[:, 0]])
    curlcurl = np.column_stack([(curl(x + ey) - curl(x - ey)) / (2 * eps),
                                -(curl(x + ex) - curl(x - ex)) / (2 * eps)])

    def w(y):
        a, c = sol.u(y, t), sol.b(y, t)
        return a[:, 0] * c[:, 1] - a[:, 1] * c[:, 0]

    curl_w = np.column_stack([(w(x + ey) - w(x - ey)) / (2 * eps), -(w(x + ex) - w(x - ex)) / (2 * eps)])
    g = sol.mu * bt + curlcurl / sol.sigma - sol.mu * curl_w
    return f, g


# ---------------------------------------------------------------------------
# errors


@dataclass
class ErrorReport:
    h: float
    level: int
    u_L2: float
    u_H1: float
    b_L2: float
    b_H1: float
    p_L2: float
    q: float
    div: float = 0.0

    NORMS = ("u_L2", "u_H1", "b_L2", "b_H1", "p_L2", "q")

    def as_dict(self) -> dict:
        return {n: getattr(self, n) for n in self.NORMS}


def _vec_vals(basis, c, B):
    m = len(basis)
    return np.stack([B @ c[:m], B @ c[m:]], axis=-1)


def compute_errors(disc, state, sol: ManufacturedSolution, t: float, q_exact: float,
                   level: int = 0, order: int | None = None) -> ErrorReport:
    """Error quantities of a discrete state against the exact solution at time t."""
    k = disc.k
    order = 2 * k + 4 if order is None else order
    mesh = disc.mesh
    sums = dict(u0=0.0, u1=0.0, b0=0.0, b1=0.0, p0=0.0)
    p_cells = []
    cache: dict = {}
    for c in range(mesh.n_cells):
        vp, mp = disc.vel_proj[c], disc.mag_proj[c]
        key = id(vp.pi_zero)
        if key not in cache:
            q = polygon_quadrature(vp.rel_vertices, order, center=np.zeros(2))
            B = MonomialBasis(k, np.zeros(2), vp.h)
            cache[key] = (q, B.eval(q.points), B.grad(q.points),
                          MonomialBasis(k - 1, np.zeros(2), vp.h).eval(q.points))
        q, Bv, Bg, Bp = cache[key]
        x = q.points + vp.center
        w = q.weights
        ud = state.u[disc.vel.cell_dofs[c]]
        bd = state.b[disc.mag.cell_dofs[c]]
        nk = Bv.shape[1]
        u0c, uNc = vp.pi_zero @ ud, vp.pi_nabla @ ud
        b0c, bNc = mp.pi_zero @ bd, mp.pi_nabla @ bd
        ue, be = sol.u(x, t), sol.b(x, t)
        Gu, Gb = sol.grad_u(x, t), sol.grad_b(x, t)
        sums["u0"] += w @ np.sum((ue - np.stack([Bv @ u0c[:nk], Bv @ u0c[nk:]], -1)) ** 2, axis=1)
        gu = np.stack([np.einsum("qjn,n->qj", Bg, uNc[:nk]), np.einsum("qjn,n->qj", Bg, uNc[nk:])], axis=1)
        sums["u1"] += w @ np.sum((Gu - gu) ** 2, axis=(1, 2))
        sums["b0"] += w @ np.sum((be - np.stack([Bv @ b0c[:nk], Bv @ b0c[nk:]], -1)) ** 2, axis=1)
        gb = np.stack([np.einsum("qjn,n->qj", Bg, bNc[:nk]), np.einsum("qjn,n->qj", Bg, bNc[nk:])], axis=1)
        bN = np.stack([Bv @ bNc[:nk], Bv @ bNc[nk:]], -1)
        sums["b1"] += w @ (np.sum((Gb - gb) ** 2, axis=(1, 2)) + np.sum((be - bN) ** 2, axis=1))
        p_cells.append((w, sol.p(x, t), Bp @ state.p[disc.pre.cell_dofs[c]]))
    area = sum(np.sum(w) for w, _, _ in p_cells)
    pmean = sum(w @ pe for w, pe, _ in p_cells) / area
    p0 = sum(w @ (pe - pmean - ph) ** 2 for w, pe, ph in p_cells)
    return ErrorReport(
        h=float(np.max(mesh.diameters())), level=level,
        u_L2=math.sqrt(sums["u0"]), u_H1=math.sqrt(sums["u1"]),
        b_L2=math.sqrt(sums["b0"]), b_H1=math.sqrt(max(sums["b1"], 0.0)),
        p_L2=math.sqrt(p0), q=abs(q_exact - state.q),
        div=float(np.sqrt(np.sum(disc.cell_divergence(state.u) ** 2))),
    )


def convergence_rates(reports: list[ErrorReport]) -> list[dict]:
    """Rates between consecutive levels; a zero error gives ``None`` (undefined)."""
    if len(reports) < 2:
        raise ValueError("convergence rates need at least two levels")
    out = []
    for a, b in zip(reports[:-1], reports[1:]):
        r = {}
        for n in ErrorReport.NORMS:
            ea, eb = getattr(a, n), getattr(b, n)
            if ea <= 0 or eb <= 0 or a.h == b.h:
                r[n] = None
            else:
                r[n] = math.log(ea / eb) / math.log(a.h / b.h)
        out.append(r)
    return out


def rate(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float | None:
    if e_coarse <= 0 or e_fine <= 0:
        return None
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


# ---------------------------------------------------------------------------
# cavity flow structure


@dataclass
class RecirculationSummary:
    centerline_y: np.ndarray
    u1_vertical: np.ndarray
    centerline_x: np.ndarray
    u2_horizontal: np.ndarray
    sign_changes_u1: int
    sign_changes_u2: int
    lid_shear: float
    interior_max_u1: float

    @property
    def single_vortex(self) -> bool:
        """Return flow under the lid and up/down flow at the walls, one cell each way."""
        lower = self.u1_vertical[self.centerline_y < 0.5]
        left = self.u2_horizontal[self.centerline_x < 0.25]
        right = self.u2_horizontal[self.centerline_x > 0.75]
        return (self.sign_changes_u1 == 1 and self.sign_changes_u2 == 1
                and np.mean(lower) < 0 and np.mean(left) > 0 and np.mean(right) < 0)

    @property
    def lid_boundary_layer(self) -> bool:
        return self.lid_shear >= 0.5 and self.interior_max_u1 < 0.5


def _sign_changes(v, tol):
    s = np.sign(np.where(np.abs(v) < tol, 0.0, v))
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


def recirculation_summary(points, velocity, n: int = 41, lid: float = 1.0) -> RecirculationSummary:
    """Centerline profiles of a cavity velocity field sampled at scattered points."""
    from scipy.interpolate import griddata

    ys = np.linspace(0.0, 1.0, n)
    xs = np.linspace(0.0, 1.0, n)
    vert = np.column_stack([np.full(n, 0.5), ys])
    horiz = np.column_stack([xs, np.full(n, 0.5)])
    u1 = griddata(points, velocity[:, 0], vert, method="linear")
    u2 = griddata(points, velocity[:, 1], horiz, method="linear")
    inner = (ys > 0.0) & (ys < 1.0)
    tol = 1e-3 * lid
    near_lid = np.interp(1.0 - 1.0 / (n - 1), ys, u1)
    return RecirculationSummary(ys, u1, xs, u2, _sign_changes(u1[inner], tol),
                                _sign_changes(u2[(xs > 0) & (xs < 1)], tol), float(near_lid),
                                float(np.max(np.abs(u1[ys <= 0.75]))))
