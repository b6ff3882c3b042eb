"""Scaled monomials, exact polynomial calculus and quadrature on polygons.

Scaled monomials on a cell E are ``m_a(x) = ((x - x_E) / h_E) ** a`` for
multi-indices ``a = (a1, a2)``, ordered by total degree and then by
decreasing power of the first coordinate::

    (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...

Because the ordering is graded, the coefficient vector of a degree-d
polynomial is a prefix of the coefficient vector in any higher degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as npoly


class DegreeOverflowError(ValueError):
    """Result of a polynomial operation does not fit in the target degree."""


class TriangulationError(ValueError):
    pass


def dim_poly(k: int) -> int:
    """Dimension of P_k in two variables (0 for k < 0)."""
    return (k + 1) * (k + 2) // 2 if k >= 0 else 0


@lru_cache(maxsize=None)
def exponents(k: int) -> tuple[tuple[int, int], ...]:
    return tuple((d - j, j) for d in range(k + 1) for j in range(d + 1))


@lru_cache(maxsize=None)
def degrees(k: int) -> np.ndarray:
    return np.array([a + b for a, b in exponents(k)], dtype=int)


def monomial_index(a: int, b: int) -> int:
    d = a + b
    return dim_poly(d - 1) + b


class MonomialBasis:
    """Scaled monomials of degree <= ``degree`` centred at ``center``."""

    def __init__(self, degree: int, center=(0.0, 0.0), h: float = 1.0):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        self.degree = degree
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.exps = np.array(exponents(degree), dtype=int)

    def __len__(self) -> int:
        return len(self.exps)

    def scaled(self, pts) -> tuple[np.ndarray, np.ndarray]:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        return (p[:, 0] - self.center[0]) / self.h, (p[:, 1] - self.center[1]) / self.h

    def _powers(self, s):
        return s[:, None] ** np.arange(self.degree + 1)[None, :]

    def eval(self, pts) -> np.ndarray:
        """Values, shape (npts, n)."""
        xi, eta = self.scaled(pts)
        px, py = self._powers(xi), self._powers(eta)
        return px[:, self.exps[:, 0]] * py[:, self.exps[:, 1]]

    def grad(self, pts) -> np.ndarray:
        """Gradients, shape (npts, 2, n)."""
        xi, eta = self.scaled(pts)
        px, py = self._powers(xi), self._powers(eta)
        a, b = self.exps[:, 0], self.exps[:, 1]
        gx = a * px[:, np.maximum(a - 1, 0)] * py[:, b] / self.h
        gy = b * px[:, a] * py[:, np.maximum(b - 1, 0)] / self.h
        return np.stack([gx, gy], axis=1)

    def __call__(self, coeffs, pts) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)
        return self.eval(pts) @ c[: len(self)] if c.ndim == 1 else self.eval(pts) @ c.T

    # exact calculus on coefficient vectors -------------------------------

    @property
    def dx(self) -> np.ndarray:
        return _derivative_matrix(self.degree, 0) / self.h

    @property
    def dy(self) -> np.ndarray:
        return _derivative_matrix(self.degree, 1) / self.h

    @property
    def laplacian(self) -> np.ndarray:
        return self.dx @ self.dx + self.dy @ self.dy


@lru_cache(maxsize=None)
def _derivative_matrix(k: int, axis: int) -> np.ndarray:
    n = dim_poly(k)
    mat = np.zeros((n, n))
    for j, (a, b) in enumerate(exponents(k)):
        e = (a, b)[axis]
        if e == 0:
            continue
        tgt = (a - 1, b) if axis == 0 else (a, b - 1)
        mat[monomial_index(*tgt), j] = e
    return mat


def _pad(c, n):
    c = np.asarray(c, dtype=float)
    if len(c) > n:
        if np.any(c[n:] != 0.0):
            raise DegreeOverflowError("coefficients exceed the basis degree")
        return c[:n]
    out = np.zeros(n)
    out[: len(c)] = c
    return out


def gradient(basis: MonomialBasis, c) -> np.ndarray:
    """Coefficients (2, n) of the gradient of scalar polynomial ``c``."""
    c = _pad(c, len(basis))
    return np.stack([basis.dx @ c, basis.dy @ c])


def divergence(basis: MonomialBasis, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return basis.dx @ _pad(v[0], len(basis)) + basis.dy @ _pad(v[1], len(basis))


def curl_vector(basis: MonomialBasis, v) -> np.ndarray:
    """Scalar curl d1 v2 - d2 v1."""
    v = np.asarray(v, dtype=float)
    return basis.dx @ _pad(v[1], len(basis)) - basis.dy @ _pad(v[0], len(basis))


def curl_scalar(basis: MonomialBasis, c) -> np.ndarray:
    """Vector curl (d2 c, -d1 c)."""
    c = _pad(c, len(basis))
    return np.stack([basis.dy @ c, -basis.dx @ c])


def times_xperp(basis: MonomialBasis, c) -> np.ndarray:
    """Coefficients of ``x_perp * c`` with ``x_perp = (-eta, xi)`` in scaled coordinates.

    Raises DegreeOverflowError if the product leaves ``basis``.
    """
    c = _pad(c, len(basis))
    out = np.zeros((2, len(basis)))
    for j, (a, b) in enumerate(basis.exps):
        if c[j] == 0.0:
            continue
        if a + b + 1 > basis.degree:
            raise DegreeOverflowError("x_perp product exceeds the basis degree")
        out[0, monomial_index(a, b + 1)] -= c[j]
        out[1, monomial_index(a + 1, b)] += c[j]
    return out


def cross_sv(s, d) -> np.ndarray:
    """(scalar s) x (vector d) = s * (-d2, d1), pointwise on trailing axis -1 of d."""
    d = np.asarray(d)
    return np.stack([-s * d[..., 1], s * d[..., 0]], axis=-1)


def cross_vv(b, u) -> np.ndarray:
    """Scalar cross product b1 u2 - b2 u1."""
    b, u = np.asarray(b), np.asarray(u)
    return b[..., 0] * u[..., 1] - b[..., 1] * u[..., 0]


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class Quadrature:
    points: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> np.ndarray:
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def _gauss_legendre_01(n: int):
    x, w = legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_lobatto(m: int) -> np.ndarray:
    """Gauss-Lobatto nodes on [0, 1] (m >= 2 points, endpoints included)."""
    if m < 2:
        raise ValueError("Gauss-Lobatto rule needs at least 2 points")
    coef = np.zeros(m)
    coef[-1] = 1.0
    inner = np.sort(legendre.legroots(legendre.legder(coef))) if m > 2 else np.array([])
    nodes = np.concatenate([[-1.0], inner, [1.0]])
    return 0.5 * (nodes + 1.0)


def edge_quadrature(a, b, order: int) -> Quadrature:
    """Gauss-Legendre rule on segment [a, b], exact for degree ``order``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    t, w = _gauss_legendre_01(max(order, 0) // 2 + 1)
    length = float(np.linalg.norm(b - a))
    return Quadrature(a[None, :] + t[:, None] * (b - a)[None, :], w * length)


@lru_cache(maxsize=None)
def _collapsed_square_rule(order: int):
    # u carries the collapse Jacobian, so it needs one extra degree
    nu = -(-(order + 2) // 2)
    nv = max(-(-(order + 1) // 2), 1)
    u, wu = _gauss_legendre_01(nu)
    v, wv = _gauss_legendre_01(nv)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu * u, wv)
    return U.ravel(), V.ravel(), W.ravel()


def triangle_quadrature(A, B, C, order: int) -> Quadrature:
    """Collapsed Gauss rule on a triangle, exact for degree ``order``."""
    A, B, C = (np.asarray(p, dtype=float) for p in (A, B, C))
    u, v, w = _collapsed_square_rule(max(order, 0))
    pts = A[None, :] + u[:, None] * ((B - A)[None, :] + v[:, None] * (C - B)[None, :])
    area2 = (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0])
    return Quadrature(pts, w * area2)


def signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def is_simple(verts: np.ndarray) -> bool:
    n = len(verts)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                return False
    return True


def _tri_area2(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def ear_clip(verts: np.ndarray) -> list[tuple[int, int, int]]:
    """Ear-clipping triangulation of a simple ccw polygon."""
    idx = list(range(len(verts)))
    tris = []
    scale = np.max(np.abs(verts - verts.mean(axis=0))) ** 2
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(verts) ** 2:
            raise TriangulationError("ear clipping failed; polygon is not simple")
        m = len(idx)
        for i in range(m):
            a, b, c = idx[i - 1], idx[i], idx[(i + 1) % m]
            if _tri_area2(verts[a], verts[b], verts[c]) <= 1e-14 * scale:
                continue
            inside = False
            for j in idx:
                if j in (a, b, c):
                    continue
                p = verts[j]
                if (_tri_area2(verts[a], verts[b], p) >= 0 and _tri_area2(verts[b], verts[c], p) >= 0
                        and _tri_area2(verts[c], verts[a], p) >= 0):
                    inside = True
                    break
            if not inside:
                tris.append((a, b, c))
                idx.pop(i)
                break
        else:
            raise TriangulationError("no ear found; polygon is not simple")
    tris.append(tuple(idx))
    return tris


def triangulate(verts, center=None) -> list[np.ndarray]:
    """Triangles (3, 2) covering the polygon.

    Fans from ``center`` when every fan triangle is positively oriented,
    otherwise falls back to ear clipping.
    """
    verts = np.asarray(verts, dtype=float)
    if signed_area(verts) <= 0.0 or not is_simple(verts):
        raise TriangulationError("polygon is not simple and counterclockwise")
    if center is not None:
        c = np.asarray(center, dtype=float)
        n = len(verts)
        tris = [np.array([c, verts[i], verts[(i + 1) % n]]) for i in range(n)]
        if all(_tri_area2(*t) > 0 for t in tris):
            return tris
    return [verts[list(t)] for t in ear_clip(verts)]


def polygon_quadrature(verts, order: int, center=None) -> Quadrature:
    """Quadrature on a polygon, exact for polynomials of degree ``order``."""
    tris = triangulate(verts, center)
    rules = [triangle_quadrature(t[0], t[1], t[2], order) for t in tris]
    return Quadrature(np.vstack([r.points for r in rules]), np.concatenate([r.weights for r in rules]))


def monomial_integral(verts, a: int, b: int, center=(0.0, 0.0), h: float = 1.0) -> float:
    """Closed-form integral of the scaled monomial xi^a eta^b over a polygon.

    Uses Euler's identity div(x f) = (2 + deg f) f for homogeneous f and the
    divergence theorem, with exact edge integrals by polynomial expansion.
    Independent of any area quadrature.
    """
    v = (np.asarray(verts, dtype=float) - np.asarray(center, dtype=float)) / h
    total = 0.0
    n = len(v)
    for i in range(n):
        p, q = v[i], v[(i + 1) % n]
        d = q - p
        # outward normal times length: (dy, -dx); x.n is constant along the edge
        xn = p[0] * d[1] - p[1] * d[0]
        poly = npoly.polymul(npoly.polypow([p[0], d[0]], a), npoly.polypow([p[1], d[1]], b))
        integ = float(np.sum(poly / np.arange(1, len(poly) + 1)))
        total += xn * integ
    return total * h * h / (a + b + 2)
