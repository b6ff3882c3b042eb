"""Problem descriptions: initial data, forcings and boundary conditions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import ManufacturedSolution, example1_solution
from .system import lid_velocity

NORMAL = "normal"
TANGENTIAL = "tangential"
WALL = "wall"
MAGNETIC_BCS = (NORMAL, TANGENTIAL, WALL)


@dataclass
class Problem:
    """Everything the time integrator needs besides the mesh and scheme parameters.

    ``f`` and ``g`` take (points, t); ``None`` means zero forcing. ``velocity_bc``
    takes (points, t) and gives the prescribed boundary velocity (zero if None).
    ``magnetic_bc`` is ``"normal"`` (b . n = 0), ``"tangential"`` (n x b = n x (1, 0))
    or ``"wall"`` (tangential data plus zero field on the side walls).
    """

    name: str
    u0: Callable
    b0: Callable
    f: Callable | None = None
    g: Callable | None = None
    velocity_bc: Callable | None = None
    magnetic_bc: str = NORMAL
    solution: ManufacturedSolution | None = None
    nu: float = 1.0
    mu: float = 1.0
    sigma: float = 1.0


def example1_problem(nu: float = 1.0, mu: float = 1.0, sigma: float = 1.0) -> Problem:
    sol = example1_solution(nu, mu, sigma)
    return Problem("example1", lambda x: sol.u(x, 0.0), lambda x: sol.b(x, 0.0), sol.f, sol.g,
                   None, NORMAL, sol, nu, mu, sigma)


def decay_problem(nu: float = 1.0, mu: float = 1.0, sigma: float = 1.0, amplitude: float = 1.0) -> Problem:
    """Unforced run from the smooth fields of ``example1`` at t = 0."""
    sol = example1_solution(nu, mu, sigma)
    return Problem("decay", lambda x: amplitude * sol.u(x, 0.0), lambda x: amplitude * sol.b(x, 0.0),
                   None, None, None, NORMAL, None, nu, mu, sigma)


def zero_problem(nu: float = 1.0, mu: float = 1.0, sigma: float = 1.0) -> Problem:
    zero = lambda x: np.zeros((len(np.atleast_2d(x)), 2))
    return Problem("zero", zero, zero, None, None, None, NORMAL, None, nu, mu, sigma)


def cavity_problem(nu: float = 0.01, mu: float = 1.0, sigma: float = 100.0, lid: float = 1.0,
                   magnetic_bc: str = TANGENTIAL) -> Problem:
    """Lid-driven cavity with tangential magnetic data n x b = n x (1, 0)."""
    if magnetic_bc not in (TANGENTIAL, WALL):
        raise ValueError(f"cavity magnetic_bc must be tangential or wall, got {magnetic_bc!r}")
    g = lid_velocity(lid)
    zero = lambda x: np.zeros((len(np.atleast_2d(x)), 2))
    ones = lambda x: np.tile([1.0, 0.0], (len(np.atleast_2d(x)), 1))
    return Problem("cavity", zero, ones, None, None, lambda x, t: g(x), magnetic_bc, None, nu, mu, sigma)


PROBLEMS = {"example1": example1_problem, "cavity": cavity_problem, "decay": decay_problem}
