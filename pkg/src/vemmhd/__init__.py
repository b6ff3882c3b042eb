"""Divergence-free virtual elements with a BDF2 IMEX SAV scheme for 2D incompressible MHD."""

from .analysis import ErrorReport, compute_errors, convergence_rates, example1_solution
from .forms import Coefficients
from .mesh import FAMILIES, PolygonalMesh, build_mesh
from .problems import cavity_problem, decay_problem, example1_problem
from .sav import Integrator, RunResult, SavState, SchemeParams, run
from .system import Discretization, discretize

__version__ = "0.1.0"

__all__ = [
    "Coefficients", "Discretization", "ErrorReport", "FAMILIES", "Integrator", "PolygonalMesh", "RunResult",
    "SavState", "SchemeParams", "build_mesh", "cavity_problem", "compute_errors", "convergence_rates",
    "decay_problem", "discretize", "example1_problem", "example1_solution", "run",
]
