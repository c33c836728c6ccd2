"""Pseudospectral simulation of 2D nematic liquid crystal flow on the unit torus.

The director d = (sin theta, cos theta) is carried by its angle theta with
integer winding, coupled to an incompressible velocity through Leslie and
Ericksen stresses, with a uniform field along x1.
"""

from .director import AngleField, angle_to_director, director_to_angle
from .dynamics import IMEXStepper, SimState, diagnostics, run
from .material import MaterialParams, derive_params
from .presets import make_initial
from .spectral import Grid
from .steady import SteadyProblem, SteadySolution, lambda2, solve_gradient_flow, solve_newton

__version__ = "0.1.0"

__all__ = [
    "AngleField",
    "Grid",
    "IMEXStepper",
    "MaterialParams",
    "SimState",
    "SteadyProblem",
    "SteadySolution",
    "angle_to_director",
    "derive_params",
    "diagnostics",
    "director_to_angle",
    "lambda2",
    "make_initial",
    "run",
    "solve_gradient_flow",
    "solve_newton",
]
