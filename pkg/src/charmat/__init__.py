"""Linear boundary-value problems in Sobolev spaces via the characteristic matrix."""

from .boundary import CanonicalBoundary, MultipointBoundary, PointTerm, canonical, two_point
from .exprs import MatrixExpression, parse
from .fredholm import (
    BvpSolution,
    CharacteristicMatrix,
    Numerics,
    ProblemSpec,
    SolvabilityReport,
    analyze,
    characteristic_matrix,
    solve,
)
from .funcspace import ContractError, Grid, SampledFunction, SobolevIndex, lp_norm, sobolev_norm, uniform_grid
from .kernels import BACKEND
from .oracle import oracle_defect, oracle_solve
from .paramlab import Family, estimate_gamma_bounds, sweep
from .problemfile import build_problem, load, load_fixture

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BvpSolution",
    "CanonicalBoundary",
    "CharacteristicMatrix",
    "ContractError",
    "Family",
    "Grid",
    "MatrixExpression",
    "MultipointBoundary",
    "Numerics",
    "PointTerm",
    "ProblemSpec",
    "SampledFunction",
    "SobolevIndex",
    "SolvabilityReport",
    "analyze",
    "build_problem",
    "canonical",
    "characteristic_matrix",
    "estimate_gamma_bounds",
    "load",
    "load_fixture",
    "lp_norm",
    "oracle_defect",
    "oracle_solve",
    "parse",
    "sobolev_norm",
    "solve",
    "sweep",
    "two_point",
    "uniform_grid",
]
