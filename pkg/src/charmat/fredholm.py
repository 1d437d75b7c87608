"""Characteristic matrix, solvability analysis and the superposition solver.

For the problem ``y' + A y = f``, ``B y = c`` with fundamental matrix Y
(Y(a) = I), every solution is ``y = y_p + Y xi`` with y_p(a) = 0. The
boundary condition then reduces to the finite system ``M xi = c - B y_p``
where column j of the ``r x m`` matrix M is B applied to column j of Y.
Rank defects of M are exactly the kernel and cokernel defects of the
boundary-value problem, and the index is always m - r.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg

from . import boundary as bnd
from .exprs import MatrixExpression, sample_matrix
from .funcspace import ContractError, Grid, SampledFunction, SobolevIndex, parse_p, uniform_grid
from .integrator import FundamentalMatrix, IvpConfig, fundamental_and_particular, stage_grid

__all__ = [
    "BvpSolution",
    "CharacteristicMatrix",
    "Numerics",
    "ProblemSpec",
    "SolvabilityReport",
    "analyze",
    "analyze_matrix",
    "characteristic_matrix",
    "solve",
    "verify_solution",
]


@dataclass(frozen=True)
class Numerics:
    nodes: int = 1025
    substeps: int = 2
    rank_tol: float = 1e-8
    abs_floor: float = 1e-12
    ivp_tol: float = 1e-10

    def __post_init__(self):
        if self.nodes < 2:
            raise ContractError("need at least 2 grid nodes")
        if not self.rank_tol > 0 or not self.abs_floor > 0:
            raise ContractError("rank tolerances must be positive")

    @property
    def ivp(self) -> IvpConfig:
        return IvpConfig(self.substeps, self.ivp_tol)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """y' + A(t) y = f(t) on (a, b) with B y = c; coefficients may use eps."""

    a: float
    b: float
    m: int
    n: int
    r: int
    p: float
    A: MatrixExpression
    f: MatrixExpression
    B: bnd.BoundaryOperator
    c: np.ndarray
    eps: float = 0.0
    numerics: Numerics = field(default_factory=Numerics)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "p", parse_p(self.p))
        c = np.atleast_1d(np.asarray(self.c, dtype=complex)).reshape(-1)
        object.__setattr__(self, "c", c)
        if min(self.m, self.n, self.r) < 1:
            raise ContractError("m, n, r must all be >= 1")
        if not self.a < self.b:
            raise ContractError(f"need a < b, got [{self.a}, {self.b}]")
        if (self.A.rows, self.A.cols) != (self.m, self.m):
            raise ContractError(f"A must be {self.m}x{self.m}, got {self.A.rows}x{self.A.cols}")
        if (self.f.rows, self.f.cols) != (self.m, 1):
            raise ContractError(f"f must have {self.m} entries, got {self.f.rows}x{self.f.cols}")
        if c.size != self.r:
            raise ContractError(f"c must have {self.r} entries, got {c.size}")
        if (self.B.r, self.B.m, self.B.n) != (self.r, self.m, self.n):
            raise ContractError(
                f"boundary operator has (r, m, n) = {(self.B.r, self.B.m, self.B.n)}, "
                f"problem has {(self.r, self.m, self.n)}"
            )

    @property
    def index(self) -> SobolevIndex:
        return SobolevIndex(self.n, self.p)

    @cached_property
    def grid(self) -> Grid:
        return uniform_grid(self.a, self.b, self.numerics.nodes)

    @cached_property
    def A_sampled(self) -> SampledFunction:
        """A and its derivatives up to order n-1 on the grid."""
        return sample_matrix(self.A, self.grid, self.eps, self.n - 1)

    @cached_property
    def f_sampled(self) -> SampledFunction:
        F = sample_matrix(self.f, self.grid, self.eps, self.n - 1)
        return SampledFunction(F.grid, F.layers[..., 0])

    @cached_property
    def stages(self) -> tuple[np.ndarray, np.ndarray]:
        fine = stage_grid(self.grid, self.numerics.ivp)
        return self.A.evaluate(fine.nodes, self.eps), self.f.evaluate(fine.nodes, self.eps)[..., 0]

    @cached_property
    def _superposition(self) -> tuple[FundamentalMatrix, SampledFunction]:
        return fundamental_and_particular(
            self.A_sampled, self.f_sampled, self.numerics.ivp, self.n, self.stages
        )

    @property
    def fundamental(self) -> FundamentalMatrix:
        return self._superposition[0]

    @property
    def particular(self) -> SampledFunction:
        return self._superposition[1]

    def with_numerics(self, **changes) -> "ProblemSpec":
        return replace(self, numerics=replace(self.numerics, **changes))


@dataclass(frozen=True, eq=False)
class CharacteristicMatrix:
    M: np.ndarray
    singular_values: np.ndarray
    rank_tolerance: float
    abs_floor: float = 1e-12

    @classmethod
    def from_matrix(cls, M, rank_tol: float = 1e-8, abs_floor: float = 1e-12) -> "CharacteristicMatrix":
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
        return cls(M, s, rank_tol, abs_floor)

    @property
    def threshold(self) -> float:
        top = self.singular_values[0] if self.singular_values.size else 0.0
        return max(self.rank_tolerance * top, self.abs_floor)


@dataclass(frozen=True)
class SolvabilityReport:
    m: int
    r: int
    rank: int
    dim_ker: int
    dim_coker: int
    index: int
    invertible: bool
    sigma_min: float
    threshold: float
    singular_values: tuple

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "r": self.r,
            "rank": self.rank,
            "dim_ker": self.dim_ker,
            "dim_coker": self.dim_coker,
            "index": self.index,
            "invertible": self.invertible,
            "sigma_min": self.sigma_min,
            "rank_threshold": self.threshold,
            "singular_values": list(self.singular_values),
        }


@dataclass(frozen=True, eq=False)
class BvpSolution:
    y: SampledFunction
    xi: np.ndarray
    kernel_basis: tuple
    residual_boundary: float
    report: SolvabilityReport

    @property
    def unique(self) -> bool:
        return self.report.invertible


def characteristic_matrix(ps: ProblemSpec) -> CharacteristicMatrix:
    M = bnd.apply(ps.B, ps.fundamental.Y)
    return CharacteristicMatrix.from_matrix(M, ps.numerics.rank_tol, ps.numerics.abs_floor)


def analyze_matrix(cm: CharacteristicMatrix) -> SolvabilityReport:
    r, m = cm.M.shape
    s = cm.singular_values
    thr = cm.threshold
    rank = int(np.sum(s > thr))
    sigma_min = float(s[-1]) if s.size else 0.0
    return SolvabilityReport(
        m=m,
        r=r,
        rank=rank,
        dim_ker=m - rank,
        dim_coker=r - rank,
        index=m - r,
        invertible=bool(r == m and sigma_min > thr),
        sigma_min=sigma_min,
        threshold=float(thr),
        singular_values=tuple(float(x) for x in s),
    )


def analyze(ps) -> SolvabilityReport:
    """Solvability data from a ProblemSpec, CharacteristicMatrix or raw r x m array."""
    if isinstance(ps, ProblemSpec):
        return analyze_matrix(characteristic_matrix(ps))
    if isinstance(ps, CharacteristicMatrix):
        return analyze_matrix(ps)
    return analyze_matrix(CharacteristicMatrix.from_matrix(ps))


def _combine(Y: SampledFunction, coef: np.ndarray) -> np.ndarray:
    return Y.layers @ coef


def solve(ps: ProblemSpec) -> BvpSolution:
    """Solve by superposition; defective problems get a least-squares answer.

    Non-invertible problems return the minimum-norm least-squares xi and a
    kernel basis Y v for the right singular vectors v beyond the rank.
    """
    FM, yp = ps._superposition
    Y = FM.Y
    M = bnd.apply(ps.B, Y)
    cm = CharacteristicMatrix.from_matrix(M, ps.numerics.rank_tol, ps.numerics.abs_floor)
    report = analyze_matrix(cm)
    d = ps.c - bnd.apply(ps.B, yp)
    kernel = ()
    if report.invertible:
        Q, R, piv = scipy.linalg.qr(M, pivoting=True)
        z = scipy.linalg.solve_triangular(R, Q.conj().T @ d)
        xi = np.empty_like(z)
        xi[piv] = z
    else:
        U, s, Vh = np.linalg.svd(M)
        rank = report.rank
        inv = np.zeros_like(s)
        inv[:rank] = 1.0 / s[:rank]
        xi = Vh[: s.size].conj().T @ (inv * (U[:, : s.size].conj().T @ d))
        null = Vh[rank:].conj()
        kernel = tuple(SampledFunction(Y.grid, _combine(Y, v)) for v in null)
    residual = float(np.linalg.norm(M @ xi - d))
    y = SampledFunction(Y.grid, yp.layers + _combine(Y, xi))
    return BvpSolution(y, xi, kernel, residual, report)


def verify_solution(ps: ProblemSpec, sol: BvpSolution | SampledFunction) -> tuple[float, float]:
    """(max node |y' + A y - f|, |B y - c|) using layer 1 as y'."""
    y = sol.y if isinstance(sol, BvpSolution) else sol
    if y.shape != (ps.m,) or y.order < max(1, ps.n):
        raise ContractError("solution does not match the problem's shape or derivative order")
    A0 = ps.A_sampled.layers[0]
    f0 = ps.f_sampled.layers[0]
    res = y.layers[1] + np.einsum("nij,nj->ni", A0, y.layers[0]) - f0
    ode = float(np.max(np.linalg.norm(res, axis=1)))
    bres = float(np.linalg.norm(bnd.apply(ps.B, y) - ps.c))
    return ode, bres
