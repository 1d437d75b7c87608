"""Initial-value solves of y' + A(t) y = f(t) with classical fixed-step RK4.

Each grid cell is split into ``substeps`` RK4 steps. The stage values of A
and f are taken from the ``stages`` arrays sampled on
``grid.refine(2 * substeps)`` (every step needs its start, midpoint and end);
without them layer 0 of the sampled coefficients is interpolated by cubic
Hermite/spline interpolation.

Derivative layers 1..n are never obtained by differencing. They follow from
differentiating the equation:

    y^(k+1) = f^(k) - sum_{i=0}^{k} C(k, i) A^(i) y^(k-i)
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from . import kernels
from .funcspace import ContractError, Grid, SampledFunction

__all__ = [
    "FundamentalMatrix",
    "IntegrationError",
    "IvpConfig",
    "SelfCheck",
    "derivative_stack",
    "fundamental_and_particular",
    "fundamental_matrix",
    "particular_solution",
    "self_check",
    "solve_ivp",
    "stage_grid",
]


class IntegrationError(ArithmeticError):
    """Non-finite values appeared while stepping."""

    def __init__(self, message, node=None, t=None):
        self.node = node
        self.t = t
        super().__init__(message)


@dataclass(frozen=True)
class IvpConfig:
    substeps: int = 2
    tolerance: float = 1e-10
    order: int = 4  # classical RK4; the only method provided

    def __post_init__(self):
        if self.substeps < 1:
            raise ContractError("substeps_per_cell must be >= 1")
        if not self.tolerance > 0:
            raise ContractError("tolerance must be positive")
        if self.order != 4:
            raise ContractError("only the classical 4th-order method is available")


@dataclass(frozen=True)
class FundamentalMatrix:
    Y: SampledFunction
    config: IvpConfig

    def at(self, i: int) -> np.ndarray:
        return self.Y.layers[0, i]


def stage_grid(grid: Grid, config: IvpConfig) -> Grid:
    """Grid carrying every RK4 stage time for `grid` at `config`."""
    return grid.refine(2 * config.substeps)


def _as_vector_fn(f: SampledFunction | None, m: int, grid: Grid, order: int) -> SampledFunction:
    if f is None:
        return SampledFunction.zeros(grid, (m,), order)
    if f.shape == (m, 1):
        return SampledFunction(f.grid, f.layers[..., 0])
    if f.shape != (m,):
        raise ContractError(f"right-hand side must have {m} components, has shape {f.shape}")
    return f


def _check_matrix(A: SampledFunction) -> int:
    if len(A.shape) != 2 or A.shape[0] != A.shape[1]:
        raise ContractError(f"A must be square matrix-valued, has shape {A.shape}")
    return A.shape[0]


def _interpolate_stages(g: SampledFunction, fine: Grid) -> np.ndarray:
    x = g.grid.nodes
    if g.grid.size < 2:
        raise ContractError("need at least two nodes to interpolate")
    if g.order >= 1:
        spline = CubicHermiteSpline(x, g.layers[0], g.layers[1], axis=0)
    else:
        spline = CubicSpline(x, g.layers[0], axis=0)
    return spline(fine.nodes)


def _stage_values(A, f, config, stages):
    grid = A.grid
    fine = stage_grid(grid, config)
    if stages is not None:
        A_st, f_st = (np.asarray(s, dtype=complex) for s in stages)
        if A_st.shape[0] != fine.size or f_st.shape[0] != fine.size:
            raise ContractError(
                f"stage samples must live on the refined grid ({fine.size} points), got {A_st.shape[0]}"
            )
        if f_st.ndim == 3:
            f_st = f_st[..., 0]
    else:
        A_st = _interpolate_stages(A, fine)
        f_st = _interpolate_stages(f, fine)
    return fine, np.ascontiguousarray(A_st, dtype=complex), np.ascontiguousarray(f_st, dtype=complex)


def _integrate(A, f, Y0, w, config, stages):
    """Node values (N, m, q) of the solutions with initial columns Y0."""
    fine, A_st, f_st = _stage_values(A, f, config, stages)
    out, bad = kernels.rk4_linear(
        np.ascontiguousarray(fine.nodes, dtype=float),
        A_st,
        f_st,
        np.ascontiguousarray(Y0, dtype=complex),
        np.ascontiguousarray(w, dtype=complex),
    )
    out = np.asarray(out)
    if bad >= 0:
        node = bad // config.substeps + 1
        t = float(A.grid.nodes[min(node, A.grid.size - 1)])
        raise IntegrationError(f"integration diverged in the cell ending at node {node} (t={t!r})", node, t)
    return out[:: config.substeps]


def derivative_stack(
    y0: np.ndarray,
    A: SampledFunction,
    f: SampledFunction | None,
    n: int,
) -> SampledFunction:
    """Build layers 0..n from node values `y0` via the differentiated equation.

    `y0` has shape ``(N, m)`` or ``(N, m, q)`` (q solution columns). `f` is
    ignored (treated as zero) when None, which gives homogeneous solutions.
    """
    if n < 0:
        raise ContractError("n must be >= 0")
    m = _check_matrix(A)
    y0 = np.asarray(y0, dtype=complex)
    matrix = y0.ndim == 3
    Ycur = y0 if matrix else y0[..., None]
    if n >= 1 and A.order < n - 1:
        raise ContractError(f"A needs derivative layers up to {n - 1}, has {A.order}")
    if f is not None:
        f = _as_vector_fn(f, m, A.grid, 0)
        if n >= 1 and f.order < n - 1:
            raise ContractError(f"f needs derivative layers up to {n - 1}, has {f.order}")
    layers = [Ycur]
    for k in range(n):
        nxt = np.zeros_like(Ycur)
        if f is not None:
            nxt = nxt + f.layers[k][..., None]
        for i in range(k + 1):
            nxt = nxt - comb(k, i) * (A.layers[i] @ layers[k - i])
        layers.append(nxt)
    stack = np.stack(layers)
    if not matrix:
        stack = stack[..., 0]
    return SampledFunction(A.grid, stack)


def _default_n(A, n):
    return A.order + 1 if n is None else n


def solve_ivp(
    A: SampledFunction,
    f: SampledFunction | None,
    y0,
    config: IvpConfig = IvpConfig(),
    n: int | None = None,
    stages=None,
) -> SampledFunction:
    """Solve y' = f - A y, y(a) = y0, returning layers 0..n on A's grid.

    n defaults to ``A.order + 1`` (A in W^{n-1} gives y in W^n).
    """
    m = _check_matrix(A)
    n = _default_n(A, n)
    y0 = np.asarray(y0, dtype=complex).reshape(-1)
    if y0.size != m:
        raise ContractError(f"initial value needs {m} components, got {y0.size}")
    f = _as_vector_fn(f, m, A.grid, max(n - 1, 0))
    vals = _integrate(A, f, y0[:, None], np.ones(1), config, stages)[..., 0]
    return derivative_stack(vals, A, f, n)


def fundamental_and_particular(
    A: SampledFunction,
    f: SampledFunction | None,
    config: IvpConfig = IvpConfig(),
    n: int | None = None,
    stages=None,
) -> tuple[FundamentalMatrix, SampledFunction]:
    """Y (Y(a) = I) and the particular solution with y_p(a) = 0, in one sweep."""
    m = _check_matrix(A)
    n = _default_n(A, n)
    f = _as_vector_fn(f, m, A.grid, max(n - 1, 0))
    Y0 = np.hstack([np.eye(m), np.zeros((m, 1))])
    w = np.r_[np.zeros(m), 1.0]
    vals = _integrate(A, f, Y0, w, config, stages)
    vals[0] = Y0
    Y = derivative_stack(vals[..., :m], A, None, n)
    yp = derivative_stack(vals[..., m], A, f, n)
    return FundamentalMatrix(Y, config), yp


def fundamental_matrix(A: SampledFunction, config: IvpConfig = IvpConfig(), n: int | None = None, stages=None) -> FundamentalMatrix:
    m = _check_matrix(A)
    n = _default_n(A, n)
    if stages is not None:
        stages = (stages[0], np.zeros((np.shape(stages[0])[0], m), dtype=complex))
    vals = _integrate(A, SampledFunction.zeros(A.grid, (m,), 0), np.eye(m), np.zeros(m), config, stages)
    vals[0] = np.eye(m)
    return FundamentalMatrix(derivative_stack(vals, A, None, n), config)


def particular_solution(
    A: SampledFunction,
    f: SampledFunction | None,
    config: IvpConfig = IvpConfig(),
    n: int | None = None,
    stages=None,
) -> SampledFunction:
    return solve_ivp(A, f, np.zeros(_check_matrix(A)), config, n, stages)


@dataclass(frozen=True)
class SelfCheck:
    change: float  # |y_s(b) - y_2s(b)|
    change_halved: float  # |y_2s(b) - y_4s(b)|
    ratio: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.change_halved < 16 * self.tolerance


def self_check(coefficients, grid: Grid, y0, config: IvpConfig = IvpConfig()) -> SelfCheck:
    """Step-doubling estimate of the integration error at b.

    `coefficients(t)` returns ``(A(t), f(t))`` for an array of times with
    shapes ``t.shape + (m, m)`` and ``t.shape + (m,)``. The state at b is
    computed with s, 2s and 4s substeps; for a 4th-order method the ratio of
    successive changes approaches 16.
    """
    y0 = np.asarray(y0, dtype=complex).reshape(-1)
    ends = []
    for factor in (1, 2, 4):
        cfg = IvpConfig(config.substeps * factor, config.tolerance)
        fine = stage_grid(grid, cfg)
        A_st, f_st = (np.asarray(v, dtype=complex) for v in coefficients(fine.nodes))
        step = 2 * cfg.substeps
        A = SampledFunction(grid, A_st[::step][None])
        f = SampledFunction(grid, f_st[::step][None])
        y = solve_ivp(A, f, y0, cfg, n=0, stages=(A_st, f_st))
        ends.append(y.layers[0, -1])
    d1 = float(np.linalg.norm(ends[0] - ends[1]))
    d2 = float(np.linalg.norm(ends[1] - ends[2]))
    ratio = d1 / d2 if d2 > 0 else float("inf")
    return SelfCheck(d1, d2, ratio, config.tolerance)
