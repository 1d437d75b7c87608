"""Reference solver by global collocation with the midpoint (box) scheme.

Unknowns are the node values y_0..y_{N-1}. Each cell contributes the m rows

    (y_{i+1} - y_i) / h_i + A(t_{i+1/2}) (y_i + y_{i+1}) / 2 = f(t_{i+1/2})

and the boundary operator contributes r rows. Derivatives entering B are
rewritten pointwise through the equation, y^(l)(t_i) = P_l(t_i) y_i + q_l(t_i),
and point values off the grid through interpolation weights. The scheme is
second order and shares nothing with the shooting solver except the
boundary-operator data, so agreement between the two is a real check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import boundary as bnd
from .exprs import sample_matrix
from .fredholm import ProblemSpec
from .funcspace import ContractError, SampledFunction, uniform_grid
from .integrator import derivative_stack

__all__ = ["CollocationSystem", "DefectCount", "OracleDefect", "assemble", "oracle_defect", "oracle_solve"]


class OracleDefect(ArithmeticError):
    """The collocation system is singular to tolerance; no unique values."""

    def __init__(self, message, sigma_min=None, threshold=None):
        self.sigma_min = sigma_min
        self.threshold = threshold
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class CollocationSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    m: int
    nodes: int
    r: int

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]


def _pointwise_maps(ps: ProblemSpec, grid):
    """P_l, q_l at every node with y^(l) = P_l y + q_l, l = 0..n."""
    A = sample_matrix(ps.A, grid, ps.eps, ps.n - 1)
    F = sample_matrix(ps.f, grid, ps.eps, ps.n - 1)
    f = SampledFunction(grid, F.layers[..., 0])
    eye = np.broadcast_to(np.eye(ps.m, dtype=complex), (grid.size, ps.m, ps.m))
    P = derivative_stack(eye, A, None, ps.n).layers
    q = derivative_stack(np.zeros((grid.size, ps.m)), A, f, ps.n).layers
    return P, q, A, f


def assemble(ps: ProblemSpec, nodes: int | None = None) -> CollocationSystem:
    N = nodes or ps.numerics.nodes
    grid = uniform_grid(ps.a, ps.b, N)
    m = ps.m
    t = grid.nodes
    h = np.diff(t)
    mid = 0.5 * (t[:-1] + t[1:])
    A_mid = ps.A.evaluate(mid, ps.eps)
    f_mid = ps.f.evaluate(mid, ps.eps)[..., 0]

    eye = np.eye(m)
    left = -eye[None] / h[:, None, None] + 0.5 * A_mid
    right = eye[None] / h[:, None, None] + 0.5 * A_mid
    # block (i, i) = left_i, block (i, i+1) = right_i
    cells = N - 1
    rr, cc = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    row_idx = (np.arange(cells)[:, None, None] * m + rr[None]).ravel()
    col_l = (np.arange(cells)[:, None, None] * m + cc[None]).ravel()
    col_r = col_l + m
    rows = [row_idx, row_idx]
    cols = [col_l, col_r]
    vals = [left.ravel(), right.ravel()]

    P, q, _, _ = _pointwise_maps(ps, grid)
    W = bnd.layer_weights(ps.B, grid)  # (n+1, N, r, m)
    Bblocks = np.einsum("lirm,limk->irk", W, P)  # (N, r, m)
    offset = np.einsum("lirm,lim->r", W, q)
    nz = np.flatnonzero(np.any(Bblocks != 0, axis=(1, 2)))
    br, bc = np.meshgrid(np.arange(ps.r), np.arange(m), indexing="ij")
    for i in nz:
        rows.append((cells * m + br).ravel())
        cols.append((i * m + bc).ravel())
        vals.append(Bblocks[i].ravel())
    matrix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(cells * m + ps.r, N * m),
        dtype=complex,
    )
    rhs = np.concatenate([f_mid.ravel(), ps.c - offset])
    return CollocationSystem(matrix, rhs, m, N, ps.r)


def _discrete_characteristic(ps: ProblemSpec, system: CollocationSystem) -> np.ndarray:
    """Boundary rows applied to the discrete fundamental solutions (y_0 = e_j)."""
    m, N = system.m, system.nodes
    M = system.matrix.tocsc()
    ode = M[: (N - 1) * m]
    # fix y_0 = e_j and solve the ODE block for the remaining nodes
    rest = ode[:, m:]
    first = ode[:, :m].toarray()
    lu = spla.splu(rest.tocsc())
    cols = []
    for j in range(m):
        tail = lu.solve(-first[:, j])
        cols.append(np.concatenate([np.eye(m)[j], tail]))
    Yd = np.stack(cols, axis=1)
    return (M[(N - 1) * m :] @ Yd)


def oracle_solve(ps: ProblemSpec, nodes: int | None = None) -> SampledFunction:
    """Collocation solution with derivative layers rebuilt from the equation.

    Raises OracleDefect when the discrete characteristic matrix is singular
    to the problem's rank tolerance, and ContractError unless r = m.
    """
    if ps.r != ps.m:
        raise ContractError("the collocation oracle handles only r = m")
    system = assemble(ps, nodes)
    Md = _discrete_characteristic(ps, system)
    s = np.linalg.svd(Md, compute_uv=False)
    thr = max(ps.numerics.rank_tol * s[0], ps.numerics.abs_floor) if s.size else ps.numerics.abs_floor
    if s.size == 0 or s[-1] <= thr:
        raise OracleDefect(
            f"collocation system is singular to tolerance (sigma_min={s[-1] if s.size else 0.0:.3e})",
            float(s[-1]) if s.size else 0.0,
            thr,
        )
    values = spla.spsolve(system.matrix.tocsc(), system.rhs)
    if not np.all(np.isfinite(values)):
        raise OracleDefect("collocation solve produced non-finite values")
    grid = uniform_grid(ps.a, ps.b, system.nodes)
    y0 = values.reshape(system.nodes, ps.m)
    _, _, A, f = _pointwise_maps(ps, grid)
    return derivative_stack(y0, A, f, ps.n)


@dataclass(frozen=True)
class DefectCount:
    rank: int
    dim_ker: int
    dim_coker: int
    singular_values: np.ndarray


def oracle_defect(ps: ProblemSpec, nodes: int = 65, rank_tol: float | None = None) -> DefectCount:
    """Brute-force kernel/cokernel count from a dense SVD of the whole system.

    Kernel dimension = unknowns - rank (independent discrete homogeneous
    solutions meeting the boundary rows); cokernel = rows - rank.
    """
    system = assemble(ps, nodes)
    dense = system.matrix.toarray()
    s = np.linalg.svd(dense, compute_uv=False)
    tol = ps.numerics.rank_tol if rank_tol is None else rank_tol
    rank = int(np.sum(s > tol * s[0]))
    return DefectCount(rank, dense.shape[1] - rank, dense.shape[0] - rank, s)
