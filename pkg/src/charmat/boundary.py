"""Boundary operators B: (W_p^n)^m -> C^r in two concrete forms.

Canonical form::

    B y = sum_{k=0}^{n-1} alpha_k y^(k)(a) + int_a^b Phi(t) y^(n)(t) dt

Multipoint form::

    B y = sum_j sum_k sum_{l=0}^{n} beta_{j,k}^(l) y^(l)(t_{j,k})

Group j = 0 holds points without a common limit; groups j >= 1 cluster
around ``limit_points[j-1]``. The grouping only matters to the parameter
checks in ``paramlab``; application is a flat sum. Every beta matrix is
``r x m`` where r is the number of scalar conditions.

Points off the grid are evaluated with 4-point cubic Lagrange interpolation
of the stored layer values. Layer n is evaluated pointwise even for p < inf,
which is a regularization: the sampled layers are continuous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exprs import MatrixExpression
from .funcspace import ContractError, Grid, SampledFunction, SobolevIndex, simpson_weights, trapezoid_weights

__all__ = [
    "BoundaryOperator",
    "CanonicalBoundary",
    "MultipointBoundary",
    "PointTerm",
    "apply",
    "canonical",
    "continuity_bound",
    "layer_weights",
    "point_weights",
    "two_point",
]

_SNAP = 1e-12


@dataclass(frozen=True, eq=False)
class CanonicalBoundary:
    alphas: np.ndarray  # (n, r, m)
    phi: MatrixExpression | None = None
    eps: float = 0.0

    def __post_init__(self):
        alphas = np.array(self.alphas, dtype=complex)
        if alphas.ndim != 3 or alphas.shape[0] < 1:
            raise ContractError("alphas must be a non-empty list of r x m matrices")
        alphas.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        if self.phi is not None and (self.phi.rows, self.phi.cols) != alphas.shape[1:]:
            raise ContractError(
                f"Phi must be {alphas.shape[1]}x{alphas.shape[2]}, got {self.phi.rows}x{self.phi.cols}"
            )

    @property
    def n(self) -> int:
        return self.alphas.shape[0]

    @property
    def r(self) -> int:
        return self.alphas.shape[1]

    @property
    def m(self) -> int:
        return self.alphas.shape[2]

    def phi_values(self, grid: Grid) -> np.ndarray:
        if self.phi is None:
            return np.zeros((grid.size, self.r, self.m), dtype=complex)
        return self.phi.evaluate(grid.nodes, self.eps)


@dataclass(frozen=True, eq=False)
class PointTerm:
    point: float
    betas: np.ndarray  # (n+1, r, m)

    def __post_init__(self):
        betas = np.array(self.betas, dtype=complex)
        if betas.ndim != 3:
            raise ContractError("betas must be a list of n+1 matrices of shape r x m")
        betas.setflags(write=False)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "point", float(self.point))


@dataclass(frozen=True, eq=False)
class MultipointBoundary:
    groups: tuple  # groups[j] is a tuple of PointTerm
    limit_points: tuple = ()

    def __post_init__(self):
        groups = tuple(tuple(g) for g in self.groups)
        if not groups:
            groups = ((),)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "limit_points", tuple(float(t) for t in self.limit_points))
        terms = [term for g in groups for term in g]
        if not terms:
            raise ContractError("multipoint operator needs at least one term")
        shape = terms[0].betas.shape
        if any(term.betas.shape != shape for term in terms):
            raise ContractError("all terms need the same number of matrices and the same r x m shape")
        if len(self.limit_points) not in (0, len(groups) - 1):
            raise ContractError(
                f"{len(groups) - 1} clustered groups need as many limit points, got {len(self.limit_points)}"
            )

    def terms(self):
        for j, g in enumerate(self.groups):
            for term in g:
                yield j, term

    @property
    def _shape(self):
        return next(self.terms())[1].betas.shape

    @property
    def n(self) -> int:
        return self._shape[0] - 1

    @property
    def r(self) -> int:
        return self._shape[1]

    @property
    def m(self) -> int:
        return self._shape[2]


BoundaryOperator = Union[CanonicalBoundary, MultipointBoundary]


def canonical(alphas, phi=None, eps: float = 0.0) -> CanonicalBoundary:
    if phi is not None and not isinstance(phi, MatrixExpression):
        phi = MatrixExpression.from_nested(phi)
    return CanonicalBoundary(np.asarray(alphas, dtype=complex), phi, eps)


def two_point(B_a, B_b, a: float, b: float, n: int = 1) -> MultipointBoundary:
    """B y = B_a y(a) + B_b y(b) as a multipoint operator."""
    B_a = np.atleast_2d(np.asarray(B_a, dtype=complex))
    B_b = np.atleast_2d(np.asarray(B_b, dtype=complex))
    if B_a.shape != B_b.shape:
        raise ContractError(f"B_a and B_b must have equal shape, got {B_a.shape} and {B_b.shape}")
    pad = np.zeros((n,) + B_a.shape, dtype=complex)
    left = PointTerm(a, np.concatenate([B_a[None], pad]))
    right = PointTerm(b, np.concatenate([B_b[None], pad]))
    return MultipointBoundary(((), (left,), (right,)), (a, b))


def point_weights(grid: Grid, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Node indices and weights reproducing the value at `t` (cubic Lagrange)."""
    x = grid.nodes
    span = grid.b - grid.a
    if t < grid.a - _SNAP * span or t > grid.b + _SNAP * span:
        raise ContractError(f"point {t!r} lies outside [{grid.a}, {grid.b}]")
    i = int(np.clip(np.searchsorted(x, t), 0, x.size - 1))
    for j in (i - 1, i):
        if 0 <= j < x.size and abs(x[j] - t) <= _SNAP * span:
            return np.array([j]), np.array([1.0])
    npts = min(4, x.size)
    lo = int(np.clip(i - 2, 0, x.size - npts))
    idx = np.arange(lo, lo + npts)
    xs = x[idx]
    w = np.ones(npts)
    for a_ in range(npts):
        for b_ in range(npts):
            if a_ != b_:
                w[a_] *= (t - xs[b_]) / (xs[a_] - xs[b_])
    return idx, w


def _value_at(y: SampledFunction, layer: int, t: float) -> np.ndarray:
    idx, w = point_weights(y.grid, t)
    vals = y.layer(layer)[idx]
    return np.tensordot(w, vals, axes=(0, 0))


def _check_layers(B, y):
    need = B.n
    if y.order < need:
        raise ContractError(f"boundary operator needs derivative layers up to {need}, y has {y.order}")
    if y.shape[0] != B.m:
        raise ContractError(f"boundary operator acts on {B.m} components, y has shape {y.shape}")


def apply(B: BoundaryOperator, y: SampledFunction) -> np.ndarray:
    """B applied to `y`; a matrix-valued `y` is treated column by column.

    Returns shape ``(r,)`` for vector `y` and ``(r, q)`` for ``m x q`` `y`.
    """
    _check_layers(B, y)
    if isinstance(B, CanonicalBoundary):
        out = sum(B.alphas[k] @ y.layers[k, 0] for k in range(B.n))
        if B.phi is not None:
            phi = B.phi_values(y.grid)
            w = simpson_weights(y.grid)
            integrand = phi @ y.layers[B.n] if y.layers.ndim == 4 else np.einsum("irm,im->ir", phi, y.layers[B.n])
            out = out + np.tensordot(w, integrand, axes=(0, 0))
        return np.asarray(out, dtype=complex)
    if isinstance(B, MultipointBoundary):
        out = 0
        for _, term in B.terms():
            for l in range(B.n + 1):
                beta = term.betas[l]
                if np.any(beta):
                    out = out + beta @ _value_at(y, l, term.point)
        if np.isscalar(out):
            out = np.zeros((B.r,) + y.shape[1:], dtype=complex)
        return np.asarray(out, dtype=complex)
    raise TypeError(f"unknown boundary operator {type(B).__name__}")


def layer_weights(B: BoundaryOperator, grid: Grid) -> np.ndarray:
    """Weights W with B y = sum_{l,i} W[l, i] @ y^(l)(t_i); shape (n+1, N, r, m)."""
    W = np.zeros((B.n + 1, grid.size, B.r, B.m), dtype=complex)
    if isinstance(B, CanonicalBoundary):
        for k in range(B.n):
            W[k, 0] += B.alphas[k]
        if B.phi is not None:
            W[B.n] += simpson_weights(grid)[:, None, None] * B.phi_values(grid)
        return W
    for _, term in B.terms():
        idx, w = point_weights(grid, term.point)
        for l in range(B.n + 1):
            W[l, idx] += w[:, None, None] * term.betas[l][None]
    return W


def _spectral(M) -> float:
    return float(np.linalg.norm(M, 2)) if np.size(M) else 0.0


def continuity_bound(B: BoundaryOperator, grid: Grid, idx: SobolevIndex) -> float:
    """Constant C with |B y| <= C ||y||_{n,p} on smooth functions.

    Point values of y^(k), k < n, obey
    |g(t)| <= (b-a)^(-1/p) ||g||_p + (b-a)^(1/p') ||g'||_p.
    A point value of y^(n) is only bounded for p = inf. The sup-type
    p = inf norm measures the largest component, hence the sqrt(m) factors.
    Returns inf when no finite bound exists.
    """
    L = grid.b - grid.a
    p, q = idx.p, idx.conjugate
    emb = max(L ** (-1.0 / p) if not math.isinf(p) else 1.0, L ** (1.0 / q) if not math.isinf(q) else 1.0)
    vec = math.sqrt(B.m) if math.isinf(p) else 1.0
    if isinstance(B, CanonicalBoundary):
        total = sum(_spectral(a) for a in B.alphas) * emb * vec
        if B.phi is not None:
            phi_norm = np.linalg.norm(B.phi_values(grid), 2, axis=(1, 2))
            w = trapezoid_weights(grid)
            if math.isinf(q):
                pn = float(phi_norm.max())
            else:
                pn = float((w @ phi_norm**q) ** (1.0 / q))
            total += pn * vec
        return total
    total = 0.0
    for _, term in B.terms():
        for l in range(B.n + 1):
            nb = _spectral(term.betas[l])
            if nb == 0:
                continue
            if l < B.n:
                total += nb * emb * vec
            elif math.isinf(p):
                total += nb * vec
            else:
                return math.inf
    return total
