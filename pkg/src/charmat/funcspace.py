"""Grids, sampled functions with derivative stacks, and L_p / W_p^n norms.

All norms are discrete: finite p uses the composite trapezoid rule on the
stored nodes, p = inf takes the maximum over nodes. Pointwise magnitude for
finite p is the Euclidean norm over all components (Frobenius for matrix
values); for p = inf it is the largest component modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContractError",
    "Grid",
    "SampledFunction",
    "SobolevIndex",
    "function_difference",
    "lp_norm",
    "parse_p",
    "simpson_weights",
    "sobolev_norm",
    "trapezoid_weights",
    "uniform_grid",
]

DEFAULT_NODES = 1025


class ContractError(ValueError):
    """Raised when an operation is called with inputs violating its contract."""


@dataclass(frozen=True, eq=False)
class Grid:
    a: float
    b: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if not self.a < self.b:
            raise ContractError(f"grid needs a < b, got a={self.a}, b={self.b}")
        if nodes.ndim != 1 or nodes.size < 2:
            raise ContractError("grid needs at least 2 nodes")
        if nodes[0] != self.a or nodes[-1] != self.b:
            raise ContractError("grid nodes must start at a and end at b")
        if np.any(np.diff(nodes) <= 0):
            raise ContractError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def size(self) -> int:
        return self.nodes.size

    def refine(self, factor: int) -> "Grid":
        """Split every cell into `factor` equal subcells."""
        if factor < 1:
            raise ContractError("refinement factor must be >= 1")
        if factor == 1:
            return self
        left = self.nodes[:-1, None]
        width = np.diff(self.nodes)[:, None]
        inner = left + width * (np.arange(factor) / factor)[None, :]
        return Grid(self.a, self.b, np.append(inner.ravel(), self.b))

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.a == other.a
            and self.b == other.b
            and self.nodes.shape == other.nodes.shape
            and bool(np.all(self.nodes == other.nodes))
        )


def uniform_grid(a: float, b: float, nodes: int = DEFAULT_NODES) -> Grid:
    pts = np.linspace(a, b, nodes)
    pts[0], pts[-1] = a, b
    return Grid(float(a), float(b), pts)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Vector- or matrix-valued function stored on a grid with derivatives.

    ``layers[k, i]`` holds the k-th derivative at node ``i``; the trailing
    axes are the component shape, ``(m,)`` for vectors or ``(rows, cols)``
    for matrices.
    """

    grid: Grid
    layers: np.ndarray

    def __post_init__(self):
        layers = np.array(self.layers, dtype=complex)
        if layers.ndim < 2 or layers.shape[1] != self.grid.size:
            raise ContractError(
                f"layers must have shape (order+1, {self.grid.size}, ...), got {layers.shape}"
            )
        if layers.ndim == 2:
            layers = layers[:, :, None]
        layers.setflags(write=False)
        object.__setattr__(self, "layers", layers)

    @property
    def order(self) -> int:
        return self.layers.shape[0] - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return self.layers.shape[2:]

    def layer(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.order:
            raise ContractError(f"derivative layer {k} missing (order {self.order})")
        return self.layers[k]

    def truncate(self, order: int) -> "SampledFunction":
        if order > self.order:
            raise ContractError(f"cannot truncate order {self.order} to {order}")
        return SampledFunction(self.grid, self.layers[: order + 1])

    def scale(self, factor: complex) -> "SampledFunction":
        return SampledFunction(self.grid, factor * self.layers)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        _check_compatible(self, other)
        return SampledFunction(self.grid, self.layers + other.layers)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        return function_difference(self, other)

    def column(self, j: int) -> "SampledFunction":
        """Column ``j`` of a matrix-valued function as a vector function."""
        if len(self.shape) != 2:
            raise ContractError("column() needs a matrix-valued function")
        return SampledFunction(self.grid, self.layers[..., j])

    @classmethod
    def from_callables(cls, grid: Grid, funcs) -> "SampledFunction":
        """Build from a list of callables ``funcs[k](t) -> array`` per layer."""
        return cls(grid, np.stack([np.asarray(fk(grid.nodes), dtype=complex) for fk in funcs]))

    @classmethod
    def zeros(cls, grid: Grid, shape: tuple[int, ...], order: int = 0) -> "SampledFunction":
        return cls(grid, np.zeros((order + 1, grid.size) + tuple(shape), dtype=complex))


@dataclass(frozen=True)
class SobolevIndex:
    n: int
    p: float = math.inf
    conjugate: float = field(init=False)

    def __post_init__(self):
        if self.n < 0:
            raise ContractError("smoothness order n must be >= 0")
        p = parse_p(self.p)
        object.__setattr__(self, "p", p)
        if p == 1:
            q = math.inf
        elif math.isinf(p):
            q = 1.0
        else:
            q = p / (p - 1.0)
        object.__setattr__(self, "conjugate", q)


def parse_p(p) -> float:
    """Accept 1 <= p <= inf given as a number or the strings 'inf'/'infinity'."""
    if isinstance(p, str):
        p = math.inf if p.strip().lower() in {"inf", "infinity", "oo"} else float(p)
    p = float(p)
    if not (p >= 1.0):
        raise ContractError(f"p must satisfy 1 <= p <= inf, got {p}")
    return p


def trapezoid_weights(grid: Grid) -> np.ndarray:
    h = np.diff(grid.nodes)
    w = np.zeros(grid.size)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def simpson_weights(grid: Grid) -> np.ndarray:
    """Composite Simpson weights on a possibly non-uniform grid.

    Cells are taken in pairs; an odd cell count closes the last cell with
    the three-point formula through the final nodes. Two nodes fall back to
    the trapezoid rule.
    """
    x = grid.nodes
    if x.size < 3:
        return trapezoid_weights(grid)
    h = np.diff(x)
    w = np.zeros(x.size)
    pairs = h.size // 2
    h0, h1 = h[0 : 2 * pairs : 2], h[1 : 2 * pairs : 2]
    hs = h0 + h1
    i = np.arange(pairs) * 2
    np.add.at(w, i, hs / 6 * (2 - h1 / h0))
    np.add.at(w, i + 1, hs**3 / (6 * h0 * h1))
    np.add.at(w, i + 2, hs / 6 * (2 - h0 / h1))
    if h.size % 2:
        h0, h1 = h[-2], h[-1]
        w[-1] += (2 * h1**2 + 3 * h0 * h1) / (6 * (h0 + h1))
        w[-2] += (h1**2 + 3 * h0 * h1) / (6 * h0)
        w[-3] -= h1**3 / (6 * h0 * (h0 + h1))
    return w


def _pointwise(values: np.ndarray, p: float) -> np.ndarray:
    flat = np.abs(values.reshape(values.shape[0], -1))
    if math.isinf(p):
        return flat.max(axis=1)
    return np.sqrt(np.sum(flat**2, axis=1))


def lp_norm(f: SampledFunction, k: int = 0, p: float = math.inf) -> float:
    """Discrete L_p norm of derivative layer `k` of `f`."""
    p = parse_p(p)
    mag = _pointwise(f.layer(k), p)
    if math.isinf(p):
        return float(mag.max())
    w = trapezoid_weights(f.grid)
    if p == 1:
        return float(w @ mag)
    # scale out the maximum to keep |f|^p representable for large p
    top = mag.max()
    if top == 0:
        return 0.0
    return float(top * (w @ (mag / top) ** p) ** (1.0 / p))


def sobolev_norm(y: SampledFunction, idx: SobolevIndex) -> float:
    """Sum of the L_p norms of layers 0..n."""
    if y.order < idx.n:
        raise ContractError(f"W^{idx.n}_p norm needs derivative layers up to {idx.n}, have {y.order}")
    return float(sum(lp_norm(y, k, idx.p) for k in range(idx.n + 1)))


def _check_compatible(y1: SampledFunction, y2: SampledFunction) -> None:
    if not y1.grid.same_as(y2.grid):
        raise ContractError("functions live on different grids")
    if y1.layers.shape != y2.layers.shape:
        raise ContractError(f"shape/order mismatch: {y1.layers.shape} vs {y2.layers.shape}")


def function_difference(y1: SampledFunction, y2: SampledFunction) -> SampledFunction:
    _check_compatible(y1, y2)
    return SampledFunction(y1.grid, y1.layers - y2.layers)
