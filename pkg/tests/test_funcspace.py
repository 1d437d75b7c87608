import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charmat.funcspace import (
    ContractError,
    Grid,
    SampledFunction,
    SobolevIndex,
    function_difference,
    lp_norm,
    parse_p,
    sobolev_norm,
    uniform_grid,
)


def linear(grid):
    t = grid.nodes
    return SampledFunction(grid, np.stack([t, np.ones_like(t)]))


def test_grid_invariants():
    g = uniform_grid(0.0, 2.0, 5)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 2.0 and g.size == 5
    with pytest.raises(ContractError):
        Grid(1.0, 0.0, np.array([1.0, 0.0]))
    with pytest.raises(ContractError):
        Grid(0.0, 1.0, np.array([0.0, 0.7, 0.5, 1.0]))
    with pytest.raises(ContractError):
        uniform_grid(0.0, 1.0, 1)


def test_refine_keeps_nodes():
    g = uniform_grid(0.0, 1.0, 9)
    fine = g.refine(4)
    assert fine.size == 33
    np.testing.assert_array_equal(fine.nodes[::4], g.nodes)


def test_lp_constant_p1():
    g = uniform_grid(0.0, 3.0, 17)
    f = SampledFunction(g, np.full((1, 17), 2.0))
    assert lp_norm(f, p=1) == pytest.approx(6.0, rel=1e-14)


def test_lp_linear_p2():
    g = uniform_grid(0.0, 1.0, 1025)
    f = SampledFunction(g, g.nodes[None])
    assert lp_norm(f, p=2) == pytest.approx(1 / math.sqrt(3), abs=1e-6)


def test_lp_linear_inf():
    g = uniform_grid(0.0, 1.0, 11)
    assert lp_norm(SampledFunction(g, g.nodes[None]), p=math.inf) == 1.0


def test_inf_norm_is_componentwise_max():
    g = uniform_grid(0.0, 1.0, 3)
    vals = np.zeros((1, 3, 2))
    vals[0, 1] = [3.0, 4.0]
    assert lp_norm(SampledFunction(g, vals), p=math.inf) == 4.0
    # finite p uses the Euclidean magnitude: |(3,4)| = 5 at the middle node
    assert lp_norm(SampledFunction(g, vals), p=1) == pytest.approx(0.5 * 5.0)


def test_missing_layer():
    g = uniform_grid(0.0, 1.0, 5)
    with pytest.raises(ContractError):
        lp_norm(SampledFunction(g, g.nodes[None]), k=1)


def test_sobolev_examples():
    g = uniform_grid(0.0, 1.0, 257)
    y = linear(g)
    assert sobolev_norm(y, SobolevIndex(1, 1)) == pytest.approx(1.5, rel=1e-12)
    assert sobolev_norm(y, SobolevIndex(1, math.inf)) == 2.0
    zero = SampledFunction.zeros(g, (3,), order=2)
    for p in (1, 2, math.inf):
        assert sobolev_norm(zero, SobolevIndex(2, p)) == 0.0
    with pytest.raises(ContractError):
        sobolev_norm(y, SobolevIndex(2, 2))


def test_function_difference():
    g = uniform_grid(0.0, 1.0, 9)
    y = linear(g)
    assert not np.any((y - y).layers)
    zero = SampledFunction.zeros(g, (1,), order=1)
    np.testing.assert_array_equal(function_difference(y, zero).layers, y.layers)
    with pytest.raises(ContractError):
        function_difference(y, y.truncate(0))
    with pytest.raises(ContractError):
        function_difference(y, linear(uniform_grid(0.0, 1.0, 5)))


def test_conjugate_exponents():
    assert SobolevIndex(1, 1).conjugate == math.inf
    assert SobolevIndex(1, math.inf).conjugate == 1
    assert SobolevIndex(1, 2).conjugate == pytest.approx(2)
    assert SobolevIndex(1, 4).conjugate == pytest.approx(4 / 3)
    assert parse_p("inf") == math.inf
    with pytest.raises(ContractError):
        SobolevIndex(1, 0.5)


def test_quadrature_order_two():
    errs = []
    for N in (33, 65, 129, 257):
        g = uniform_grid(0.0, 1.0, N)
        f = SampledFunction(g, np.exp(g.nodes)[None])
        errs.append(abs(lp_norm(f, p=2) - math.sqrt((math.e**2 - 1) / 2)))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert all(abs(r - 2) < 0.1 for r in rates)


# magnitudes stay well away from underflow once raised to the power p
entries = st.one_of(st.just(0.0), st.floats(1e-6, 1e3), st.floats(-1e3, -1e-6))
layer_values = st.lists(entries, min_size=2 * 9 * 2, max_size=2 * 9 * 2)


def _fn(vals):
    g = uniform_grid(0.0, 1.0, 9)
    return SampledFunction(g, np.reshape(vals, (2, 9, 2)))


@settings(max_examples=60, deadline=None)
@given(layer_values, layer_values, st.one_of(st.just(0.0), st.floats(1e-3, 10), st.floats(-10, -1e-3)), st.sampled_from([1.0, 2.0, 3.5, math.inf]))
def test_norm_axioms(u, v, lam, p):
    y1, y2 = _fn(u), _fn(v)
    idx = SobolevIndex(1, p)
    n1, n2 = sobolev_norm(y1, idx), sobolev_norm(y2, idx)
    assert sobolev_norm(y1 + y2, idx) <= n1 + n2 + 1e-9 * (1 + n1 + n2)
    assert sobolev_norm(y1.scale(lam), idx) == pytest.approx(abs(lam) * n1, rel=1e-12)
    assert sobolev_norm(y1, idx) >= sobolev_norm(y1, SobolevIndex(0, p))
