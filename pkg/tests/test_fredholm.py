import math

import numpy as np
import pytest
from scipy.linalg import expm

from charmat import boundary as bnd
from charmat.exprs import MatrixExpression
from charmat.fredholm import (
    CharacteristicMatrix,
    Numerics,
    ProblemSpec,
    analyze,
    characteristic_matrix,
    solve,
    verify_solution,
)
from charmat.funcspace import ContractError, SampledFunction
from charmat.oracle import oracle_solve
from charmat.problemfile import build_problem, load_fixture

from conftest import build, two_point_doc
from problemgen import random_problem


def make_problem(A, f, B, c, m=1, n=1, r=None, a=0.0, b=1.0, p=math.inf):
    return ProblemSpec(
        a, b, m, n, m if r is None else r, p,
        MatrixExpression.from_nested(A), MatrixExpression.from_nested(f), B, c,
    )


def test_characteristic_examples():
    ps = make_problem([["0"]], ["0"], bnd.two_point([[0]], [[1]], 0.0, 1.0), [0])
    np.testing.assert_allclose(characteristic_matrix(ps).M, [[1]], atol=1e-14)
    ps = make_problem([["0", "0"], ["0", "0"]], ["0", "0"], bnd.two_point(np.eye(2), 0 * np.eye(2), 0.0, 1.0), [0, 0], m=2)
    np.testing.assert_array_equal(characteristic_matrix(ps).M, np.eye(2))
    b = math.pi / 2
    ps = make_problem([["0", "-1"], ["1", "0"]], ["0", "0"], bnd.two_point(0 * np.eye(2), np.eye(2), 0.0, b), [0, 0], m=2, b=b)
    ref = expm(-np.array([[0.0, -1.0], [1.0, 0.0]]) * b)
    np.testing.assert_allclose(characteristic_matrix(ps).M, ref, atol=1e-8)
    np.testing.assert_allclose(ref, [[0, 1], [-1, 0]], atol=1e-15)


def test_analyze_examples():
    rep = analyze(np.eye(2))
    assert (rep.rank, rep.dim_ker, rep.dim_coker, rep.index, rep.invertible) == (2, 0, 0, 0, True)
    rep = analyze(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert (rep.rank, rep.dim_ker, rep.dim_coker, rep.index, rep.invertible) == (1, 1, 1, 0, False)
    rep = analyze(build_problem(load_fixture("index_r5_m3")))
    assert rep.index == -2 and rep.m == 3 and rep.r == 5
    assert rep.dim_ker - rep.dim_coker == rep.index


def test_rank_threshold():
    cm = CharacteristicMatrix.from_matrix(np.diag([1.0, 1e-9]))
    assert analyze(cm).rank == 1
    cm = CharacteristicMatrix.from_matrix(np.diag([1.0, 1e-7]))
    assert analyze(cm).invertible
    # absolute floor takes over for tiny matrices
    cm = CharacteristicMatrix.from_matrix(np.diag([1e-13, 1e-13]))
    assert analyze(cm).rank == 0


def test_solve_cauchy():
    ps = build(two_point_doc([["0"]], ["1"], [[1]], [[0]], [0]))
    sol = solve(ps)
    assert sol.unique and sol.residual_boundary < 1e-10
    np.testing.assert_allclose(sol.y.layers[0, :, 0], ps.grid.nodes, atol=1e-12)


def test_solve_endpoint():
    ps = build(two_point_doc([["1"]], ["0"], [[0]], [[1]], [1]))
    sol = solve(ps)
    np.testing.assert_allclose(sol.y.layers[0, :, 0], np.exp(1 - ps.grid.nodes), atol=1e-7)
    assert sol.xi[0] == pytest.approx(math.e, rel=1e-8)


def test_solve_periodic_kernel():
    ps = build_problem(load_fixture("periodic_defect"))
    sol = solve(ps)
    assert not sol.unique and len(sol.kernel_basis) == 1 == sol.report.dim_ker
    k = sol.kernel_basis[0]
    np.testing.assert_allclose(k.layers[0], np.broadcast_to(k.layers[0, :1], k.layers[0].shape), atol=1e-12)
    assert np.linalg.norm(k.layers[0, 0]) == pytest.approx(1.0)
    for lam in (0.0, 1.0, -3.5 + 2j):
        y = sol.y + k.scale(lam)
        assert np.linalg.norm(bnd.apply(ps.B, y) - ps.c) < 1e-8


def test_verify_solution_examples():
    ps = build(two_point_doc([["1"]], ["1"], [[1]], [[0]], [0]))
    sol = solve(ps)
    ode, bres = verify_solution(ps, sol)
    assert ode < 1e-8 and bres < 1e-8
    shifted = sol.y + SampledFunction(ps.grid, np.stack([np.ones((ps.grid.size, 1)), np.zeros((ps.grid.size, 1))]))
    assert verify_solution(ps, shifted)[1] == pytest.approx(1.0, abs=1e-8)
    bump = np.zeros((2, ps.grid.size, 1))
    bump[1] = 0.25
    ode2, _ = verify_solution(ps, sol.y + SampledFunction(ps.grid, bump))
    assert ode2 == pytest.approx(ode + 0.25, abs=1e-8)


def test_scaling(rng):
    lam = 2.5
    checked = 0
    for _ in range(4):
        m = int(rng.integers(1, 4))
        doc = random_problem(rng, m, m, int(rng.integers(1, 3)))
        scaled = dict(doc, f=[f"({e}) * {lam}" for e in doc["f"]], c=[lam * x for x in doc["c"]])
        s1, s2 = solve(build_problem(doc)), solve(build_problem(scaled))
        if not s1.unique:
            continue
        np.testing.assert_allclose(s2.y.layers, lam * s1.y.layers, rtol=1e-10, atol=1e-10)
        checked += 1
    assert checked


def richardson_oracle(ps):
    coarse = oracle_solve(ps, 1025).layers[0]
    fine = oracle_solve(ps, 2049).layers[0][::2]
    return (4 * fine - coarse) / 3


def test_oracle_equivalence_random(rng):
    checked = 0
    for _ in range(12):
        m = int(rng.integers(1, 4))
        ps = build_problem(random_problem(rng, m, m, 1))
        sol = solve(ps)
        if not sol.unique or sol.report.sigma_min < 1e-3 * sol.report.singular_values[0]:
            continue
        ref = richardson_oracle(ps)
        assert np.max(np.abs(sol.y.layers[0] - ref)) < 1e-6
        checked += 1
    assert checked >= 6


def test_contract_violations():
    with pytest.raises(ContractError):
        make_problem([["0"]], ["0"], bnd.two_point([[1]], [[0]], 0.0, 1.0), [0, 1])
    with pytest.raises(ContractError):
        make_problem([["0"]], ["0"], bnd.two_point(np.eye(2), np.eye(2), 0.0, 1.0), [0, 0])
    with pytest.raises(ContractError):
        make_problem([["0"]], ["0"], bnd.two_point([[1]], [[0]], 0.0, 1.0), [0], a=1.0, b=0.0)
    with pytest.raises(ContractError):
        Numerics(nodes=1)


def test_solution_shape_and_layers():
    ps = build_problem(load_fixture("rotation_endpoint"))
    sol = solve(ps)
    assert sol.y.order == ps.n == 2 and sol.y.shape == (2,)
    t = ps.grid.nodes
    np.testing.assert_allclose(sol.y.layers[2, :, 0], -np.sin(t), atol=1e-8)
    np.testing.assert_allclose(sol.y.layers[0], sol.y.layers[0], atol=0)
    Y = ps.fundamental.Y
    np.testing.assert_allclose(sol.y.layers, ps.particular.layers + Y.layers @ sol.xi, atol=1e-14)
