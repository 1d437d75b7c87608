"""Parameter-dependent problems: condition checks, eps-sweeps, error bands.

A Family maps eps in [0, eps0) to a ProblemSpec; ``generator(0)`` is the
limit problem. Checks sample eps on a finite grid, so every verdict is an
empirical statement about that grid:

* "pass" for a decay check means the last value is small (below ``abs_tol``
  or below ``rel_tol`` times the largest value) and the last three values
  decrease;
* "inconclusive" means small but not decreasing at the end;
* "fail" means the last value is not small.

Convergence of B(eps) y to B(0) y is probed on a finite set of smooth
functions, so a pass there only says no counterexample was found.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np

from . import boundary as bnd
from .exprs import sample_matrix
from .fredholm import ProblemSpec, analyze, solve
from .funcspace import ContractError, Grid, SampledFunction, SobolevIndex, lp_norm, sobolev_norm
from .integrator import IntegrationError

__all__ = [
    "ConditionReport",
    "ConvergenceRecord",
    "Family",
    "RatioEstimate",
    "check_condition_0",
    "check_condition_I",
    "check_condition_II",
    "check_multipoint_assumptions",
    "default_eps_grid",
    "default_probes",
    "discrepancy",
    "estimate_gamma_bounds",
    "loglog_slope",
    "sweep",
    "trend_verdict",
]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


def default_eps_grid(points: int = 12, largest: float = 1e-1, smallest: float = 1e-6) -> list[float]:
    return [float(x) for x in np.geomspace(largest, smallest, points)]


@dataclass(frozen=True)
class Family:
    eps0: float
    generator: Callable[[float], ProblemSpec]
    name: str = ""
    eps_grid: tuple = ()

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ContractError("eps0 must be positive")

    def limit(self) -> ProblemSpec:
        return self.generator(0.0)

    def at(self, eps: float) -> ProblemSpec:
        if not 0 <= eps < self.eps0:
            raise ContractError(f"eps={eps!r} outside [0, {self.eps0})")
        return self.generator(eps)

    def grid_or_default(self, eps_grid=None) -> list[float]:
        if eps_grid is not None:
            return [float(e) for e in eps_grid]
        if self.eps_grid:
            return [float(e) for e in self.eps_grid]
        return [e for e in default_eps_grid() if e < self.eps0]

    @classmethod
    def from_document(cls, doc: dict, numerics=None) -> "Family":
        from .problemfile import ProblemFileError, build_problem, numerics_from

        fam = doc.get("family")
        if not isinstance(fam, dict):
            raise ProblemFileError("family", "missing family section")
        try:
            eps0 = float(fam.get("eps0", 1.0))
        except (TypeError, ValueError):
            raise ProblemFileError("family.eps0", "expected a number") from None
        grid = fam.get("eps_grid") or ()
        if numerics is None:
            numerics = numerics_from(doc.get("numerics"))
        return cls(eps0, lambda eps: build_problem(doc, eps, numerics), doc.get("name", ""), tuple(grid))


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    verdict: str
    evidence: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {"condition": self.condition, "verdict": self.verdict, "note": self.note, "evidence": self.evidence}


@dataclass(frozen=True)
class ConvergenceRecord:
    eps: float
    error: float
    discrepancy: float
    ratio: float
    solvable: bool

    def to_row(self) -> tuple:
        return (self.eps, self.error, self.discrepancy, self.ratio, self.solvable)


@dataclass(frozen=True)
class RatioEstimate:
    conclusive: bool
    gamma_1: float = math.nan
    gamma_2: float = math.nan
    eps_1: float = math.nan
    eps_2: float = math.nan
    band: float = math.nan
    ratios: tuple = ()
    eps: tuple = ()

    def contains(self, ratio: float, rtol: float = 1e-12) -> bool:
        return self.gamma_1 * (1 - rtol) <= ratio <= self.gamma_2 * (1 + rtol)

    def to_dict(self) -> dict:
        return {
            "conclusive": self.conclusive,
            "gamma_1": self.gamma_1,
            "gamma_2": self.gamma_2,
            "band_width": self.band,
            "eps_1": self.eps_1,
            "eps_2": self.eps_2,
        }


def trend_verdict(values, abs_tol: float = 1e-8, rel_tol: float = 1e-2) -> str:
    """Decay verdict for values sampled along a decreasing eps grid."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or not np.all(np.isfinite(v)):
        return FAIL
    top = float(v.max())
    if top <= abs_tol:
        return PASS
    small = v[-1] <= max(abs_tol, rel_tol * top)
    tail = v[-3:]
    decreasing = all(x > y or y <= abs_tol for x, y in zip(tail[:-1], tail[1:]))
    if small and decreasing:
        return PASS
    return INCONCLUSIVE if small else FAIL


def loglog_slope(eps, values) -> float:
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (eps > 0) & (values > 0)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(eps[keep]), np.log(values[keep]), 1)[0])


# --------------------------------------------------------------------------
# conditions (0), (I), (II)


def check_condition_0(fam: Family) -> ConditionReport:
    ps = fam.limit()
    if ps.r != ps.m:
        return ConditionReport(
            "(0)", FAIL, {"m": ps.m, "r": ps.r, "index": ps.m - ps.r}, "r != m: nonzero index rules out unique solvability"
        )
    rep = analyze(ps)
    verdict = PASS if rep.invertible else FAIL
    return ConditionReport(
        "(0)",
        verdict,
        {"sigma_min": rep.sigma_min, "threshold": rep.threshold, "dim_ker": rep.dim_ker},
        "limit homogeneous problem has only the trivial solution" if rep.invertible else "limit problem has a nontrivial kernel",
    )


def check_condition_I(fam: Family, eps_grid=None, abs_tol: float = 1e-8, rel_tol: float = 1e-2) -> ConditionReport:
    """||A(eps) - A(0)|| in W_p^{n-1} must decay along the grid."""
    eps_grid = fam.grid_or_default(eps_grid)
    ps0 = fam.limit()
    A0 = sample_matrix(ps0.A, ps0.grid, 0.0, ps0.n - 1)
    idx = SobolevIndex(ps0.n - 1, ps0.p)
    deltas = []
    for eps in eps_grid:
        ps = fam.at(eps)
        Ae = sample_matrix(ps.A, ps0.grid, eps, ps0.n - 1)
        deltas.append(sobolev_norm(Ae - A0, idx))
    verdict = trend_verdict(deltas, abs_tol, rel_tol)
    return ConditionReport(
        "(I)",
        verdict,
        {"eps": list(eps_grid), "delta": deltas, "slope": loglog_slope(eps_grid, deltas)},
        "A(., eps) -> A(., 0) in W^{n-1}_p",
    )


def _seed() -> int:
    try:
        return int(os.environ.get("CHARMAT_SEED", "0"))
    except ValueError:
        return 0


def default_probes(grid: Grid, m: int, n: int, random_count: int = 10, seed: int | None = None) -> list[SampledFunction]:
    """Monomials t^k e_i (k <= n+2) and seeded random trigonometric functions."""
    t = grid.nodes
    probes = []
    for i in range(m):
        for k in range(n + 3):
            layers = np.zeros((n + 1, t.size, m), dtype=complex)
            for l in range(n + 1):
                if l <= k:
                    layers[l, :, i] = math.perm(k, l) * t ** (k - l)
            probes.append(SampledFunction(grid, layers))
    rng = np.random.default_rng(_seed() if seed is None else seed)
    scale = 2 * math.pi / (grid.b - grid.a)
    for _ in range(random_count):
        amp = rng.normal(size=(3, m))
        freq = rng.uniform(0.5, 2.0, size=(3, m)) * scale
        phase = rng.uniform(0, 2 * math.pi, size=(3, m))
        layers = np.zeros((n + 1, t.size, m), dtype=complex)
        for l in range(n + 1):
            for q in range(3):
                layers[l] += amp[q] * freq[q] ** l * np.sin(freq[q] * t[:, None] + phase[q] + l * math.pi / 2)
        probes.append(SampledFunction(grid, layers))
    return probes


def check_condition_II(fam: Family, eps_grid=None, probes=None, abs_tol: float = 1e-8, rel_tol: float = 1e-2) -> ConditionReport:
    """|B(eps) y - B(0) y| on probe functions must decay along the grid."""
    eps_grid = fam.grid_or_default(eps_grid)
    ps0 = fam.limit()
    if probes is None:
        probes = default_probes(ps0.grid, ps0.m, ps0.n)
    if not probes:
        raise ContractError("condition (II) needs at least one probe")
    base = [bnd.apply(ps0.B, y) for y in probes]
    per_probe = np.zeros((len(probes), len(eps_grid)))
    for j, eps in enumerate(eps_grid):
        B = fam.at(eps).B
        for i, y in enumerate(probes):
            per_probe[i, j] = np.linalg.norm(bnd.apply(B, y) - base[i])
    worst = per_probe.max(axis=0)
    verdicts = [trend_verdict(row, abs_tol, rel_tol) for row in per_probe]
    if all(v == PASS for v in verdicts):
        verdict = PASS
    elif any(v == FAIL for v in verdicts):
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return ConditionReport(
        "(II)",
        verdict,
        {"eps": list(eps_grid), "max_distance": worst.tolist(), "probes": len(probes)},
        "sampled check over probe functions; pass means no counterexample among probes",
    )


# --------------------------------------------------------------------------
# multipoint assumptions


def _limit_points(B: bnd.MultipointBoundary, B0: bnd.MultipointBoundary):
    if B.limit_points:
        return B.limit_points
    if B0.limit_points:
        return B0.limit_points
    return tuple(float(np.mean([t.point for t in g])) if g else math.nan for g in B0.groups[1:])


def _assumption_sums(B: bnd.MultipointBoundary, limits, p_conj: float):
    n = B.n
    groups = B.groups[1:]
    alpha = 0.0
    beta_sums = []
    gamma = np.zeros((len(groups), n + 1))
    gamma_p = np.zeros(len(groups))
    expo = 0.0 if math.isinf(p_conj) else 1.0 / p_conj
    for j, g in enumerate(groups):
        tj = limits[j]
        S = np.zeros((n + 1, B.r, B.m), dtype=complex)
        for term in g:
            dist = abs(term.point - tj)
            alpha = max(alpha, dist)
            S += term.betas
            norms = np.array([np.linalg.norm(term.betas[l], 2) for l in range(n + 1)])
            gamma[j] += norms * dist
            gamma_p[j] += norms[n] * (dist**expo if expo > 0 else 1.0)
        beta_sums.append(S)
    delta = 0.0
    for l in range(n + 1):
        delta = max(delta, sum(np.linalg.norm(term.betas[l], 2) for term in B.groups[0]))
    return alpha, beta_sums, gamma, gamma_p, delta


def check_multipoint_assumptions(
    fam: Family, eps_grid=None, abs_tol: float = 1e-8, rel_tol: float = 1e-2
) -> list[ConditionReport]:
    """Assumption set for multipoint families; p = inf and p < inf differ.

    p = inf: (alpha), (beta), (gamma), (delta).
    p < inf: (alpha), (beta), (gamma_p), (gamma'), (delta).
    """
    eps_grid = fam.grid_or_default(eps_grid)
    ps0 = fam.limit()
    B0 = ps0.B
    if not isinstance(B0, bnd.MultipointBoundary):
        raise ContractError("multipoint assumptions need a multipoint boundary operator")
    n = ps0.n
    p_conj = ps0.index.conjugate
    alphas, betas, gammas, gammas_low, gammas_p, deltas = [], [], [], [], [], []
    for eps in eps_grid:
        B = fam.at(eps).B
        if not isinstance(B, bnd.MultipointBoundary) or len(B.groups) != len(B0.groups):
            raise ContractError(f"boundary operator at eps={eps!r} is not multipoint with the limit's groups")
        limits = _limit_points(B, B0)
        a, S, g, gp, d = _assumption_sums(B, limits, p_conj)
        alphas.append(a)
        betas.append(S)
        gammas.append(float(g.max()) if g.size else 0.0)
        gammas_low.append(float(g[:, :n].max()) if g.size else 0.0)
        gammas_p.append(float(gp.max()) if gp.size else 0.0)
        deltas.append(d)
    # Cauchy test on group sums: successive differences must decay
    cauchy = [
        max((float(np.max(np.abs(x - y))) for x, y in zip(S1, S2)), default=0.0)
        for S1, S2 in zip(betas[:-1], betas[1:])
    ]
    sums = [max((float(np.max(np.abs(S))) for S in Ss), default=0.0) for Ss in betas]
    eps_list = list(eps_grid)
    reports = [
        ConditionReport("(alpha)", trend_verdict(alphas, abs_tol, rel_tol), {"eps": eps_list, "max_distance": alphas}),
        ConditionReport(
            "(beta)",
            trend_verdict(cauchy, abs_tol, rel_tol),
            {"eps": eps_list, "successive_differences": cauchy, "max_group_sum": sums},
            "Cauchy test of sum_k beta_jk^(l)(eps) along the grid",
        ),
    ]
    if math.isinf(ps0.p):
        reports.append(ConditionReport("(gamma)", trend_verdict(gammas, abs_tol, rel_tol), {"eps": eps_list, "sum": gammas}))
    else:
        gp = np.asarray(gammas_p)
        med = float(np.median(gp))
        # only the small-eps half speaks to O(1) as eps -> 0
        tail = gp[gp.size // 2 :]
        if not np.all(np.isfinite(gp)):
            bounded = False
        elif med > 0:
            bounded = bool(tail.max() <= 10 * med)
        else:
            bounded = bool(tail.max() <= abs_tol)
        reports.append(
            ConditionReport(
                "(gamma_p)",
                PASS if bounded else FAIL,
                {"eps": eps_list, "sum": gammas_p, "bound": 10 * med},
                "O(1) test: samples on the small-eps half within 10x the median",
            )
        )
        reports.append(
            ConditionReport("(gamma')", trend_verdict(gammas_low, abs_tol, rel_tol), {"eps": eps_list, "sum": gammas_low})
        )
    reports.append(ConditionReport("(delta)", trend_verdict(deltas, abs_tol, rel_tol), {"eps": eps_list, "sum": deltas}))
    return reports


def gamma_sum(beta_norms, distances) -> float:
    """sum_k ||beta_k|| |t_k - t_j|, the quantity behind (gamma)/(gamma')."""
    return float(np.sum(np.asarray(beta_norms) * np.asarray(distances)))


def gamma_p_sum(beta_norms, distances, p: float) -> float:
    """sum_k ||beta_k^(n)|| |t_k - t_j|^(1/p')."""
    q = SobolevIndex(0, p).conjugate
    expo = 0.0 if math.isinf(q) else 1.0 / q
    return float(np.sum(np.asarray(beta_norms) * np.asarray(distances, dtype=float) ** expo))


# --------------------------------------------------------------------------
# sweeps


def discrepancy(ps_eps: ProblemSpec, y0: SampledFunction) -> float:
    """||L(eps) y0 - f(eps)||_{n-1,p} + |B(eps) y0 - c(eps)|.

    Derivatives of the residual use y0's own layers with the eps
    coefficients: r^(k) = y0^(k+1) + sum_i C(k,i) A_eps^(i) y0^(k-i) - f_eps^(k).
    """
    n = ps_eps.n
    if not y0.grid.same_as(ps_eps.grid):
        raise ContractError("y0 and the eps-problem must share a grid")
    A = ps_eps.A_sampled.layers
    f = ps_eps.f_sampled.layers
    res = np.zeros((n,) + y0.layers.shape[1:], dtype=complex)
    for k in range(n):
        acc = y0.layers[k + 1] - f[k]
        for i in range(k + 1):
            acc = acc + comb(k, i) * np.einsum("nij,nj->ni", A[i], y0.layers[k - i])
        res[k] = acc
    R = SampledFunction(y0.grid, res)
    interior = sum(lp_norm(R, k, ps_eps.p) for k in range(n))
    bres = float(np.linalg.norm(bnd.apply(ps_eps.B, y0) - ps_eps.c))
    return float(interior + bres)


def _record(fam, eps, y0, idx):
    try:
        ps = fam.at(eps)
        sol = solve(ps)
    except (IntegrationError, ArithmeticError):
        return ConvergenceRecord(eps, math.nan, math.nan, math.nan, False)
    if not sol.unique:
        return ConvergenceRecord(eps, math.nan, math.nan, math.nan, False)
    err = sobolev_norm(sol.y - y0, idx)
    dis = discrepancy(ps, y0)
    ratio = err / dis if dis > 0 else math.nan
    return ConvergenceRecord(eps, err, dis, ratio, True)


def sweep(fam: Family, eps_grid=None, workers: int = 1) -> list[ConvergenceRecord]:
    """Error and discrepancy of the limit solution at every eps.

    Records are returned in grid order; per-eps solves may run in threads.
    """
    eps_grid = fam.grid_or_default(eps_grid)
    ps0 = fam.limit()
    sol0 = solve(ps0)
    if not sol0.unique:
        return [ConvergenceRecord(e, math.nan, math.nan, math.nan, False) for e in eps_grid]
    y0 = sol0.y
    idx = SobolevIndex(ps0.n, ps0.p)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda e: _record(fam, e, y0, idx), eps_grid))
    return [_record(fam, e, y0, idx) for e in eps_grid]


def estimate_gamma_bounds(records, min_discrepancy: float = 1e-14) -> RatioEstimate:
    """Empirical [gamma_1, gamma_2] from error/discrepancy ratios.

    Only solvable records with discrepancy above `min_discrepancy` count;
    fewer than three such records gives an inconclusive estimate.
    """
    records = list(records)
    good = [r for r in records if r.solvable and r.discrepancy > min_discrepancy and math.isfinite(r.error)]
    eps_1 = math.nan
    for r in sorted(records, key=lambda r: r.eps):
        if not r.solvable:
            break
        eps_1 = r.eps
    if len(good) < 3:
        return RatioEstimate(False, eps_1=eps_1)
    ratios = np.array([r.error / r.discrepancy for r in good])
    g1, g2 = float(ratios.min()), float(ratios.max())
    return RatioEstimate(
        conclusive=g1 > 0,
        gamma_1=g1,
        gamma_2=g2,
        eps_1=eps_1,
        eps_2=max(r.eps for r in good),
        band=g2 / g1 if g1 > 0 else math.inf,
        ratios=tuple(float(x) for x in ratios),
        eps=tuple(r.eps for r in good),
    )
