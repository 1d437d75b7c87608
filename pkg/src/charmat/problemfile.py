"""JSON problem/family files.

Layout::

    {
      "name": "rotation",
      "interval": {"a": 0, "b": "pi/2"},
      "dims": {"m": 2, "n": 1, "r": 2, "p": "inf"},
      "A": [["0", "-1"], ["1", "0"]],
      "f": ["0", "0"],
      "boundary": {"type": "two_point", "Ba": [[1, 0], [0, 1]], "Bb": [[0, 0], [0, 0]]},
      "c": [1, 0],
      "family": {"eps0": 0.2, "eps_grid": [...], "limit": {...}},
      "numerics": {"nodes": 1025, "substeps": 2, "rank_tol": 1e-8}
    }

Boundary sections:

* ``{"type": "canonical", "alphas": [alpha_0, ..., alpha_{n-1}], "Phi": r x m}``
  (Phi entries may use t and eps, default zero);
* ``{"type": "multipoint", "groups": [[term, ...], ...], "limit_points": [...]}``
  with ``term = {"point": expr, "betas": {"0": r x m, "1": r x m, ...}}``,
  group 0 being the zero group;
* ``{"type": "two_point", "Ba": r x m, "Bb": r x m}``.

Every scalar outside A, f and Phi is a number or an expression in ``eps``
only. ``family.limit`` may replace any of A, f, boundary, c for eps = 0,
for families whose data are not continuous in eps.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from . import boundary as bnd
from .exprs import ExprDomainError, ExprSyntaxError, MatrixExpression, evaluate, parse
from .fredholm import Numerics, ProblemSpec
from .funcspace import ContractError

__all__ = [
    "ProblemFileError",
    "build_problem",
    "fixture_names",
    "fixture_path",
    "load",
    "load_fixture",
    "numerics_from",
]


class ProblemFileError(ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


def _scalar(value, field, eps):
    if isinstance(value, bool):
        raise ProblemFileError(field, "expected a number or expression")
    if isinstance(value, (int, float)):
        return complex(value)
    if not isinstance(value, str):
        raise ProblemFileError(field, f"expected a number or expression, got {type(value).__name__}")
    try:
        e = parse(value)
    except ExprSyntaxError as exc:
        raise ProblemFileError(field, str(exc)) from None
    if e.depends_on_t():
        raise ProblemFileError(field, "may depend on eps only, not on t")
    try:
        return complex(evaluate(e, 0.0, eps))
    except ExprDomainError as exc:
        raise ProblemFileError(field, f"{exc} at eps={eps!r}") from None


def _real(value, field, eps):
    z = _scalar(value, field, eps)
    if z.imag != 0:
        raise ProblemFileError(field, "must be real")
    return z.real


def _matrix(value, field, eps, shape=None):
    if not isinstance(value, list) or not value:
        raise ProblemFileError(field, "expected a non-empty list of rows")
    rows = value if isinstance(value[0], list) else [[x] for x in value]
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width:
            raise ProblemFileError(f"{field}[{i}]", f"expected {width} entries")
        for j, x in enumerate(row):
            out[i, j] = _scalar(x, f"{field}[{i}][{j}]", eps)
    if shape is not None and out.shape != shape:
        raise ProblemFileError(field, f"expected shape {shape[0]}x{shape[1]}, got {out.shape[0]}x{out.shape[1]}")
    return out


def _expr_matrix(value, field, shape):
    if isinstance(value, (str, int, float)):
        value = [[value]]
    if not isinstance(value, list) or not value:
        raise ProblemFileError(field, "expected a list of expression strings")
    rows = value if isinstance(value[0], list) else [[x] for x in value]
    parsed = []
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise ProblemFileError(f"{field}[{i}]", "expected a list")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (str, int, float)):
                raise ProblemFileError(f"{field}[{i}][{j}]", "expected an expression string or number")
            try:
                parsed.append(parse(x))
            except ExprSyntaxError as exc:
                raise ProblemFileError(f"{field}[{i}][{j}]", str(exc)) from None
    got = (len(rows), len(rows[0]))
    if any(len(row) != got[1] for row in rows) or got != shape:
        raise ProblemFileError(field, f"expected shape {shape[0]}x{shape[1]}, got {len(rows)} rows")
    return MatrixExpression(shape[0], shape[1], tuple(parsed))


def _boundary(sec, dims, a, b, eps, field="boundary"):
    if not isinstance(sec, dict):
        raise ProblemFileError(field, "expected an object")
    m, n, r = dims["m"], dims["n"], dims["r"]
    kind = sec.get("type")
    if kind == "canonical":
        alphas = sec.get("alphas")
        if not isinstance(alphas, list) or len(alphas) != n:
            raise ProblemFileError(f"{field}.alphas", f"expected {n} matrices (k = 0..n-1)")
        mats = [_matrix(al, f"{field}.alphas[{k}]", eps, (r, m)) for k, al in enumerate(alphas)]
        phi = sec.get("Phi")
        phi_expr = None if phi is None else _expr_matrix(phi, f"{field}.Phi", (r, m))
        return bnd.CanonicalBoundary(np.stack(mats), phi_expr, eps)
    if kind == "two_point":
        Ba = _matrix(sec.get("Ba"), f"{field}.Ba", eps, (r, m))
        Bb = _matrix(sec.get("Bb"), f"{field}.Bb", eps, (r, m))
        return bnd.two_point(Ba, Bb, a, b, n)
    if kind == "multipoint":
        groups_in = sec.get("groups")
        if not isinstance(groups_in, list) or not groups_in:
            raise ProblemFileError(f"{field}.groups", "expected a list of groups (group 0 first)")
        groups = []
        for j, g in enumerate(groups_in):
            if not isinstance(g, list):
                raise ProblemFileError(f"{field}.groups[{j}]", "expected a list of terms")
            terms = []
            for k, term in enumerate(g):
                tf = f"{field}.groups[{j}][{k}]"
                if not isinstance(term, dict) or "point" not in term:
                    raise ProblemFileError(tf, "expected an object with 'point' and 'betas'")
                point = _real(term["point"], f"{tf}.point", eps)
                span = b - a
                if point < a - 1e-12 * span or point > b + 1e-12 * span:
                    raise ProblemFileError(f"{tf}.point", f"{point!r} lies outside [{a}, {b}] at eps={eps!r}")
                betas = np.zeros((n + 1, r, m), dtype=complex)
                raw = term.get("betas", {})
                items = raw.items() if isinstance(raw, dict) else enumerate(raw)
                for l, mat in items:
                    try:
                        li = int(l)
                    except ValueError:
                        raise ProblemFileError(f"{tf}.betas", f"derivative order {l!r} is not an integer") from None
                    if not 0 <= li <= n:
                        raise ProblemFileError(f"{tf}.betas", f"derivative order {li} outside 0..{n}")
                    betas[li] = _matrix(mat, f"{tf}.betas[{l}]", eps, (r, m))
                terms.append(bnd.PointTerm(min(max(point, a), b), betas))
            groups.append(tuple(terms))
        lp = sec.get("limit_points", [])
        limit_points = [_real(x, f"{field}.limit_points[{i}]", eps) for i, x in enumerate(lp)]
        try:
            return bnd.MultipointBoundary(tuple(groups), tuple(limit_points))
        except ContractError as exc:
            raise ProblemFileError(field, str(exc)) from None
    raise ProblemFileError(f"{field}.type", f"unknown boundary type {kind!r} (canonical, multipoint, two_point)")


def numerics_from(sec, overrides=None) -> Numerics:
    sec = dict(sec or {})
    sec.update({k: v for k, v in (overrides or {}).items() if v is not None})
    allowed = {"nodes", "substeps", "rank_tol", "abs_floor", "ivp_tol"}
    bad = set(sec) - allowed
    if bad:
        raise ProblemFileError("numerics", f"unknown keys {sorted(bad)}")
    try:
        return Numerics(
            nodes=int(sec.get("nodes", 1025)),
            substeps=int(sec.get("substeps", 2)),
            rank_tol=float(sec.get("rank_tol", 1e-8)),
            abs_floor=float(sec.get("abs_floor", 1e-12)),
            ivp_tol=float(sec.get("ivp_tol", 1e-10)),
        )
    except (ContractError, TypeError, ValueError) as exc:
        raise ProblemFileError("numerics", str(exc)) from None


def _dims(doc):
    dims = doc.get("dims")
    if not isinstance(dims, dict):
        raise ProblemFileError("dims", "expected an object with m, n, r, p")
    out = {}
    for key in ("m", "n", "r"):
        v = dims.get(key)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ProblemFileError(f"dims.{key}", "expected a positive integer")
        out[key] = v
    p = dims.get("p", "inf")
    try:
        p = math.inf if isinstance(p, str) and p.strip().lower() in ("inf", "infinity") else float(p)
    except ValueError:
        raise ProblemFileError("dims.p", f"expected a number >= 1 or 'inf', got {p!r}") from None
    if not p >= 1:
        raise ProblemFileError("dims.p", "must satisfy 1 <= p <= inf")
    out["p"] = p
    return out


def build_problem(doc: dict, eps: float = 0.0, numerics: Numerics | None = None) -> ProblemSpec:
    """ProblemSpec for the document at parameter value `eps`."""
    if not isinstance(doc, dict):
        raise ProblemFileError("", "problem file must hold a JSON object")
    dims = _dims(doc)
    m, r = dims["m"], dims["r"]
    iv = doc.get("interval")
    if not isinstance(iv, dict) or "a" not in iv or "b" not in iv:
        raise ProblemFileError("interval", "expected an object with a and b")
    a = _real(iv["a"], "interval.a", 0.0)
    b = _real(iv["b"], "interval.b", 0.0)
    if not a < b:
        raise ProblemFileError("interval", f"need a < b, got [{a}, {b}]")
    sec = dict(doc)
    if eps == 0.0 and isinstance(doc.get("family"), dict):
        limit = doc["family"].get("limit") or {}
        if not isinstance(limit, dict):
            raise ProblemFileError("family.limit", "expected an object")
        sec.update(limit)
    if "A" not in sec:
        raise ProblemFileError("A", "missing")
    A = _expr_matrix(sec["A"], "A", (m, m))
    f = _expr_matrix(sec.get("f", ["0"] * m), "f", (m, 1))
    B = _boundary(sec.get("boundary"), dims, a, b, eps)
    c_raw = sec.get("c", [0] * r)
    if not isinstance(c_raw, list):
        c_raw = [c_raw]
    if len(c_raw) != r:
        raise ProblemFileError("c", f"expected {r} entries, got {len(c_raw)}")
    c = np.array([_scalar(x, f"c[{i}]", eps) for i, x in enumerate(c_raw)])
    if numerics is None:
        numerics = numerics_from(doc.get("numerics"))
    try:
        return ProblemSpec(a, b, m, dims["n"], r, dims["p"], A, f, B, c, eps, numerics, doc.get("name", ""))
    except ContractError as exc:
        raise ProblemFileError("", str(exc)) from None


def load(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFileError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError("", f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _data_dir():
    return resources.files("charmat") / "data"


def fixture_names() -> list[str]:
    return sorted(p.name[:-5] for p in _data_dir().iterdir() if p.name.endswith(".json"))


def fixture_path(name: str) -> Path:
    return Path(str(_data_dir() / f"{name}.json"))


def load_fixture(name: str) -> dict:
    return load(fixture_path(name))
