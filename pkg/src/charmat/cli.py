"""Command line: ``charmat {solve,analyze,sweep,oracle-compare,fixtures}``.

Exit codes: 0 unique solution / all checks passed, 1 input error,
2 defective problem (or a sweep hypothesis not passing), 3 oracle
disagreement above the threshold.

FILE may be a path or ``@name`` for a bundled fixture (see ``charmat fixtures``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import boundary as bnd
from . import paramlab
from .exprs import ExprDomainError
from .fredholm import analyze, characteristic_matrix, solve, verify_solution
from .funcspace import ContractError
from .integrator import IntegrationError
from .oracle import OracleDefect, oracle_solve
from .problemfile import ProblemFileError, build_problem, fixture_names, fixture_path, load, numerics_from

EXIT_OK, EXIT_INPUT, EXIT_DEFECT, EXIT_MISMATCH = 0, 1, 2, 3


def fmt(x: float) -> str:
    """17 significant digits, scientific notation."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.16e}"


def _plain(obj):
    """Convert numpy/complex values into JSON-ready structures."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if np.all(obj.imag == 0):
                return _plain(obj.real.tolist())
            return {"re": _plain(obj.real.tolist()), "im": _plain(obj.imag.tolist())}
        return _plain(obj.tolist())
    if isinstance(obj, complex):
        return float(obj.real) if obj.imag == 0 else {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float in 17-digit scientific notation."""
    obj = _plain(obj)

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return fmt(o)
        return json.dumps(o)

    return enc(obj, 0) + "\n"


def _resolve(path: str) -> Path:
    if path.startswith("@"):
        name = path[1:]
        if name not in fixture_names():
            raise ProblemFileError("", f"no bundled fixture named {name!r}")
        return fixture_path(name)
    return Path(path)


def _overrides(args) -> dict:
    return {"nodes": args.nodes, "substeps": args.substeps, "rank_tol": args.rank_tol}


def _load_problem(args, eps=None):
    doc = load(_resolve(args.file))
    numerics = numerics_from(doc.get("numerics"), _overrides(args))
    return doc, build_problem(doc, eps if eps is not None else getattr(args, "eps", 0.0) or 0.0, numerics)


def _emit(args, name: str, text: str, stdout: bool):
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    if stdout:
        sys.stdout.write(text)


def solution_csv(y, layers: int) -> str:
    vals = y.layers[: layers + 1]
    complex_data = bool(np.any(vals.imag != 0))
    header = ["t"]
    m = y.shape[0]
    for l in range(layers + 1):
        for i in range(m):
            base = f"y{i + 1}" if l == 0 else f"y{i + 1}_d{l}"
            header += [f"{base}_re", f"{base}_im"] if complex_data else [base]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for k, t in enumerate(y.grid.nodes):
        row = [fmt(t)]
        for l in range(layers + 1):
            for i in range(m):
                z = vals[l, k, i]
                row += [fmt(z.real), fmt(z.imag)] if complex_data else [fmt(z.real)]
        w.writerow(row)
    return buf.getvalue()


def cmd_solve(args) -> int:
    _, ps = _load_problem(args)
    layers = args.layers if args.layers is not None else 0
    if not 0 <= layers <= ps.n:
        raise ProblemFileError("--layers", f"must lie in 0..{ps.n}")
    sol = solve(ps)
    ode_res, b_res = verify_solution(ps, sol)
    report = {
        "problem": ps.name,
        "unique": sol.unique,
        "solvability": sol.report.to_dict(),
        "xi": sol.xi,
        "residual_boundary": sol.residual_boundary,
        "ode_residual": ode_res,
        "boundary_residual": b_res,
        "kernel_dimension": len(sol.kernel_basis),
        "kernel_basis_at_a": [k.layers[0, 0] for k in sol.kernel_basis],
    }
    text_json = dumps(report)
    text_csv = solution_csv(sol.y, layers)
    if args.output:
        _emit(args, "report.json", text_json, False)
        _emit(args, "solution.csv", text_csv, False)
    sys.stdout.write(text_csv if args.format == "csv" else text_json)
    return EXIT_OK if sol.unique else EXIT_DEFECT


def cmd_analyze(args) -> int:
    _, ps = _load_problem(args)
    cm = characteristic_matrix(ps)
    rep = analyze(cm)
    out = {"problem": ps.name, "M": cm.M, **rep.to_dict()}
    _emit(args, "analysis.json", dumps(out), True)
    return EXIT_OK if rep.invertible else EXIT_DEFECT


def _parse_eps_grid(text):
    if text is None:
        return None
    text = text.strip()
    if text.startswith("geom:"):
        try:
            _, hi, lo, num = text.split(":")
            return paramlab.default_eps_grid(int(num), float(hi), float(lo))
        except ValueError:
            raise ProblemFileError("--eps-grid", "expected geom:LARGEST:SMALLEST:COUNT") from None
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ProblemFileError("--eps-grid", "expected comma separated numbers") from None
    if not vals or any(v <= 0 for v in vals):
        raise ProblemFileError("--eps-grid", "values must be positive")
    return sorted(vals, reverse=True)


def sweep_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eps", "error", "discrepancy", "ratio", "solvable"])
    for r in records:
        w.writerow([fmt(r.eps), fmt(r.error), fmt(r.discrepancy), fmt(r.ratio), "true" if r.solvable else "false"])
    return buf.getvalue()


def run_sweep(doc, numerics, eps_grid=None):
    """All applicable checks, the sweep and the ratio band for one family."""
    fam = paramlab.Family.from_document(doc, numerics)
    grid = fam.grid_or_default(eps_grid)
    reports = [
        paramlab.check_condition_0(fam),
        paramlab.check_condition_I(fam, grid),
        paramlab.check_condition_II(fam, grid),
    ]
    ps0 = fam.limit()
    hypotheses = "continuity criterion: (0), (I), (II)"
    if isinstance(ps0.B, bnd.MultipointBoundary):
        reports += paramlab.check_multipoint_assumptions(fam, grid)
        hypotheses = (
            "multipoint, p = inf: (alpha), (beta), (gamma), (delta) imply (II)"
            if math.isinf(ps0.p)
            else "multipoint, p < inf: (alpha), (beta), (gamma_p), (gamma'), (delta) imply (II)"
        )
    records = paramlab.sweep(fam, grid)
    band = paramlab.estimate_gamma_bounds(records)
    errors = [r.error for r in records]
    summary = {
        "family": fam.name,
        "hypotheses_checked": hypotheses,
        "conditions": [r.to_dict() for r in reports],
        "all_conditions_pass": all(r.passed for r in reports),
        "error_decay": paramlab.trend_verdict(errors),
        "error_slope": paramlab.loglog_slope(grid, errors),
        "discrepancy_slope": paramlab.loglog_slope(grid, [r.discrepancy for r in records]),
        "gamma_band": band.to_dict(),
    }
    return reports, records, band, summary


def cmd_sweep(args) -> int:
    doc = load(_resolve(args.file))
    if "family" not in doc:
        raise ProblemFileError("family", "sweep needs a family section")
    numerics = numerics_from(doc.get("numerics"), _overrides(args))
    reports, records, band, summary = run_sweep(doc, numerics, _parse_eps_grid(args.eps_grid))
    text_csv = sweep_csv(records)
    text_json = dumps(summary)
    if args.output:
        _emit(args, "sweep.csv", text_csv, False)
        _emit(args, "verdicts.json", text_json, False)
    sys.stdout.write(text_csv if args.format == "csv" else text_json)
    return EXIT_OK if summary["all_conditions_pass"] else EXIT_DEFECT


def cmd_oracle_compare(args) -> int:
    _, ps = _load_problem(args)
    if ps.r != ps.m:
        raise ProblemFileError("dims", "oracle comparison needs r = m")
    sol = solve(ps)
    out = {"problem": ps.name, "threshold": args.threshold, "nodes": ps.numerics.nodes}
    if not sol.unique:
        out.update({"skipped": "defective problem", "solvability": sol.report.to_dict()})
        _emit(args, "compare.json", dumps(out), True)
        return EXIT_DEFECT
    try:
        yo = oracle_solve(ps)
    except OracleDefect as exc:
        out.update({"skipped": f"oracle: {exc}"})
        _emit(args, "compare.json", dumps(out), True)
        return EXIT_DEFECT
    diff = float(np.max(np.abs(yo.layers[0] - sol.y.layers[0])))
    out.update({"max_node_difference": diff, "agree": diff < args.threshold})
    _emit(args, "compare.json", dumps(out), True)
    return EXIT_OK if diff < args.threshold else EXIT_MISMATCH


def cmd_fixtures(args) -> int:
    for name in fixture_names():
        doc = load(fixture_path(name))
        kind = "family" if "family" in doc else "problem"
        sys.stdout.write(f"{name}\t{kind}\t{doc.get('description', '')}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="charmat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        p.add_argument("file", help="problem file (JSON) or @fixture")
        p.add_argument("--nodes", type=int, help="grid nodes (default 1025)")
        p.add_argument("--substeps", type=int, help="RK4 steps per grid cell (default 2)")
        p.add_argument("--rank-tol", type=float, help="relative rank tolerance (default 1e-8)")
        if output:
            p.add_argument("--output", help="directory for report files")

    p = sub.add_parser("solve", help="solve the boundary-value problem")
    common(p)
    p.add_argument("--layers", type=int, help="derivative layers in the CSV (default 0)")
    p.add_argument("--format", choices=("csv", "json"), default="json", help="what to print on stdout")
    p.add_argument("--eps", type=float, default=0.0, help="parameter value for eps expressions")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("analyze", help="characteristic matrix and Fredholm data")
    common(p)
    p.add_argument("--eps", type=float, default=0.0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="condition checks and eps sweep for a family")
    common(p)
    p.add_argument("--eps-grid", help="comma list or geom:LARGEST:SMALLEST:COUNT")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-compare", help="compare with the collocation oracle")
    common(p)
    p.add_argument("--threshold", type=float, default=1e-5)
    p.add_argument("--eps", type=float, default=0.0)
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("fixtures", help="list bundled fixtures")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProblemFileError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except (ContractError, ExprDomainError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except IntegrationError as exc:
        sys.stderr.write(f"integration failed: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
