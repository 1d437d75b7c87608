import json
import math

import numpy as np
import pytest

from charmat import boundary as bnd
from charmat.problemfile import ProblemFileError, build_problem, fixture_names, load, load_fixture, numerics_from

from conftest import problem_doc, two_point_doc


def test_every_fixture_builds():
    names = fixture_names()
    assert len(names) >= 20
    for name in names:
        doc = load_fixture(name)
        ps = build_problem(doc)
        assert ps.name == name
        if "family" in doc:
            build_problem(doc, 1e-3)


def test_interval_expressions():
    ps = build_problem(load_fixture("rotation_endpoint"))
    assert ps.b == pytest.approx(math.pi / 2)


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.update(A=[["sin(t"]]), "A[0][0]"),
        (lambda d: d.update(f=["1", "2"]), "f"),
        (lambda d: d.update(c=["t"]), "c[0]"),
        (lambda d: d["dims"].update(m=0), "dims.m"),
        (lambda d: d["dims"].update(p=0.5), "dims.p"),
        (lambda d: d.update(interval={"a": 1, "b": 0}), "interval"),
        (lambda d: d["boundary"].update(type="weird"), "boundary.type"),
        (lambda d: d["boundary"].update(Ba=[[1, 2]]), "boundary.Ba"),
        (lambda d: d.update(numerics={"nodes": 1}), "numerics"),
        (lambda d: d.update(numerics={"bogus": 1}), "numerics"),
        (lambda d: d.pop("A"), "A"),
    ],
)
def test_errors_name_the_field(mutate, field):
    doc = two_point_doc([["1"]], ["0"], [[1]], [[0]], [1])
    mutate(doc)
    with pytest.raises(ProblemFileError) as info:
        build_problem(doc)
    assert info.value.field == field
    assert str(info.value).startswith(field)


def test_multipoint_section():
    doc = problem_doc(
        [["1"]],
        ["0"],
        {
            "type": "multipoint",
            "groups": [[{"point": "1", "betas": {"0": [["eps"]]}}], [{"point": "0.5 + eps", "betas": {"0": [[1]], "1": [[2]]}}]],
            "limit_points": [0.5],
        },
        [1],
    )
    B = build_problem(doc, 0.25).B
    assert isinstance(B, bnd.MultipointBoundary)
    (_, z), (_, t1) = list(B.terms())
    assert t1.point == 0.75 and z.betas[0, 0, 0] == 0.25
    np.testing.assert_array_equal(t1.betas[:, 0, 0], [1, 2])
    doc["boundary"]["groups"][1][0]["betas"] = {"5": [[1]]}
    with pytest.raises(ProblemFileError, match="derivative order"):
        build_problem(doc)
    doc["boundary"]["groups"][1][0] = {"point": 2, "betas": {}}
    with pytest.raises(ProblemFileError, match="outside"):
        build_problem(doc)


def test_scalar_fields_reject_t():
    doc = two_point_doc([["1"]], ["0"], [["t"]], [[0]], [1])
    with pytest.raises(ProblemFileError, match="eps only"):
        build_problem(doc)


def test_family_limit_override():
    from charmat.exprs import ExprDomainError, evaluate, parse

    doc = load_fixture("family_violates_I")
    # the raw coefficient is singular at eps = 0; the limit section replaces it
    with pytest.raises(ExprDomainError):
        evaluate(parse(doc["A"][0][0]), 0.3, 0.0)
    ps0 = build_problem(doc, 0.0)
    assert np.isfinite(ps0.A.evaluate(np.array([0.3]), 0.0)).all()


def test_numerics_overrides():
    num = numerics_from({"nodes": 65}, {"nodes": None, "substeps": 4})
    assert (num.nodes, num.substeps) == (65, 4)


def test_load_reports_json_position(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "a": 1,\n  oops\n}')
    with pytest.raises(ProblemFileError, match="line 3"):
        load(bad)
    with pytest.raises(ProblemFileError, match="cannot read"):
        load(tmp_path / "missing.json")
    good = tmp_path / "good.json"
    good.write_text(json.dumps(two_point_doc([["1"]], ["0"], [[1]], [[0]], [1])))
    assert build_problem(load(good)).m == 1
