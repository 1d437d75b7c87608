import numpy as np
import pytest

from charmat.exprs import evaluate, parse
from charmat.problemfile import build_problem


def problem_doc(A, f, boundary, c, m=1, n=1, r=None, p="inf", a=0, b=1, **extra):
    r = m if r is None else r
    doc = {
        "interval": {"a": a, "b": b},
        "dims": {"m": m, "n": n, "r": r, "p": p},
        "A": A,
        "f": f,
        "boundary": boundary,
        "c": c,
    }
    doc.update(extra)
    return doc


def two_point_doc(A, f, Ba, Bb, c, **kw):
    return problem_doc(A, f, {"type": "two_point", "Ba": Ba, "Bb": Bb}, c, **kw)


def build(doc, eps=0.0, **numerics):
    from charmat.problemfile import numerics_from

    return build_problem(doc, eps, numerics_from(doc.get("numerics"), numerics) if numerics else None)


def exact_values(texts, t):
    """Node values of closed-form component expressions, shape (N, m)."""
    return np.stack([np.broadcast_to(evaluate(parse(e), t), t.shape) for e in texts], axis=-1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
