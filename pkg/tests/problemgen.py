"""Random problem documents for property and acceptance tests."""

import numpy as np


def _num(x):
    return float(round(float(x), 6))


def _mat(rng, rows, cols, scale=1.0):
    return [[_num(scale * rng.standard_normal()) for _ in range(cols)] for _ in range(rows)]


def random_coefficients(rng, m):
    A = [
        [f"{_num(rng.normal(0, 0.8))} + {_num(rng.normal(0, 0.5))}*sin({int(rng.integers(1, 4))}*t)" for _ in range(m)]
        for _ in range(m)
    ]
    f = [f"{_num(rng.normal())}*cos({int(rng.integers(1, 4))}*t) + {_num(rng.normal())}" for _ in range(m)]
    return A, f


def random_boundary(rng, m, n, r, kind=None):
    kind = kind or ["canonical", "multipoint", "two_point"][rng.integers(3)]
    if kind == "canonical":
        phi = [[f"{_num(rng.normal(0, 0.5))}*cos({int(rng.integers(0, 3))}*t)" for _ in range(m)] for _ in range(r)]
        return {"type": "canonical", "alphas": [_mat(rng, r, m) for _ in range(n)], "Phi": phi}
    if kind == "two_point":
        return {"type": "two_point", "Ba": _mat(rng, r, m), "Bb": _mat(rng, r, m)}
    pts = sorted(_num(x) for x in rng.uniform(0, 1, int(rng.integers(1, 4))))
    groups = [[]]
    for tk in pts:
        betas = {str(l): _mat(rng, r, m, 1.0 if l == 0 else 0.3) for l in range(n + 1) if l == 0 or rng.random() < 0.4}
        groups.append([{"point": tk, "betas": betas}])
    return {"type": "multipoint", "groups": groups, "limit_points": pts}


def random_problem(rng, m, r, n, p=None, kind=None):
    p = p if p is not None else ["inf", 1, 2][rng.integers(3)]
    A, f = random_coefficients(rng, m)
    return {
        "name": f"random_m{m}_r{r}_n{n}",
        "interval": {"a": 0, "b": 1},
        "dims": {"m": m, "n": n, "r": r, "p": p},
        "A": A,
        "f": f,
        "boundary": random_boundary(rng, m, n, r, kind),
        "c": [_num(x) for x in rng.standard_normal(r)],
    }


def defective_problem(rng, m, r, rank, n=1):
    """B = G B0 with G of rank `rank`: dim ker = m - rank, dim coker = r - rank.

    B0 is a two-point operator with min(m, r0) independent rows, so the
    defect of the characteristic matrix is exact up to rounding.
    """
    r0 = m
    G = np.reshape(_mat(rng, r, rank), (r, rank)) @ np.reshape(_mat(rng, rank, r0), (rank, r0))
    Ba0 = np.asarray(_mat(rng, r0, m))
    Bb0 = np.asarray(_mat(rng, r0, m))
    doc = random_problem(rng, m, r, n, kind="two_point")
    doc["boundary"] = {"type": "two_point", "Ba": (G @ Ba0).tolist(), "Bb": (G @ Bb0).tolist()}
    doc["name"] = f"defect_m{m}_r{r}_rank{rank}"
    return doc
