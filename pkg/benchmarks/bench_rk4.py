"""Compiled RK4 kernel versus the numpy fallback.

    python benchmarks/bench_rk4.py [--nodes 1025] [--m 4] [--repeat 5]

Prints per-call times for both backends and the max difference between them.
"""

import argparse
import time

import numpy as np

from charmat import kernels


def problem(nodes, m, substeps, seed=0):
    rng = np.random.default_rng(seed)
    S = (nodes - 1) * substeps
    t = np.linspace(0.0, 1.0, 2 * S + 1)
    base = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    A = np.ascontiguousarray(np.cos(3 * t)[:, None, None] * base)
    f = np.ascontiguousarray(np.exp(1j * t)[:, None] * np.ones(m))
    Y0 = np.hstack([np.eye(m), np.zeros((m, 1))]).astype(complex)
    w = np.r_[np.zeros(m), 1.0].astype(complex)
    return t, A, f, Y0, w


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=1025)
    ap.add_argument("--m", type=int, default=4)
    ap.add_argument("--substeps", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    data = problem(args.nodes, args.m, args.substeps)
    t_py, (out_py, _) = best_of(kernels.rk4_linear_py, data, args.repeat)
    print(f"nodes={args.nodes} m={args.m} substeps={args.substeps}")
    print(f"python   {t_py * 1e3:9.2f} ms")
    if kernels.rk4_linear_compiled is None:
        print("compiled kernel not built; only the fallback was timed")
        return
    t_c, (out_c, _) = best_of(kernels.rk4_linear_compiled, data, args.repeat)
    diff = float(np.max(np.abs(np.asarray(out_c) - np.asarray(out_py))))
    print(f"cython   {t_c * 1e3:9.2f} ms")
    print(f"speedup  {t_py / t_c:9.1f}x   max |diff| {diff:.2e}")


if __name__ == "__main__":
    main()
