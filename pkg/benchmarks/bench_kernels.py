"""Time the numba kernels against the numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Also times one end-to-end boundary-reduced difference per kernel set so the
share of the runtime that the kernels actually control is visible (the rest
is LAPACK: LU solves, matrix products, SVD).
"""
import argparse
import json
import time

import numpy as np

from halfrobin import _kernels, halfspace
from halfrobin.grid import CoefficientSpec, GridFunction, make_grid, sample_coefficient


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    for N in (512, 2048):
        k = rng.standard_normal(N)
        yield f"circulant n=1 N={N}", "circulant", (k,)
    k2 = rng.standard_normal((48, 48)) + 1j * rng.standard_normal((48, 48))
    yield "circulant n=2 N=48 (complex)", "circulant", (k2,)
    for Nx, Nt in ((256, 128), (1024, 512)):
        a = rng.standard_normal(Nx).astype(complex)
        yield f"strip_coo {Nx}x{Nt}", "strip_coo", (a, Nt, 0.1, 0.05)
    u = rng.standard_normal((1024, 512)) + 1j * rng.standard_normal((1024, 512))
    om = rng.uniform(1, 10, 1024).astype(complex)
    t = np.linspace(0, 6, 512)
    yield "laplace_quad 1024x512", "laplace_quad", (u, om, t, np.full(512, t[1]))


def end_to_end(kset, N=1024, repeat=1):
    g = make_grid(1, N, 100.0)
    a2 = sample_coefficient(CoefficientSpec("gaussian", a=1.0, sigma=5.0), g)
    a1 = GridFunction(g, np.zeros(g.size))
    saved = _kernels.active
    _kernels.active = kset
    try:
        return best_of(lambda: halfspace.boundary_reduced_difference(a1, a2, -10.0), repeat)
    finally:
        _kernels.active = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)

    sets = [_kernels.numpy_kernels]
    if _kernels.numba_kernels is not None:
        sets.append(_kernels.numba_kernels)
    rows = []
    for label, name, inputs in cases():
        row = {"case": label}
        for ks in sets:
            fn = getattr(ks, name)
            fn(*inputs)  # warm-up (JIT compile or page-in)
            row[ks.name] = best_of(lambda: fn(*inputs), args.repeat)
        rows.append(row)
    e2e = {"case": "boundary_reduced_difference N=1024 (end to end)"}
    for ks in sets:
        e2e[ks.name] = end_to_end(ks)
    rows.append(e2e)

    w = max(len(r["case"]) for r in rows)
    print(f"{'case':<{w}}  {'numpy [s]':>10}  {'numba [s]':>10}  speedup")
    for r in rows:
        nb = r.get("numba")
        sp = f"{r['numpy'] / nb:7.2f}x" if nb else "    n/a"
        print(f"{r['case']:<{w}}  {r['numpy']:10.4f}  {nb if nb is not None else float('nan'):10.4f}  {sp}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
