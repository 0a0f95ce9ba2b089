"""Compare the compiled kernels with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--starts 50] [--json]

Each case reports the best wall time over ``--repeat`` runs per backend and
the speed-up of the compiled backend. Results are checked for agreement
before timing.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from wernerwit import kernels
from wernerwit.distill import distillability_operator
from wernerwit.operators import SubsystemSplit, bipartite_tensor, haar_vectors, rng_stream
from wernerwit.werner import WernerParams, copy_split, wn_dense


def _product_case(starts):
    w = wn_dense(WernerParams(3, -0.5), 1)
    t = np.ascontiguousarray(bipartite_tensor(w, copy_split(1)), dtype=np.complex128)
    s = np.ascontiguousarray(haar_vectors(t.shape[0], starts, rng_stream(0)), dtype=np.complex128)
    return lambda be: be.seesaw_product(t, s, 1e-12, 500)


def _product_two_copy_case(starts):
    w = wn_dense(WernerParams(3, -0.5), 2)
    t = np.ascontiguousarray(bipartite_tensor(w, copy_split(2)), dtype=np.complex128)
    s = np.ascontiguousarray(haar_vectors(t.shape[0], starts, rng_stream(1)), dtype=np.complex128)
    return lambda be: be.seesaw_product(t, s, 1e-12, 500)


def _rank_two_case(starts):
    x = distillability_operator(WernerParams(3, -0.6), 1)
    t = np.ascontiguousarray(bipartite_tensor(x, SubsystemSplit.interleaved(2)), dtype=np.complex128)
    frames = []
    for j in range(starts):
        q, _ = np.linalg.qr(haar_vectors(t.shape[1], 2, rng_stream(2, j)).T)
        frames.append(q)
    f = np.ascontiguousarray(np.array(frames), dtype=np.complex128)
    return lambda be: be.seesaw_rank_two(t, f, 1e-12, 500)


def _jacobi_case(_):
    rng = np.random.default_rng(3)
    a = rng.normal(size=(24, 24))
    a = a + a.T
    return lambda be: be.jacobi_eigh(a.copy(), 1e-15, 100)


CASES = {
    "seesaw_product one copy (6x6)": _product_case,
    "seesaw_product two copies (18x18)": _product_two_copy_case,
    "seesaw_rank_two d=3": _rank_two_case,
    "jacobi_eigh 24x24": _jacobi_case,
}


def run(repeat, starts):
    names = sorted(kernels.BACKENDS)
    rows = []
    for label, make in CASES.items():
        call = make(starts)
        first = {n: call(kernels.get_backend(n)) for n in names}
        if len(names) > 1:
            a, b = (np.asarray(first[n][0]) for n in names)
            agree = float(np.max(np.abs(a - b)))
        else:
            agree = 0.0
        times = {n: min(timeit.repeat(lambda: call(kernels.get_backend(n)), number=1, repeat=repeat)) for n in names}
        speedup = times["python"] / times["compiled"] if "compiled" in times else None
        rows.append({"case": label, "times": times, "speedup": speedup, "max_abs_diff": agree})
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--starts", type=int, default=50)
    parser.add_argument("--json", action="store_true", help="print JSON instead of a table")
    args = parser.parse_args(argv)
    rows = run(args.repeat, args.starts)
    if args.json:
        print(json.dumps({"backends": sorted(kernels.BACKENDS), "rows": rows}, indent=2, sort_keys=True))
        return 0
    if "compiled" not in kernels.BACKENDS:
        print("compiled extension not built; timing the Python backend only", file=sys.stderr)
    print(f"{'case':36s} {'python [s]':>11s} {'compiled [s]':>13s} {'speed-up':>9s} {'max diff':>9s}")
    for r in rows:
        cy = r["times"].get("compiled")
        cy_s = f"{cy:13.4f}" if cy is not None else f"{'n/a':>13s}"
        sp = f"{r['speedup']:9.1f}" if r["speedup"] is not None else f"{'n/a':>9s}"
        print(f"{r['case']:36s} {r['times']['python']:11.4f} {cy_s} {sp} {r['max_abs_diff']:9.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
