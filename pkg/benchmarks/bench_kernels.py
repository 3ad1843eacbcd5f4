"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--iters 20000]

Prints the best wall time of each kernel per backend and the speedup.
"""
import argparse
import time

import numpy as np

from cellsp import _backend
from cellsp.generators import grid_complex, harmonic_signal, random_geometric_skeleton
from cellsp.harmonic import HarmonicConfig, initial_state, run_algorithm1


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_cycles(kern, repeat):
    sk = random_geometric_skeleton(40, 0.3, seed=1)
    A = sk.adjacency
    args = (A.indptr.astype(np.int64), A.indices.astype(np.int64), sk.num_nodes, 7)
    return _best(lambda: kern.simple_cycles(*args), repeat), f"RGG N=40, E={sk.num_edges}, p_max=7"


def bench_harmonic(kern, repeat, iters):
    g = grid_complex(8, 10, holes=[(2, 2), (4, 6)], num_diagonals=46, seed=0)
    cx = g.complex
    x = harmonic_signal(cx, 300.0, 0.05, seed=0)
    cfg = HarmonicConfig(max_iters=iters, tol_stop=0.0)
    init = initial_state(cx, 0)
    t = _best(lambda: run_algorithm1(x, cx, cfg, initial=init, backend=kern), repeat)
    return t, f"8x10 grid, E={cx.skeleton.num_edges}, {iters} iterations"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--iters", type=int, default=20000)
    args = ap.parse_args()
    backends = _backend.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the fallback is available")
    rows = []
    for name, run in (("simple_cycles", lambda k: bench_cycles(k, args.repeat)),
                      ("harmonic_loop", lambda k: bench_harmonic(k, args.repeat, args.iters))):
        times = {}
        for bname, kern in backends.items():
            times[bname], desc = run(kern)
        rows.append((name, desc, times))
    print(f"{'kernel':<15}{'case':<42}{'python s':>10}{'cython s':>10}{'speedup':>9}")
    for name, desc, times in rows:
        py, cy = times.get("python"), times.get("cython")
        sp = f"{py / cy:8.1f}x" if cy else "      n/a"
        print(f"{name:<15}{desc:<42}{py:>10.3f}{(cy or float('nan')):>10.3f}{sp}")


if __name__ == "__main__":
    main()
