"""Time the numba and numpy round kernels on the same runs.

    python benchmarks/bench_kernels.py [--runs 5] [--m 22]

Both kernels must produce bit-identical supports and message counts; the
script checks that before printing timings.
"""
import argparse
import time
import warnings

import numpy as np

from jointsparse import AlgoParams, generate_instance, random_regular, run_djadmm, run_djist
from jointsparse import kernels
from jointsparse.djist import NonConvergenceWarning

SOLVERS = {
    "djist": (run_djist, AlgoParams.reference, kernels.djist_advance_numba, kernels.djist_advance_numpy),
    "djadmm": (run_djadmm, AlgoParams.reference_admm, kernels.djadmm_advance_numba,
               kernels.djadmm_advance_numpy),
}


def bench(name, runs, m, n=100, k=10, V=10):
    run, params, fast, slow = SOLVERS[name]
    params = params()
    # compile outside the timed region
    run(generate_instance(n, m, k, V, seed=0), random_regular(V, 5, seed=0),
        params.replace(max_iters=5), advance=fast)
    times = {"numba": 0.0, "numpy": 0.0}
    rounds = 0
    for i in range(runs):
        inst = generate_instance(n, m, k, V, seed=(1, i))
        topo = random_regular(V, 5, seed=(1, i))
        out = {}
        for label, advance in (("numba", fast), ("numpy", slow)):
            start = time.perf_counter()
            out[label] = run(inst, topo, params, advance=advance)
            times[label] += time.perf_counter() - start
        a, b = out["numba"], out["numpy"]
        if not (np.array_equal(a.supports, b.supports) and a.n_messages == b.n_messages):
            raise SystemExit(f"{name}: kernels disagree on run {i}")
        rounds += a.rounds
    print(f"{name:7s} runs={runs} m={m} rounds={rounds:7d}  numba {times['numba']:7.2f}s"
          f"  numpy {times['numpy']:7.2f}s  speedup {times['numpy'] / times['numba']:6.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=5)
    parser.add_argument("--m", type=int, default=22)
    args = parser.parse_args()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        for name in SOLVERS:
            bench(name, args.runs, args.m)


if __name__ == "__main__":
    main()
