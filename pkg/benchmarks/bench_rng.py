"""Compare the compiled and numpy random-number backends.

Run with ``python benchmarks/bench_rng.py``.  Prints the throughput of each
backend for a block of Gaussian variates and checks that both produce the same
values.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from fbgmac import rng


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--n", type=int, default=60)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    trials = np.arange(args.trials)
    backends = ["numpy"] + (["compiled"] if rng.COMPILED_AVAILABLE else [])
    results = {}
    for backend in backends:
        def run(backend=backend):
            return rng.gaussian(7, trials, args.n, rng.STREAM_ETA1, backend=backend)

        results[backend] = run()
        best = min(timeit.repeat(run, number=1, repeat=args.repeat))
        rate = args.trials * args.n / best / 1e6
        print(f"{backend:>9}: {best * 1e3:8.2f} ms  ({rate:6.2f} M normals/s)")
    if len(results) == 2:
        diff = np.max(np.abs(results["numpy"] - results["compiled"]))
        print(f"max |numpy - compiled| = {diff:.2e}")
    else:
        print("compiled backend not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
