#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Both implementations are importable side by side, so no environment
tricks are needed here; set TRANSDENS_NUMBA=0 to make the package itself
use the numpy path. Run:

    python benchmarks/compare_backends.py [--paths 400] [--steps 1100] [--dims 12]
"""

import argparse
import time

import numpy as np

from transdens import _kernels as k


def bench(label, fn_fast, fn_slow, args, repeats=5):
    fast = fn_fast(*args)  # warm-up triggers JIT compilation
    slow = fn_slow(*args)
    np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-13)

    def clock(fn):
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn(*args)
            best = min(best, time.perf_counter() - t0)
        return best

    t_fast = clock(fn_fast)
    t_slow = clock(fn_slow)
    name = "numba " if k.NUMBA_ENABLED else "active"
    print(
        f"{label:<28s} {name}: {t_fast * 1e3:8.2f} ms   numpy: {t_slow * 1e3:8.2f} ms"
        f"   speedup: {t_slow / t_fast:5.2f}x"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=400)
    parser.add_argument("--steps", type=int, default=1100)
    parser.add_argument("--dims", type=int, default=12)
    args = parser.parse_args()

    if not k.NUMBA_ENABLED:
        print("note: numba backend disabled; comparing numpy against itself")

    rng = np.random.default_rng(0)
    n_samples = args.paths * args.steps
    x = rng.normal(0, 1, n_samples)
    u = rng.uniform(0, 1, n_samples)
    init = rng.normal(0, 1, (args.paths, 6))
    noise = rng.normal(0, 1, (args.paths, args.steps, 6))
    bessel_args = rng.uniform(0, 50, 100_000)

    print(f"samples: {n_samples:,}  dims: {args.dims}")
    bench(
        f"hermite recursion (m={args.dims})",
        k.hermite_matrix,
        k.hermite_matrix_numpy,
        (x, args.dims),
    )
    bench(
        f"trig evaluation (m={args.dims | 1})",
        k.trig_matrix,
        k.trig_matrix_numpy,
        (u, args.dims | 1),
    )
    bench(
        "bessel I_2 over 1e5 points",
        k.bessel_i_array,
        k.bessel_i_array_numpy,
        (2.0, bessel_args),
    )
    bench(
        "ar1 recursion (d=6)",
        k.ar1_paths,
        k.ar1_paths_numpy,
        (init, 0.99, noise),
    )


if __name__ == "__main__":
    main()
