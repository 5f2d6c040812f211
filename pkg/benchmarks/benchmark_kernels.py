"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Runs identical Strang-split stepping workloads through both backends and
reports steps/second and the speedup.  The same comparison can be forced
package-wide by setting KINFP_DISABLE_NUMBA=1 before import.

Usage: python benchmarks/benchmark_kernels.py [--nx 128] [--steps 400]
"""

import argparse
import time

import numpy as np

from kinfp import ModelParams, build_grid, cfl_timestep, default_initial_condition
from kinfp import kernels
from kinfp.solver import Stepper


def time_backend(backend: str, nx: int, steps: int) -> float:
    kernels.set_backend(backend)
    params = ModelParams(alpha=1.5, kind="exp", beta=0.5)
    grid = build_grid(50.0, 50.0, nx, nx)
    stepper = Stepper(grid, params)
    dt = cfl_timestep(grid, params, 0.45)
    values = default_initial_condition(grid).values.copy()
    # warm-up: trigger jit compilation outside the timed section
    values = stepper.step(values, dt)
    t0 = time.perf_counter()
    for _ in range(steps):
        values = stepper.step(values, dt)
    elapsed = time.perf_counter() - t0
    assert np.all(np.isfinite(values))
    return elapsed


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=128, help="cells per axis")
    ap.add_argument("--steps", type=int, default=400, help="steps per backend")
    args = ap.parse_args()

    results = {}
    original = kernels.active_backend()
    try:
        backends = ["numpy"] + (["numba"] if kernels.HAS_NUMBA else [])
        for backend in backends:
            elapsed = time_backend(backend, args.nx, args.steps)
            results[backend] = elapsed
            print(
                f"{backend:>6}: {args.steps} steps of {args.nx}x{args.nx} "
                f"in {elapsed:.2f}s ({args.steps / elapsed:.1f} steps/s)"
            )
    finally:
        kernels.set_backend(original)
    if not kernels.HAS_NUMBA:
        print("numba unavailable (or disabled via KINFP_DISABLE_NUMBA); "
              "only the numpy path was timed")
    elif "numba" in results:
        print(f"speedup numba/numpy: {results['numpy'] / results['numba']:.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
