"""Compare the numba kernels with their pure-numpy twins.

Kernel timings run in-process (``kernels.X`` against ``kernels.NUMPY.X``).
The end-to-end solver timing is repeated in a subprocess with
``WKBLAB_DISABLE_JIT=1`` because the backend is fixed at import time.

    python benchmarks/bench_kernels.py [--repeat 20] [--size 1048576]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from wkblab import kernels
from wkblab._jit import backend


def best_of(fn, repeat: int) -> float:
    fn()  # warm-up (triggers compilation)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(size: int, repeat: int) -> list[tuple[str, float, float]]:
    rng = np.random.default_rng(0)
    x = np.linspace(-np.pi, np.pi, size, endpoint=False)
    c = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    w = rng.random(size)
    u, k1, k2, k3, k4 = (rng.standard_normal(size // 2) + 1j * rng.standard_normal(size // 2) for _ in range(5))
    e = np.exp(1j * rng.random(size // 2))
    out = np.empty_like(u)
    cases = {
        "bump(deriv=2)": (lambda: kernels.bump(x, 0.0, 1.5, 1.0, 2 * np.pi, 2),
                          lambda: kernels.NUMPY.bump(x, 0.0, 1.5, 1.0, 2 * np.pi, 2)),
        "weighted_sq_sum": (lambda: kernels.weighted_sq_sum(c, w),
                            lambda: kernels.NUMPY.weighted_sq_sum(c, w)),
        "lawson_stage": (lambda: kernels.lawson_stage(u, e, k1, e, 0.01, out),
                         lambda: kernels.NUMPY.stage(u, e, k1, e, 0.01, out)),
        "lawson_final": (lambda: kernels.lawson_final(u, k1, k2, k3, k4, e, e * e, 0.01, out),
                         lambda: kernels.NUMPY.final(u, k1, k2, k3, k4, e, e * e, 0.01, out)),
    }
    return [(name, best_of(a, repeat), best_of(b, repeat)) for name, (a, b) in cases.items()]


SOLVE_SNIPPET = """
import json, time
from wkblab._jit import backend
from wkblab.inflation import prepare_initial_kdv
from wkblab.profiles import Profile
from wkblab.solvers import SolverConfig, solve_kdv
from wkblab.spectral import make_grid
p = Profile(0.0, 1.0, 0.03); eps = 1 / 128; g = make_grid(128, 8)
u0 = prepare_initial_kdv(p, eps, g)
cfg = SolverConfig(final_time=1.0, richardson=False)
solve_kdv(u0, eps, cfg)
t = time.perf_counter(); solve_kdv(u0, eps, cfg); dt = time.perf_counter() - t
print(json.dumps({"backend": backend(), "seconds": dt}))
"""


def solve_timing(disable_jit: bool) -> dict:
    env = dict(os.environ)
    if disable_jit:
        env["WKBLAB_DISABLE_JIT"] = "1"
    else:
        env.pop("WKBLAB_DISABLE_JIT", None)
    out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--size", type=int, default=1 << 20)
    args = ap.parse_args()
    if backend() != "numba":
        print("numba backend unavailable in this process; kernel columns compare numpy with itself")
    print(f"{'kernel':<18}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}")
    for name, jit_t, np_t in kernel_table(args.size, args.repeat):
        print(f"{name:<18}{1e3 * jit_t:>12.3f}{1e3 * np_t:>12.3f}{np_t / jit_t:>10.2f}")
    fast, slow = solve_timing(False), solve_timing(True)
    print(f"solve_kdv (eps=1/128, T=1): {fast['backend']} {fast['seconds']:.3f} s, "
          f"{slow['backend']} {slow['seconds']:.3f} s")


if __name__ == "__main__":
    main()
