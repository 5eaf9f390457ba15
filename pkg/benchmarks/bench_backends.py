#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-numpy fallback.

Times the four fused elementwise kernels on both backends in-process, then
runs one full solve per backend in subprocesses (backend selection happens at
import, so the end-to-end comparison needs fresh interpreters).

Usage: python benchmarks/bench_backends.py [--size M N] [--repeats R]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from relunmd import _backend  # noqa: E402

SOLVE_SNIPPET = """
import time
import relunmd as rn
from relunmd.io import synth_relu

m, _, _ = synth_relu(600, 300, 5, seed=1)
obs = rn.build_observed(m)
case = rn.RegularizerCase.l1l1(0.01, 0.015)
opts = rn.SolveOptions(rank=6, max_iter=300, tol=0.0, seed=3)
t0 = time.perf_counter()
rn.nmd_aapb(obs, case, opts)
print(f"{rn.BACKEND_NAME} {time.perf_counter() - t0:.3f}")
"""


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(m, n, repeats):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((m, n))
    data = np.maximum(rng.standard_normal((m, n)), 0.0)
    pos = data > 0
    out = np.empty_like(x)
    cases = {
        "slack_update": lambda b: b.slack_update(x, data, pos, out),
        "relu_residual_sq": lambda b: b.relu_residual_sq(x, data),
        "half_sqdiff": lambda b: b.half_sqdiff(data, x),
        "soft_threshold_into": lambda b: b.soft_threshold_into(x, 0.3, out),
    }
    backends = ["pure"] + (["compiled"] if _backend.HAVE_COMPILED else [])
    print(f"\nfused kernels on {m}x{n} float64 (best of {repeats}):")
    header = f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends)
    print(header + ("     speedup" if len(backends) == 2 else ""))
    for name, call in cases.items():
        times = [time_call(lambda b=_backend.get_backend(b): call(b), repeats)
                 for b in backends]
        row = f"{name:<22}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>10.2f}x"
        print(row)


def bench_solver():
    print("\nend-to-end solve (600x300, rank 6, 300 iterations):")
    for pure in ("0", "1"):
        env = dict(os.environ, RELU_NMD_PURE=pure,
                   PYTHONPATH=os.path.join(os.path.dirname(__file__),
                                           os.pardir, "src"))
        res = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env,
                             capture_output=True, text=True)
        if res.returncode != 0:
            print(res.stderr, file=sys.stderr)
            continue
        name, secs = res.stdout.split()
        print(f"  {name:<10} {float(secs):.3f}s")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", nargs=2, type=int, default=[2000, 1000])
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    print(f"active backend: {_backend.BACKEND_NAME} "
          f"(compiled available: {_backend.HAVE_COMPILED})")
    bench_kernels(args.size[0], args.size[1], args.repeats)
    bench_solver()


if __name__ == "__main__":
    main()
