#!/usr/bin/env python3
"""Benchmark the compiled mesh kernels against the NumPy fallback.

Run after building the extension in place:

    python setup.py build_ext --inplace
    python benchmarks/bench_kernels.py
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fourval import _kernels_np  # noqa: E402

try:
    from fourval import _kernels as _compiled
except ImportError:
    _compiled = None

NIG_ARGS = (6.2, -3.8, -2.5, 0.15, 0.113, 0.071, 1.0, 0.0, 1.0, 0.75, 0.75)
SV_ARGS = (0.5, 1.0, 0.05, 0.5, 0.25, -0.5, 0.04, 1.0, 0.04, 0.75, 0.75)


def bench(fn, args, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    if _compiled is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return 1
    for n in (500, 1500, 3000):
        u = np.linspace(-200.0, 200.0, n)
        u1, u2 = np.broadcast_arrays(u[:, None], u[None, :])
        u1, u2 = np.ascontiguousarray(u1), np.ascontiguousarray(u2)
        print(f"mesh {n} x {n} ({n * n / 1e6:.2f}M nodes)")
        for label, args in (("nig2d", NIG_ARGS + (u1, u2, 0.25)),
                            ("dhsv ", SV_ARGS + (u1, u2, 0.5))):
            fn_np = getattr(_kernels_np, f"{label.strip()}_mgf_mesh")
            fn_cy = getattr(_compiled, f"{label.strip()}_mgf_mesh")
            t_np, out_np = bench(fn_np, args)
            t_cy, out_cy = bench(fn_cy, args)
            rel = np.max(np.abs(out_np - out_cy) / (np.abs(out_np) + 1e-300))
            print(f"  {label}: numpy {t_np * 1e3:8.1f} ms   cython {t_cy * 1e3:8.1f} ms"
                  f"   speedup {t_np / t_cy:5.2f}x   max rel diff {rel:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
