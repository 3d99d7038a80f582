"""Compare the compiled jump-sum kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--points N] [--jumps M] [--repeat R]
"""

import argparse
import time

import numpy as np

from nchardy import _kernels_py

try:
    from nchardy import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--jumps", type=int, default=384)
    ap.add_argument("--coef", type=int, default=8, help="coefficient columns (2 d^2)")
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    xs = rng.uniform(-4, 4, a.points)
    ys = 2.0 ** rng.uniform(-10, 3, a.points)
    edges = np.sort(rng.uniform(-2, 2, a.jumps))
    coef = rng.standard_normal((a.jumps, a.coef))
    args = (xs, ys, edges, coef)
    print(f"points={a.points} jumps={a.jumps} coef={a.coef}")
    for name in ("grad_sum", "ext_sum"):
        tp, ref = _time(getattr(_kernels_py, name), args, a.repeat)
        line = f"{name:9s} numpy {tp * 1e3:9.2f} ms"
        if _ckernels is not None:
            tc, out = _time(getattr(_ckernels, name), args, a.repeat)
            err = float(np.abs(out - ref).max() / max(np.abs(ref).max(), 1e-300))
            line += f"   cython {tc * 1e3:9.2f} ms   speedup {tp / tc:6.2f}x   rel diff {err:.1e}"
        else:
            line += "   cython unavailable"
        print(line)


if __name__ == "__main__":
    main()
