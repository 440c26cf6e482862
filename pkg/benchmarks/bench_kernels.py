"""Compare the compiled and numpy backends of the radial information kernel.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so no environment variable is needed.
Prints per-case timings, the speedup and the largest absolute difference.
"""

import argparse
import time

import numpy as np

from fadecap import _fallback
from fadecap.exact_mi import QuadratureBudget, _legendre, _y_rule

try:
    from fadecap import _kernels
except ImportError:  # extension not built
    _kernels = None

CASES = [
    # (label, L, beta, sigma2, u, n_support)
    ("L=1 beta=1 two-point", 1, 1.0, 1.0, 0.0, 2),
    ("L=1 beta=0.5 four-point", 1, 0.5, 0.1, 0.8, 4),
    ("L=2 beta=0.5 four-point", 2, 0.5, 0.3, 0.5, 4),
    ("L=4 beta=0.1 gaussian-32", 4, 0.1, 0.05, 0.9, 32),
]


def _args(L, beta, sigma2, u, n_support, budget):
    rng = np.random.default_rng(n_support)
    radii = np.sort(rng.uniform(0.0, 2.5, n_support))
    logp = np.log(np.full(n_support, 1.0 / n_support))
    g, w = _legendre(budget.n_x)
    yn, yw = _y_rule(L, budget.n_y, budget.half_width)
    return (radii, radii, logp, L, beta, sigma2, u, g, w, budget.half_width, yn, yw)


def _time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args()
    budget = QuadratureBudget()
    print(f"{'case':28s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s} {'max diff':>10s}")
    for label, *case in CASES:
        args = _args(*case, budget)
        t_py, out_py = _time(_fallback.mixture_information, args, opts.repeat)
        if _kernels is None:
            print(f"{label:28s} {1e3 * t_py:10.2f} {'n/a':>12s}")
            continue
        t_c, out_c = _time(_kernels.mixture_information, args, opts.repeat)
        diff = float(np.max(np.abs(out_py - out_c)))
        print(f"{label:28s} {1e3 * t_py:10.2f} {1e3 * t_c:12.2f} {t_py / t_c:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
