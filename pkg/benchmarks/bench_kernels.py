"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the two hot kernels (the closed-form Bernstein+HE CCDF and the
Lindley waiting-time recursion) on representative workloads and prints a
small table. Run from the repository root:

    python3 benchmarks/bench_kernels.py

Setting HEAVYTAIL_PH_BACKEND=python affects the package-level selection
only; this script imports both implementations explicitly so a single run
compares them side by side.
"""

import timeit

import numpy as np

from heavytail_ph import _kernels_py

try:
    from heavytail_ph import _kernels
except ImportError:
    _kernels = None


def bench(label, fn, repeat=5, number=20):
    best = min(timeit.repeat(fn, repeat=repeat, number=number)) / number
    print(f"  {label:<10} {best * 1e3:10.3f} ms")
    return best


def main():
    rng = np.random.default_rng(0)

    print("bernstein_he_ccdf: order-100 body + 4 tail terms, 512-point grid")
    node_vals = np.sort(rng.random(100))
    p = rng.random(4) * 0.1
    lam = np.sort(rng.random(4) * 2.0 + 0.01)
    xs = np.linspace(0.0, 40.0, 512)
    t_py = bench("python", lambda: _kernels_py.bernstein_he_ccdf(
        node_vals, p, lam, xs))
    if _kernels is not None:
        t_cy = bench("cython", lambda: _kernels.bernstein_he_ccdf(
            node_vals, p, lam, xs))
        print(f"  speedup    {t_py / t_cy:10.2f}x")

    print("lindley_waits: 2,000,000 jobs")
    inc = rng.normal(-0.5, 1.5, size=2_000_000)
    t_py = bench("python", lambda: _kernels_py.lindley_waits(inc), number=5)
    if _kernels is not None:
        t_cy = bench("cython", lambda: _kernels.lindley_waits(inc), number=5)
        print(f"  speedup    {t_py / t_cy:10.2f}x")

    if _kernels is None:
        print("compiled extension not available; python fallback only")


if __name__ == "__main__":
    main()
