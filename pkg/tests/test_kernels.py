"""Backend parity: the compiled kernels against the pure-numpy fallback.

Both implementations compute identical quantities in double precision, so
they must agree to rounding on random inputs; the Bernstein-sum kernel is
additionally checked against a literal evaluation of its defining formula.
"""

import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavytail_ph import _backend, _kernels_py

try:
    from heavytail_ph import _kernels
except ImportError:
    _kernels = None

needs_compiled = pytest.mark.skipif(_kernels is None,
                                    reason="compiled extension not built")


def naive_bernstein_he(node_vals, p, lam, x):
    # Literal evaluation of the defining sum, as the oracle.
    n = len(node_vals)
    total = 0.0
    for i in range(1, n + 1):
        total += (node_vals[i - 1] * math.comb(n, i)
                  * math.exp(-i * x) * (1.0 - math.exp(-x)) ** (n - i))
    for pj, lj in zip(p, lam):
        total += pj * math.exp(-lj * x)
    return total


def test_python_kernel_matches_naive_sum():
    rng = np.random.default_rng(0)
    node_vals = np.sort(rng.random(12))
    p = np.array([0.05, 0.02])
    lam = np.array([0.3, 3.0])
    xs = np.array([0.0, 0.4, 1.3, 6.0])
    got = _kernels_py.bernstein_he_ccdf(node_vals, p, lam, xs)
    expect = [naive_bernstein_he(node_vals, p, lam, x) for x in xs]
    assert got == pytest.approx(expect, rel=1e-12)


def test_python_kernel_large_order_stable():
    # Log-space assembly must stay finite for orders where the raw
    # binomial coefficients overflow doubles (n >= 1030).
    n = 1200
    node_vals = 1.0 - np.exp(-np.linspace(5.0, 0.0, n))
    xs = np.array([0.1, 1.0, 5.0])
    vals = _kernels_py.bernstein_he_ccdf(node_vals, np.empty(0), np.empty(0),
                                         xs)
    assert np.all(np.isfinite(vals))
    assert np.all(vals >= 0.0)


@needs_compiled
def test_backends_agree_bernstein():
    rng = np.random.default_rng(1)
    node_vals = np.sort(rng.random(100))
    p = rng.random(4) * 0.1
    lam = rng.random(4) * 5.0 + 0.01
    xs = np.linspace(0.0, 12.0, 200)
    a = _kernels.bernstein_he_ccdf(node_vals, p, lam, xs)
    b = _kernels_py.bernstein_he_ccdf(node_vals, p, lam, xs)
    assert a == pytest.approx(b, rel=1e-11, abs=1e-13)


@needs_compiled
@given(seed=st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_backends_agree_lindley(seed):
    rng = np.random.default_rng(seed)
    inc = rng.normal(0.0, 2.0, size=rng.integers(0, 300))
    a = _kernels.lindley_waits(inc)
    b = _kernels_py.lindley_waits(inc)
    assert a == pytest.approx(b, abs=1e-9)


def test_env_var_forces_python_backend():
    # The selection happens at import, so probe it in a subprocess.
    code = ("import heavytail_ph; print(heavytail_ph.BACKEND_NAME)")
    out = subprocess.run([sys.executable, "-c", code],
                         capture_output=True, text=True,
                         env={"HEAVYTAIL_PH_BACKEND": "python",
                              "PATH": "/usr/bin:/bin"})
    assert out.stdout.strip() == "python"


def test_backend_exports():
    assert callable(_backend.bernstein_he_ccdf)
    assert callable(_backend.lindley_waits)
    assert _backend.BACKEND_NAME in ("cython", "python")
