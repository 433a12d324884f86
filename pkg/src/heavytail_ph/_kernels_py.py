"""Pure-numpy implementations of the hot kernels.

These are the fallback twins of the Cython extension in `_kernels.pyx`;
`_backend` picks whichever is available. Both compute the same quantities
in double precision, so results agree to rounding.
"""

import numpy as np
from scipy.special import gammaln

BACKEND_NAME = "python"


def bernstein_he_ccdf(node_vals, p, lam, xs):
    """Closed-form mixture CCDF on a grid.

    node_vals[i-1] holds the approximated function's value at log(n/i),
    i = 1..n; the result at each x is

        sum_i node_vals[i-1] * C(n,i) * e^{-ix} * (1-e^{-x})^{n-i}
        + sum_j p[j] * e^{-lam[j] x}

    Binomial terms are assembled in log space to stay finite for large n.
    """
    node_vals = np.asarray(node_vals, dtype=float)
    p = np.asarray(p, dtype=float)
    lam = np.asarray(lam, dtype=float)
    xs = np.asarray(xs, dtype=float)
    n = node_vals.size
    out = np.zeros(xs.shape, dtype=float)

    if n > 0:
        i = np.arange(1, n + 1, dtype=float)
        log_binom = gammaln(n + 1.0) - gammaln(i + 1.0) - gammaln(n - i + 1.0)
        pos = xs > 0.0
        if np.any(pos):
            x = xs[pos, None]
            log_terms = log_binom - i * x + (n - i) * np.log1p(-np.exp(-x))
            out[pos] = np.exp(log_terms) @ node_vals
        # At x = 0 only the i = n basis function is nonzero.
        out[~pos] += node_vals[-1]
    if p.size:
        out += np.exp(-np.outer(xs, lam)) @ p
    return out


def lindley_waits(increments):
    """FIFO waiting times from per-job increments S_j - I_{j+1}.

    Returns W with W[0] = 0 and W[j+1] = max(0, W[j] + increments[j]),
    computed via the running-minimum identity on cumulative sums.
    """
    increments = np.asarray(increments, dtype=float)
    w = np.empty(increments.size + 1, dtype=float)
    w[0] = 0.0
    if increments.size:
        c = np.cumsum(increments)
        floor = np.minimum(np.minimum.accumulate(c), 0.0)
        w[1:] = c - floor
    return w
