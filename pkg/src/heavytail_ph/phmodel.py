"""Continuous phase-type distributions as (alpha, A) vector-matrix pairs.

Evaluation of the matrix exponential goes through uniformization, which
preserves nonnegativity and has a certified truncation error; moments come
from linear solves against -A, never an explicit inverse.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import (CCDF_UNDERFLOW, PROB_NOISE_TOL, PROPER_SUM_TOL,
                        UNIFORMIZATION_TAIL)

# Largest uniformized step taken in one Poisson series; longer horizons are
# split so the series stays short and e^{-q dx} representable.
_MAX_POISSON_STEP = 400.0


@dataclass(frozen=True)
class PhaseTypeModel:
    """Initial probability vector plus sub-generator matrix."""

    alpha: np.ndarray
    A: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).ravel()
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != alpha.size:
            raise ValueError("alpha/A shape mismatch")
        # Tolerated numerical noise: tiny negative probabilities clamp to 0.
        small = (alpha < 0) & (alpha >= -PROB_NOISE_TOL)
        alpha[small] = 0.0
        alpha.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "A", A)

    @property
    def order(self) -> int:
        return self.alpha.size

    @property
    def is_proper(self) -> bool:
        return abs(float(self.alpha.sum()) - 1.0) <= PROPER_SUM_TOL

    @property
    def exit_rates(self) -> np.ndarray:
        return -self.A @ np.ones(self.order)

    # -- persistence ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"alpha": self.alpha.tolist(), "A": self.A.tolist(),
                "meta": dict(self.meta)}

    @classmethod
    def from_dict(cls, doc: dict) -> "PhaseTypeModel":
        return cls(alpha=np.asarray(doc["alpha"], dtype=float),
                   A=np.asarray(doc["A"], dtype=float),
                   meta=dict(doc.get("meta", {})))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"format": 1, **self.to_dict()}, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PhaseTypeModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def validate(model: PhaseTypeModel) -> list[str]:
    """Return the list of violated invariants (empty when valid)."""
    issues = []
    alpha, A = model.alpha, model.A
    for i, a in enumerate(alpha):
        if a < -PROB_NOISE_TOL:
            issues.append(f"alpha[{i}] negative: {a:.3e}")
        if a > 1.0 + PROB_NOISE_TOL:
            issues.append(f"alpha[{i}] exceeds 1: {a:.3e}")
    total = float(alpha.sum())
    if total > 1.0 + PROB_NOISE_TOL or total < 0.0:
        issues.append(f"alpha sums to {total:.12f}, outside [0, 1]")
    n = model.order
    for i in range(n):
        if A[i, i] >= 0:
            issues.append(f"A[{i},{i}] nonnegative diagonal: {A[i, i]:.3e}")
        for j in range(n):
            if i != j and A[i, j] < 0:
                issues.append(f"A[{i},{j}] negative off-diagonal: {A[i, j]:.3e}")
        row_sum = float(A[i].sum())
        if row_sum > 1e-9 * max(1.0, abs(A[i, i])):
            issues.append(f"row {i} sums to {row_sum:.3e} > 0")
    return issues


def _require_valid(model: PhaseTypeModel) -> None:
    issues = validate(model)
    if issues:
        raise ValueError("invalid phase-type model: " + "; ".join(issues))


# -- evaluation -----------------------------------------------------------

def expm_action(v0: np.ndarray, M: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Rows v0 * e^{x M} for each x in ascending `xs`, by uniformization.

    M must be a sub-generator (or any matrix with nonpositive row sums and
    negative diagonal). Walks the sorted grid incrementally so the total
    series length is proportional to q * max(xs) rather than q * sum(xs).
    """
    n = M.shape[0]
    q = float(np.max(-np.diag(M)))
    P = np.eye(n) + M / q
    out = np.empty((xs.size, n))
    v = np.array(v0, dtype=float)
    prev = 0.0
    for idx, x in enumerate(xs):
        dx = x - prev
        while dx > 0.0:
            step = min(dx, _MAX_POISSON_STEP / q)
            v = _uniformization_step(v, P, q * step)
            dx -= step
        prev = x
        out[idx] = v
    return out


def _uniformization_step(v: np.ndarray, P: np.ndarray, qdx: float) -> np.ndarray:
    """One Poisson-weighted series step: v * e^{q dx (P - I)}."""
    if qdx == 0.0 or not np.any(v):
        return v
    weight = math.exp(-qdx)
    cum = weight
    vp = v
    acc = weight * vp
    j = 0
    while 1.0 - cum > UNIFORMIZATION_TAIL:
        j += 1
        vp = vp @ P
        weight *= qdx / j
        cum += weight
        acc += weight * vp
    return acc


def ccdf(model: PhaseTypeModel, x) -> float | np.ndarray:
    """F-bar(x) = alpha e^{xA} 1, with an underflow guard at 1e-300."""
    xs, scalar = _as_grid(x)
    rows = _eval_rows(model, xs)
    vals = rows.sum(axis=1)
    vals[vals < CCDF_UNDERFLOW] = 0.0
    return float(vals[0]) if scalar else vals


def pdf(model: PhaseTypeModel, x) -> float | np.ndarray:
    """f(x) = alpha e^{xA} (-A 1)."""
    xs, scalar = _as_grid(x)
    rows = _eval_rows(model, xs)
    vals = np.maximum(rows @ model.exit_rates, 0.0)
    return float(vals[0]) if scalar else vals


def cdf(model: PhaseTypeModel, x) -> float | np.ndarray:
    xs, scalar = _as_grid(x)
    vals = float(model.alpha.sum()) - ccdf(model, xs)
    return float(vals[0]) if scalar else vals


def _as_grid(x):
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0):
        raise ValueError("x must be nonnegative")
    return xs, np.isscalar(x) or np.ndim(x) == 0


def _eval_rows(model: PhaseTypeModel, xs: np.ndarray) -> np.ndarray:
    _require_valid(model)
    order = np.argsort(xs, kind="stable")
    rows_sorted = expm_action(model.alpha, model.A, xs[order])
    rows = np.empty_like(rows_sorted)
    rows[order] = rows_sorted
    return rows


# -- moments and scaling --------------------------------------------------

def moment(model: PhaseTypeModel, k: int) -> float:
    """m_k = k! * alpha * (-A)^{-k} * 1, via k successive linear solves."""
    if k < 1:
        raise ValueError("moment order must be >= 1")
    _require_valid(model)
    y = np.ones(model.order)
    for _ in range(k):
        y = np.linalg.solve(-model.A, y)
    return math.factorial(k) * float(model.alpha @ y)


def mean(model: PhaseTypeModel) -> float:
    return moment(model, 1)


def cv(model: PhaseTypeModel) -> float:
    m1 = moment(model, 1)
    m2 = moment(model, 2)
    return math.sqrt(max(m2 - m1 * m1, 0.0)) / m1


def scale_to_mean(model: PhaseTypeModel, target_mean: float) -> PhaseTypeModel:
    """Rescale A so the mean becomes target_mean (A_scaled = (m_hat/m) A)."""
    if target_mean <= 0:
        raise ValueError("target mean must be positive")
    m_hat = mean(model)
    if m_hat <= 0:
        raise ValueError("model mean must be positive")
    return PhaseTypeModel(alpha=model.alpha,
                          A=model.A * (m_hat / target_mean),
                          meta=dict(model.meta))


# -- sampling -------------------------------------------------------------

def sample(model: PhaseTypeModel, rng_seed: int, count: int) -> np.ndarray:
    """Draw absorption times by simulating the underlying chain.

    Vectorized over draws: all active chains advance one jump per sweep.
    """
    return sample_with_rng(model, np.random.default_rng(rng_seed), count)


def sample_with_rng(model: PhaseTypeModel, rng: np.random.Generator,
                    count: int) -> np.ndarray:
    """As `sample`, but advancing a caller-owned generator."""
    _require_valid(model)
    if not model.is_proper:
        raise ValueError("sampling requires a proper model "
                         f"(alpha sums to {model.alpha.sum():.12f})")
    n = model.order
    rates = -np.diag(model.A)
    # Row i: cumulative jump probabilities to phases 0..n-1, then absorption.
    jump = model.A / rates[:, None]
    np.fill_diagonal(jump, 0.0)
    cum = np.cumsum(jump, axis=1)

    alpha = model.alpha / model.alpha.sum()
    phase = rng.choice(n, size=count, p=alpha)
    times = np.zeros(count)
    active = np.arange(count)
    while active.size:
        ph = phase[active]
        times[active] += rng.exponential(1.0, size=active.size) / rates[ph]
        nxt = (cum[ph] < rng.random(active.size)[:, None]).sum(axis=1)
        absorbed = nxt >= n
        phase[active[~absorbed]] = nxt[~absorbed]
        active = active[~absorbed]
    return times
