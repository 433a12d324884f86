"""High-level fitting pipelines: BPH-only, HE-only, and the hybrid.

Ties the construction modules together with sensible defaults: the HE fit
points start from the power-of-two initialization spread over a
tail window derived from the target (median out to the 1e-10 CCDF level,
capped at the window edge), and the evaluation grid spans the same range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bph as bph_mod
from . import hefit, phmodel
from . import targets as targets_mod
from .hybrid import HybridModel, build_hybrid, hybrid_ccdf
from .optimizer import (AdamConfig, EvalGrid, LossBreakdown, LossWeights,
                        default_points, optimize)
from .phmodel import PhaseTypeModel

DEFAULT_K = 4
DEFAULT_GRID_SIZE = 512
# CCDF level down to which the HE tail points (and the evaluation grid)
# reach by default; beyond it the mixture extrapolates exponentially.
TAIL_CCDF_LEVEL = 1e-10
# The Bernstein body resolves the target only out to x = scale * ln(n).
# The scale is chosen so that point sits where the CCDF has decayed to
# this level, normalizing every target to the same body/tail geometry.
BODY_EDGE_CCDF_LEVEL = 5e-3


@dataclass(frozen=True)
class FitReport:
    method: str
    mae: float
    mean_real: float
    mean_approx: float
    cv_real: float
    cv_approx: float
    grid_span: tuple
    he_points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"method": self.method, "mae": self.mae,
                "mean_real": self.mean_real, "mean_approx": self.mean_approx,
                "cv_real": self.cv_real, "cv_approx": self.cv_approx,
                "grid_span": list(self.grid_span),
                "he_points": list(self.he_points)}


@dataclass(frozen=True)
class FitOutcome:
    model: PhaseTypeModel
    report: FitReport
    hybrid: HybridModel | None = None
    trace: list = field(default_factory=list)


def tail_window(target: targets_mod.TargetDistribution,
                level: float = TAIL_CCDF_LEVEL) -> tuple[float, float]:
    """Default span for HE fit points: median to the `level` CCDF quantile."""
    x_min, x_max = target.window
    lo = targets_mod.ccdf_inverse(target, 0.5)
    if targets_mod.ccdf(target, x_max) >= level:
        hi = x_max
    else:
        hi = targets_mod.ccdf_inverse(target, level)
    hi = min(hi, x_max)
    if lo <= 0 or lo >= hi:
        lo = hi * 1e-4
    return lo, hi


def default_grid(target: targets_mod.TargetDistribution,
                 m: int = DEFAULT_GRID_SIZE,
                 span: tuple | None = None) -> EvalGrid:
    if span is None:
        _, hi = tail_window(target)
        span = (target.window[0], hi)
    return EvalGrid.uniform(span[0], span[1], m)


def _pow2_points(count: int, x_min: float, x_max: float) -> np.ndarray:
    raw = 2.0 ** np.arange(count, dtype=float)
    return x_min + (raw - raw[0]) * (x_max - x_min) / (raw[-1] - raw[0])


def body_scale(target: targets_mod.TargetDistribution,
               n: int = bph_mod.DEFAULT_ORDER) -> float:
    """Time scale s placing the body edge s*ln(n) at the BODY_EDGE level.

    The Bernstein body resolves its input only out to ln(n) in model time;
    fitting the time-scaled target F(s*t) and dividing the generator by s
    afterwards lets the body span the bulk of any target's mass, however
    slowly its CCDF decays.
    """
    edge = targets_mod.ccdf_inverse(target, BODY_EDGE_CCDF_LEVEL)
    return edge / math.log(max(n, 2))


def _apply_mean_adjust(model, target, adjust: bool):
    """Optionally rescale the model to the window-numeric target mean.

    Returns the (possibly rescaled) model and the time-compression ratio
    applied to evaluation arguments (1.0 when no adjustment is made). The
    rescaling leaves the coefficient of variation unchanged.
    """
    if not adjust:
        return model, 1.0
    m_real = targets_mod.numeric_moment(target, 1, target.window)
    ratio = phmodel.mean(model) / m_real
    return phmodel.scale_to_mean(model, m_real), ratio


def grid_mae(target, model_ccdf, grid: EvalGrid) -> float:
    y = np.array([targets_mod.ccdf(target, z) for z in grid.points])
    y_hat = np.asarray(model_ccdf(grid.points), dtype=float)
    return float(np.mean(np.abs(y - y_hat)))


def _report(target, method, model, model_ccdf, grid, he_points=()) -> FitReport:
    m1, _, cv_real = targets_mod.numeric_stats(target)
    return FitReport(method=method,
                     mae=grid_mae(target, model_ccdf, grid),
                     mean_real=m1, mean_approx=phmodel.moment(model, 1),
                     cv_real=cv_real, cv_approx=phmodel.cv(model),
                     grid_span=(float(grid.points[0]), float(grid.points[-1])),
                     he_points=[float(x) for x in he_points])


def fit_bph(target, n: int = bph_mod.DEFAULT_ORDER,
            grid: EvalGrid | None = None,
            adjust_mean: bool = True) -> FitOutcome:
    grid = grid or default_grid(target)
    s = body_scale(target, n)
    component = bph_mod.build_from_cdf(
        lambda t: targets_mod.cdf(target, s * t), n)
    base = bph_mod.to_phase_type(component,
                                 meta={"source_target": target.to_dict(),
                                       "body_scale": s})
    model = PhaseTypeModel(alpha=base.alpha, A=base.A / s,
                           meta=dict(base.meta))
    model, ratio = _apply_mean_adjust(model, target, adjust_mean)
    u = ratio / s
    report = _report(target, "bph", model,
                     lambda xs: bph_mod.bernstein_ccdf(
                         component, np.asarray(xs, dtype=float) * u), grid)
    return FitOutcome(model=model, report=report)


def fit_he(target, k: int = DEFAULT_K, points=None,
           grid: EvalGrid | None = None,
           adjust_mean: bool = True) -> FitOutcome:
    grid = grid or default_grid(target)
    if points is None:
        points = _pow2_points(2 * k - 1, *tail_window(target))
    he = hefit.fit_complete(lambda x: targets_mod.ccdf(target, x), points)
    model = hefit.to_phase_type(he, meta={"source_target": target.to_dict()})
    model, ratio = _apply_mean_adjust(model, target, adjust_mean)
    report = _report(target, "he", model,
                     lambda xs: hefit.he_ccdf(
                         he, np.asarray(xs, dtype=float) * ratio),
                     grid, he_points=points)
    return FitOutcome(model=model, report=report)


def fit_bph_he(target, k: int = DEFAULT_K, n: int = bph_mod.DEFAULT_ORDER,
               grid: EvalGrid | None = None,
               weights: LossWeights | None = None,
               adam: AdamConfig | None = None,
               init_points=None, run_optimizer: bool = True,
               adjust_mean: bool = True) -> FitOutcome:
    grid = grid or default_grid(target)
    weights = weights or LossWeights()
    adam = adam or AdamConfig()
    s = body_scale(target, n)
    Fbar_s = lambda t: targets_mod.ccdf(target, s * t)
    if init_points is None:
        # Start the HE points at the body edge and spread them to the top
        # of the evaluation grid: the power-of-two layout then covers the
        # tail roughly one octave per point, which keeps the in-pair and
        # between-pair interpolation errors small and mutually cancelling.
        lo = s * math.log(max(n, 2))
        hi = float(grid.points[-1])
        init_points = default_points(k, lo, hi)
    # The optimizer and hybrid construction work in scaled time t = x / s,
    # where the fixed body generator is effective; the assembled generator
    # is divided by s afterwards to return to target time.
    points = np.asarray(init_points, dtype=float) / s
    tgrid = EvalGrid(points=grid.points / s)
    trace: list[LossBreakdown] = []
    if run_optimizer and k > 0:
        points, trace = optimize(Fbar_s, k, n, tgrid, weights, adam, points)
    hy = build_hybrid(Fbar_s, k, n, points,
                      meta={"he_points": [float(s * x) for x in points],
                            "k": k, "n": n, "body_scale": s,
                            "source_target": target.to_dict()})
    model = PhaseTypeModel(alpha=hy.assembled.alpha, A=hy.assembled.A / s,
                           meta=dict(hy.assembled.meta))
    model, ratio = _apply_mean_adjust(model, target, adjust_mean)
    u = ratio / s
    report = _report(target, "bph_he", model,
                     lambda xs: hybrid_ccdf(
                         hy, np.asarray(xs, dtype=float) * u),
                     grid, he_points=s * points)
    return FitOutcome(model=model, report=report, hybrid=hy, trace=trace)


FIT_METHODS = {"bph": fit_bph, "he": fit_he, "bph_he": fit_bph_he}
