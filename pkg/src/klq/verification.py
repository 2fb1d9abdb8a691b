"""Independent certification of a coefficient triple.

A certificate recomputes every metric from scratch, probes the error
functions on a dense grid together with their limits at 0 and infinity,
and reports which bound properties hold and how uniform the error curve is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels as _k
from .core import BASELINE, KlCoefficients
from .metrics import ErrorReport, Metric, error_report
from .minimax import PROBE_GRID

TOUCH_TOL = 1e-12
EQUIOSCILLATION_TOL = 1e-6


@dataclass(frozen=True)
class Equioscillation:
    holds: bool
    level: float
    spread: float
    n_ripples: int


@dataclass(frozen=True)
class BaselineComparison:
    """Fractional change of each metric, (new - baseline) / baseline."""

    d_max: float
    r_max: float
    d_tot: float


@dataclass(frozen=True)
class Certificate:
    coefficients: KlCoefficients
    report: ErrorReport
    is_lower_bound_abs: bool
    is_upper_bound_abs: bool
    is_lower_bound_rel: bool
    is_upper_bound_rel: bool
    equioscillation: Equioscillation
    equioscillation_rel: Equioscillation
    vs_baseline: BaselineComparison
    probe_d_range: tuple[float, float]
    probe_r_range: tuple[float, float]


def _equioscillation(magnitudes, level) -> Equioscillation:
    if not math.isfinite(level) or level <= 0:
        return Equioscillation(False, level, math.nan, 0)
    # magnitudes far below the level are touch points, not ripples
    ripples = [m for m in magnitudes if m > EQUIOSCILLATION_TOL * level]
    if len(ripples) < 2:
        return Equioscillation(False, level, 0.0, len(ripples))
    spread = max(ripples) - min(ripples)
    return Equioscillation(bool(spread / level < EQUIOSCILLATION_TOL), level, float(spread), len(ripples))


def _relative_change(new: float, old: float) -> float:
    if math.isinf(new):
        return math.inf if not math.isinf(old) else 0.0
    return (new - old) / old


def compare_to_baseline(coef: KlCoefficients, baseline: KlCoefficients = BASELINE,
                        report: ErrorReport | None = None) -> BaselineComparison:
    new = report if report is not None else error_report(coef)
    old = error_report(baseline)
    return BaselineComparison(
        d_max=_relative_change(new.d_max, old.d_max),
        r_max=_relative_change(new.r_max, old.r_max),
        d_tot=_relative_change(new.d_tot, old.d_tot),
    )


def certify(coef: KlCoefficients, tol: float = TOUCH_TOL) -> Certificate:
    report = error_report(coef)
    lim = report.limits
    a, b, c = coef.as_tuple()
    d_vals = np.asarray(_k.eval_err_grid(a, b, c, Metric.ABSOLUTE.code, PROBE_GRID))
    r_vals = np.asarray(_k.eval_err_grid(a, b, c, Metric.RELATIVE.code, PROBE_GRID))
    r_fin = r_vals[np.isfinite(r_vals)]
    tail = lim.r_at_inf.value  # sign of d at infinity follows r

    d_ext = [e.value for e in report.abs_extrema]
    r_ext = [e.value for e in report.rel_extrema]
    d_hi = max([lim.d_at_0, float(d_vals.max()), *d_ext])
    d_lo = min([lim.d_at_0, float(d_vals.min()), *d_ext])
    r_hi = max([lim.r_at_0, float(r_fin.max()) if r_fin.size else -math.inf, *r_ext])
    r_lo = min([lim.r_at_0, float(r_fin.min()) if r_fin.size else math.inf, *r_ext])

    abs_mags = [abs(v) for v in d_ext] + [abs(lim.d_at_0)]
    rel_mags = [abs(v) for v in r_ext] + [abs(lim.r_at_0)]
    if lim.r_at_inf.is_finite:
        rel_mags.append(abs(tail))

    return Certificate(
        coefficients=coef,
        report=report,
        is_lower_bound_abs=bool(d_hi <= tol and tail <= tol),
        is_upper_bound_abs=bool(d_lo >= -tol and tail >= -tol),
        is_lower_bound_rel=bool(r_hi <= tol and tail <= tol),
        is_upper_bound_rel=bool(r_lo >= -tol and tail >= -tol),
        equioscillation=_equioscillation(abs_mags, report.d_max),
        equioscillation_rel=_equioscillation(rel_mags, report.r_max),
        vs_baseline=compare_to_baseline(coef, report=report),
        probe_d_range=(float(d_vals.min()), float(d_vals.max())),
        probe_r_range=(float(r_fin.min()), float(r_fin.max())) if r_fin.size else (math.nan, math.nan),
    )
