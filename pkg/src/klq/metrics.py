"""Global error measures of a coefficient triple.

``d_max`` and ``r_max`` combine the endpoint limits with every interior
extremum, located by scanning the sign of the error derivative and bisecting
each bracket. ``d_tot`` integrates |d| with adaptive Simpson on panels split
at the zero crossings of d.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels as _k
from .core import X_HI, KlCoefficients, Limits, limits

SCAN_POINTS = 4096
SCAN_GRID = np.geomspace(1e-6, X_HI, SCAN_POINTS)
EXTREMUM_XTOL = 1e-12

ZERO_SCAN_POINTS = 1024
ZERO_GRID = np.geomspace(1e-6, X_HI, ZERO_SCAN_POINTS)
ZERO_GRID_Q = np.array([_k.q(float(x)) for x in ZERO_GRID])
ZERO_XTOL = 1e-14

QUAD_TOL = 1e-12


class Metric(str, enum.Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"

    @property
    def code(self) -> int:
        return 0 if self is Metric.ABSOLUTE else 1


@dataclass(frozen=True)
class Extremum:
    x: float
    value: float
    kind: str  # "maximum" | "minimum"


@dataclass(frozen=True)
class ErrorReport:
    d_max: float
    r_max: float
    d_tot: float
    abs_extrema: list[Extremum] = field(default_factory=list)
    rel_extrema: list[Extremum] = field(default_factory=list)
    limits: Limits | None = None
    d_tot_tail_bound: float = 0.0


def _metric(metric) -> Metric:
    return metric if isinstance(metric, Metric) else Metric(metric)


def find_extrema(coef: KlCoefficients, metric=Metric.ABSOLUTE, grid=None) -> list[Extremum]:
    """Interior extrema of d (or r) on (0, X_HI], sorted by abscissa."""
    m = _metric(metric)
    grid = SCAN_GRID if grid is None else grid
    a, b, c = coef.a, coef.b, coef.c
    out = []
    for x, sign_before in _k.critical_points(a, b, c, m.code, grid, EXTREMUM_XTOL):
        kind = "maximum" if sign_before > 0 else "minimum"
        out.append(Extremum(float(x), float(_k.err(a, b, c, x, m.code)), kind))
    return out


def d_max(coef: KlCoefficients, extrema: list[Extremum] | None = None) -> float:
    if extrema is None:
        extrema = find_extrema(coef, Metric.ABSOLUTE)
    best = abs(coef.a * coef.c - 0.5)
    for e in extrema:
        best = max(best, abs(e.value))
    return best


def r_max(coef: KlCoefficients, extrema: list[Extremum] | None = None) -> float:
    """Sup of |r| over [0, inf); inf when b < 1/2."""
    lim = limits(coef)
    if not lim.r_at_inf.is_finite:
        return math.inf
    if extrema is None:
        extrema = find_extrema(coef, Metric.RELATIVE)
    best = max(abs(lim.r_at_0), abs(lim.r_at_inf.value))
    for e in extrema:
        best = max(best, abs(e.value))
    return best


def tail_bound(coef: KlCoefficients, x_hi: float = X_HI) -> float:
    """Upper bound on the integral of |d| over [x_hi, inf).

    Uses |d| <= Qtilde + Q, Qtilde(x) <= a exp(-b x^2) / x and
    Q(x) <= phi(x) / x.
    """
    x2 = x_hi * x_hi
    kl_part = coef.a * math.exp(-coef.b * x2) / (2.0 * coef.b * x2)
    q_part = math.exp(-0.5 * x2) / (math.sqrt(2.0 * math.pi) * x2)
    return kl_part + q_part


def d_tot_info(coef: KlCoefficients, tol: float = QUAD_TOL) -> tuple[float, int, float]:
    """(integral of |d| on [0, X_HI], integrand evaluations, tail bound)."""
    value, evals = _k.d_tot(coef.a, coef.b, coef.c, tol, X_HI, ZERO_GRID, ZERO_GRID_Q, ZERO_XTOL)
    return value, evals, tail_bound(coef)


def d_tot(coef: KlCoefficients, tol: float = QUAD_TOL) -> float:
    return d_tot_info(coef, tol)[0]


def zero_crossings(coef: KlCoefficients) -> list[float]:
    return list(_k.zero_crossings(coef.a, coef.b, coef.c, ZERO_GRID, ZERO_GRID_Q, ZERO_XTOL))


def error_report(coef: KlCoefficients) -> ErrorReport:
    abs_ext = find_extrema(coef, Metric.ABSOLUTE)
    rel_ext = find_extrema(coef, Metric.RELATIVE)
    total, _, tail = d_tot_info(coef)
    return ErrorReport(
        d_max=d_max(coef, abs_ext),
        r_max=r_max(coef, rel_ext),
        d_tot=total,
        abs_extrema=abs_ext,
        rel_extrema=rel_ext,
        limits=limits(coef),
        d_tot_tail_bound=tail,
    )
