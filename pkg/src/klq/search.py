"""Total-error minimization by coarse-to-fine grid search.

Each round evaluates d_tot on a full tensor grid over the current box, keeps
the best feasible point, then shrinks the box around it. Rounds stop once the
grid spacing reaches the target resolution. Fully deterministic.
"""
from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import KlCoefficients, limits
from .metrics import Metric, d_tot, find_extrema
from .minimax import BOUND_TOL, Role, bound_holds

log = logging.getLogger(__name__)

DEFAULT_BOX = {"a": (0.25, 0.45), "b": (0.35, 0.6), "c": (1.0, 1.8)}
VALID_DIMS = (("a",), ("a", "b"), ("a", "c"), ("a", "b", "c"))
COARSE_TOL = 1e-8
FINE_TOL = 1e-12
CERT_TOL = 1e-10


class Bound(str, enum.Enum):
    NONE = "none"
    LOWER = "lower"
    UPPER = "upper"


class InfeasibleSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchSpec:
    dims: tuple[str, ...]
    origin_constrained: bool | None = None
    bound: Bound = Bound.NONE
    box: dict = field(default_factory=dict)
    target_resolution: float = 1e-6
    points_per_dim: int | None = None
    shrink: float = 5.0

    def __post_init__(self):
        dims = tuple(self.dims)
        if dims not in VALID_DIMS:
            raise ValueError(f"dims must be one of {VALID_DIMS}, got {dims}")
        object.__setattr__(self, "dims", dims)
        oc = "c" not in dims if self.origin_constrained is None else bool(self.origin_constrained)
        if oc != ("c" not in dims):
            raise ValueError("origin_constrained must hold exactly when c is not searched (c = 1/(2a))")
        object.__setattr__(self, "origin_constrained", oc)
        object.__setattr__(self, "bound", Bound(self.bound))
        box = {d: tuple(map(float, self.box.get(d, DEFAULT_BOX[d]))) for d in dims}
        for d, (lo, hi) in box.items():
            if not (0.0 < lo < hi and math.isfinite(hi)):
                raise ValueError(f"box for {d} must satisfy 0 < lo < hi, got {(lo, hi)}")
        object.__setattr__(self, "box", box)
        if not self.target_resolution >= 1e-9:
            raise ValueError("target_resolution must be >= 1e-9")
        n = self.points_per_dim
        if n is None:
            n = 101 if len(dims) < 3 else 21
        if n < 3:
            raise ValueError("points_per_dim must be >= 3")
        object.__setattr__(self, "points_per_dim", int(n))
        if not self.shrink > 1.0:
            raise ValueError("shrink must exceed 1")

    def coefficients(self, point) -> KlCoefficients:
        p = dict(zip(self.dims, point))
        a = p["a"]
        b = p.get("b", 0.5)
        c = p["c"] if "c" in p else 1.0 / (2.0 * a)
        return KlCoefficients(a, b, c)

    def n_rounds(self) -> int:
        n = self.points_per_dim
        k = 0
        for lo, hi in self.box.values():
            spacing = (hi - lo) / (n - 1)
            need = 0
            while spacing > self.target_resolution * (1 + 1e-12):
                spacing /= self.shrink
                need += 1
            k = max(k, need)
        return k + 1


@dataclass(frozen=True)
class SearchResult:
    spec: SearchSpec
    coefficients: KlCoefficients
    d_tot: float
    evaluations: int
    resolution_achieved: float
    constraint_satisfied: bool
    rounds: int
    history: tuple[float, ...]
    local_min_certified: bool
    neighbor_d_tot: tuple[float, ...]


def satisfies_bound(coef: KlCoefficients, bound: Bound, tol: float = BOUND_TOL) -> bool:
    """Cheap sign check from the origin limit, the tail limit and the extrema of d."""
    if bound is Bound.NONE:
        return True
    sign = -1.0 if bound is Bound.LOWER else 1.0
    lim = limits(coef)
    if sign * lim.d_at_0 < -tol or sign * lim.r_at_inf.value < -tol:
        return False
    return all(sign * e.value >= -tol for e in find_extrema(coef, Metric.ABSOLUTE))


def _axes(spec, box):
    return [np.linspace(box[d][0], box[d][1], spec.points_per_dim) for d in spec.dims]


def _shrunk(spec, center, box):
    new = {}
    for d, x in zip(spec.dims, center):
        lo0, hi0 = spec.box[d]
        half = (box[d][1] - box[d][0]) / spec.shrink / 2.0
        lo, hi = x - half, x + half
        if lo < lo0:
            lo, hi = lo0, lo0 + 2 * half
        if hi > hi0:
            lo, hi = hi0 - 2 * half, hi0
        new[d] = (lo, hi)
    return new


def search_total(spec: SearchSpec) -> SearchResult:
    """Minimize d_tot over the free coefficients of ``spec``."""
    box = dict(spec.box)
    n_rounds = spec.n_rounds()
    incumbent = None  # (fine d_tot, point)
    history = []
    evaluations = 0
    spacing = None
    for rnd in range(n_rounds):
        tol = FINE_TOL if rnd >= n_rounds - 2 else COARSE_TOL
        axes = _axes(spec, box)
        spacing = [(box[d][1] - box[d][0]) / (spec.points_per_dim - 1) for d in spec.dims]
        best = None
        for point in itertools.product(*axes):
            point = tuple(float(v) for v in point)
            coef = spec.coefficients(point)
            if not satisfies_bound(coef, spec.bound):
                continue
            v = d_tot(coef, tol)
            evaluations += 1
            if best is None or v < best[0] or (v == best[0] and point < best[1]):
                best = (v, point)
        if best is not None:
            v_fine = d_tot(spec.coefficients(best[1]), FINE_TOL)
            if incumbent is None or v_fine < incumbent[0]:
                incumbent = (v_fine, best[1])
        if incumbent is None:
            raise InfeasibleSearchError(
                f"no grid point satisfies the {spec.bound.value}-bound constraint "
                f"({'d(x) <= 0' if spec.bound is Bound.LOWER else 'd(x) >= 0'}) in box {spec.box}"
            )
        history.append(incumbent[0])
        log.info("round %d/%d: d_tot=%.12g at %s", rnd + 1, n_rounds, incumbent[0], incumbent[1])
        if rnd + 1 < n_rounds:
            box = _shrunk(spec, incumbent[1], box)

    value, point = incumbent
    coef = spec.coefficients(point)
    neighbors = []
    for i, d in enumerate(spec.dims):
        for sgn in (-1.0, 1.0):
            q = list(point)
            q[i] += sgn * spacing[i]
            lo0, hi0 = spec.box[d]
            if not lo0 <= q[i] <= hi0:
                continue
            nc = spec.coefficients(tuple(q))
            if not satisfies_bound(nc, spec.bound):
                continue
            neighbors.append(d_tot(nc, FINE_TOL))
    certified = all(v >= value - CERT_TOL for v in neighbors)

    satisfied = True
    if spec.bound is not Bound.NONE:
        role = Role.LOWER if spec.bound is Bound.LOWER else Role.UPPER
        satisfied = bound_holds(coef, role, Metric.ABSOLUTE)
        if not satisfied:
            raise InfeasibleSearchError(f"incumbent {coef} fails the dense {spec.bound.value}-bound check")
    return SearchResult(
        spec=spec,
        coefficients=coef,
        d_tot=value,
        evaluations=evaluations,
        resolution_achieved=max(spacing),
        constraint_satisfied=satisfied,
        rounds=n_rounds,
        history=tuple(history),
        local_min_certified=certified,
        neighbor_d_tot=tuple(neighbors),
    )
