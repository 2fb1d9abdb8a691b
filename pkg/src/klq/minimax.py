"""Minimax approximations and bounds as roots of nonlinear systems.

Each variant describes a uniform error function: at every interior
extremum x_k the error derivative vanishes and the error equals a fixed
multiple of the level (d_max or r_max); endpoint limits supply the remaining
rows. The unknown vector is ``(a, [b], c, level, x_1, ..., x_n)``.

Roots are found with damped Newton (forward-difference Jacobian) from
seeded random starts. A root is accepted only after substitution: the
global metric recomputed from scratch must equal the level and the error
curve must show exactly the extrema the system describes.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels as _k
from .core import SQRT_2PI, X_HI, DomainError, KlCoefficients, limits
from .metrics import Metric, d_max, find_extrema, r_max

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12
LEVEL_TOL = 1e-9
BOUND_TOL = 1e-12
MAX_ITER = 200
MAX_HALVINGS = 40
FD_STEP = 1e-7
DEFAULT_SEED = 42
DEFAULT_MAX_RESTARTS = 1000
PROBE_GRID = np.geomspace(1e-6, X_HI, 100_000)

# initial-guess boxes
GUESS_A = (0.25, 0.45)
GUESS_B = (0.35, 0.6)
GUESS_C = (1.0, 1.8)
GUESS_LEVEL = (1e-4, 0.1)
GUESS_X = (0.1, 5.0)


class Role(str, enum.Enum):
    APPROXIMATION = "approximation"
    LOWER = "lower_bound"
    UPPER = "upper_bound"

    @property
    def letter(self) -> str:
        return {"approximation": "A", "lower_bound": "L", "upper_bound": "U"}[self.value]


class BMode(str, enum.Enum):
    FIXED_HALF = "fixed_half"
    FREE = "free"


class Origin(str, enum.Enum):
    ZERO = "zero_at_origin"
    RIPPLE = "ripple_at_origin"


class VariantError(ValueError):
    """Illegal combination of role, metric, b-mode and origin constraint."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, best_residual=math.inf, restarts=0):
        super().__init__(message)
        self.best_residual = best_residual
        self.restarts = restarts


@dataclass(frozen=True)
class VariantSpec:
    role: Role
    metric: Metric
    b_mode: BMode = BMode.FIXED_HALF
    origin: Origin = Origin.ZERO

    def __post_init__(self):
        try:
            object.__setattr__(self, "role", Role(self.role))
            object.__setattr__(self, "metric", Metric(self.metric))
            object.__setattr__(self, "b_mode", BMode(self.b_mode))
            object.__setattr__(self, "origin", Origin(self.origin))
        except ValueError as exc:
            raise VariantError(str(exc)) from None
        if self.metric is Metric.RELATIVE and self.b_mode is BMode.FREE:
            raise VariantError("relative-error variants require b = 1/2 (r diverges or tends to -1 otherwise)")
        if self.role is Role.LOWER and self.b_mode is BMode.FREE:
            raise VariantError("lower bounds require b = 1/2")
        if self.role is Role.UPPER and self.origin is Origin.RIPPLE:
            raise VariantError("upper bounds must start from zero error at the origin")

    @property
    def label_prefix(self) -> str:
        return self.role.letter + ("d" if self.metric is Metric.ABSOLUTE else "r")

    @property
    def free_b(self) -> bool:
        return self.b_mode is BMode.FREE

    @property
    def is_closed_form(self) -> bool:
        if self.role is Role.LOWER and self.origin is Origin.ZERO:
            return True
        return self.role is Role.UPPER and not self.free_b

    @property
    def pattern(self) -> tuple[int, ...]:
        """Error value at each interior extremum, in units of the level."""
        if self.role is Role.APPROXIMATION:
            n = 1 if self.metric is Metric.RELATIVE else (3 if self.free_b else 2)
            return tuple((-1) ** k for k in range(n))
        if self.role is Role.LOWER:
            return (0, -1) if self.metric is Metric.ABSOLUTE else (0,)
        return (1, 0, 1)

    @property
    def n_extrema(self) -> int:
        return len(self.pattern)

    @property
    def n_unknowns(self) -> int:
        return (4 if self.free_b else 3) + self.n_extrema

    def unknown_names(self) -> list[str]:
        level = "d_max" if self.metric is Metric.ABSOLUTE else "r_max"
        head = ["a", "b", "c"] if self.free_b else ["a", "c"]
        return head + [level] + [f"x{k + 1}" for k in range(self.n_extrema)]

    def describe(self) -> str:
        return f"{self.role.value}/{self.metric.value}/{self.b_mode.value}/{self.origin.value}"


@dataclass(frozen=True)
class SolverResult:
    variant: VariantSpec
    coefficients: KlCoefficients
    level: float
    extrema_x: tuple[float, ...]
    residual_norm: float
    restarts_used: int
    converged: bool
    closed_form: bool = False
    iterations: int = 0
    unknowns: tuple[float, ...] = field(default=())


def _split(variant: VariantSpec, u):
    if variant.free_b:
        a, b, c, level = u[0], u[1], u[2], u[3]
        xs = u[4:]
    else:
        a, c, level = u[0], u[1], u[2]
        b = 0.5
        xs = u[3:]
    return a, b, c, level, xs


def residual_system(variant: VariantSpec, unknowns) -> np.ndarray:
    """Residual vector of the variant's system; zero at the optimized solution."""
    if variant.is_closed_form:
        raise VariantError(f"{variant.describe()} has a closed form and no equation system")
    u = np.asarray(unknowns, dtype=float)
    if u.shape != (variant.n_unknowns,):
        raise ValueError(f"expected {variant.n_unknowns} unknowns {variant.unknown_names()}, got shape {u.shape}")
    a, b, c, level, xs = _split(variant, u)
    m = variant.metric.code
    rows = []
    for x in xs:
        rows.append(_k.err_prime(a, b, c, x, m))
    for x, p in zip(xs, variant.pattern):
        rows.append(_k.err(a, b, c, x, m) - p * level)
    ac = a * c
    if variant.metric is Metric.ABSOLUTE:
        if variant.origin is Origin.ZERO:
            rows.append(ac - 0.5)
        else:
            rows.append(ac - (0.5 - level))
    else:
        if variant.origin is Origin.ZERO:
            rows.append(ac - 0.5)
        else:
            rows.append(ac - 0.5 * (1.0 - level))
        rows.append(a - (1.0 - level) / SQRT_2PI)
    return np.array(rows)


# -- closed forms ---------------------------------------------------------

LOWER_CLOSED = (math.sqrt(math.pi / 32.0), 0.5, math.sqrt(8.0 / math.pi))
UPPER_CLOSED = (1.0 / SQRT_2PI, 0.5, math.sqrt(math.pi / 2.0))


def closed_form(variant: VariantSpec) -> SolverResult | None:
    """Explicit coefficients, when the variant has them.

    The zero-at-origin lower bound (either metric) solves d(0) = 0 with
    d'(0) = 0; the b = 1/2 upper bound has zero error at both ends.
    """
    if not variant.is_closed_form:
        return None
    if variant.role is Role.LOWER:
        coef = KlCoefficients(*LOWER_CLOSED)
        defining = [coef.a * coef.c - 0.5, _k.abs_err_prime(coef.a, 0.5, coef.c, 0.0)]
    else:
        coef = KlCoefficients(*UPPER_CLOSED)
        defining = [coef.a * coef.c - 0.5, coef.a * SQRT_2PI - 1.0]
    ext = find_extrema(coef, variant.metric)
    level = d_max(coef, ext) if variant.metric is Metric.ABSOLUTE else r_max(coef, ext)
    return SolverResult(
        variant=variant,
        coefficients=coef,
        level=level,
        extrema_x=tuple(e.x for e in ext),
        residual_norm=float(max(abs(v) for v in defining)),
        restarts_used=0,
        converged=True,
        closed_form=True,
    )


# -- Newton ----------------------------------------------------------------

def initial_guess(variant: VariantSpec, rng: np.random.Generator) -> np.ndarray:
    head = [rng.uniform(*GUESS_A)]
    if variant.free_b:
        head.append(rng.uniform(*GUESS_B))
    head.append(rng.uniform(*GUESS_C))
    head.append(rng.uniform(*GUESS_LEVEL))
    xs = np.sort(rng.uniform(*GUESS_X, size=variant.n_extrema))
    return np.concatenate([head, xs])


def _coefs_ok(variant, u) -> bool:
    a, b, c, _, _ = _split(variant, u)
    return a > 0 and b > 0 and c > 0 and math.isfinite(a + b + c)


def _abscissas_ok(variant, u) -> bool:
    xs = _split(variant, u)[4]
    return xs[0] > 0 and xs[-1] <= X_HI and bool(np.all(np.diff(xs) > 0))


def _jacobian(variant, u, f0):
    n = u.size
    jac = np.empty((f0.size, n))
    for j in range(n):
        h = FD_STEP * max(1.0, abs(u[j]))
        up = u.copy()
        up[j] += h
        jac[:, j] = (residual_system(variant, up) - f0) / h
    return jac


def newton(variant: VariantSpec, u0) -> tuple[np.ndarray, float, int]:
    """Damped Newton from ``u0``; returns (u, inf-norm residual, iterations).

    Gives up (returning the last iterate) when a step cannot reduce the
    residual, leaves the admissible region, or scrambles the abscissas.
    """
    u = np.array(u0, dtype=float)
    f = residual_system(variant, u)
    norm2 = float(np.dot(f, f))
    it = 0
    for it in range(1, MAX_ITER + 1):
        if not np.all(np.isfinite(f)):
            return u, math.inf, it
        if np.max(np.abs(f)) < RESIDUAL_TOL:
            return u, float(np.max(np.abs(f))), it
        jac = _jacobian(variant, u, f)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        lam = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = u + lam * step
            if _coefs_ok(variant, trial):
                if not _abscissas_ok(variant, trial):
                    return u, float(np.max(np.abs(f))), it
                ft = residual_system(variant, trial)
                nt = float(np.dot(ft, ft))
                if math.isfinite(nt) and nt < norm2:
                    u, f, norm2 = trial, ft, nt
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            break
    return u, float(np.max(np.abs(f))), it


def confirm(variant: VariantSpec, u) -> tuple[bool, str]:
    """Substitution check of a candidate root; returns (ok, reason)."""
    a, b, c, level, xs = _split(variant, u)
    if not level > LEVEL_TOL:
        return False, "non-positive level"
    try:
        coef = KlCoefficients(a, b, c)
    except DomainError:
        return False, "invalid coefficients"
    ext = find_extrema(coef, variant.metric)
    if len(ext) != variant.n_extrema:
        return False, f"expected {variant.n_extrema} extrema, found {len(ext)}"
    for e, x, p in zip(ext, xs, variant.pattern):
        if abs(e.x - x) > 1e-6 * max(1.0, x):
            return False, "extremum location mismatch"
        if abs(e.value - p * level) > LEVEL_TOL * level:
            return False, "sign pattern / equioscillation mismatch"
    glob = d_max(coef, ext) if variant.metric is Metric.ABSOLUTE else r_max(coef)
    if abs(glob - level) > LEVEL_TOL:
        return False, f"global metric {glob!r} != level {level!r}"
    if variant.role is not Role.APPROXIMATION:
        ok = bound_holds(coef, variant.role, variant.metric)
        if not ok:
            return False, "bound violated"
    return True, "ok"


def bound_holds(coef: KlCoefficients, role: Role, metric: Metric, tol: float = BOUND_TOL) -> bool:
    """Sign condition of a bound on the dense probe grid and at both limits."""
    lim = limits(coef)
    sign = -1.0 if role is Role.LOWER else 1.0
    if metric is Metric.ABSOLUTE:
        start = lim.d_at_0
    else:
        start = lim.r_at_0
    if sign * start < -tol:
        return False
    tail = lim.r_at_inf.value
    if sign * tail < -tol:
        return False
    vals = np.asarray(_k.eval_err_grid(coef.a, coef.b, coef.c, metric.code, PROBE_GRID))
    if metric is Metric.RELATIVE:
        vals = vals[np.isfinite(vals)]
    return bool(np.all(sign * vals >= -tol))


def solve_minimax(variant: VariantSpec, seed: int = DEFAULT_SEED,
                  max_restarts: int = DEFAULT_MAX_RESTARTS, min_solutions: int = 1) -> SolverResult:
    """Optimized coefficients for ``variant``.

    Start ``k`` draws its guess from ``default_rng([seed, k])``, so results
    depend only on (variant, seed). Collects ``min_solutions`` confirmed
    roots and keeps the smallest level (first by start index on ties).
    """
    cf = closed_form(variant)
    if cf is not None:
        return cf
    found = []
    best_res = math.inf
    for k in range(max_restarts):
        rng = np.random.default_rng([seed, k])
        u, res, iters = newton(variant, initial_guess(variant, rng))
        best_res = min(best_res, res)
        if res >= RESIDUAL_TOL:
            continue
        ok, why = confirm(variant, u)
        log.debug("start %d: residual %.3g, confirm=%s (%s)", k, res, ok, why)
        if not ok:
            continue
        found.append((u, res, k, iters))
        if len(found) >= min_solutions:
            break
    if not found:
        raise ConvergenceError(
            f"{variant.describe()}: no confirmed root in {max_restarts} starts "
            f"(best residual {best_res:.3g})",
            best_residual=best_res,
            restarts=max_restarts,
        )
    best = found[0]
    for cand in found[1:]:
        if _split(variant, cand[0])[3] < _split(variant, best[0])[3] - 1e-12:
            best = cand
    u, res, k, iters = best
    a, b, c, level, xs = _split(variant, u)
    return SolverResult(
        variant=variant,
        coefficients=KlCoefficients(a, b, c),
        level=float(level),
        extrema_x=tuple(float(x) for x in xs),
        residual_norm=float(res),
        restarts_used=k,
        converged=True,
        iterations=iters,
        unknowns=tuple(float(v) for v in u),
    )


def all_variants() -> list[VariantSpec]:
    """Every legal minimax variant, in table order."""
    out = []
    for role in Role:
        for metric in Metric:
            for b_mode in BMode:
                for origin in Origin:
                    try:
                        out.append(VariantSpec(role, metric, b_mode, origin))
                    except VariantError:
                        pass
    return out
