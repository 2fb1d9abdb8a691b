"""Reference Q-function, the KL expression, its error functions and limits.

The KL expression is

    Qtilde(x; a, b, c) = a * exp(-b x^2) * (1 - exp(-c x)) / x

with absolute error d(x) = Qtilde(x) - Q(x) and relative error
r(x) = d(x) / Q(x). Everything here works on x >= 0; the removable
singularity at x = 0 is evaluated through its series.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ._backend import kernels as _k

X_HI = 40.0
SQRT_2PI = math.sqrt(2.0 * math.pi)


class DomainError(ValueError):
    """Raised for arguments outside the supported domain."""


@dataclass(frozen=True)
class KlCoefficients:
    """The triple (a, b, c) of the KL expression."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            raw = getattr(self, name)
            try:
                v = float(raw)
            except (TypeError, ValueError):
                v = math.nan
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"coefficient {name} must be a finite positive number, got {raw!r}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_legacy(cls, A: float, B: float) -> "KlCoefficients":
        return from_legacy(A, B)

    def legacy(self) -> tuple[float, float] | None:
        """(A, B) of the original two-parameter form, or None when b != 1/2."""
        if self.b != 0.5:
            return None
        return self.c * math.sqrt(2.0), 1.0 / (self.a * SQRT_2PI)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


class TailKind(enum.Enum):
    FINITE = "finite"        # b = 1/2: a*sqrt(2*pi) - 1
    DIVERGENT = "divergent"  # b < 1/2: +inf
    MINUS_ONE = "minus_one"  # b > 1/2: -1


@dataclass(frozen=True)
class TailLimit:
    """Limit of r(x) as x -> infinity, tagged by which case of b applies."""

    kind: TailKind
    finite_value: float | None = None

    @property
    def value(self) -> float:
        if self.kind is TailKind.DIVERGENT:
            return math.inf
        if self.kind is TailKind.MINUS_ONE:
            return -1.0
        return self.finite_value

    @property
    def is_finite(self) -> bool:
        return self.kind is not TailKind.DIVERGENT


@dataclass(frozen=True)
class Limits:
    d_at_0: float
    r_at_0: float
    d_at_inf: float
    r_at_inf: TailLimit


def _check_x(x) -> float:
    try:
        xf = float(x)
    except (TypeError, ValueError):
        raise DomainError(f"x must be a real number, got {x!r}") from None
    if not math.isfinite(xf) or xf < 0.0:
        raise DomainError(f"x must be finite and non-negative, got {x!r}")
    return xf


def q_ref(x: float) -> float:
    """Gaussian Q-function, relative error below 1e-14 wherever Q(x) is a normal double.

    Power series for x < 2 and the Laplace continued fraction for the
    Mills ratio above; Q(x) underflows to zero for x beyond about 38.5.
    """
    return _k.q(_check_x(x))


def q_deriv(x: float) -> float:
    return _k.q_prime(_check_x(x))


def kl_eval(coef: KlCoefficients, x: float) -> float:
    return _k.kl(coef.a, coef.b, coef.c, _check_x(x))


def kl_deriv(coef: KlCoefficients, x: float) -> float:
    """Derivative of the KL expression; the limit -a c^2 / 2 at x = 0."""
    return _k.kl_prime(coef.a, coef.b, coef.c, _check_x(x))


def abs_error(coef: KlCoefficients, x: float) -> float:
    return _k.abs_err(coef.a, coef.b, coef.c, _check_x(x))


def rel_error(coef: KlCoefficients, x: float) -> float:
    """r(x), computed from the ratio Qtilde/Q so it stays finite where Q underflows."""
    return _k.rel_err(coef.a, coef.b, coef.c, _check_x(x))


def abs_error_deriv(coef: KlCoefficients, x: float) -> float:
    return _k.abs_err_prime(coef.a, coef.b, coef.c, _check_x(x))


def rel_error_deriv(coef: KlCoefficients, x: float) -> float:
    return _k.rel_err_prime(coef.a, coef.b, coef.c, _check_x(x))


def tail_limit(b: float, a: float) -> TailLimit:
    if b < 0.5:
        return TailLimit(TailKind.DIVERGENT)
    if b > 0.5:
        return TailLimit(TailKind.MINUS_ONE)
    return TailLimit(TailKind.FINITE, a * SQRT_2PI - 1.0)


def limits(coef: KlCoefficients) -> Limits:
    ac = coef.a * coef.c
    return Limits(
        d_at_0=ac - 0.5,
        r_at_0=2.0 * ac - 1.0,
        d_at_inf=0.0,
        r_at_inf=tail_limit(coef.b, coef.a),
    )


def from_legacy(A: float, B: float) -> KlCoefficients:
    """Map the original (A, B) parameterization to (a, 1/2, c)."""
    if not (A > 0 and B > 0):
        raise DomainError("A and B must be positive")
    return KlCoefficients(1.0 / (B * SQRT_2PI), 0.5, A / math.sqrt(2.0))


BASELINE = from_legacy(1.98, 1.135)
