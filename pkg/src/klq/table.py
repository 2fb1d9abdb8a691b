"""Regenerate the full coefficient table.

Every legal minimax variant is solved (closed forms directly), every
total-error variant is searched, and entries that land on the same
coefficients are merged into one annotated row. Labels follow the Xy-n
convention: X in {U, A, L} is the role, y in {d, r, t} the optimization
criterion and n the rank by recomputed d_max among all rows sharing the
role X and the b-mode (b = 1/2, or b free). Labels are therefore unique only
together with the b-mode group.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .core import KlCoefficients
from .metrics import Metric
from .minimax import (
    DEFAULT_MAX_RESTARTS,
    DEFAULT_SEED,
    BMode,
    Origin,
    Role,
    VariantSpec,
    solve_minimax,
)
from .search import Bound, SearchSpec, search_total
from .verification import Certificate, certify

log = logging.getLogger(__name__)

RANK_CONVENTION = "n = rank by recomputed d_max ascending among rows with the same role letter and b-mode"
ROLE_ORDER = ("U", "A", "L")
GROUP_ORDER = ("fixed_half", "free")
MERGE_FLOOR = 1e-12


def _v(role, metric, b_mode=BMode.FIXED_HALF, origin=Origin.ZERO):
    return VariantSpec(Role(role), Metric(metric), BMode(b_mode), Origin(origin))


# Entry order decides which variant owns a merged row: the first one listed.
MINIMAX_ENTRIES = (
    _v("approximation", "absolute", "fixed_half", "zero_at_origin"),
    _v("approximation", "absolute", "fixed_half", "ripple_at_origin"),
    _v("approximation", "absolute", "free", "zero_at_origin"),
    _v("approximation", "absolute", "free", "ripple_at_origin"),
    _v("approximation", "relative", "fixed_half", "zero_at_origin"),
    _v("approximation", "relative", "fixed_half", "ripple_at_origin"),
    _v("lower_bound", "absolute", "fixed_half", "zero_at_origin"),
    _v("lower_bound", "absolute", "fixed_half", "ripple_at_origin"),
    _v("lower_bound", "relative", "fixed_half", "zero_at_origin"),
    _v("lower_bound", "relative", "fixed_half", "ripple_at_origin"),
    _v("upper_bound", "relative", "fixed_half", "zero_at_origin"),
    _v("upper_bound", "absolute", "fixed_half", "zero_at_origin"),
    _v("upper_bound", "absolute", "free", "zero_at_origin"),
)

SEARCH_ENTRIES = (
    (Role.APPROXIMATION, ("a",), Bound.NONE),
    (Role.APPROXIMATION, ("a", "b"), Bound.NONE),
    (Role.APPROXIMATION, ("a", "c"), Bound.NONE),
    (Role.APPROXIMATION, ("a", "b", "c"), Bound.NONE),
    (Role.LOWER, ("a", "c"), Bound.LOWER),
    (Role.UPPER, ("a", "c"), Bound.UPPER),
    (Role.UPPER, ("a", "b", "c"), Bound.UPPER),
)


@dataclass
class TableRow:
    family: str
    role: str
    criterion: str
    b_mode: str
    origin: str
    method: str  # closed_form | minimax | search
    variant: str
    coefficients: KlCoefficients
    objective: float  # solver level, or d_tot for searches
    certificate: Certificate
    extrema_x: tuple = ()
    residual_norm: float | None = None
    restarts_used: int | None = None
    evaluations: int | None = None
    local_min_certified: bool | None = None
    merged: list = field(default_factory=list)
    rank: int = 0

    @property
    def label(self) -> str:
        return f"{self.family}-{self.rank}"

    @property
    def group(self) -> str:
        return "b=1/2" if self.b_mode == "fixed_half" else "b free"

    @property
    def d_max(self) -> float:
        return self.certificate.report.d_max

    @property
    def r_max(self) -> float:
        return self.certificate.report.r_max

    @property
    def d_tot(self) -> float:
        return self.certificate.report.d_tot

    def notes(self) -> list[str]:
        out = [f"same coefficients also solve {m}" for m in self.merged]
        if self.b_mode == "free" and self.coefficients.b < 0.5:
            out.append("b < 1/2: r diverges at infinity")
        return out

    def to_dict(self) -> dict:
        coef = self.coefficients
        legacy = coef.legacy()
        cert = self.certificate
        return {
            "label": self.label,
            "group": self.group,
            "family": self.family,
            "rank": self.rank,
            "role": self.role,
            "criterion": self.criterion,
            "b_mode": self.b_mode,
            "origin": self.origin,
            "method": self.method,
            "variant": self.variant,
            "coefficients": {"a": coef.a, "b": coef.b, "c": coef.c},
            "legacy": None if legacy is None else {"A": legacy[0], "B": legacy[1]},
            "d_max": self.d_max,
            "r_max": self.r_max,
            "d_tot": self.d_tot,
            "objective": self.objective,
            "extrema_x": list(self.extrema_x),
            "residual_norm": self.residual_norm,
            "restarts_used": self.restarts_used,
            "evaluations": self.evaluations,
            "local_min_certified": self.local_min_certified,
            "bounds": {
                "lower_abs": cert.is_lower_bound_abs,
                "upper_abs": cert.is_upper_bound_abs,
                "lower_rel": cert.is_lower_bound_rel,
                "upper_rel": cert.is_upper_bound_rel,
            },
            "merged_variants": list(self.merged),
            "notes": self.notes(),
        }


@dataclass
class Table:
    rows: list[TableRow]
    n_variants: int
    settings: dict

    def find(self, label: str, b_mode: str | None = None) -> TableRow:
        hits = [r for r in self.rows if r.label == label and b_mode in (None, r.b_mode)]
        if len(hits) != 1:
            raise KeyError(f"{label} ({b_mode or 'any b-mode'}): {len(hits)} matching rows")
        return hits[0]

    def to_dict(self) -> dict:
        return {
            "rank_convention": RANK_CONVENTION,
            "settings": dict(self.settings),
            "n_variants": self.n_variants,
            "n_rows": len(self.rows),
            "rows": [r.to_dict() for r in self.rows],
        }


def _minimax_row(variant: VariantSpec, seed: int, max_restarts: int) -> TableRow:
    res = solve_minimax(variant, seed=seed, max_restarts=max_restarts)
    return TableRow(
        family=variant.label_prefix,
        role=variant.role.value,
        criterion=variant.metric.value,
        b_mode=variant.b_mode.value,
        origin=variant.origin.value,
        method="closed_form" if res.closed_form else "minimax",
        variant=variant.describe(),
        coefficients=res.coefficients,
        objective=res.level,
        certificate=certify(res.coefficients),
        extrema_x=res.extrema_x,
        residual_norm=res.residual_norm,
        restarts_used=res.restarts_used,
    )


def _search_row(role: Role, spec: SearchSpec) -> TableRow:
    res = search_total(spec)
    dims = ",".join(spec.dims)
    return TableRow(
        family=role.letter + "t",
        role=role.value,
        criterion="total",
        b_mode="free" if "b" in spec.dims else "fixed_half",
        origin="zero_at_origin" if spec.origin_constrained else "free",
        method="search",
        variant=f"{role.value}/total/{dims}/{spec.bound.value}",
        coefficients=res.coefficients,
        objective=res.d_tot,
        certificate=certify(res.coefficients),
        evaluations=res.evaluations,
        local_min_certified=res.local_min_certified,
    )


def _same(c1: KlCoefficients, c2: KlCoefficients, tol: float) -> bool:
    return all(abs(u - v) <= tol for u, v in zip(c1.as_tuple(), c2.as_tuple()))


def build_table(seed: int = DEFAULT_SEED, max_restarts: int = DEFAULT_MAX_RESTARTS,
                resolution: float = 1e-6, box: dict | None = None) -> Table:
    """Solve and search every variant, merge coincident rows, assign labels."""
    entries = []
    for variant in MINIMAX_ENTRIES:
        log.info("solving %s", variant.describe())
        entries.append(_minimax_row(variant, seed, max_restarts))
    for role, dims, bound in SEARCH_ENTRIES:
        spec = SearchSpec(dims, bound=bound, box=dict(box or {}), target_resolution=resolution)
        log.info("searching %s/%s", ",".join(dims), bound.value)
        entries.append(_search_row(role, spec))

    # grid searches only resolve coefficients to their final spacing
    merge_tol = max(MERGE_FLOOR, 2.0 * resolution)
    rows: list[TableRow] = []
    for e in entries:
        if e.method == "search":
            # searches collapse only onto exact closed-form points
            candidates = [r for r in rows if r.method == "closed_form"]
            tol = merge_tol
        else:
            candidates, tol = rows, MERGE_FLOOR
        owner = next((r for r in candidates if _same(r.coefficients, e.coefficients, tol)), None)
        if owner is None:
            rows.append(e)
        else:
            owner.merged.append(e.variant)

    def group_key(r):
        return (GROUP_ORDER.index(r.b_mode), ROLE_ORDER.index(r.family[0]))

    for key in sorted({group_key(r) for r in rows}):
        members = [r for r in rows if group_key(r) == key]
        for k, r in enumerate(sorted(members, key=lambda r: r.d_max), start=1):
            r.rank = k
    rows.sort(key=lambda r: (*group_key(r), r.rank))
    settings = {"seed": seed, "max_restarts": max_restarts, "resolution": resolution,
                "merge_tolerance": merge_tol}
    if box:
        settings["box"] = {k: list(v) for k, v in sorted(box.items())}
    return Table(rows=rows, n_variants=len(entries), settings=settings)


def format_text(table: Table) -> str:
    def g(v):
        if v is None:
            return "-"
        if isinstance(v, float) and math.isinf(v):
            return "∞"
        return f"{v:.6g}"

    head = ("label", "group", "a", "b", "c", "d_max", "r_max", "d_tot", "method", "variant")
    body = [
        (r.label, r.group, g(r.coefficients.a), g(r.coefficients.b), g(r.coefficients.c),
         g(r.d_max), g(r.r_max), g(r.d_tot), r.method, r.variant)
        for r in table.rows
    ]
    widths = [max(len(row[i]) for row in [head, *body]) for i in range(len(head))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [head, *body]]
    notes = [f"{r.label}: {n}" for r in table.rows for n in r.notes()]
    lines.append("")
    lines.append(f"{len(table.rows)} rows from {table.n_variants} variants; {RANK_CONVENTION}")
    lines.extend(notes)
    return "\n".join(lines) + "\n"
