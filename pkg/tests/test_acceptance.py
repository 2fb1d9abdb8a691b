"""Acceptance criteria, one test per criterion.

Every sub-check is recorded through the ``acceptance`` fixture; the terminal
summary prints one PASS/FAIL line per criterion with the failing sub-checks.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
from scipy import special

from klq.core import (
    KlCoefficients,
    abs_error,
    abs_error_deriv,
    from_legacy,
    kl_deriv,
    kl_eval,
    limits,
    q_deriv,
    q_ref,
    rel_error,
    rel_error_deriv,
)
from klq.metrics import Metric, d_tot, d_tot_info, error_report, find_extrema
from klq.minimax import (
    LOWER_CLOSED,
    PROBE_GRID,
    UPPER_CLOSED,
    BMode,
    Origin,
    Role,
    VariantSpec,
    all_variants,
    solve_minimax,
)
from klq.search import SearchSpec, search_total
from klq.table import MINIMAX_ENTRIES, SEARCH_ENTRIES
from klq.verification import certify, compare_to_baseline
from klq._backend import kernels

SQRT2 = math.sqrt(2.0)
AD2 = VariantSpec(Role.APPROXIMATION, Metric.ABSOLUTE, BMode.FREE, Origin.ZERO)


def pct(v):
    return "inf" if math.isinf(v) else f"{100 * v:+.2f}%"


def finish(acc, crit):
    failed = acc.failures(crit)
    assert not failed, "; ".join(failed)


# -- 1 -----------------------------------------------------------------------

def test_criterion_1_baseline(acceptance):
    t0 = time.perf_counter()
    rep = error_report(KlCoefficients(0.3515, 0.5, 1.4001))
    dt = time.perf_counter() - t0
    acc = acceptance
    acc.check("1", "d_max = 0.00789 +- 1e-4", abs(rep.d_max - 0.00789) <= 1e-4, f"{rep.d_max:.6g}")
    acc.check("1", "r_max = 0.119 +- 1e-3", abs(rep.r_max - 0.119) <= 1e-3, f"{rep.r_max:.6g}")
    acc.check("1", "d_tot = 0.00385 +- 1e-4", abs(rep.d_tot - 0.00385) <= 1e-4, f"{rep.d_tot:.6g}")
    acc.check("1", "runtime < 1 s", dt < 1.0, f"{dt:.3f} s")
    finish(acc, "1")


# -- 2 -----------------------------------------------------------------------

def test_criterion_2_closed_forms(acceptance):
    acc = acceptance
    low_exact = (math.sqrt(math.pi / 32), 0.5, math.sqrt(8 / math.pi))
    up_exact = (1 / math.sqrt(2 * math.pi), 0.5, math.sqrt(math.pi / 2))
    for variant, exact, name in [
        (VariantSpec(Role.LOWER, Metric.ABSOLUTE, BMode.FIXED_HALF, Origin.ZERO), low_exact, "lower/absolute"),
        (VariantSpec(Role.LOWER, Metric.RELATIVE, BMode.FIXED_HALF, Origin.ZERO), low_exact, "lower/relative"),
        (VariantSpec(Role.UPPER, Metric.RELATIVE), up_exact, "upper/relative"),
    ]:
        res = solve_minimax(variant)
        err = max(abs(u - v) for u, v in zip(res.coefficients.as_tuple(), exact))
        acc.check("2", f"{name} closed form exact", err < 1e-12, f"error {err:.2e}")
    low, up = certify(KlCoefficients(*LOWER_CLOSED)), certify(KlCoefficients(*UPPER_CLOSED))
    acc.check("2", "lower closed form certifies (abs and rel)", low.is_lower_bound_abs and low.is_lower_bound_rel)
    acc.check("2", "upper closed form certifies (abs and rel)", up.is_upper_bound_abs and up.is_upper_bound_rel)
    acc.check("2", "probe grid has 1e5 points", PROBE_GRID.size == 100_000)
    finish(acc, "2")


# -- 3 -----------------------------------------------------------------------

def test_criterion_3_free_b_zero_origin(acceptance):
    acc = acceptance
    t0 = time.perf_counter()
    res = solve_minimax(AD2)
    dt = time.perf_counter() - t0
    a, b, c = res.coefficients.as_tuple()
    acc.check("3", "converged, residual < 1e-12", res.converged and res.residual_norm < 1e-12,
              f"{res.residual_norm:.2e}")
    acc.check("3", "|a - 0.32| < 5e-3", abs(a - 0.32) < 5e-3, f"a = {a:.7f}")
    acc.check("3", "|b - 0.4703| < 5e-4", abs(b - 0.4703) < 5e-4, f"b = {b:.7f}, |b - 0.4703| = {abs(b - 0.4703):.2e}")
    acc.check("3", "a*c = 1/2 to machine precision", abs(a * c - 0.5) <= 4 * np.finfo(float).eps,
              f"{a * c - 0.5:.2e}")
    acc.check("3", "runtime < 30 s", dt < 30.0, f"{dt:.2f} s, {res.restarts_used} restarts")
    finish(acc, "3")


# -- 4 -----------------------------------------------------------------------

def test_criterion_4_percentages(acceptance):
    acc = acceptance

    def band(what, v, lo, hi):
        acc.check("4", f"{what} in [{lo:.0%}, {hi:.0%}]", lo <= v <= hi, pct(v))

    ad2 = compare_to_baseline(KlCoefficients(0.32, 0.4703, 1.5625))
    band("Ad-2 d_max reduction", -ad2.d_max, 0.83, 0.97)
    band("Ad-2 d_tot reduction", -ad2.d_tot, 0.58, 0.72)
    acc.check("4", "Ad-2 r_max infinite", math.isinf(ad2.r_max))

    mix = compare_to_baseline(from_legacy(1.95, 1.113))
    band("(1.95, 1.113) d_max reduction", -mix.d_max, 0.08, 0.22)
    band("(1.95, 1.113) r_max reduction", -mix.r_max, 0.08, 0.22)
    band("(1.95, 1.113) d_tot increase", mix.d_tot, 0.58, 0.72)

    at4 = compare_to_baseline(from_legacy(2.03, 1.162))
    band("At-4 d_max reduction", -at4.d_max, 0.03, 0.17)
    band("At-4 d_tot reduction", -at4.d_tot, 0.18, 0.32)
    band("At-4 r_max increase", at4.r_max, 0.08, 0.22)

    ar5c = from_legacy(1.88, 1.061)
    ar5 = compare_to_baseline(ar5c)
    band("Ar-5 r_max reduction", -ar5.r_max, 0.43, 0.57)
    acc.check("4", "Ar-5 a*c within 1e-3 of 1/2", abs(ar5c.a * ar5c.c - 0.5) <= 1e-3, f"{ar5c.a * ar5c.c:.6f}")
    finish(acc, "4")


# -- 5 -----------------------------------------------------------------------

def _equioscillation_checks(acc, crit, tag, coef, variant, level):
    ext = find_extrema(coef, variant.metric)
    ok_count = acc.check(crit, f"{tag}: extrema count {variant.n_extrema}", len(ext) == variant.n_extrema,
                         f"found {len(ext)}")
    if not ok_count:
        return
    for k, (e, p) in enumerate(zip(ext, variant.pattern)):
        if p == 0:
            acc.check(crit, f"{tag}: touch extremum {k + 1} at zero", abs(e.value) <= 1e-9 * level, f"{e.value:.3e}")
        else:
            sign_ok = math.copysign(1.0, e.value) == p
            mag = abs(abs(e.value) - level) / level
            acc.check(crit, f"{tag}: extremum {k + 1} sign {p:+d}, magnitude within 1e-9",
                      sign_ok and mag <= 1e-9, f"value {e.value:.12g}, rel dev {mag:.2e}")
    lim = limits(coef)
    if variant.origin is Origin.RIPPLE and variant.role is Role.APPROXIMATION:
        start = lim.d_at_0 if variant.metric is Metric.ABSOLUTE else lim.r_at_0
        acc.check(crit, f"{tag}: origin ripple equals -level", abs(start + level) <= 1e-9 * level, f"{start:.12g}")


def test_criterion_5_equioscillation(acceptance, solutions, table):
    acc = acceptance
    for v, res in solutions.items():
        if res.closed_form:
            continue
        _equioscillation_checks(acc, "5", v.describe(), res.coefficients, v, res.level)
    for row in table.rows:
        if row.method != "minimax":
            continue
        v = next(s for s in MINIMAX_ENTRIES if s.describe() == row.variant)
        _equioscillation_checks(acc, "5", f"table {row.label} ({row.group})", row.coefficients, v, row.objective)
    finish(acc, "5")


# -- 6 -----------------------------------------------------------------------

def _bound_checks(acc, tag, coef, role):
    sign = -1.0 if role is Role.LOWER else 1.0
    d = np.asarray(kernels.eval_err_grid(coef.a, coef.b, coef.c, 0, PROBE_GRID))
    lim = limits(coef)
    worst = float(np.min(sign * d))
    acc.check("6", f"{tag}: probe sign", worst >= -1e-12, f"worst signed d {worst:.3e}")
    acc.check("6", f"{tag}: origin limit sign", sign * lim.d_at_0 >= -1e-12, f"d(0) = {lim.d_at_0:.3e}")
    acc.check("6", f"{tag}: tail sign", sign * lim.r_at_inf.value >= -1e-12, f"r(inf) = {lim.r_at_inf.value}")


def test_criterion_6_bound_soundness(acceptance, solutions, table):
    acc = acceptance
    for v, res in solutions.items():
        if v.role is not Role.APPROXIMATION:
            _bound_checks(acc, v.describe(), res.coefficients, v.role)
    for row in table.rows:
        if row.role != Role.APPROXIMATION.value:
            _bound_checks(acc, f"table {row.label} ({row.group})", row.coefficients, Role(row.role))
    finish(acc, "6")


# -- 7 -----------------------------------------------------------------------

def test_criterion_7i_derivatives(acceptance):
    acc = acceptance
    rng = np.random.default_rng(7)
    worst = {"d'": 0.0, "r'": 0.0, "Qtilde'": 0.0, "Q'": 0.0}
    for _ in range(100):
        coef = KlCoefficients(rng.uniform(0.3, 0.4), rng.uniform(0.45, 0.55), rng.uniform(1.2, 1.7))
        x = float(rng.uniform(0.05, 6.0))
        h = 1e-5 * max(1.0, x)
        pairs = {
            "d'": (lambda t: abs_error(coef, t), abs_error_deriv(coef, x)),
            "r'": (lambda t: rel_error(coef, t), rel_error_deriv(coef, x)),
            "Qtilde'": (lambda t: kl_eval(coef, t), kl_deriv(coef, x)),
            "Q'": (q_ref, q_deriv(x)),
        }
        for name, (f, an) in pairs.items():
            fd = (f(x + h) - f(x - h)) / (2 * h)
            worst[name] = max(worst[name], abs(fd - an) / abs(an))
    for name, w in worst.items():
        acc.check("7", f"(i) {name} vs central differences, 100 pairs, rel 1e-5", w <= 1e-5, f"worst {w:.2e}")
    finish(acc, "7")


def _riemann_d_tot(coef, x_mid, q_mid, h):
    total = 0.0
    for xs, qs in zip(x_mid, q_mid):
        kl = coef.a * np.exp(-coef.b * xs * xs) * (-np.expm1(-coef.c * xs)) / xs
        total += float(np.sum(np.abs(kl - qs)))
    return total * h


def test_criterion_7ii_quadrature(acceptance):
    acc = acceptance
    n, x_hi = 10_000_000, 40.0
    h = x_hi / n
    chunks = np.array_split((np.arange(n) + 0.5) * h, 20)
    q_chunks = [0.5 * special.erfc(xs / SQRT2) for xs in chunks]
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        coef = KlCoefficients(rng.uniform(0.28, 0.42), rng.uniform(0.45, 0.55), rng.uniform(1.1, 1.7))
        adaptive = d_tot_info(coef)[0]
        worst = max(worst, abs(adaptive - _riemann_d_tot(coef, chunks, q_chunks, h)))
    acc.check("7", "(ii) adaptive d_tot vs 1e7-point Riemann sum, 20 triples, abs 1e-8", worst <= 1e-8,
              f"worst {worst:.2e}")
    finish(acc, "7")


def _sup_error(a_vals, c_vals, metric):
    """Sup over x of |d| or |r| for b = 1/2, on a 0.005-spaced x grid plus the limits."""
    x = np.linspace(0.0, 12.0, 2401)[1:]
    q = 0.5 * special.erfc(x / SQRT2)
    g = np.exp(-0.5 * x * x) / x
    kl = a_vals[:, None] * g[None, :] * (-np.expm1(-np.outer(c_vals, x)))
    e = kl - q[None, :] if metric is Metric.ABSOLUTE else kl / q[None, :] - 1.0
    sup = np.max(np.abs(e), axis=1)
    ac = a_vals * c_vals
    if metric is Metric.ABSOLUTE:
        return np.maximum(sup, np.abs(ac - 0.5))
    tail = np.abs(a_vals * math.sqrt(2 * math.pi) - 1.0)
    return np.maximum(np.maximum(sup, np.abs(2 * ac - 1.0)), tail)


def _grid_min(a_axis, c_axis, metric, constrained):
    if constrained:
        return float(np.min(_sup_error(a_axis, 0.5 / a_axis, metric)))
    best = math.inf
    for block in np.array_split(a_axis, max(1, a_axis.size // 2)):
        aa, cc = np.meshgrid(block, c_axis, indexing="ij")
        best = min(best, float(np.min(_sup_error(aa.ravel(), cc.ravel(), metric))))
    return best


def test_criterion_7iii_brute_force(acceptance, solutions):
    acc = acceptance
    step = 1e-4
    for v in all_variants():
        if v.role is not Role.APPROXIMATION or v.free_b:
            continue
        res = solutions[v]
        a0, c0 = res.coefficients.a, res.coefficients.c
        constrained = v.origin is Origin.ZERO
        if constrained:
            # zero error at the origin pins c = 1/(2a): walk the whole constraint curve
            best = _grid_min(np.arange(0.25, 0.45 + step / 2, step), None, v.metric, True)
        else:
            coarse = _grid_min(np.arange(0.25, 0.45 + 1e-9, 1e-3), np.arange(1.0, 1.8 + 1e-9, 1e-3), v.metric, False)
            fine = _grid_min(a0 + step * np.arange(-50, 51), c0 + step * np.arange(-50, 51), v.metric, False)
            best = min(coarse, fine)
        acc.check("7", f"(iii) {v.describe()}: no grid point beats level - 1e-6",
                  best >= res.level - 1e-6, f"grid best {best:.9g}, level {res.level:.9g}")
    finish(acc, "7")


# -- 8 -----------------------------------------------------------------------

def test_criterion_8_total_search(acceptance, table):
    acc = acceptance
    res = search_total(SearchSpec(("a", "c")))
    ref = d_tot(from_legacy(2.03, 1.162))
    acc.check("8", "d_tot <= 1.01 x d_tot(from_legacy(2.03, 1.162))", res.d_tot <= 1.01 * ref,
              f"{res.d_tot:.8g} vs {ref:.8g}")
    acc.check("8", "local-minimum certificate", res.local_min_certified,
              f"neighbors {min(res.neighbor_d_tot) - res.d_tot:+.2e}")
    acc.check("8", "final resolution <= 1e-6", res.resolution_achieved <= 1e-6, f"{res.resolution_achieved:.2e}")
    acc.check("8", "incumbent non-increasing", list(res.history) == sorted(res.history, reverse=True))
    acc.check("8", "stored d_tot matches recomputation within 1e-10", abs(d_tot(res.coefficients) - res.d_tot) <= 1e-10)
    row = next(r for r in table.rows if r.variant == "approximation/total/a,c/none")
    acc.check("8", "deterministic (independent run reproduces table row bit for bit)",
              row.coefficients == res.coefficients and row.objective == res.d_tot)
    finish(acc, "8")


# -- 9 -----------------------------------------------------------------------

def test_criterion_9_table(acceptance, table):
    acc = acceptance
    expected = {v.describe() for v in MINIMAX_ENTRIES} | {
        f"{role.value}/total/{','.join(dims)}/{bound.value}" for role, dims, bound in SEARCH_ENTRIES
    }
    emitted = {r.variant for r in table.rows} | {m for r in table.rows for m in r.merged}
    acc.check("9", "every legal variant emitted", emitted == expected and table.n_variants == len(expected),
              f"{len(emitted)} of {len(expected)}")
    acc.check("9", "all 13 minimax variants covered", {v.describe() for v in all_variants()} <= emitted)
    lower = [r for r in table.rows if r.coefficients.as_tuple() == LOWER_CLOSED]
    upper = [r for r in table.rows if r.coefficients.as_tuple() == UPPER_CLOSED]
    acc.check("9", "one exact row per closed-form bound", len(lower) == 1 and len(upper) == 1)
    acc.check("9", "shared lower closed form collapsed and annotated",
              bool(lower) and "lower_bound/relative/fixed_half/zero_at_origin" in lower[0].merged
              and any("also solve" in n for n in lower[0].notes()))
    acc.check("9", "17 rows", len(table.rows) == 17, str(len(table.rows)))

    ad2 = table.find("Ad-2", "free")
    a, b, c = ad2.coefficients.as_tuple()
    acc.check("9", "Ad-2 row is the free-b zero-origin minimax solution", ad2.variant == AD2.describe())
    acc.check("9", "Ad-2 row matches (0.32, 0.4703, 1.5625) at criterion-3 tolerances",
              abs(a - 0.32) < 5e-3 and abs(b - 0.4703) < 5e-4 and abs(a * c - 0.5) < 1e-15,
              f"({a:.6f}, {b:.6f}, {c:.6f})")

    at4 = table.find("At-4", "fixed_half")
    cmp = compare_to_baseline(at4.coefficients)
    ref = d_tot(from_legacy(2.03, 1.162))
    acc.check("9", "At-4 row is the (a,c) total-error search", at4.variant == "approximation/total/a,c/none")
    acc.check("9", "At-4 row reproduces the quoted percentage bands and d_tot within 1%",
              0.03 <= -cmp.d_max <= 0.17 and 0.18 <= -cmp.d_tot <= 0.32 and 0.08 <= cmp.r_max <= 0.22
              and at4.d_tot <= 1.01 * ref,
              f"d_max {pct(cmp.d_max)}, d_tot {pct(cmp.d_tot)}, r_max {pct(cmp.r_max)}")

    ar5 = table.find("Ar-5", "fixed_half")
    cmp = compare_to_baseline(ar5.coefficients)
    quoted = from_legacy(1.88, 1.061)
    acc.check("9", "Ar-5 row reproduces the quoted relative-error reduction and a*c = 1/2",
              0.43 <= -cmp.r_max <= 0.57 and abs(ar5.coefficients.a * ar5.coefficients.c - 0.5) <= 1e-3,
              f"r_max {pct(cmp.r_max)}")
    # half a unit in the last quoted digit of B = 1.061 and A = 1.88
    tol_a, tol_c = quoted.a * 0.0005 / 1.061, 0.005 / SQRT2
    acc.check("9", "Ar-5 row matches from_legacy(1.88, 1.061) to the quoted digits",
              abs(ar5.coefficients.a - quoted.a) < tol_a and abs(ar5.coefficients.c - quoted.c) < tol_c,
              f"({ar5.coefficients.a:.6f}, {ar5.coefficients.c:.6f}) vs ({quoted.a:.6f}, {quoted.c:.6f})")

    # unquoted rows: the property suite applies to every generated row
    for row in table.rows:
        tag = f"{row.label} ({row.group})"
        acc.check("9", f"{tag}: stored d_tot matches recomputation", abs(row.d_tot - d_tot(row.coefficients)) <= 1e-10)
        if row.method == "search":
            acc.check("9", f"{tag}: local-minimum certificate", bool(row.local_min_certified))
            continue
        if row.method == "minimax":
            acc.check("9", f"{tag}: residual < 1e-12", row.residual_norm < 1e-12, f"{row.residual_norm:.2e}")
        v = next(s for s in MINIMAX_ENTRIES if s.describe() == row.variant)
        glob = row.d_max if v.metric is Metric.ABSOLUTE else row.r_max
        acc.check("9", f"{tag}: level equals recomputed metric within 1e-9", abs(glob - row.objective) <= 1e-9)
        if v.role is Role.LOWER:
            acc.check("9", f"{tag}: certified lower bound", row.certificate.is_lower_bound_abs)
        if v.role is Role.UPPER:
            acc.check("9", f"{tag}: certified upper bound", row.certificate.is_upper_bound_abs)
    finish(acc, "9")


# -- 10 ----------------------------------------------------------------------

def _cli(*argv):
    out = subprocess.run([sys.executable, "-m", "klq.cli", *argv], capture_output=True, check=True)
    return out.stdout


def test_criterion_10_determinism(acceptance):
    acc = acceptance
    commands = [
        ("solve free-b", ["solve", "--role", "approx", "--metric", "absolute", "--free-b", "--origin", "zero"]),
        ("solve ripple", ["solve", "--role", "lower", "--metric", "absolute", "--origin", "ripple", "--seed", "9"]),
        ("search", ["search", "--dims", "a", "--origin-constrained"]),
        ("metrics", ["metrics", "--a", "0.32", "--b", "0.4703", "--c", "1.5625"]),
        ("curves", ["curves", "--legacy", "1.98", "1.135", "--points", "200", "--format", "json"]),
    ]
    for name, argv in commands:
        first, second = _cli(*argv), _cli(*argv)
        json.loads(first)
        acc.check("10", f"{name}: byte-identical JSON across two runs", first == second, f"{len(first)} bytes")
    finish(acc, "10")
