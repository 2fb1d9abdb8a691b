"""Command-line front end.

    klq solve   --role approx|lower|upper --metric absolute|relative [--free-b] [--origin zero|ripple]
    klq search  --dims a,c [--origin-constrained] [--bound none|lower|upper] [--resolution R]
    klq metrics --a A --b B --c C   (or --legacy A B)
    klq table
    klq curves  (--a A --b B --c C | --legacy A B | --variant ROLE/METRIC[/BMODE[/ORIGIN]])

Global flags (before or after the subcommand): --output PATH, --format
json|text|csv, --seed N, --config FILE, -v.

Exit status: 0 on success, 1 when a solver or search fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from ._backend import BACKEND
from .core import X_HI, DomainError, KlCoefficients, abs_error, from_legacy, kl_eval, q_ref, rel_error
from .metrics import Metric
from .minimax import (
    DEFAULT_MAX_RESTARTS,
    DEFAULT_SEED,
    BMode,
    ConvergenceError,
    Origin,
    Role,
    VariantError,
    VariantSpec,
    solve_minimax,
)
from .search import DEFAULT_BOX, Bound, InfeasibleSearchError, SearchSpec, search_total
from .table import build_table, format_text
from .verification import certify

log = logging.getLogger("klq")

ROLE_ALIASES = {
    "approx": Role.APPROXIMATION, "approximation": Role.APPROXIMATION,
    "lower": Role.LOWER, "lower_bound": Role.LOWER,
    "upper": Role.UPPER, "upper_bound": Role.UPPER,
}
ORIGIN_ALIASES = {
    "zero": Origin.ZERO, "zero_at_origin": Origin.ZERO,
    "ripple": Origin.RIPPLE, "ripple_at_origin": Origin.RIPPLE,
}
BMODE_ALIASES = {"half": BMode.FIXED_HALF, "fixed_half": BMode.FIXED_HALF, "free": BMode.FREE}
CONFIG_KEYS = {"box.a", "box.b", "box.c", "resolution", "points_per_dim", "shrink",
               "max_restarts", "seed"}


class UsageError(Exception):
    pass


# -- config ------------------------------------------------------------------

def load_config(path: str) -> dict:
    """Read ``key = value`` lines; ``[section]`` headers prefix the keys below them."""
    out = {}
    section = ""
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = f"{section}.{key}" if section else key
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{n}: unknown key {key!r} (known: {', '.join(sorted(CONFIG_KEYS))})")
            out[key] = _parse_config_value(key, val.strip("\"'"), f"{path}:{n}")
    return out


def _parse_config_value(key, val, where):
    try:
        if key.startswith("box."):
            lo, hi = (float(s) for s in val.strip("[]()").split(","))
            return (lo, hi)
        if key in ("points_per_dim", "max_restarts", "seed"):
            return int(val)
        return float(val)
    except ValueError:
        raise UsageError(f"{where}: bad value {val!r} for {key}") from None


# -- serialization -------------------------------------------------------------

def jsonable(obj):
    """Replace non-finite floats by the strings "inf", "-inf", "nan"."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.floating):
        return jsonable(float(obj))
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(doc) -> str:
    return json.dumps(jsonable(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isinf(v):
            return "∞" if v > 0 else "-∞"
        return f"{v:.12g}"
    return str(v)


def dump_text(doc, indent=0) -> str:
    pad = "  " * indent
    lines = []
    for k, v in doc.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(dump_text(v, indent + 1).rstrip("\n"))
        elif isinstance(v, (list, tuple)) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}:")
            for item in v:
                lines.append(f"{pad}  - " + ", ".join(f"{ik}={_fmt(iv)}" for ik, iv in item.items()))
        elif isinstance(v, (list, tuple)):
            lines.append(f"{pad}{k}: " + (", ".join(_fmt(x) for x in v) if v else "-"))
        else:
            lines.append(f"{pad}{k}: {_fmt(v)}")
    return "\n".join(lines) + "\n"


def write_output(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".klq-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _coef_dict(coef: KlCoefficients) -> dict:
    legacy = coef.legacy()
    return {
        "a": coef.a, "b": coef.b, "c": coef.c,
        "legacy": None if legacy is None else {"A": legacy[0], "B": legacy[1]},
    }


def _report_dict(report) -> dict:
    lim = report.limits
    return {
        "d_max": report.d_max,
        "r_max": report.r_max,
        "d_tot": report.d_tot,
        "d_tot_tail_bound": report.d_tot_tail_bound,
        "limits": {
            "d_at_0": lim.d_at_0,
            "r_at_0": lim.r_at_0,
            "d_at_inf": lim.d_at_inf,
            "r_at_inf": lim.r_at_inf.value,
            "r_at_inf_case": lim.r_at_inf.kind.value,
        },
        "abs_extrema": [{"x": e.x, "value": e.value, "kind": e.kind} for e in report.abs_extrema],
        "rel_extrema": [{"x": e.x, "value": e.value, "kind": e.kind} for e in report.rel_extrema],
    }


def _certificate_dict(cert) -> dict:
    eq, eqr = cert.equioscillation, cert.equioscillation_rel
    return {
        "is_lower_bound_abs": cert.is_lower_bound_abs,
        "is_upper_bound_abs": cert.is_upper_bound_abs,
        "is_lower_bound_rel": cert.is_lower_bound_rel,
        "is_upper_bound_rel": cert.is_upper_bound_rel,
        "equioscillation_abs": {"holds": eq.holds, "level": eq.level, "spread": eq.spread},
        "equioscillation_rel": {"holds": eqr.holds, "level": eqr.level, "spread": eqr.spread},
        "vs_baseline": {
            "d_max": cert.vs_baseline.d_max,
            "r_max": cert.vs_baseline.r_max,
            "d_tot": cert.vs_baseline.d_tot,
        },
    }


# -- commands ------------------------------------------------------------------

def _settings(args, **extra) -> dict:
    out = {"seed": args.seed}
    out.update(extra)
    return out


def cmd_solve(args, cfg) -> dict:
    variant = VariantSpec(
        role=ROLE_ALIASES[args.role],
        metric=Metric(args.metric),
        b_mode=BMode.FREE if args.free_b else BMode.FIXED_HALF,
        origin=ORIGIN_ALIASES[args.origin],
    )
    max_restarts = args.max_restarts if args.max_restarts is not None else cfg.get("max_restarts", DEFAULT_MAX_RESTARTS)
    res = solve_minimax(variant, seed=args.seed, max_restarts=max_restarts)
    return {
        "command": "solve",
        "variant": {
            "role": variant.role.value,
            "metric": variant.metric.value,
            "b_mode": variant.b_mode.value,
            "origin": variant.origin.value,
        },
        "coefficients": _coef_dict(res.coefficients),
        "level_name": "d_max" if variant.metric is Metric.ABSOLUTE else "r_max",
        "level": res.level,
        "extrema_x": list(res.extrema_x),
        "residual_norm": res.residual_norm,
        "restarts_used": res.restarts_used,
        "iterations": res.iterations,
        "converged": res.converged,
        "closed_form": res.closed_form,
        "settings": _settings(args, max_restarts=max_restarts),
    }


def _search_spec(args, cfg) -> SearchSpec:
    dims = tuple(s.strip() for s in args.dims.split(",") if s.strip())
    if args.origin_constrained and "c" in dims:
        raise UsageError("--origin-constrained ties c = 1/(2a); drop c from --dims")
    if not args.origin_constrained and "c" not in dims:
        raise UsageError("searches without c must pass --origin-constrained (c = 1/(2a))")
    box = {d: cfg[f"box.{d}"] for d in dims if f"box.{d}" in cfg}
    for d in dims:
        override = getattr(args, f"box_{d}", None)
        if override is not None:
            box[d] = override
    kwargs = {}
    if "shrink" in cfg:
        kwargs["shrink"] = cfg["shrink"]
    resolution = args.resolution if args.resolution is not None else cfg.get("resolution", 1e-6)
    points = args.points if args.points is not None else cfg.get("points_per_dim")
    try:
        return SearchSpec(dims, origin_constrained=args.origin_constrained, bound=Bound(args.bound),
                          box=box, target_resolution=resolution, points_per_dim=points, **kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_search(args, cfg) -> dict:
    spec = _search_spec(args, cfg)
    res = search_total(spec)
    cert = certify(res.coefficients)
    return {
        "command": "search",
        "spec": {
            "dims": list(spec.dims),
            "origin_constrained": spec.origin_constrained,
            "bound": spec.bound.value,
            "box": {d: list(spec.box[d]) for d in spec.dims},
            "target_resolution": spec.target_resolution,
            "points_per_dim": spec.points_per_dim,
            "shrink": spec.shrink,
        },
        "coefficients": _coef_dict(res.coefficients),
        "d_tot": res.d_tot,
        "evaluations": res.evaluations,
        "rounds": res.rounds,
        "resolution_achieved": res.resolution_achieved,
        "constraint_satisfied": res.constraint_satisfied,
        "local_min_certified": res.local_min_certified,
        "history": list(res.history),
        "certificate": _certificate_dict(cert),
        "settings": _settings(args),
    }


def _coefficients_from_args(args) -> tuple[KlCoefficients, str]:
    if args.legacy is not None:
        A, B = args.legacy
        return from_legacy(A, B), f"legacy A={A!r} B={B!r}"
    given = [args.a, args.b, args.c]
    if any(v is None for v in given):
        raise UsageError("give all of --a --b --c, or --legacy A B")
    return KlCoefficients(*given), "explicit"


def cmd_metrics(args, cfg) -> dict:
    coef, source = _coefficients_from_args(args)
    cert = certify(coef)
    return {
        "command": "metrics",
        "coefficients": _coef_dict(coef),
        "source": source,
        "report": _report_dict(cert.report),
        "certificate": _certificate_dict(cert),
    }


def cmd_table(args, cfg) -> dict:
    box = {k[4:]: v for k, v in cfg.items() if k.startswith("box.")}
    resolution = args.resolution if args.resolution is not None else cfg.get("resolution", 1e-6)
    max_restarts = args.max_restarts if args.max_restarts is not None else cfg.get("max_restarts", DEFAULT_MAX_RESTARTS)
    table = build_table(seed=args.seed, max_restarts=max_restarts, resolution=resolution, box=box or None)
    return {"command": "table", "table": table, **table.to_dict()}


def _parse_variant(text: str) -> VariantSpec:
    parts = [p.strip() for p in text.split("/")]
    if not 2 <= len(parts) <= 4:
        raise UsageError("--variant is ROLE/METRIC[/BMODE[/ORIGIN]], e.g. approx/absolute/free/zero")
    try:
        role = ROLE_ALIASES[parts[0]]
        metric = Metric(parts[1])
        b_mode = BMODE_ALIASES[parts[2]] if len(parts) > 2 else BMode.FIXED_HALF
        origin = ORIGIN_ALIASES[parts[3]] if len(parts) > 3 else Origin.ZERO
    except (KeyError, ValueError):
        raise UsageError(f"unrecognized variant {text!r}") from None
    return VariantSpec(role, metric, b_mode, origin)


def curve_grid(x_min: float, x_max: float, points: int, log_spacing: bool) -> np.ndarray:
    if not (0.0 <= x_min < x_max <= X_HI):
        raise UsageError(f"need 0 <= x-min < x-max <= {X_HI:g}")
    if points < 2:
        raise UsageError("--points must be at least 2")
    if log_spacing:
        if x_min <= 0.0:
            raise UsageError("log spacing needs x-min > 0")
        return np.geomspace(x_min, x_max, points)
    return np.linspace(x_min, x_max, points)


def curve_rows(coef: KlCoefficients, xs) -> list[tuple[float, float, float, float, float]]:
    rows = []
    for x in xs:
        x = float(x)
        q = q_ref(x)
        qt = kl_eval(coef, x)
        rows.append((x, q, qt, abs_error(coef, x), rel_error(coef, x)))
    return rows


def cmd_curves(args, cfg) -> dict:
    if args.variant is not None:
        variant = _parse_variant(args.variant)
        coef = solve_minimax(variant, seed=args.seed, max_restarts=DEFAULT_MAX_RESTARTS).coefficients
        source = f"variant {variant.describe()} (seed {args.seed})"
    else:
        coef, source = _coefficients_from_args(args)
    xs = curve_grid(args.x_min, args.x_max, args.points, args.spacing == "log")
    return {
        "command": "curves",
        "coefficients": _coef_dict(coef),
        "source": source,
        "spacing": args.spacing,
        "columns": ["x", "q", "q_tilde", "d", "r"],
        "rows": curve_rows(coef, xs),
    }


def curves_csv(doc) -> str:
    buf = io.StringIO()
    c = doc["coefficients"]
    buf.write(f"# a={c['a']!r} b={c['b']!r} c={c['c']!r} source={doc['source']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(doc["columns"])
    for row in doc["rows"]:
        w.writerow([repr(v) for v in row])
    return buf.getvalue()


COMMANDS = {"solve": cmd_solve, "search": cmd_search, "metrics": cmd_metrics,
            "table": cmd_table, "curves": cmd_curves}


# -- parser --------------------------------------------------------------------

def _box(text):
    try:
        lo, hi = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return (lo, hi)


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--output", "-o", default=d(None), metavar="PATH", help="write here instead of stdout")
    p.add_argument("--format", "-f", choices=("json", "text", "csv"), default=d(None),
                   help="output format (default json; csv only for curves)")
    p.add_argument("--seed", type=int, default=d(None), help=f"random seed (default {DEFAULT_SEED})")
    p.add_argument("--config", default=d(None), metavar="FILE", help="key = value overrides")
    p.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="klq", description="Optimize and certify KL Q-function coefficients.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve a minimax variant")
    p.add_argument("--role", required=True, choices=("approx", "lower", "upper"))
    p.add_argument("--metric", required=True, choices=("absolute", "relative"))
    p.add_argument("--free-b", action="store_true", help="optimize b too (default b = 1/2)")
    p.add_argument("--origin", choices=("zero", "ripple"), default="zero")
    p.add_argument("--max-restarts", type=int, default=None)

    p = sub.add_parser("search", parents=[common], help="minimize total error by grid search")
    p.add_argument("--dims", default="a,c", help="a | a,b | a,c | a,b,c (default a,c)")
    p.add_argument("--origin-constrained", action="store_true", help="tie c = 1/(2a)")
    p.add_argument("--bound", choices=("none", "lower", "upper"), default="none")
    p.add_argument("--resolution", type=float, default=None, help="target grid spacing (default 1e-6)")
    p.add_argument("--points", type=int, default=None, help="grid points per dimension")
    for d in ("a", "b", "c"):
        lo, hi = DEFAULT_BOX[d]
        p.add_argument(f"--box-{d}", type=_box, default=None, metavar="LO,HI", help=f"default {lo:g},{hi:g}")

    for name, helptext in (("metrics", "error report and certificate"), ("curves", "export error curves")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--a", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--c", type=float)
        p.add_argument("--legacy", type=float, nargs=2, metavar=("A", "B"))
        if name == "curves":
            p.add_argument("--variant", help="ROLE/METRIC[/BMODE[/ORIGIN]], solved with --seed")
            p.add_argument("--x-min", type=float, default=0.0)
            p.add_argument("--x-max", type=float, default=6.0)
            p.add_argument("--points", type=int, default=1000)
            p.add_argument("--spacing", choices=("linear", "log"), default="linear")

    p = sub.add_parser("table", parents=[common], help="regenerate the coefficient table")
    p.add_argument("--resolution", type=float, default=None, help="search resolution (default 1e-6)")
    p.add_argument("--max-restarts", type=int, default=None)
    return parser


def render(doc: dict, fmt: str) -> str:
    command = doc["command"]
    if fmt == "csv":
        if command != "curves":
            raise UsageError("--format csv is only available for curves")
        return curves_csv(doc)
    if command == "table":
        table = doc.pop("table")
        if fmt == "text":
            return format_text(table)
    if fmt == "text":
        if command == "curves":
            cols = doc.pop("rows")
            body = dump_text(doc)
            return body + "\n".join(" ".join(_fmt(v) for v in row) for row in cols) + "\n"
        return dump_text(doc)
    return dump_json(doc)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.debug("backend: %s", BACKEND)
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.seed is None:
            args.seed = cfg.get("seed", DEFAULT_SEED)
        fmt = args.format or ("csv" if args.command == "curves" else "json")
        doc = COMMANDS[args.command](args, cfg)
        text = render(doc, fmt)
    except (UsageError, VariantError, DomainError, OSError) as exc:
        parser.error(str(exc))
    except ConvergenceError as exc:
        print(f"klq: solver failed: {exc} (best residual {exc.best_residual:.3g}, "
              f"{exc.restarts} restarts)", file=sys.stderr)
        return 1
    except InfeasibleSearchError as exc:
        print(f"klq: search failed: {exc}", file=sys.stderr)
        return 1
    write_output(text, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
