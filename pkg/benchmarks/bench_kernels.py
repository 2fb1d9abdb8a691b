"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each case is timed with ``timeit`` on both backends (best of ``--repeat``);
the outputs of the two backends are also compared so a speedup never hides
a numerical disagreement.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import timeit

import numpy as np

from klq._backend import compiled, pure
from klq.metrics import SCAN_GRID, ZERO_GRID, ZERO_GRID_Q
from klq.minimax import PROBE_GRID

COEF = (0.3514909959483989, 0.5, 1.400071426749364)
FREE_B = (0.3196953, 0.4693806, 1.5639894)


def cases(k):
    a, b, c = COEF
    xs = [0.01 * i for i in range(1, 4001)]
    return {
        "q (4000 points)": lambda: [k.q(x) for x in xs],
        "critical_points abs": lambda: k.critical_points(a, b, c, 0, SCAN_GRID, 1e-12),
        "critical_points rel": lambda: k.critical_points(a, b, c, 1, SCAN_GRID, 1e-12),
        "d_tot tol 1e-8": lambda: k.d_tot(*FREE_B, 1e-8, 40.0, ZERO_GRID, ZERO_GRID_Q, 1e-14),
        "d_tot tol 1e-12": lambda: k.d_tot(a, b, c, 1e-12, 40.0, ZERO_GRID, ZERO_GRID_Q, 1e-14),
        "eval_err_grid 1e5": lambda: k.eval_err_grid(a, b, c, 0, PROBE_GRID),
    }


def _agree(x, y) -> bool:
    if isinstance(x, tuple):
        x, y = x[0], y[0]
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    return x.shape == y.shape and bool(np.allclose(x, y, rtol=1e-12, atol=1e-15))


def best_time(fn, repeat) -> float:
    timer = timeit.Timer(fn)
    n, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=n)) / n


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", metavar="PATH", help="also write results as JSON")
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; only the pure-Python kernels are available", file=sys.stderr)
        return 1

    results = []
    fast, slow = cases(compiled), cases(pure)
    print(f"{'case':<24}{'compiled':>14}{'python':>14}{'speedup':>10}  agree")
    for name in fast:
        t_c = best_time(fast[name], args.repeat)
        t_p = best_time(slow[name], max(1, args.repeat // 2))
        ok = _agree(fast[name](), slow[name]())
        results.append({"case": name, "compiled_s": t_c, "python_s": t_p,
                        "speedup": t_p / t_c if t_c > 0 else math.inf, "agree": ok})
        print(f"{name:<24}{t_c * 1e6:>11.1f} us{t_p * 1e6:>11.1f} us{t_p / t_c:>9.1f}x  {ok}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)
    return 0 if all(r["agree"] for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
