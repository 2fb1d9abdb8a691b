"""Pure-Python kernels.

Scalar implementations of the Q-function, the KL expression and its error
functions, plus the scan/bisection and quadrature loops built on them.
``_kernels.pyx`` mirrors this module line for line; keep the two in sync.
"""
import math

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

# Q(x): power series below this point, Laplace continued fraction above.
SERIES_CUTOFF = 2.0
CF_MAX_TERMS = 500

# Below these values of c*x the removable singularity is handled by series.
G_SERIES_T = 1e-4
H_SERIES_T = 0.1

# Fixed panel breakpoints for the |d| quadrature; keeps wide tail panels
# from being accepted on a handful of near-zero samples.
QUAD_BREAKS = (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 14.0, 20.0, 28.0)
SIMPSON_MIN_DEPTH = 2
SIMPSON_MAX_DEPTH = 50

ABSOLUTE = 0
RELATIVE = 1


def _q_series_sum(x):
    # sum_n x^(2n+1) / (1*3*...*(2n+1)); all terms positive
    x2 = x * x
    term = x
    total = x
    n = 0
    while term > 1e-17 * total:
        n += 1
        term *= x2 / (2 * n + 1)
        total += term
    return total


def _mills_ratio(x):
    # R(x) = Q(x)/phi(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), modified Lentz
    tiny = 1e-300
    f = x
    cc = f
    dd = 0.0
    for n in range(1, CF_MAX_TERMS):
        dd = x + n * dd
        if dd == 0.0:
            dd = tiny
        dd = 1.0 / dd
        cc = x + n / cc
        if cc == 0.0:
            cc = tiny
        delta = cc * dd
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 / f


def _gauss(x):
    # exp(-x^2/2) with x split so the leading square is exact
    xh = math.floor(x * 16.0) / 16.0
    return math.exp(-0.5 * xh * xh) * math.exp(-0.5 * (x - xh) * (x + xh))


def q_scaled(x):
    """Q(x) * exp(x**2 / 2), finite for every x >= 0."""
    if x < SERIES_CUTOFF:
        return 0.5 * math.exp(0.5 * x * x) - INV_SQRT_2PI * _q_series_sum(x)
    return INV_SQRT_2PI * _mills_ratio(x)


def q(x):
    if x < SERIES_CUTOFF:
        return 0.5 - INV_SQRT_2PI * _gauss(x) * _q_series_sum(x)
    return INV_SQRT_2PI * _gauss(x) * _mills_ratio(x)


def q_prime(x):
    return -INV_SQRT_2PI * _gauss(x)


def _g(c, x):
    # (1 - exp(-c x)) / x
    t = c * x
    if t < G_SERIES_T:
        return c * (1.0 - t / 2.0 + t * t / 6.0 - t * t * t / 24.0)
    return -math.expm1(-t) / x


def _h(c, x):
    # d/dx log g = c / (exp(c x) - 1) - 1/x
    t = c * x
    if t < H_SERIES_T:
        t2 = t * t
        return c * (-0.5 + t / 12.0 - t * t2 / 720.0 + t * t2 * t2 / 30240.0
                    - t * t2 * t2 * t2 / 1209600.0)
    return c / math.expm1(t) - 1.0 / x


def kl(a, b, c, x):
    return a * math.exp(-b * x * x) * _g(c, x)


def kl_prime(a, b, c, x):
    return kl(a, b, c, x) * (_h(c, x) - 2.0 * b * x)


def abs_err(a, b, c, x):
    return kl(a, b, c, x) - q(x)


def _ratio(a, b, c, x):
    # Qtilde(x) / Q(x) without forming either factor's Gaussian
    e = (0.5 - b) * x * x
    if e > 709.0:
        return math.inf
    return a * math.exp(e) * _g(c, x) / q_scaled(x)


def rel_err(a, b, c, x):
    return _ratio(a, b, c, x) - 1.0


def abs_err_prime(a, b, c, x):
    return kl_prime(a, b, c, x) - q_prime(x)


def abs_err_prime_scaled(a, b, c, x):
    """d'(x) * exp(x**2 / 2); same sign as d', no underflow in the tail."""
    e = (0.5 - b) * x * x
    if e > 709.0:
        return -math.inf if 2.0 * b * x - _h(c, x) > 0.0 else math.inf
    return INV_SQRT_2PI + a * math.exp(e) * _g(c, x) * (_h(c, x) - 2.0 * b * x)


def rel_err_prime_scaled(a, b, c, x):
    """r'(x) / (1 + r(x)); same sign as r'."""
    return INV_SQRT_2PI / q_scaled(x) + _h(c, x) - 2.0 * b * x


def rel_err_prime(a, b, c, x):
    rho = _ratio(a, b, c, x)
    return rho * rel_err_prime_scaled(a, b, c, x)


def err(a, b, c, x, metric):
    if metric == ABSOLUTE:
        return abs_err(a, b, c, x)
    return rel_err(a, b, c, x)


def err_prime(a, b, c, x, metric):
    if metric == ABSOLUTE:
        return abs_err_prime(a, b, c, x)
    return rel_err_prime(a, b, c, x)


def _prime_sign_fn(metric):
    return abs_err_prime_scaled if metric == ABSOLUTE else rel_err_prime_scaled


def _sign(v):
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


def critical_points(a, b, c, metric, grid, xtol):
    """Abscissas where the error derivative changes sign.

    Brackets come from consecutive nonzero signs on ``grid``; each is
    bisected until narrower than ``xtol``. Returns ``(x, sign_before)`` pairs.
    """
    fn = _prime_sign_fn(metric)
    out = []
    last_x = 0.0
    last_s = 0
    for x in grid:
        s = _sign(fn(a, b, c, x))
        if s == 0:
            continue
        if last_s != 0 and s != last_s:
            lo, hi = last_x, x
            while hi - lo > xtol:
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if _sign(fn(a, b, c, mid)) == last_s:
                    lo = mid
                else:
                    hi = mid
            out.append((0.5 * (lo + hi), last_s))
        last_x = x
        last_s = s
    return out


def zero_crossings(a, b, c, grid, qgrid, xtol):
    """Sign changes of d on ``grid``; ``qgrid`` holds Q at the grid points."""
    out = []
    last_x = 0.0
    last_s = _sign(a * c - 0.5)
    for x, qx in zip(grid, qgrid):
        s = _sign(kl(a, b, c, x) - qx)
        if s == 0:
            continue
        if last_s != 0 and s != last_s:
            lo, hi = last_x, x
            while hi - lo > xtol * max(1.0, lo):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if _sign(abs_err(a, b, c, mid)) == last_s:
                    lo = mid
                else:
                    hi = mid
            out.append(0.5 * (lo + hi))
        last_x = x
        last_s = s
    return out


def _abs_d(a, b, c, x):
    if x == 0.0:
        return abs(a * c - 0.5)
    return abs(kl(a, b, c, x) - q(x))


def simpson_abs_d(a, b, c, lo, hi, tol):
    """Adaptive Simpson integral of |d| over [lo, hi]; returns (value, evals)."""
    counter = [0]

    def rec(x0, x1, f0, fm, f1, whole, eps, depth):
        m = 0.5 * (x0 + x1)
        lm = 0.5 * (x0 + m)
        rm = 0.5 * (m + x1)
        flm = _abs_d(a, b, c, lm)
        frm = _abs_d(a, b, c, rm)
        counter[0] += 2
        h = (x1 - x0) / 12.0
        left = h * (f0 + 4.0 * flm + fm)
        right = h * (fm + 4.0 * frm + f1)
        delta = left + right - whole
        if depth >= SIMPSON_MAX_DEPTH or (depth >= SIMPSON_MIN_DEPTH and abs(delta) <= 15.0 * eps):
            return left + right + delta / 15.0
        return (rec(x0, m, f0, flm, fm, left, 0.5 * eps, depth + 1)
                + rec(m, x1, fm, frm, f1, right, 0.5 * eps, depth + 1))

    if hi <= lo:
        return 0.0, 0
    f0 = _abs_d(a, b, c, lo)
    fm = _abs_d(a, b, c, 0.5 * (lo + hi))
    f1 = _abs_d(a, b, c, hi)
    whole = (hi - lo) / 6.0 * (f0 + 4.0 * fm + f1)
    counter[0] = 3
    val = rec(lo, hi, f0, fm, f1, whole, tol, 0)
    return val, counter[0]


def d_tot(a, b, c, tol, x_hi, grid, qgrid, xtol):
    """Integral of |d| on [0, x_hi], split at every zero of d and at QUAD_BREAKS.

    ``tol`` is the absolute tolerance for the whole interval, shared among
    panels in proportion to their width. Returns (value, evals).
    """
    cuts = [z for z in zero_crossings(a, b, c, grid, qgrid, xtol) if 0.0 < z < x_hi]
    cuts.extend(p for p in QUAD_BREAKS if p < x_hi)
    cuts.sort()
    total = 0.0
    evals = 0
    lo = 0.0
    for hi in cuts + [x_hi]:
        if hi > lo:
            v, n = simpson_abs_d(a, b, c, lo, hi, tol * (hi - lo) / x_hi)
            total += v
            evals += n
        lo = hi
    return total, evals


def eval_err_grid(a, b, c, metric, grid):
    f = abs_err if metric == ABSOLUTE else rel_err
    return [f(a, b, c, x) for x in grid]
