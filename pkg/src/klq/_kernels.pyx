# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contract as ``_pykernels``."""
import numpy as np

from libc.math cimport exp, expm1, fabs, floor, sqrt, M_PI, INFINITY

cdef double SQRT_2PI = sqrt(2.0 * M_PI)
cdef double INV_SQRT_2PI = 1.0 / sqrt(2.0 * M_PI)
cdef double SERIES_CUTOFF = 2.0
cdef int CF_MAX_TERMS = 500
cdef double G_SERIES_T = 1e-4
cdef double H_SERIES_T = 0.1
cdef int SIMPSON_MIN_DEPTH = 2
cdef int SIMPSON_MAX_DEPTH = 50
cdef double[14] QUAD_BREAKS = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0,
                               8.0, 10.0, 14.0, 20.0, 28.0]

ABSOLUTE = 0
RELATIVE = 1


cdef inline double _q_series_sum(double x) noexcept nogil:
    cdef double x2 = x * x
    cdef double term = x
    cdef double total = x
    cdef int n = 0
    while term > 1e-17 * total:
        n += 1
        term *= x2 / (2 * n + 1)
        total += term
    return total


cdef inline double _mills_ratio(double x) noexcept nogil:
    cdef double tiny = 1e-300
    cdef double f = x
    cdef double cc = f
    cdef double dd = 0.0
    cdef double delta
    cdef int n
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
        if fabs(delta - 1.0) < 1e-16:
            break
    return 1.0 / f


cdef inline double _gauss(double x) noexcept nogil:
    cdef double xh = floor(x * 16.0) / 16.0
    return exp(-0.5 * xh * xh) * exp(-0.5 * (x - xh) * (x + xh))


cdef inline double c_q_scaled(double x) noexcept nogil:
    if x < SERIES_CUTOFF:
        return 0.5 * exp(0.5 * x * x) - INV_SQRT_2PI * _q_series_sum(x)
    return INV_SQRT_2PI * _mills_ratio(x)


cdef inline double c_q(double x) noexcept nogil:
    if x < SERIES_CUTOFF:
        return 0.5 - INV_SQRT_2PI * _gauss(x) * _q_series_sum(x)
    return INV_SQRT_2PI * _gauss(x) * _mills_ratio(x)


cdef inline double c_q_prime(double x) noexcept nogil:
    return -INV_SQRT_2PI * _gauss(x)


cdef inline double _g(double c, double x) noexcept nogil:
    cdef double t = c * x
    if t < G_SERIES_T:
        return c * (1.0 - t / 2.0 + t * t / 6.0 - t * t * t / 24.0)
    return -expm1(-t) / x


cdef inline double _h(double c, double x) noexcept nogil:
    cdef double t = c * x
    cdef double t2
    if t < H_SERIES_T:
        t2 = t * t
        return c * (-0.5 + t / 12.0 - t * t2 / 720.0 + t * t2 * t2 / 30240.0
                    - t * t2 * t2 * t2 / 1209600.0)
    return c / expm1(t) - 1.0 / x


cdef inline double c_kl(double a, double b, double c, double x) noexcept nogil:
    return a * exp(-b * x * x) * _g(c, x)


cdef inline double c_kl_prime(double a, double b, double c, double x) noexcept nogil:
    return c_kl(a, b, c, x) * (_h(c, x) - 2.0 * b * x)


cdef inline double c_abs_err(double a, double b, double c, double x) noexcept nogil:
    return c_kl(a, b, c, x) - c_q(x)


cdef inline double _ratio(double a, double b, double c, double x) noexcept nogil:
    cdef double e = (0.5 - b) * x * x
    if e > 709.0:
        return INFINITY
    return a * exp(e) * _g(c, x) / c_q_scaled(x)


cdef inline double c_rel_err(double a, double b, double c, double x) noexcept nogil:
    return _ratio(a, b, c, x) - 1.0


cdef inline double c_abs_err_prime_scaled(double a, double b, double c, double x) noexcept nogil:
    cdef double e = (0.5 - b) * x * x
    if e > 709.0:
        if 2.0 * b * x - _h(c, x) > 0.0:
            return -INFINITY
        return INFINITY
    return INV_SQRT_2PI + a * exp(e) * _g(c, x) * (_h(c, x) - 2.0 * b * x)


cdef inline double c_rel_err_prime_scaled(double a, double b, double c, double x) noexcept nogil:
    return INV_SQRT_2PI / c_q_scaled(x) + _h(c, x) - 2.0 * b * x


cdef inline double _prime_scaled(double a, double b, double c, double x, int metric) noexcept nogil:
    if metric == 0:
        return c_abs_err_prime_scaled(a, b, c, x)
    return c_rel_err_prime_scaled(a, b, c, x)


cdef inline int _sign(double v) noexcept nogil:
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


cdef inline double _abs_d(double a, double b, double c, double x) noexcept nogil:
    if x == 0.0:
        return fabs(a * c - 0.5)
    return fabs(c_kl(a, b, c, x) - c_q(x))


# -- Python-visible scalar functions -------------------------------------

def q_scaled(double x):
    return c_q_scaled(x)


def q(double x):
    return c_q(x)


def q_prime(double x):
    return c_q_prime(x)


def kl(double a, double b, double c, double x):
    return c_kl(a, b, c, x)


def kl_prime(double a, double b, double c, double x):
    return c_kl_prime(a, b, c, x)


def abs_err(double a, double b, double c, double x):
    return c_abs_err(a, b, c, x)


def rel_err(double a, double b, double c, double x):
    return c_rel_err(a, b, c, x)


def abs_err_prime(double a, double b, double c, double x):
    return c_kl_prime(a, b, c, x) - c_q_prime(x)


def abs_err_prime_scaled(double a, double b, double c, double x):
    return c_abs_err_prime_scaled(a, b, c, x)


def rel_err_prime_scaled(double a, double b, double c, double x):
    return c_rel_err_prime_scaled(a, b, c, x)


def rel_err_prime(double a, double b, double c, double x):
    return _ratio(a, b, c, x) * c_rel_err_prime_scaled(a, b, c, x)


def err(double a, double b, double c, double x, int metric):
    if metric == 0:
        return c_abs_err(a, b, c, x)
    return c_rel_err(a, b, c, x)


def err_prime(double a, double b, double c, double x, int metric):
    if metric == 0:
        return c_kl_prime(a, b, c, x) - c_q_prime(x)
    return _ratio(a, b, c, x) * c_rel_err_prime_scaled(a, b, c, x)


# -- loops ---------------------------------------------------------------

def critical_points(double a, double b, double c, int metric, grid, double xtol):
    cdef double[::1] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t i, n = g.shape[0]
    cdef double x, lo, hi, mid, last_x = 0.0
    cdef int s, last_s = 0
    out = []
    for i in range(n):
        x = g[i]
        s = _sign(_prime_scaled(a, b, c, x, metric))
        if s == 0:
            continue
        if last_s != 0 and s != last_s:
            lo = last_x
            hi = x
            while hi - lo > xtol:
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if _sign(_prime_scaled(a, b, c, mid, metric)) == last_s:
                    lo = mid
                else:
                    hi = mid
            out.append((0.5 * (lo + hi), last_s))
        last_x = x
        last_s = s
    return out


cdef int _zero_crossings(double a, double b, double c, double[::1] g, double[::1] qg,
                         double xtol, double* out, int cap) noexcept nogil:
    cdef Py_ssize_t i, n = g.shape[0]
    cdef double x, lo, hi, mid, last_x = 0.0
    cdef int s, last_s = _sign(a * c - 0.5)
    cdef int k = 0
    for i in range(n):
        x = g[i]
        s = _sign(c_kl(a, b, c, x) - qg[i])
        if s == 0:
            continue
        if last_s != 0 and s != last_s:
            lo = last_x
            hi = x
            while hi - lo > xtol * (lo if lo > 1.0 else 1.0):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if _sign(c_abs_err(a, b, c, mid)) == last_s:
                    lo = mid
                else:
                    hi = mid
            if k < cap:
                out[k] = 0.5 * (lo + hi)
                k += 1
        last_x = x
        last_s = s
    return k


def zero_crossings(double a, double b, double c, grid, qgrid, double xtol):
    cdef double[::1] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef double[::1] qg = np.ascontiguousarray(qgrid, dtype=np.float64)
    cdef double[64] buf
    cdef int k = _zero_crossings(a, b, c, g, qg, xtol, buf, 64)
    return [buf[i] for i in range(k)]


cdef double _simpson_rec(double a, double b, double c, double x0, double x1,
                         double f0, double fm, double f1, double whole, double eps,
                         int depth, long* counter) noexcept nogil:
    cdef double m = 0.5 * (x0 + x1)
    cdef double lm = 0.5 * (x0 + m)
    cdef double rm = 0.5 * (m + x1)
    cdef double flm = _abs_d(a, b, c, lm)
    cdef double frm = _abs_d(a, b, c, rm)
    cdef double h = (x1 - x0) / 12.0
    cdef double left = h * (f0 + 4.0 * flm + fm)
    cdef double right = h * (fm + 4.0 * frm + f1)
    cdef double delta = left + right - whole
    counter[0] += 2
    if depth >= SIMPSON_MAX_DEPTH or (depth >= SIMPSON_MIN_DEPTH and fabs(delta) <= 15.0 * eps):
        return left + right + delta / 15.0
    return (_simpson_rec(a, b, c, x0, m, f0, flm, fm, left, 0.5 * eps, depth + 1, counter)
            + _simpson_rec(a, b, c, m, x1, fm, frm, f1, right, 0.5 * eps, depth + 1, counter))


cdef double _simpson(double a, double b, double c, double lo, double hi, double tol,
                     long* counter) noexcept nogil:
    if hi <= lo:
        return 0.0
    cdef double f0 = _abs_d(a, b, c, lo)
    cdef double fm = _abs_d(a, b, c, 0.5 * (lo + hi))
    cdef double f1 = _abs_d(a, b, c, hi)
    cdef double whole = (hi - lo) / 6.0 * (f0 + 4.0 * fm + f1)
    counter[0] += 3
    return _simpson_rec(a, b, c, lo, hi, f0, fm, f1, whole, tol, 0, counter)


def simpson_abs_d(double a, double b, double c, double lo, double hi, double tol):
    cdef long counter = 0
    cdef double v = _simpson(a, b, c, lo, hi, tol, &counter)
    return v, counter


def d_tot(double a, double b, double c, double tol, double x_hi, grid, qgrid, double xtol):
    cdef double[::1] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef double[::1] qg = np.ascontiguousarray(qgrid, dtype=np.float64)
    cdef double[64] zeros
    cdef double[80] cuts
    cdef int nz, ncut = 0, i, j
    cdef double tmp, lo, hi, total = 0.0
    cdef long counter = 0
    with nogil:
        nz = _zero_crossings(a, b, c, g, qg, xtol, zeros, 64)
        for i in range(nz):
            if 0.0 < zeros[i] < x_hi:
                cuts[ncut] = zeros[i]
                ncut += 1
        for i in range(14):
            if QUAD_BREAKS[i] < x_hi:
                cuts[ncut] = QUAD_BREAKS[i]
                ncut += 1
        cuts[ncut] = x_hi
        ncut += 1
        # insertion sort; ncut is small
        for i in range(1, ncut):
            tmp = cuts[i]
            j = i - 1
            while j >= 0 and cuts[j] > tmp:
                cuts[j + 1] = cuts[j]
                j -= 1
            cuts[j + 1] = tmp
        lo = 0.0
        for i in range(ncut):
            hi = cuts[i]
            if hi > lo:
                total += _simpson(a, b, c, lo, hi, tol * (hi - lo) / x_hi, &counter)
            lo = hi
    return total, counter


def eval_err_grid(double a, double b, double c, int metric, grid):
    cdef double[::1] g = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t i, n = g.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        if metric == 0:
            for i in range(n):
                o[i] = c_abs_err(a, b, c, g[i])
        else:
            for i in range(n):
                o[i] = c_rel_err(a, b, c, g[i])
    return out
