"""Special functions and root finding used by the boundary and calibration code.

Everything here works on plain floats. The incomplete beta function follows the
usual continued-fraction evaluation (modified Lentz) with the symmetry switch at
``x = (a + 1) / (a + b + 2)``.
"""

import math

from .errors import DomainError, SearchError

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_MIN = 10.0
_CF_EPS = 1e-16
_CF_TINY = 1e-300


def _stirling_corr(x):
    # lgamma(x) - [(x - 0.5) log x - x + 0.5 log(2 pi)], valid for x >= 10
    x2 = 1.0 / (x * x)
    return (1.0 / 12.0 - x2 * (1.0 / 360.0 - x2 * (1.0 / 1260.0 - x2 * (
        1.0 / 1680.0 - x2 * (1.0 / 1188.0))))) / x


def log_beta(a, b):
    """Natural log of the beta function B(a, b).

    Large arguments are handled with Stirling-series differences so that the
    cancellation in ``lgamma(a) + lgamma(b) - lgamma(a + b)`` does not eat the
    significant digits.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"log_beta needs a > 0 and b > 0, got a={a}, b={b}")
    a, b = float(a), float(b)
    lo, hi = min(a, b), max(a, b)
    if hi < _STIRLING_MIN:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    s = lo + hi
    corr = _stirling_corr(hi) - _stirling_corr(s)
    if lo < _STIRLING_MIN:
        # lgamma(hi) - lgamma(hi + lo) expanded around hi
        return (math.lgamma(lo) - (hi - 0.5) * math.log1p(lo / hi)
                - lo * math.log(s) + lo + corr)
    return (_HALF_LOG_2PI - 0.5 * math.log(s) - (hi - 0.5) * math.log1p(lo / hi)
            + (lo - 0.5) * math.log(lo / s) + _stirling_corr(lo) + corr)


def _betacf(x, a, b, max_iter):
    # continued fraction for I_x(a, b), converges fast for x < (a+1)/(a+b+2)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise SearchError(f"incomplete beta continued fraction did not converge "
                      f"(x={x}, a={a}, b={b})")


def reg_inc_beta_pair(x, a, b):
    """Return ``(I_x(a, b), 1 - I_x(a, b))`` with both tails computed accurately.

    The tail on the continued-fraction side is evaluated directly; the other one
    is its complement, which is only taken when it is the larger of the two.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"reg_inc_beta needs a > 0 and b > 0, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"reg_inc_beta needs 0 <= x <= 1, got x={x}")
    if x == 0.0:
        return 0.0, 1.0
    if x == 1.0:
        return 1.0, 0.0
    a, b, x = float(a), float(b), float(x)
    log_front = a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    max_iter = 200 + int(10 * math.sqrt(max(a, b)))
    if x < (a + 1.0) / (a + b + 2.0):
        lower = math.exp(log_front) * _betacf(x, a, b, max_iter) / a
        lower = min(max(lower, 0.0), 1.0)
        return lower, 1.0 - lower
    upper = math.exp(log_front) * _betacf(1.0 - x, b, a, max_iter) / b
    upper = min(max(upper, 0.0), 1.0)
    return 1.0 - upper, upper


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta function I_x(a, b)."""
    return reg_inc_beta_pair(x, a, b)[0]


def beta_sf(x, a, b):
    """Upper tail ``1 - I_x(a, b)``, i.e. P(X > x) for X ~ Beta(a, b)."""
    return reg_inc_beta_pair(x, a, b)[1]


def log_binom_coef(n, d):
    # log C(n, d) = -log(n+1) - log B(d+1, n-d+1); log_beta avoids the
    # cancellation between large lgamma values when n is big
    if d == 0 or d == n:
        return 0.0
    return -math.log(n + 1) - log_beta(d + 1, n - d + 1)


def binom_pmf(n, d, p):
    """Binomial probability C(n, d) p^d (1-p)^(n-d), evaluated in log space."""
    if n < 0 or d < 0 or d > n:
        raise DomainError(f"binom_pmf needs 0 <= d <= n, got n={n}, d={d}")
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"binom_pmf needs 0 <= p <= 1, got p={p}")
    if p == 0.0:
        return 1.0 if d == 0 else 0.0
    if p == 1.0:
        return 1.0 if d == n else 0.0
    return math.exp(log_binom_coef(n, d) + d * math.log(p) + (n - d) * math.log1p(-p))


def binom_sf(d, n, p):
    """P(Bin(n, p) >= d)."""
    if d <= 0:
        return 1.0
    if d > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    return reg_inc_beta(p, d, n - d + 1)


def bisect(f, lo, hi, tol=1e-12, target=0.0, max_iter=400):
    """Find x in [lo, hi] with f(x) = target for monotone f.

    ``f(lo) - target`` and ``f(hi) - target`` must have opposite signs (or one
    of them is zero). Stops once the bracket is narrower than ``tol``.
    """
    if not lo <= hi:
        raise SearchError(f"empty interval [{lo}, {hi}]")
    flo = f(lo) - target
    if flo == 0:
        return lo
    fhi = f(hi) - target
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise SearchError(f"target {target} not bracketed on [{lo}, {hi}]: "
                          f"f(lo)={flo + target}, f(hi)={fhi + target}")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid) - target
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_predicate(pred, lo, hi, tol=1e-12, max_iter=400):
    """Locate the switch point of a monotone predicate.

    Requires ``pred(lo)`` false and ``pred(hi)`` true. Returns the final bracket
    ``(lo, hi)``, so ``pred(lo)`` is false, ``pred(hi)`` is true and
    ``hi - lo <= tol`` (unless floating point resolution runs out first).
    """
    if pred(lo):
        raise SearchError(f"predicate already true at lower end {lo}")
    if not pred(hi):
        raise SearchError(f"predicate false at upper end {hi}")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi
