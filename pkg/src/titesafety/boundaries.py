"""Stopping boundaries b(ess) for the three method families.

A rule rejects at calendar time s when D1(s) >= b(ess(s)). For the score test
and the SPRT, b is a continuous increasing function of the effective sample
size. For the Bayesian rule it is the step function "smallest event count whose
posterior tail probability reaches the threshold".
"""

import math

from .core import BoundaryRow, BoundaryTable, Bayes, SPRT, ScoreStatistics, WangTsiatis
from .errors import DomainError
from .numerics import beta_sf, bisect

# float slack when checking 0 <= ess <= N
_ESS_SLACK = 1e-9
_INVERT_TOL = 1e-12


def _check_ess(ess, N):
    if not (-_ESS_SLACK <= ess <= N + _ESS_SLACK):
        raise DomainError(f"effective sample size {ess} outside [0, {N}]")
    return min(max(ess, 0.0), float(N))


def wt_boundary(ess, design, delta, c):
    """Wang-Tsiatis boundary ``ess*p0 + c*sqrt(p0(1-p0)) * ess^delta * N^(0.5-delta)``."""
    if not 0.0 <= delta <= 0.5:
        raise DomainError(f"delta must lie in [0, 0.5], got {delta}")
    ess = _check_ess(ess, design.N)
    p0 = design.p0
    scale = math.sqrt(p0 * (1.0 - p0)) * design.N ** (0.5 - delta)
    return ess * p0 + c * scale * (ess ** delta if delta > 0 else 1.0)


def sprt_log_terms(p0, p1):
    """Return ``(log theta, -log((1-p1)/(1-p0)))``; both positive when p1 > p0."""
    if not p1 > p0:
        raise DomainError(f"SPRT needs p1 > p0, got p0={p0}, p1={p1}")
    log_theta = math.log(p1) - math.log1p(-p1) - math.log(p0) + math.log1p(-p0)
    return log_theta, math.log1p(-p0) - math.log1p(-p1)


def sprt_boundary(ess, p0, p1, cS):
    """Truncated SPRT boundary, affine in ess."""
    log_theta, slope_num = sprt_log_terms(p0, p1)
    return (cS + ess * slope_num) / log_theta


def bayes_posterior_tail(d, ess, k, m, p0):
    """P(p > p0 | D1 = d, ess) under the Beta(k + d, m + ess - d) posterior."""
    if d < 0 or d > ess + _ESS_SLACK:
        raise DomainError(f"need 0 <= d <= ess, got d={d}, ess={ess}")
    nonevents = max(ess - d, 0.0)
    return beta_sf(p0, k + d, m + nonevents)


def bayes_boundary(ess, k, m, p0, cB):
    """Smallest count d <= floor(ess) with posterior tail >= cB, else ``math.inf``."""
    top = int(math.floor(ess + _ESS_SLACK))
    # tail is increasing in d, so binary search over 0..top
    if bayes_posterior_tail(top, max(ess, top), k, m, p0) < cB:
        return math.inf
    lo, hi = -1, top
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bayes_posterior_tail(mid, ess, k, m, p0) >= cB:
            hi = mid
        else:
            lo = mid
    return hi


def boundary_value(rule, ess):
    """b(ess) for a calibrated rule; ``math.inf`` where the Bayes rule cannot reject."""
    design, method, c = rule.design, rule.method, rule.critical
    ess = _check_ess(ess, design.N)
    if isinstance(method, WangTsiatis):
        return wt_boundary(ess, design, method.delta, c)
    if isinstance(method, SPRT):
        return sprt_boundary(ess, design.p0, method.p1, c)
    if isinstance(method, Bayes):
        return bayes_boundary(ess, method.k, method.m, design.p0, c)
    raise DomainError(f"unknown method {method!r}")


def boundary_curve(rule, step=0.01):
    """Sample b on a grid over [0, N] for plotting; returns ``[(ess, b), ...]``."""
    N = rule.design.N
    n_pts = int(round(N / step))
    out = []
    for i in range(n_pts + 1):
        ess = min(i * step, float(N))
        out.append((ess, boundary_value(rule, ess)))
    return out


def score_statistics(snapshot, design):
    """Score, information, standardized Z and information fraction at a snapshot."""
    ess = snapshot.ess
    if not ess > 0:
        raise DomainError("score statistics undefined at zero effective sample size")
    p0 = design.p0
    v = p0 * (1.0 - p0)
    score = (snapshot.d1 - ess * p0) / v
    information = ess / v
    z = (snapshot.d1 - ess * p0) / math.sqrt(ess * v)
    return ScoreStatistics(score=score, information=information, z=z,
                           info_fraction=ess / design.N)


def invert_boundary(rule, d):
    """Largest ess in [d, N] at which ``d`` events trigger the rule.

    Returns ``None`` when ``d`` events can never trigger a stop, either because
    b(ess) > d on the whole range or because the crossing lies below ess = d,
    which no data can reach (each event adds a full unit to ess).
    """
    if d < 1:
        raise DomainError(f"event count must be >= 1, got {d}")
    design, method, c = rule.design, rule.method, rule.critical
    N = float(design.N)
    if d > N:
        return None
    if isinstance(method, SPRT):
        log_theta, slope_num = sprt_log_terms(design.p0, method.p1)
        raw = (d * log_theta - c) / slope_num
    elif isinstance(method, WangTsiatis):
        def b(x):
            return wt_boundary(x, design, method.delta, c)
        if b(N) <= d:
            raw = N
        elif b(0.0) > d:
            return None
        else:
            raw = bisect(b, 0.0, N, tol=_INVERT_TOL, target=d)
            # step onto the triggering side of the crossing
            while raw > 0 and b(raw) > d:
                raw = math.nextafter(raw, -math.inf)
    elif isinstance(method, Bayes):
        def tail(x):
            return bayes_posterior_tail(d, x, method.k, method.m, design.p0)
        if tail(float(d)) < c:
            return None
        if tail(N) >= c:
            raw = N
        else:
            raw = bisect(tail, float(d), N, tol=_INVERT_TOL, target=c)
            while raw > d and tail(raw) < c:
                raw = math.nextafter(raw, -math.inf)
    else:
        raise DomainError(f"unknown method {method!r}")
    if raw < d:
        return None
    return min(raw, N)


def tabulate(rule):
    """Tabulate the rule as contiguous ess intervals with their rejection counts.

    Row ``(lo, hi, d)`` means the trial stops if ``d`` events have occurred when
    the effective sample size is in ``(lo, hi]`` (``[d, hi]`` for the first row).
    """
    N = float(rule.design.N)
    rows = []
    prev_hi = None
    for d in range(1, rule.design.N + 1):
        hi = invert_boundary(rule, d)
        if hi is None:
            continue
        lo = float(d) if prev_hi is None else max(prev_hi, float(d))
        if hi > lo or prev_hi is None:
            rows.append(BoundaryRow(ess_lo=lo, ess_hi=hi, reject_count=d))
        prev_hi = hi
        if hi >= N:
            break
    return BoundaryTable(rows=tuple(rows))


def display_rows(table):
    """Two-decimal display endpoints; each row starts 0.01 after the previous one ends."""
    out = []
    prev = None
    for row in table:
        hi = round(row.ess_hi, 2)
        lo = row.ess_lo if prev is None else prev + 0.01
        out.append((lo, hi, row.reject_count))
        prev = hi
    return out


def format_table(table):
    lines = ["Effective Sample Size   Reject Bdry"]
    for lo, hi, d in display_rows(table):
        lines.append(f"   {lo:6.2f} - {hi:5.2f}        {d:5d}")
    return "\n".join(lines) + "\n"


def table_csv(table):
    lines = ["ess_lo,ess_hi,reject_count,ess_lo_display,ess_hi_display"]
    for row, (lo, hi, _) in zip(table, display_rows(table)):
        lines.append(f"{row.ess_lo!r},{row.ess_hi!r},{row.reject_count},{lo:.2f},{hi:.2f}")
    return "\n".join(lines) + "\n"
