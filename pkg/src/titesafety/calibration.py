"""Exact calibration under the binary monitoring process.

In the binary process each patient's outcome is a Bernoulli(p) draw that is only
looked at once their window is complete, so the data after n evaluated patients
are a count d out of n. A rule reduces to integer thresholds r(n) and its
rejection probability follows from a forward recursion over (n, d).
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from . import boundaries
from .core import Bayes, SPRT, StoppingRule, WangTsiatis, validate
from .errors import CalibrationInfeasible, DomainError
from .numerics import binom_sf, bisect_predicate

CALIBRATION_TOL = 1e-9
P1_RESOLUTION = 10_000  # p1 grid of 1e-4


@dataclass(frozen=True)
class IntegerBoundary:
    """Rejection thresholds r(1..N); ``r(n) > n`` means no rejection after n patients."""

    thresholds: Tuple[int, ...]

    @property
    def N(self):
        return len(self.thresholds)

    def r(self, n):
        return self.thresholds[n - 1]

    def feasible(self, n):
        return self.thresholds[n - 1] <= n

    def never_triggers(self):
        return not any(self.feasible(n) for n in range(1, self.N + 1))


@dataclass(frozen=True)
class BinaryOC:
    reject_prob: float
    expected_toxicities: float
    expected_evaluated: float


@lru_cache(maxsize=64)
def _bayes_tail_rows(N, k, m, p0):
    # rows[n-1][d] = posterior tail after d events among n patients
    return tuple(
        np.array([boundaries.bayes_posterior_tail(d, float(n), k, m, p0) for d in range(n + 1)])
        for n in range(1, N + 1)
    )


def integer_thresholds(method, design, c):
    """Integer boundary r(n) = smallest count d >= b(n), n = 1..N, under critical value c."""
    N = design.N
    out = []
    if isinstance(method, Bayes):
        rows = _bayes_tail_rows(N, float(method.k), float(method.m), float(design.p0))
        for n in range(1, N + 1):
            tails = rows[n - 1]
            hits = np.nonzero(tails >= c)[0]
            r = int(hits[0]) if hits.size else n + 1
            out.append(min(max(r, 1), n + 1))
        return IntegerBoundary(tuple(out))
    for n in range(1, N + 1):
        if isinstance(method, WangTsiatis):
            b = boundaries.wt_boundary(float(n), design, method.delta, c)
        elif isinstance(method, SPRT):
            b = boundaries.sprt_boundary(float(n), design.p0, method.p1, c)
        else:
            raise DomainError(f"unknown method {method!r}")
        r = math.ceil(b) if b < n + 1 else n + 1
        out.append(min(max(r, 1), n + 1))
    return IntegerBoundary(tuple(out))


def _forward(bdry, p, trace=None):
    """Run the survival recursion; returns (reject_prob, E[D1 at decision], E[n at decision])."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    q = 1.0 - p
    surv = np.array([1.0])
    rejected = 0.0
    e_tox = 0.0
    e_n = 0.0
    for n in range(1, bdry.N + 1):
        nxt = np.zeros(n + 1)
        nxt[:-1] += surv * q
        nxt[1:] += surv * p
        r = bdry.r(n)
        if r <= n:
            mass = nxt[r:]
            rej_n = float(mass.sum())
            rejected += rej_n
            e_tox += float(np.dot(np.arange(r, n + 1), mass))
            e_n += n * rej_n
            nxt[r:] = 0.0
        surv = nxt
        if trace is not None:
            trace.append((rejected, float(surv.sum())))
    e_tox += float(np.dot(np.arange(bdry.N + 1), surv))
    e_n += bdry.N * float(surv.sum())
    return rejected, e_tox, e_n


def binary_alpha(bdry, p):
    """Exact probability that the Bernoulli(p) count crosses r(n) for some n <= N."""
    return _forward(bdry, p)[0]


def binary_oc(bdry, p):
    """Rejection probability and expected events among evaluated patients at the decision."""
    rej, tox, n = _forward(bdry, p)
    return BinaryOC(reject_prob=rej, expected_toxicities=tox, expected_evaluated=n)


def critical_range(method, design):
    """(most aggressive, most conservative) critical values worth searching."""
    N, p0 = design.N, design.p0
    if isinstance(method, Bayes):
        return 0.0, 1.0
    if isinstance(method, WangTsiatis):
        sd = math.sqrt(p0 * (1.0 - p0))
        worst = max(n * (1.0 - p0) / (sd * n ** method.delta * N ** (0.5 - method.delta))
                    for n in range(1, N + 1))
        return 0.0, worst + 1.0
    if isinstance(method, SPRT):
        log_theta, slope_num = boundaries.sprt_log_terms(p0, method.p1)
        return log_theta - N * slope_num - 1.0, N * math.log(method.p1 / p0) + 1.0
    raise DomainError(f"unknown method {method!r}")


def calibrate(method, design, label=""):
    """Find the critical value whose binary type I error is closest to, not above, alpha.

    Attained alpha is a nonincreasing step function of the critical value. The
    search brackets the step where it first drops to alpha or below and returns
    the smallest critical value (to ``CALIBRATION_TOL``) on the admissible side.
    """
    validate(design, method)
    alpha, p0 = design.alpha, design.p0
    c_lo, c_hi = critical_range(method, design)

    def attained(c):
        return binary_alpha(integer_thresholds(method, design, c), p0)

    def ok(c):
        return attained(c) <= alpha

    if ok(c_lo):
        c = c_lo
    else:
        if not ok(c_hi):
            raise CalibrationInfeasible(
                f"even the most conservative {type(method).__name__} boundary exceeds alpha={alpha}")
        lo, c = bisect_predicate(ok, c_lo, c_hi, tol=CALIBRATION_TOL)
        if attained(lo) <= alpha:
            raise CalibrationInfeasible("step search failed to separate admissible critical values")
    return StoppingRule(design=design, method=method, critical=c,
                        attained_alpha=attained(c), label=label)


def rule_thresholds(rule):
    return integer_thresholds(rule.method, rule.design, rule.critical)


def loosened(rule):
    """The next more aggressive integer boundary below the rule's critical value.

    Returns ``(critical, IntegerBoundary)`` or ``None`` if the rule is already
    the most aggressive one searched.
    """
    c_lo, _ = critical_range(rule.method, rule.design)
    current = rule_thresholds(rule)

    def same(c):
        return integer_thresholds(rule.method, rule.design, c) == current

    if same(c_lo):
        return None
    lo, _ = bisect_predicate(same, c_lo, rule.critical, tol=CALIBRATION_TOL)
    return lo, integer_thresholds(rule.method, rule.design, lo)


def calibration_report(rule):
    bdry = rule_thresholds(rule)
    from .core import method_to_dict
    report = {
        "label": rule.name,
        "method": method_to_dict(rule.method),
        "N": rule.design.N,
        "p0": rule.design.p0,
        "alpha": rule.design.alpha,
        "critical": rule.critical,
        "attained_alpha": rule.attained_alpha,
        "thresholds": list(bdry.thresholds),
    }
    nb = loosened(rule)
    if nb is not None:
        report["loosened_alpha"] = binary_alpha(nb[1], rule.design.p0)
    return report


def exact_test_critical_count(N, p0, alpha):
    """Smallest d with P(Bin(N, p0) >= d) <= alpha (one-sided exact binomial test)."""
    for d in range(0, N + 2):
        if binom_sf(d, N, p0) <= alpha:
            return d
    return N + 1


def exact_test_power(N, p0, alpha, p):
    return binom_sf(exact_test_critical_count(N, p0, alpha), N, p)


def choose_p1(design, target_power):
    """Smallest p1 on a 1e-4 grid at which the fixed-N exact binomial test has the target power."""
    if not 0.0 < target_power < 1.0:
        raise DomainError(f"target power must lie in (0, 1), got {target_power}")
    N, p0, alpha = design.N, design.p0, design.alpha
    d_star = exact_test_critical_count(N, p0, alpha)

    def power(i):
        return binom_sf(d_star, N, i / P1_RESOLUTION)

    lo = int(math.floor(p0 * P1_RESOLUTION))
    hi = P1_RESOLUTION - 1
    if power(hi) < target_power:
        return hi / P1_RESOLUTION
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if power(mid) >= target_power:
            hi = mid
        else:
            lo = mid
    return hi / P1_RESOLUTION
