import math

import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from titesafety import (SPRT, Bayes, StoppingRule, TrialDesign, WangTsiatis, bayes_boundary,
                        bayes_posterior_tail, boundary_value, invert_boundary, score_statistics,
                        sprt_boundary, tabulate, wt_boundary)
from titesafety.boundaries import boundary_curve, display_rows, format_table, table_csv
from titesafety.core import Snapshot
from titesafety.errors import DomainError

from oracles import beta_kernel_integral

D = TrialDesign(N=30, p0=0.15, tau=100.0, alpha=0.05, accrual=1460.0)
# mpmath quadrature of the Beta(6.125, 13.375) density above 0.15
TAIL_5_12 = 0.95873953566094151183


def test_wt_boundary_formula():
    sd = math.sqrt(0.15 * 0.85)
    assert wt_boundary(10.0, D, 0.0, 2.0) == pytest.approx(1.5 + 2.0 * sd * math.sqrt(30))
    assert wt_boundary(10.0, D, 0.5, 2.0) == pytest.approx(1.5 + 2.0 * sd * math.sqrt(10))
    assert wt_boundary(16.0, D, 0.25, 1.0) == pytest.approx(2.4 + sd * 2.0 * 30 ** 0.25)
    with pytest.raises(DomainError):
        wt_boundary(31.0, D, 0.0, 2.0)
    with pytest.raises(DomainError):
        wt_boundary(5.0, D, 0.6, 2.0)


def test_sprt_boundary_formula():
    p0, p1 = 0.15, 0.43
    theta = p1 * (1 - p0) / (p0 * (1 - p1))
    s = -math.log((1 - p1) / (1 - p0))
    assert sprt_boundary(12.0, p0, p1, 2.5) == pytest.approx((2.5 + 12 * s) / math.log(theta))
    with pytest.raises(DomainError):
        sprt_boundary(12.0, p0, p0, 2.5)


def test_bayes_tail_quadrature_value():
    assert bayes_posterior_tail(5, 12.0, 1.125, 6.375, 0.15) == pytest.approx(TAIL_5_12, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(d=st.integers(0, 8), extra=st.floats(0, 20), k=st.floats(0.05, 5), m=st.floats(0.1, 30),
       p0=st.floats(0.02, 0.6))
def test_bayes_tail_is_normalized_posterior(d, extra, k, m, p0):
    # prior x extended binomial likelihood, normalized by quadrature
    ess = d + extra
    a, b = k + d, m + ess - d
    num = beta_kernel_integral(a, b, p0, 1)
    den = num + beta_kernel_integral(a, b, 0, p0)
    assert bayes_posterior_tail(d, ess, k, m, p0) == pytest.approx(float(num / den), abs=1e-9)


def test_bayes_boundary_is_smallest_count():
    for ess in (3.0, 7.5, 12.0, 20.25, 30.0):
        b = bayes_boundary(ess, 1.125, 6.375, 0.15, 0.95)
        tails = [sp.betaincc(1.125 + d, 6.375 + ess - d, 0.15) for d in range(int(ess) + 1)]
        hits = [d for d, t in enumerate(tails) if t >= 0.95]
        assert b == (hits[0] if hits else math.inf)


def test_bayes_boundary_unreachable_is_inf():
    assert bayes_boundary(1.0, 0.1, 20.0, 0.05, 0.999) == math.inf


def test_boundary_value_dispatch():
    r = StoppingRule(D, SPRT(0.43, 0.15), 2.4, 0.05)
    assert boundary_value(r, 7.0) == sprt_boundary(7.0, 0.15, 0.43, 2.4)
    r = StoppingRule(D, Bayes(1.125, 6.375), 0.95, 0.05)
    assert boundary_value(r, 7.0) == bayes_boundary(7.0, 1.125, 6.375, 0.15, 0.95)
    curve = boundary_curve(StoppingRule(D, WangTsiatis(0.0), 2.0, 0.05), step=0.5)
    assert len(curve) == 61 and curve[-1][0] == 30.0


def test_score_statistics():
    snap = Snapshot(s=100.0, d1=4, d2=0, ess=12.0, n_enrolled=14, obs=())
    st_ = score_statistics(snap, D)
    v = 0.15 * 0.85
    assert st_.score == pytest.approx((4 - 1.8) / v)
    assert st_.information == pytest.approx(12 / v)
    assert st_.z == pytest.approx(st_.score / math.sqrt(st_.information))
    assert st_.info_fraction == pytest.approx(0.4)


@pytest.mark.parametrize("rule", [
    StoppingRule(D, WangTsiatis(0.0), 2.0196744713198327, 0.0459),
    StoppingRule(D, WangTsiatis(0.5), 2.9, 0.05),
    StoppingRule(D, SPRT(0.43, 0.15), 2.46854965254507, 0.0499),
    StoppingRule(D, Bayes(1.125, 6.375), 0.9660343071445823, 0.0493),
])
def test_invert_boundary_round_trip(rule):
    for d in range(1, 31):
        x = invert_boundary(rule, d)
        if x is None:
            continue
        assert d <= x <= 30
        assert d >= boundary_value(rule, x)
        if x < 30:
            assert d < boundary_value(rule, min(x + 1e-6, 30.0))


def test_tabulate_rows_contiguous():
    rule = StoppingRule(D, SPRT(0.43, 0.15), 2.46854965254507, 0.0499)
    rows = list(tabulate(rule))
    assert rows[-1].ess_hi == 30.0
    for a, b in zip(rows, rows[1:]):
        assert b.ess_lo == pytest.approx(a.ess_hi) and b.reject_count > a.reject_count


def test_table_formatting():
    rule = StoppingRule(D, Bayes(1.125, 6.375), 0.9660343071445823, 0.0493)
    table = tabulate(rule)
    text = format_table(table)
    assert text.splitlines()[1].split() == ["4.00", "-", "7.00", "4"]
    assert display_rows(table)[1][0] == pytest.approx(7.01)
    assert table_csv(table).splitlines()[0].startswith("ess_lo,ess_hi,reject_count")
