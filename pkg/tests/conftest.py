import pytest

from titesafety import Bayes, SPRT, TrialDesign, WangTsiatis, calibrate, choose_p1

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def gvhd_design():
    # BMT CTN 0601 redesign: 30 patients, 4 year accrual, Day 100 window
    return TrialDesign(N=30, p0=0.15, tau=100.0, alpha=0.05, accrual=1460.0)


@pytest.fixture(scope="session")
def gvhd_rules(gvhd_design):
    d = gvhd_design
    return {
        "OBF": calibrate(WangTsiatis(0.0), d, label="OBF"),
        "Bayes": calibrate(Bayes(1.125, 6.375), d, label="Bayes"),
        "SPRT": calibrate(SPRT(choose_p1(d, 0.95), d.p0), d, label="SPRT"),
    }


def six_rules(N, p0, tau=30.0, accrual=730.0):
    d = TrialDesign(N=N, p0=p0, tau=tau, alpha=0.05, accrual=accrual)
    return {
        "POC": calibrate(WangTsiatis(0.5), d, label="POC"),
        "OBF": calibrate(WangTsiatis(0.0), d, label="OBF"),
        "SPL": calibrate(SPRT(choose_p1(d, 0.65), p0), d, label="SPL"),
        "SPH": calibrate(SPRT(choose_p1(d, 0.95), p0), d, label="SPH"),
        "BW": calibrate(Bayes.from_nu(1.0, p0), d, label="BW"),
        "BS": calibrate(Bayes.from_nu(0.25 * N, p0), d, label="BS"),
    }


@pytest.fixture(scope="session")
def rules_50():
    return six_rules(50, 0.1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
