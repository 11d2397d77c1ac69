import json
from pathlib import Path

import pytest

from titesafety.cli import main
from titesafety.core import rule_from_json

DATA = Path(__file__).parent / "data"
GVHD = ["--n", "30", "--p0", "0.15", "--tau", "100", "--accrual", "1460"]


@pytest.fixture
def bayes_rule(tmp_path):
    path = tmp_path / "bayes.json"
    assert main(["calc-rule", *GVHD, "--method", "bayes", "--prior-k", "1.125", "--prior-m",
                 "6.375", "--label", "Bayes", "--out", str(path)]) == 0
    return path


def test_calc_rule_bayes(bayes_rule, tmp_path):
    d = json.loads(bayes_rule.read_text())
    assert d["critical"] == pytest.approx(0.9660343071445823, abs=1e-8)
    assert d["attained_alpha"] <= 0.05
    assert len(d["thresholds"]) == 30
    rule = rule_from_json(bayes_rule.read_text())
    assert rule.label == "Bayes"


def test_calc_rule_outputs(tmp_path):
    rule, rep, curve = tmp_path / "r.json", tmp_path / "rep.json", tmp_path / "c.csv"
    assert main(["calc-rule", *GVHD, "--method", "sprt", "--power", "0.95", "--out", str(rule),
                 "--report", str(rep), "--curve", str(curve), "--curve-step", "0.5"]) == 0
    d = json.loads(rule.read_text())
    assert d["method"]["p1"] == pytest.approx(0.43)
    assert json.loads(rep.read_text())["loosened_alpha"] > 0.05
    lines = curve.read_text().splitlines()
    assert lines[0] == "ess,boundary" and len(lines) == 62


def test_calc_rule_wt_nu(tmp_path, capsys):
    assert main(["calc-rule", "--n", "20", "--p0", "0.2", "--method", "wt", "--delta", "0.5"]) == 0
    assert json.loads(capsys.readouterr().out)["method"] == {"type": "wt", "delta": 0.5}
    assert main(["calc-rule", "--n", "20", "--p0", "0.2", "--method", "bayes", "--nu", "5"]) == 0
    assert json.loads(capsys.readouterr().out)["method"]["k"] == pytest.approx(1.0)


@pytest.mark.parametrize("argv", [
    ["calc-rule", "--n", "30", "--p0", "0.15", "--method", "sprt", "--p1", "0.1"],
    ["calc-rule", "--n", "30", "--p0", "1.5", "--method", "wt", "--delta", "0"],
    ["calc-rule", "--n", "30", "--p0", "0.15", "--method", "wt"],
    ["calc-rule", "--n", "30", "--p0", "0.15", "--method", "bayes"],
])
def test_validation_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "invalid input" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["calc-rule", "--n", "x"],
                                  ["oc", "r.json"]])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_table(bayes_rule, tmp_path, capsys):
    csv_path = tmp_path / "t.csv"
    assert main(["table", str(bayes_rule), "--csv", str(csv_path)]) == 0
    rows = [line.split() for line in capsys.readouterr().out.splitlines()[1:]]
    assert [int(r[-1]) for r in rows] == [4, 5, 6, 7, 8, 9, 10]
    assert [float(r[2]) for r in rows] == [7.0, 11.27, 15.73, 20.34, 25.08, 29.92, 30.0]
    assert len(csv_path.read_text().splitlines()) == 8


def test_evaluate(bayes_rule, capsys):
    assert main(["evaluate", str(bayes_rule), str(DATA / "gvhd_synthetic.csv")]) == 0
    out = capsys.readouterr()
    assert out.out.startswith("time,d1,d2,ess,boundary,triggered")
    assert "no stop" in out.err


def test_oc_deterministic_across_threads(bayes_rule, tmp_path):
    outs = []
    for threads in ("1", "3"):
        path = tmp_path / f"oc{threads}.csv"
        spend = tmp_path / f"spend{threads}.csv"
        assert main(["oc", str(bayes_rule), "--ps", "0.15", "0.35", "--ps-compt", "0.1",
                     "--reps", "1200", "--seed", "4", "--threads", threads, "--se",
                     "--out", str(path), "--spend", str(spend)]) == 0
        outs.append((path.read_bytes(), spend.read_bytes()))
    assert outs[0] == outs[1]
    lines = outs[0][0].decode().splitlines()
    assert lines[0].startswith("type,p,p.compt,reject_prob,e_events,e_enrolled,e_duration")
    assert len(lines) == 3


def test_oc_threads_from_environment(bayes_rule, tmp_path, monkeypatch):
    base = ["oc", str(bayes_rule), "--ps", "0.3", "--reps", "1000", "--seed", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("TITESAFETY_THREADS", "4")
    assert main([*base, "--out", str(a)]) == 0
    monkeypatch.setenv("TITESAFETY_THREADS", "1")
    assert main([*base, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_oc_bad_ps_compt(bayes_rule):
    assert main(["oc", str(bayes_rule), "--ps", "0.1", "0.2", "--ps-compt", "0.1", "0.2", "0.3",
                 "--reps", "10"]) == 2


def test_compare(bayes_rule, tmp_path, capsys):
    sprt = tmp_path / "s.json"
    main(["calc-rule", *GVHD, "--method", "sprt", "--p1", "0.43", "--out", str(sprt)])
    assert main(["compare", str(bayes_rule), str(sprt), "--ps", "0.35", "--ps-compt", "0.1",
                 "--reps", "500"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].endswith("events_ratio_vs_first")
    assert len(lines) == 5
    assert lines[1].split(",")[-1] == "1.0000"
