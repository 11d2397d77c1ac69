"""Command-line front end: ``titesafety {calc-rule,table,oc,evaluate,compare}``.

Exit codes: 0 ok, 1 usage, 2 validation, 3 calibration infeasible.
"""

import argparse
import csv
import io
import json
import logging
import sys

from . import __version__
from .boundaries import boundary_curve, format_table, table_csv, tabulate
from .calibration import calibrate, calibration_report, choose_p1
from .core import (Bayes, SPRT, TrialDesign, WangTsiatis, read_patients, rule_from_json,
                   rule_to_json, validate)
from .engine import monitor, timeline_csv
from .errors import CalibrationInfeasible, ConfigurationError, DomainError, ValidationError
from .simulator import (ENROLLMENT, EVENT_DISTS, MODES, THREADS_ENV, compare, default_threads,
                        oc_csv, scenario_for, simulate_oc, spend_csv)

log = logging.getLogger("titesafety")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INFEASIBLE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _load_rule(path):
    with open(path) as fh:
        return rule_from_json(fh.read())


def _build_method(args, design):
    if args.method == "wt":
        if args.delta is None:
            raise ValidationError("cli.delta", "--method wt needs --delta")
        return WangTsiatis(delta=args.delta)
    if args.method == "bayes":
        if args.nu is not None:
            return Bayes.from_nu(args.nu, design.p0)
        if args.prior_k is None or args.prior_m is None:
            raise ValidationError("cli.prior", "--method bayes needs --prior-k and --prior-m, or --nu")
        return Bayes(k=args.prior_k, m=args.prior_m)
    if args.p1 is not None:
        return SPRT(p1=args.p1, p0=design.p0)
    if args.power is None:
        raise ValidationError("cli.p1", "--method sprt needs --p1 or --power")
    return SPRT(p1=choose_p1(design, args.power), p0=design.p0)


def cmd_calc_rule(args):
    design = TrialDesign(N=args.n, p0=args.p0, tau=args.tau, alpha=args.alpha, accrual=args.accrual)
    method = _build_method(args, design)
    validate(design, method)
    rule = calibrate(method, design, label=args.label or "")
    report = calibration_report(rule)
    _write(args.out, rule_to_json(rule, extra={"thresholds": report["thresholds"]}) + "\n")
    if args.report:
        _write(args.report, json.dumps(report, indent=2) + "\n")
    if args.curve:
        buf = io.StringIO()
        buf.write("ess,boundary\n")
        for ess, b in boundary_curve(rule, step=args.curve_step):
            buf.write(f"{ess:.6g},{'' if b == float('inf') else repr(float(b))}\n")
        _write(args.curve, buf.getvalue())
    log.info("%s: critical=%r attained alpha=%.6f", rule.name, rule.critical, rule.attained_alpha)
    return EXIT_OK


def cmd_table(args):
    rule = _load_rule(args.rule)
    table = tabulate(rule)
    _write(args.out, format_table(table))
    if args.csv:
        _write(args.csv, table_csv(table))
    return EXIT_OK


def _pairs(ps, ps_compt):
    if len(ps_compt) == 1:
        ps_compt = ps_compt * len(ps)
    if len(ps_compt) != len(ps):
        raise ValidationError("cli.ps-compt", "--ps-compt needs one value or one per --ps value")
    return list(zip(ps, ps_compt))


def _scenario_kwargs(args):
    kw = {"event_dist": args.dist, "shape": args.shape, "enrollment": args.enrollment}
    if args.tau is not None:
        kw["tau"] = args.tau
    if args.accrual is not None:
        kw["accrual"] = args.accrual
    return kw


def cmd_oc(args):
    rules = [_load_rule(p) for p in args.rules]
    results = []
    for rule in rules:
        for p, pc in _pairs(args.ps, args.ps_compt):
            sc = scenario_for(rule, p, pc, **_scenario_kwargs(args))
            results.append(simulate_oc(rule, sc, args.reps, args.seed, args.mode, args.threads))
    _write(args.out, oc_csv(results, with_se=args.se))
    if args.spend:
        _write(args.spend, spend_csv(results))
    return EXIT_OK


def cmd_evaluate(args):
    rule = _load_rule(args.rule)
    with open(args.patients, newline="") as fh:
        patients = read_patients(fh, tau=rule.design.tau)
    res = monitor(patients, rule)
    _write(args.out, timeline_csv(res))
    if res.stopped:
        s = res.snapshot_at_stop
        verdict = f"STOP at day {res.stop_time:g}: D1={s.d1}, ess={s.ess:.2f}\n"
    else:
        verdict = "no stop: the boundary was never crossed\n"
    sys.stderr.write(f"{rule.name}: {verdict}")
    return EXIT_OK


def cmd_compare(args):
    rules = [_load_rule(p) for p in args.rules]
    arms = [(r, m) for r in rules for m in args.modes]
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["type", "mode", "p", "p.compt", "reject_prob", "e_events", "e_enrolled",
                "e_duration", "events_ratio_vs_first"])
    for p, pc in _pairs(args.ps, args.ps_compt):
        sc = scenario_for(rules[0], p, pc, **_scenario_kwargs(args))
        cmp = compare(arms, sc, args.reps, args.seed, args.threads)
        for i, r in enumerate(cmp.results):
            w.writerow([r.label, r.mode, f"{r.p:.4g}", f"{r.p_compete:.4g}", f"{r.reject_prob:.4f}",
                        f"{r.expected_toxicities:.4f}", f"{r.expected_enrolled:.4f}",
                        f"{r.expected_duration:.4f}", f"{cmp.toxicity_ratio[i][0]:.4f}"])
    _write(args.out, out.getvalue())
    return EXIT_OK


def _add_sim_flags(sp):
    sp.add_argument("--ps", type=float, nargs="+", required=True, help="true toxicity incidences")
    sp.add_argument("--ps-compt", type=float, nargs="+", default=[0.0],
                    help="competing-risk incidences (one value, or one per --ps)")
    sp.add_argument("--tau", type=float, help="override the rule's window (days)")
    sp.add_argument("--accrual", type=float, help="override the rule's accrual period (days)")
    sp.add_argument("--reps", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--dist", choices=EVENT_DISTS, default="uniform")
    sp.add_argument("--shape", type=float, default=1.0, help="Weibull shape")
    sp.add_argument("--enrollment", choices=ENROLLMENT, default="random")
    sp.add_argument("--threads", type=int, default=None,
                    help=f"worker threads (default ${THREADS_ENV} or 1); never changes results")
    sp.add_argument("--out", default=None)


def build_parser():
    parser = _Parser(prog="titesafety", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("calc-rule", help="calibrate a stopping rule")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p0", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--tau", type=float, default=30.0)
    sp.add_argument("--accrual", type=float, default=730.0)
    sp.add_argument("--method", choices=("wt", "bayes", "sprt"), required=True)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--prior-k", type=float)
    sp.add_argument("--prior-m", type=float)
    sp.add_argument("--nu", type=float, help="prior patients; k = nu*p0, m = nu*(1-p0)")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--p1", type=float)
    g.add_argument("--power", type=float, help="pick p1 by fixed-N exact test power")
    sp.add_argument("--label")
    sp.add_argument("--out", default=None, help="rule JSON (default stdout)")
    sp.add_argument("--report", help="calibration report JSON")
    sp.add_argument("--curve", help="boundary curve CSV (ess,boundary)")
    sp.add_argument("--curve-step", type=float, default=0.01)
    sp.set_defaults(func=cmd_calc_rule)

    sp = sub.add_parser("table", help="tabulate a rule by effective sample size")
    sp.add_argument("rule")
    sp.add_argument("--csv")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("oc", help="Monte Carlo operating characteristics")
    sp.add_argument("rules", nargs="+")
    _add_sim_flags(sp)
    sp.add_argument("--mode", choices=MODES, default="tite")
    sp.add_argument("--spend", help="alpha-spending CSV")
    sp.add_argument("--se", action="store_true", help="add Monte Carlo standard errors")
    sp.set_defaults(func=cmd_oc)

    sp = sub.add_parser("evaluate", help="replay observed patient data against a rule")
    sp.add_argument("rule")
    sp.add_argument("patients")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("compare", help="paired comparison on common random numbers")
    sp.add_argument("rules", nargs="+")
    _add_sim_flags(sp)
    sp.add_argument("--modes", nargs="+", choices=MODES, default=["tite", "binary"])
    sp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = default_threads()
    try:
        return args.func(args)
    except CalibrationInfeasible as exc:
        sys.stderr.write(f"calibration infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (ValidationError, DomainError, ConfigurationError, KeyError, ValueError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_VALIDATION
    except OSError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
