"""Monte Carlo operating characteristics of TITE and binary monitoring.

Every replication draws its own random stream from ``(master_seed, rep)``, so a
replication's trial is the same whatever rule or mode evaluates it (common
random numbers) and whatever the number of worker threads.
"""

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from .boundaries import invert_boundary
from .calibration import rule_thresholds
from .core import PatientRecord, TrialDesign, validate_design
from .errors import ConfigurationError, DomainError

EVENT_DISTS = ("uniform", "exponential", "weibull")
ENROLLMENT = ("random", "even")
MODES = ("tite", "binary")
TOXICITY_COUNTS = ("observed", "exposed")
# binary-mode figures mirror closed-form binary OCs, which count every toxicity
# among enrolled patients, including those still in their window at the stop
DEFAULT_COUNT = {"tite": "observed", "binary": "exposed"}
SPEND_GRID = tuple(round(0.05 * i, 2) for i in range(1, 21))
CHUNK = 500
THREADS_ENV = "TITESAFETY_THREADS"


@dataclass(frozen=True)
class Scenario:
    """True data-generating mechanism for one simulated trial setting.

    ``p_true`` and ``p_compete`` are the cumulative incidences of the toxicity
    and of the competing risk at ``tau``. Competing event times are uniform on
    the window; toxicity times follow ``event_dist`` rescaled to hit
    ``p_true`` at ``tau``. ``shape`` is the Weibull shape parameter.
    """

    design: TrialDesign
    p_true: float
    p_compete: float = 0.0
    event_dist: str = "uniform"
    shape: float = 1.0
    enrollment: str = "random"


def validate_scenario(sc):
    validate_design(sc.design)
    if not (0.0 <= sc.p_true <= 1.0 and 0.0 <= sc.p_compete <= 1.0):
        raise DomainError(f"incidences must lie in [0, 1]: p={sc.p_true}, p_compete={sc.p_compete}")
    if sc.p_true + sc.p_compete > 1.0 + 1e-12:
        raise DomainError(f"p + p_compete = {sc.p_true + sc.p_compete} exceeds 1")
    if sc.event_dist not in EVENT_DISTS:
        raise DomainError(f"event_dist must be one of {EVENT_DISTS}, got {sc.event_dist!r}")
    if not sc.shape > 0:
        raise DomainError(f"Weibull shape must be positive, got {sc.shape}")
    if sc.enrollment not in ENROLLMENT:
        raise DomainError(f"enrollment must be one of {ENROLLMENT}, got {sc.enrollment!r}")
    return sc


def weibull_scale(p, tau, shape):
    """Scale giving a Weibull(shape, scale) CDF equal to ``p`` at ``tau``."""
    return tau / (-math.log1p(-p)) ** (1.0 / shape)


def replication_rng(master_seed, rep):
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(rep,)))


def _toxicity_times(v, sc):
    # inverse CDF of the event-time law conditioned on T <= tau; v in (0, 1]
    tau, p = sc.design.tau, sc.p_true
    if sc.event_dist == "uniform" or p <= 0.0:
        return tau * v
    shape = 1.0 if sc.event_dist == "exponential" else sc.shape
    if p >= 1.0:
        # the conditional law degenerates; fall back to the uniform window
        return tau * v
    return tau * (np.log1p(-v * p) / math.log1p(-p)) ** (1.0 / shape)


def _draw(sc, rng):
    N, tau, A = sc.design.N, sc.design.tau, sc.design.accrual
    u_enroll = rng.random(N)
    u_cause = rng.random(N)
    v = 1.0 - rng.random(N)
    if sc.enrollment == "even":
        enroll = A * np.arange(1, N + 1) / N
    else:
        enroll = A * u_enroll
    cause = np.where(u_cause < sc.p_true, 1, np.where(u_cause < sc.p_true + sc.p_compete, 2, 0))
    t = np.where(cause == 1, _toxicity_times(v, sc), tau * v)
    t = np.where(cause == 0, np.inf, np.minimum(t, tau))
    return enroll, cause, t


def gen_trial(scenario, rng) -> List[PatientRecord]:
    """Draw one trial's patients; ``rng`` is a ``numpy.random.Generator``."""
    validate_scenario(scenario)
    enroll, cause, t = _draw(scenario, rng)
    return [PatientRecord(enroll_time=float(e), cause=int(c),
                          event_time=None if c == 0 else float(tt), patient_id=str(j + 1))
            for j, (e, c, tt) in enumerate(zip(enroll, cause, t))]


def _propagate_ties(times, vals):
    # within runs of equal times every entry takes the value of the last one
    for i in range(times.shape[1] - 2, -1, -1):
        same = times[:, i] == times[:, i + 1]
        if same.any():
            vals[same, i] = vals[same, i + 1]
    return vals


def _ess_thresholds(rule):
    # star[d] = largest ess at which d events reject; -inf when d never does
    N = rule.design.N
    star = np.full(N + 2, -np.inf)
    for d in range(1, N + 1):
        x = invert_boundary(rule, d)
        if x is not None:
            star[d] = x
    return star


def _tite_chunk(E, cause, T, tau, N, star):
    R = E.shape[0]
    ev = np.where(cause == 1, E + T, np.inf)
    ev.sort(axis=1)
    K = int(np.isfinite(ev).sum(axis=1).max()) if R else 0
    checks = ev[:, :K]
    d1 = _propagate_ties(checks, np.tile(np.arange(1, K + 1), (R, 1)))
    any_event = cause > 0
    decided = np.zeros(R, dtype=bool)
    stop = np.full(R, np.nan)
    info = np.ones(R)
    d1_stop = np.zeros(R, dtype=int)
    for k in range(K):
        t = checks[:, k]
        live = ~decided & np.isfinite(t)
        if not live.any():
            continue
        fu = t[:, None] - E
        w = np.clip(fu / tau, 0.0, 1.0)
        seen = any_event & (E + T <= t[:, None])
        ess = np.where(seen, 1.0, w).sum(axis=1)
        dk = d1[:, k]
        hit = live & (ess <= star[dk])
        stop[hit] = t[hit]
        info[hit] = np.minimum(ess[hit] / N, 1.0)
        d1_stop[hit] = dk[hit]
        decided |= hit
    return decided, stop, info, d1_stop


def _binary_chunk(E, cause, T, tau, N, thresholds):
    R = E.shape[0]
    C = E + tau
    order = np.argsort(C, axis=1, kind="stable")
    Cs = np.take_along_axis(C, order, axis=1)
    tox_sorted = np.take_along_axis(cause == 1, order, axis=1)
    n_eval = _propagate_ties(Cs, np.tile(np.arange(1, N + 1), (R, 1)))
    d1 = _propagate_ties(Cs, np.cumsum(tox_sorted, axis=1))
    r = np.asarray(thresholds)[n_eval - 1]
    hit = d1 >= r
    decided = hit.any(axis=1)
    first = np.argmax(hit, axis=1)
    rows = np.arange(R)
    stop = np.where(decided, Cs[rows, first], np.nan)
    info = np.where(decided, n_eval[rows, first] / N, 1.0)
    d1_stop = np.where(decided, d1[rows, first], 0)
    return decided, stop, info, d1_stop


@dataclass(frozen=True)
class ReplicationOutcomes:
    """Per-replication results.

    ``observed`` counts toxicities that occurred by the end of the study (the
    stop, or accrual + tau); ``exposed`` counts every toxicity among patients
    enrolled before that time, including ones that occur later.
    """

    rejected: np.ndarray
    observed: np.ndarray
    exposed: np.ndarray
    enrolled: np.ndarray
    duration: np.ndarray
    info_at_stop: np.ndarray


def _simulate_range(rule, sc, start, stop_rep, master_seed, mode, prepared):
    draws = [_draw(sc, replication_rng(master_seed, i)) for i in range(start, stop_rep)]
    E = np.stack([d[0] for d in draws])
    cause = np.stack([d[1] for d in draws])
    T = np.stack([d[2] for d in draws])
    tau, N = sc.design.tau, sc.design.N
    if mode == "tite":
        rejected, stop, info, _ = _tite_chunk(E, cause, T, tau, N, prepared)
    else:
        rejected, stop, info, _ = _binary_chunk(E, cause, T, tau, N, prepared)
    # without a stop the study runs to the end of accrual plus one window
    duration = np.where(rejected, stop, sc.design.accrual + tau)
    before = E < duration[:, None]
    enrolled = np.where(rejected, before.sum(axis=1), N)
    observed = ((cause == 1) & (E + T <= duration[:, None])).sum(axis=1)
    exposed = ((cause == 1) & before).sum(axis=1)
    return rejected, observed, exposed, enrolled, duration, info


def default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_replications(rule, scenario, reps, master_seed, mode="tite", threads=None):
    """Per-replication outcomes, in replication order."""
    validate_scenario(scenario)
    if reps < 1:
        raise DomainError(f"reps must be >= 1, got {reps}")
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if rule.design.N != scenario.design.N:
        raise ConfigurationError(f"rule N={rule.design.N} differs from scenario N={scenario.design.N}")
    prepared = _ess_thresholds(rule) if mode == "tite" else rule_thresholds(rule).thresholds
    bounds = [(s, min(s + CHUNK, reps)) for s in range(0, reps, CHUNK)]
    threads = threads or default_threads()

    def work(b):
        return _simulate_range(rule, scenario, b[0], b[1], master_seed, mode, prepared)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    cols = [np.concatenate([p[i] for p in parts]) for i in range(6)]
    return ReplicationOutcomes(*cols)


@dataclass(frozen=True)
class OCResult:
    label: str
    mode: str
    p: float
    p_compete: float
    reps: int
    reject_prob: float
    reject_se: float
    expected_toxicities: float
    toxicities_se: float
    expected_enrolled: float
    enrolled_se: float
    expected_duration: float
    duration_se: float
    alpha_spend: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def summarize(rule, scenario, out, mode, toxicity_count=None):
    count = toxicity_count or DEFAULT_COUNT[mode]
    if count not in TOXICITY_COUNTS:
        raise DomainError(f"toxicity_count must be one of {TOXICITY_COUNTS}, got {count!r}")
    reps = out.rejected.size
    rp = float(out.rejected.mean())
    spend = tuple((f, float(np.mean(out.rejected & (out.info_at_stop <= f + 1e-12))))
                  for f in SPEND_GRID)
    # the last grid point must equal the rejection rate exactly
    spend = spend[:-1] + ((1.0, rp),)
    tox, tox_se = _mean_se(out.observed if count == "observed" else out.exposed)
    enr, enr_se = _mean_se(out.enrolled)
    dur, dur_se = _mean_se(out.duration)
    return OCResult(label=rule.name, mode=mode, p=scenario.p_true, p_compete=scenario.p_compete,
                    reps=reps, reject_prob=rp, reject_se=math.sqrt(rp * (1 - rp) / reps),
                    expected_toxicities=tox, toxicities_se=tox_se,
                    expected_enrolled=enr, enrolled_se=enr_se,
                    expected_duration=dur, duration_se=dur_se, alpha_spend=spend)


def simulate_oc(rule, scenario, reps, master_seed, mode="tite", threads=None,
                toxicity_count=None):
    """Estimate rejection probability, toxicities, enrollment, duration and alpha spending.

    In ``tite`` mode the rule is checked at every toxicity time using partial
    follow-up. In ``binary`` mode it is checked as each patient completes the
    window, using completed patients only, against the rule's integer
    thresholds. ``toxicity_count`` picks ``"observed"`` or ``"exposed"``
    toxicities (see ``ReplicationOutcomes``); the default depends on the mode.
    """
    out = run_replications(rule, scenario, reps, master_seed, mode, threads)
    return summarize(rule, scenario, out, mode, toxicity_count)


def alpha_spend_curve(rule, scenario, reps, master_seed, mode="tite", threads=None):
    """Cumulative type I error by information fraction at stopping."""
    if not math.isclose(scenario.p_true, scenario.design.p0):
        raise DomainError("alpha spending is defined at p = p0")
    return list(simulate_oc(rule, scenario, reps, master_seed, mode, threads).alpha_spend)


@dataclass(frozen=True)
class Comparison:
    results: Tuple[OCResult, ...]
    toxicity_ratio: Tuple[Tuple[float, ...], ...]  # [i][j] = E tox_i / E tox_j


def compare(arms, scenario, reps, master_seed, threads=None, toxicity_count=None):
    """Evaluate several (rule, mode) arms on identical replications.

    ``arms`` holds ``StoppingRule`` objects (TITE mode) or ``(rule, mode)``
    pairs. The ratio matrix gives expected toxicities of arm i over arm j.
    Pass ``toxicity_count`` to force one counting convention on every arm.
    """
    pairs = [a if isinstance(a, tuple) else (a, "tite") for a in arms]
    if not pairs:
        raise ConfigurationError("nothing to compare")
    first = pairs[0][0].design
    for rule, _ in pairs[1:]:
        d = rule.design
        if (d.N, d.p0, d.tau, d.accrual) != (first.N, first.p0, first.tau, first.accrual):
            raise ConfigurationError(f"rule {rule.name} has a different design")
    results = tuple(simulate_oc(r, scenario, reps, master_seed, m, threads, toxicity_count)
                    for r, m in pairs)
    ratio = tuple(tuple(a.expected_toxicities / b.expected_toxicities
                        if b.expected_toxicities > 0 else math.nan for b in results)
                  for a in results)
    return Comparison(results=results, toxicity_ratio=ratio)


OC_COLUMNS = ("type", "p", "p.compt", "reject_prob", "e_events", "e_enrolled", "e_duration")


def oc_csv(results, with_se=False, with_mode=False):
    out = io.StringIO()
    cols = list(OC_COLUMNS)
    if with_mode:
        cols.insert(1, "mode")
    if with_se:
        cols += ["reject_se", "events_se", "enrolled_se", "duration_se"]
    out.write(",".join(cols) + "\n")
    for r in results:
        row = [r.label]
        if with_mode:
            row.append(r.mode)
        row += [f"{r.p:.4g}", f"{r.p_compete:.4g}", f"{r.reject_prob:.4f}",
                f"{r.expected_toxicities:.4f}", f"{r.expected_enrolled:.4f}",
                f"{r.expected_duration:.4f}"]
        if with_se:
            row += [f"{r.reject_se:.4f}", f"{r.toxicities_se:.4f}", f"{r.enrolled_se:.4f}",
                    f"{r.duration_se:.4f}"]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def spend_csv(results):
    out = io.StringIO()
    out.write("type,mode,p,info_fraction,cumulative_rejection\n")
    for r in results:
        for f, v in r.alpha_spend:
            out.write(f"{r.label},{r.mode},{r.p:.4g},{f:.2f},{v:.6f}\n")
    return out.getvalue()


def scenario_for(rule, p_true, p_compete=0.0, **overrides):
    """Scenario on the rule's design, with design fields (tau, accrual) overridable."""
    design_keys = {k: overrides.pop(k) for k in ("tau", "accrual") if k in overrides}
    design = replace(rule.design, **design_keys) if design_keys else rule.design
    return Scenario(design=design, p_true=p_true, p_compete=p_compete, **overrides)
