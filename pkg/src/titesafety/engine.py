"""Effective sample sizes, data snapshots and the sequential monitoring loop."""

import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .boundaries import boundary_value
from .core import Snapshot, validate_patient
from .errors import DomainError, ValidationError


def weight(follow_up, tau):
    """Uniform-G weight: fraction of the window completed, clamped to [0, 1]."""
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    return min(max(follow_up / tau, 0.0), 1.0)


def snapshot(patients, s, design):
    """Observed data at calendar time ``s``.

    A patient enrolled exactly at ``s`` is counted as enrolled but contributes
    zero weight. Events are seen once ``E + T <= s``.
    """
    tau = design.tau
    d1 = d2 = 0
    partial = 0.0
    n = 0
    obs = []
    for p in patients:
        follow = s - p.enroll_time
        if follow < 0:
            continue
        n += 1
        # compare calendar times: s - E can round below T when s == E + T
        if p.cause and p.event_time <= tau and p.enroll_time + p.event_time <= s:
            if p.cause == 1:
                d1 += 1
            else:
                d2 += 1
            obs.append((p.event_time, p.cause))
        else:
            partial += weight(follow, tau)
            obs.append((min(follow, tau), 0))
    return Snapshot(s=s, d1=d1, d2=d2, ess=d1 + d2 + partial, n_enrolled=n, obs=tuple(obs))


@dataclass(frozen=True)
class TimelineEntry:
    time: float
    snapshot: Snapshot
    boundary: float
    triggered: bool
    decision_point: bool


@dataclass(frozen=True)
class MonitoringResult:
    stopped: bool
    stop_time: Optional[float] = None
    snapshot_at_stop: Optional[Snapshot] = None
    timeline: Tuple[TimelineEntry, ...] = field(default_factory=tuple)


def event_times(patients, cause):
    return sorted({p.enroll_time + p.event_time for p in patients if p.cause == cause})


def monitor(patients, rule, boundary=None):
    """Replay patient data against a rule, checking at every cause-1 event time.

    Between cause-1 events D1 is flat while b(ess) can only grow, so no stop can
    be missed by checking only at those times. Cause-2 event times are kept in
    the timeline for reference but are not decision points.

    ``boundary`` overrides b(ess); by default the rule's own boundary is used.
    """
    design = rule.design
    for p in patients:
        validate_patient(p, design.tau)
    if len(patients) > design.N:
        raise ValidationError("patients.count", f"{len(patients)} patients exceed N={design.N}")
    bfun = boundary if boundary is not None else (lambda e: boundary_value(rule, e))

    checks = [(t, True) for t in event_times(patients, 1)]
    cause1 = {t for t, _ in checks}
    checks += [(t, False) for t in event_times(patients, 2) if t not in cause1]
    checks.sort()

    timeline: List[TimelineEntry] = []
    for t, decision in checks:
        snap = snapshot(patients, t, design)
        b = bfun(snap.ess)
        hit = decision and snap.d1 >= b
        timeline.append(TimelineEntry(t, snap, b, hit, decision))
        if hit:
            return MonitoringResult(True, t, snap, tuple(timeline))
    return MonitoringResult(False, None, None, tuple(timeline))


def _fmt(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return repr(float(x))


def timeline_csv(result):
    out = io.StringIO()
    out.write("time,d1,d2,ess,boundary,triggered\n")
    for e in result.timeline:
        s = e.snapshot
        out.write(f"{_fmt(e.time)},{s.d1},{s.d2},{_fmt(s.ess)},{_fmt(e.boundary)},"
                  f"{int(e.triggered)}\n")
    return out.getvalue()
