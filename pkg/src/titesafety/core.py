"""Domain types: trial design, method choices, stopping rules, patient data.

Times are in days throughout. A patient's ``cause`` is 0 when no event happens
within the evaluation window; censoring is not stored, it follows from the
calendar time at which the data are looked at.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple, Union

from .errors import ValidationError


@dataclass(frozen=True)
class TrialDesign:
    """Maximum cohort size, null toxicity rate at ``tau``, window, alpha and accrual."""

    N: int
    p0: float
    tau: float = 30.0
    alpha: float = 0.05
    accrual: float = 730.0


@dataclass(frozen=True)
class WangTsiatis:
    """Wang-Tsiatis score test; ``delta=0`` is O'Brien-Fleming, ``0.5`` Pocock."""

    delta: float

    kind = "wt"


@dataclass(frozen=True)
class Bayes:
    """Beta(k, m) prior with the beta-extended binomial posterior."""

    k: float
    m: float

    kind = "bayes"

    @classmethod
    def from_nu(cls, nu, p0):
        """Prior centred at ``p0`` worth ``nu`` prior patients."""
        return cls(k=nu * p0, m=nu * (1.0 - p0))


@dataclass(frozen=True)
class SPRT:
    """Truncated SPRT against the point alternative ``p1``.

    ``p0`` is carried so the odds ratio is available without the design.
    """

    p1: float
    p0: float

    kind = "sprt"

    @property
    def theta(self):
        return (self.p1 / (1.0 - self.p1)) / (self.p0 / (1.0 - self.p0))


MethodSpec = Union[WangTsiatis, Bayes, SPRT]


@dataclass(frozen=True)
class StoppingRule:
    """A calibrated rule: design, method, critical value and its exact binary alpha."""

    design: TrialDesign
    method: MethodSpec
    critical: float
    attained_alpha: float
    label: str = ""

    @property
    def name(self):
        return self.label or default_label(self.method)


@dataclass(frozen=True)
class PatientRecord:
    enroll_time: float
    event_time: Optional[float] = None
    cause: int = 0
    patient_id: str = ""


@dataclass(frozen=True)
class Snapshot:
    """Data available at calendar time ``s``."""

    s: float
    d1: int
    d2: int
    ess: float
    n_enrolled: int
    obs: Tuple[Tuple[float, int], ...] = ()


@dataclass(frozen=True)
class ScoreStatistics:
    score: float
    information: float
    z: float
    info_fraction: float


@dataclass(frozen=True)
class BoundaryRow:
    ess_lo: float
    ess_hi: float
    reject_count: int


@dataclass(frozen=True)
class BoundaryTable:
    rows: Tuple[BoundaryRow, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def default_label(method):
    if isinstance(method, WangTsiatis):
        if method.delta == 0.0:
            return "OBF"
        if method.delta == 0.5:
            return "POC"
        return f"WT({method.delta:g})"
    if isinstance(method, Bayes):
        return "Bayes"
    return "SPRT"


def _check_prob(name, value, code, open_interval=True):
    if not isinstance(value, (int, float)) or math.isnan(value):
        raise ValidationError(code, f"{name} must be a number, got {value!r}")
    if open_interval and not 0.0 < value < 1.0:
        raise ValidationError(code, f"{name} must lie in (0, 1), got {value}")
    if not open_interval and not 0.0 <= value <= 1.0:
        raise ValidationError(code, f"{name} must lie in [0, 1], got {value}")


def validate_design(design):
    if isinstance(design.N, bool) or not isinstance(design.N, int) or design.N < 1:
        raise ValidationError("design.N", f"N must be a positive integer, got {design.N!r}")
    _check_prob("p0", design.p0, "design.p0")
    _check_prob("alpha", design.alpha, "design.alpha", open_interval=False)
    if design.alpha <= 0.0:
        raise ValidationError("design.alpha", f"alpha must be positive, got {design.alpha}")
    if not design.tau > 0:
        raise ValidationError("design.tau", f"tau must be positive, got {design.tau}")
    if not design.accrual >= 0:
        raise ValidationError("design.accrual", f"accrual must be >= 0, got {design.accrual}")
    return design


def validate(design, method):
    """Check a design/method pair, raising ``ValidationError`` on the first problem."""
    validate_design(design)
    if isinstance(method, WangTsiatis):
        if not 0.0 <= method.delta <= 0.5:
            raise ValidationError("wt.delta", f"delta must lie in [0, 0.5], got {method.delta}")
    elif isinstance(method, Bayes):
        if not method.k > 0:
            raise ValidationError("bayes.k", f"prior k must be positive, got {method.k}")
        if not method.m > 0:
            raise ValidationError("bayes.m", f"prior m must be positive, got {method.m}")
    elif isinstance(method, SPRT):
        _check_prob("p1", method.p1, "sprt.p1")
        if method.p0 != design.p0:
            raise ValidationError("sprt.p0", f"SPRT p0={method.p0} differs from design p0={design.p0}")
        if not method.p1 > method.p0:
            raise ValidationError("sprt.p1", f"p1 must exceed p0 ({method.p1} <= {method.p0})")
    else:
        raise ValidationError("method", f"unknown method {method!r}")
    return design, method


def validate_patient(rec, tau):
    if rec.cause not in (0, 1, 2):
        raise ValidationError("patient.cause", f"cause must be 0, 1 or 2, got {rec.cause!r}")
    if not rec.enroll_time >= 0:
        raise ValidationError("patient.enroll_time", f"enroll_time must be >= 0, got {rec.enroll_time}")
    if rec.cause == 0:
        if rec.event_time is not None:
            raise ValidationError("patient.event_time", "event_time given for a patient with cause 0")
    else:
        if rec.event_time is None:
            raise ValidationError("patient.event_time", f"cause {rec.cause} needs an event_time")
        if not 0 < rec.event_time <= tau:
            raise ValidationError("patient.event_time",
                                  f"event_time must lie in (0, tau={tau}], got {rec.event_time}")
    return rec


# --- JSON ---------------------------------------------------------------

def method_to_dict(method):
    if isinstance(method, WangTsiatis):
        return {"type": "wt", "delta": method.delta}
    if isinstance(method, Bayes):
        return {"type": "bayes", "k": method.k, "m": method.m}
    return {"type": "sprt", "p1": method.p1, "p0": method.p0, "theta": method.theta}


def method_from_dict(d):
    kind = d.get("type")
    if kind == "wt":
        return WangTsiatis(delta=float(d["delta"]))
    if kind == "bayes":
        return Bayes(k=float(d["k"]), m=float(d["m"]))
    if kind == "sprt":
        method = SPRT(p1=float(d["p1"]), p0=float(d["p0"]))
        if "theta" in d and not math.isclose(float(d["theta"]), method.theta, rel_tol=1e-12):
            raise ValidationError("sprt.theta", f"theta {d['theta']} inconsistent with p0, p1")
        return method
    raise ValidationError("method", f"unknown method type {kind!r}")


def rule_to_dict(rule):
    return {
        "design": asdict(rule.design),
        "method": method_to_dict(rule.method),
        "critical": rule.critical,
        "attained_alpha": rule.attained_alpha,
        "label": rule.label,
    }


def rule_from_dict(d):
    dd = d["design"]
    design = TrialDesign(N=int(dd["N"]), p0=float(dd["p0"]), tau=float(dd["tau"]),
                         alpha=float(dd["alpha"]), accrual=float(dd["accrual"]))
    method = method_from_dict(d["method"])
    validate(design, method)
    return StoppingRule(design=design, method=method, critical=float(d["critical"]),
                        attained_alpha=float(d["attained_alpha"]), label=d.get("label", ""))


def rule_to_json(rule, extra=None):
    d = rule_to_dict(rule)
    if extra:
        d.update(extra)
    return json.dumps(d, indent=2)


def rule_from_json(text):
    return rule_from_dict(json.loads(text))


# --- patient CSV --------------------------------------------------------

PATIENT_FIELDS = ("patient_id", "enroll_time", "event_time", "cause")


def read_patients(fh, tau=None) -> List[PatientRecord]:
    """Parse the ``patient_id,enroll_time,event_time,cause`` CSV format."""
    reader = csv.DictReader(fh)
    missing = set(PATIENT_FIELDS) - set(reader.fieldnames or ())
    if missing:
        raise ValidationError("patients.header", f"missing columns: {sorted(missing)}")
    out = []
    for row in reader:
        ev = row["event_time"].strip()
        rec = PatientRecord(
            enroll_time=float(row["enroll_time"]),
            event_time=float(ev) if ev else None,
            cause=int(row["cause"]),
            patient_id=row["patient_id"],
        )
        if tau is not None:
            validate_patient(rec, tau)
        out.append(rec)
    return out


def write_patients(patients, fh=None):
    own = fh is None
    fh = io.StringIO() if own else fh
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PATIENT_FIELDS)
    for j, p in enumerate(patients):
        pid = p.patient_id or str(j + 1)
        w.writerow([pid, repr(float(p.enroll_time)),
                    "" if p.event_time is None else repr(float(p.event_time)), p.cause])
    return fh.getvalue() if own else None
