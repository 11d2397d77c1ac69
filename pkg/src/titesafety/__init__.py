"""Time-to-event safety stopping rules for clinical-trial toxicity monitoring."""

__version__ = "0.1.0"

from .boundaries import (bayes_boundary, bayes_posterior_tail, boundary_value, invert_boundary,
                         score_statistics, sprt_boundary, tabulate, wt_boundary)
from .calibration import (IntegerBoundary, binary_alpha, binary_oc, calibrate, choose_p1,
                          integer_thresholds)
from .core import (SPRT, Bayes, BoundaryTable, PatientRecord, Snapshot, StoppingRule,
                   TrialDesign, WangTsiatis, validate)
from .engine import monitor, snapshot, weight
from .errors import (CalibrationInfeasible, ConfigurationError, DomainError, SearchError,
                     ValidationError)
from .simulator import Scenario, alpha_spend_curve, compare, gen_trial, simulate_oc
