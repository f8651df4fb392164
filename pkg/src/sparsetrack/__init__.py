"""Recursive reconstruction of sparse signal sequences with slowly changing
support, plus exact desk-scale analysis of the conditions under which it is
stable."""

from .bounds import (
    HALF_RIP,
    ConditionReport,
    TheoremParams,
    c1,
    c2,
    cdprime,
    certify,
    cprime,
    csres_error_bound,
    csres_error_bound_max,
    ls_step_error_bound,
    modcs_error_bound,
    required_orders,
    support_error_metrics,
    verify_conclusions,
)
from .constants import MatrixConstants, compute_constants, rip_delta, roc_theta
from .errors import (
    BoundDomainError,
    ConfigurationError,
    EnumerationLimitError,
    InfeasibleProblemError,
    MissingConstantError,
    ModelInfeasibleError,
    SparseTrackError,
)
from .experiment import (
    AggregateRecord,
    ExperimentConfig,
    TrialRecord,
    fig1_config,
    run_monte_carlo,
    run_trial,
    spread_statistic,
)
from .l1 import PartialL1Solver, SolverConfig, kkt_residual, restricted_least_squares, solve_partial_l1
from .measurement import MeasurementModel, flat_deficient_matrix, gaussian_matrix
from .signal_model import ModelParams, audit_transition, generate_trajectory, init_signal, step_signal
from .trackers import Thresholds, Tracker

__version__ = "0.1.0"
