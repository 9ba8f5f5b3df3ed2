"""Confidence intervals for interval-identified parameters and their power."""

import logging

# Public API exports
from .normal_core import phi, cdf, quantile, bvn_lower, bvn_rect
from .critical_values import (
    CritScalar,
    CritPair,
    CritTable,
    check_alpha,
    solve_c1,
    solve_g,
    g_prime,
    g_batch,
    ci2_constraints,
    solve_c2,
)
from .confidence_intervals import (
    CiKind,
    EstimatorTuple,
    Interval,
    build_ci1,
    build_ci2,
    build_ci,
    covers,
)
from .limit_power import (
    DriftParams,
    LimitSigmas,
    eval_h,
    eval_w,
    simulate_w,
    h_monotonicity_scan,
    power_dominance_limit,
    strict_dominance_family,
)
from .mc_engine import (
    DgpSpec,
    AlternativeSeq,
    PowerPoint,
    ViolationRecord,
    draw_estimators,
    estimate_coverage,
    power_curve,
    near1_diagnostic,
)
from .exceptions import (
    IntervalCiError,
    InvalidParameterError,
    SolverError,
    DgpError,
    EngineError,
    ConfigError,
)

# Set up null handler to prevent "No handler found" warnings
logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"


__all__ = [
    # Normal primitives
    "phi",
    "cdf",
    "quantile",
    "bvn_lower",
    "bvn_rect",
    # Critical values
    "CritScalar",
    "CritPair",
    "CritTable",
    "check_alpha",
    "solve_c1",
    "solve_g",
    "g_prime",
    "g_batch",
    "ci2_constraints",
    "solve_c2",
    # Confidence intervals
    "CiKind",
    "EstimatorTuple",
    "Interval",
    "build_ci1",
    "build_ci2",
    "build_ci",
    "covers",
    # Limit functions
    "DriftParams",
    "LimitSigmas",
    "eval_h",
    "eval_w",
    "simulate_w",
    "h_monotonicity_scan",
    "power_dominance_limit",
    "strict_dominance_family",
    # Monte Carlo
    "DgpSpec",
    "AlternativeSeq",
    "PowerPoint",
    "ViolationRecord",
    "draw_estimators",
    "estimate_coverage",
    "power_curve",
    "near1_diagnostic",
    # Exceptions
    "IntervalCiError",
    "InvalidParameterError",
    "SolverError",
    "DgpError",
    "EngineError",
    "ConfigError",
]
