from .checks import (
    check_clt,
    check_gamma_limit,
    check_l1_scaling,
    check_marked_variance_ratio,
    check_mean_limit,
    check_membership_trend,
    check_outlier_injection,
    check_reconstruction_baseline,
    check_regular_from_below,
    check_variance_limit,
    clt_trend,
)
from .report import Criterion, ValidationReport, calibration
from .suites import SUITES, run_suite

__all__ = [
    "Criterion",
    "SUITES",
    "ValidationReport",
    "calibration",
    "check_clt",
    "check_gamma_limit",
    "check_l1_scaling",
    "check_marked_variance_ratio",
    "check_mean_limit",
    "check_membership_trend",
    "check_outlier_injection",
    "check_reconstruction_baseline",
    "check_regular_from_below",
    "check_variance_limit",
    "clt_trend",
    "run_suite",
]
