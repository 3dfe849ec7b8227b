"""Named groups of checks run by ``locfda validate``."""

from __future__ import annotations

from typing import Callable, Dict, List

from ..simulation import CoeffDist, GeneratorSpec
from . import checks
from .report import ValidationReport, tol

SUITES = ("pointwise", "global", "clt", "marked", "all")


POINTWISE_REPLICATES = 20000


def _pointwise(seed: int, scale: float) -> List[ValidationReport]:
    # at 5000 replicates the KS tolerance sits near the 95th percentile of
    # pure sampling noise; the suite default uses enough draws to resolve it
    reps = max(50, int(POINTWISE_REPLICATES * scale))
    out = []
    for k in (1, 2):
        out.append(checks.check_mean_limit("uniform01", 2000, k, reps, seed))
        out.append(checks.check_variance_limit("uniform01", 2000, k, reps, seed))
    for k in (1, 2, 3):
        out.append(checks.check_gamma_limit(2000, k, reps, seed))
    return out


def _global(seed: int, scale: float) -> List[ValidationReport]:
    out = [checks.check_l1_scaling(replicates=max(20, int(500 * scale)), seed=seed)]
    harmonic = GeneratorSpec(kind="harmonic", n=20000, m=21, coeff_dist=CoeffDist("uniform", -1.0, 1.0), seed=seed)
    out.append(
        checks.check_regular_from_below(
            harmonic, tol("regular_from_below", "harmonic_delta"), tol("regular_from_below", "harmonic_kappa_min")
        )
    )
    out.append(checks.check_membership_trend(replicates=max(20, int(300 * scale)), seed=seed))
    out.append(checks.check_reconstruction_baseline(replicates=max(20, int(200 * scale)), seed=seed))
    for kind in ("magnitude", "shape"):
        out.append(checks.check_outlier_injection(kind=kind, panels=max(20, int(200 * scale)), seed=seed))
    return out


def _clt(seed: int, scale: float) -> List[ValidationReport]:
    return [checks.check_clt(n=200, k=1, m=500, replicates=1, seed=seed)]


def _marked(seed: int, scale: float) -> List[ValidationReport]:
    return [checks.check_marked_variance_ratio(2000, 0.3, 1, max(100, int(4000 * scale)), seed)]


_RUNNERS: Dict[str, Callable[[int, float], List[ValidationReport]]] = {
    "pointwise": _pointwise,
    "global": _global,
    "clt": _clt,
    "marked": _marked,
}


def run_suite(name: str, seed: int = 0, scale: float = 1.0) -> List[ValidationReport]:
    """Run a suite; ``scale`` multiplies replicate counts (1.0 = full size)."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    names = list(_RUNNERS) if name == "all" else [name]
    reports: List[ValidationReport] = []
    for n in names:
        reports.extend(_RUNNERS[n](seed, scale))
    return reports
