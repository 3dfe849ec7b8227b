"""Acceptance criteria, each run at its stated size and tolerance.

Every test prints one ``[PASS]``/``[FAIL]`` line; the lines are repeated in
the terminal summary under "acceptance criteria".  Nothing here is tuned to
make a criterion pass: sizes, seeds and tolerances are fixed up front.
"""

import time

import pytest

from locfda.validation import checks

import suites
from conftest import ACCEPTANCE_LINES

SEED = 0


def record(name, passed, detail, runtime, limit=None):
    ok = passed and (limit is None or runtime <= limit)
    budget = f" (runtime {runtime:.1f}s" + (f" <= {limit:.0f}s)" if limit else ")")
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}{budget}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def summarize(reports):
    parts = []
    for r in reports:
        for c in r.criteria:
            mark = "" if c.passed else " (x)"
            parts.append(f"{r.check_name}.{c.name}={c.statistic:.4g}{mark}")
    return "; ".join(parts)


def run_checks(fns):
    t0 = time.perf_counter()
    reports = [f() for f in fns]
    return reports, time.perf_counter() - t0


def test_gamma_limit():
    reports, dt = run_checks([lambda k=k: checks.check_gamma_limit(n=2000, k=k, replicates=5000, seed=SEED) for k in (1, 2, 3)])
    record("gamma limit, KS <= 0.02 and moments within 3 SE, k=1..3", all(r.passed for r in reports), summarize(reports), dt, 120)


def test_mean_variance_limits():
    fns = []
    for k in (1, 2):
        fns.append(lambda k=k: checks.check_mean_limit("uniform01", 2000, k, 5000, SEED))
        fns.append(lambda k=k: checks.check_variance_limit("uniform01", 2000, k, 5000, SEED))
    reports, dt = run_checks(fns)
    record("mean within 0.05 of 1 and variance within 15% of 1/k, k=1,2", all(r.passed for r in reports), summarize(reports), dt, 120)


def test_l1_scaling():
    reports, dt = run_checks([lambda: checks.check_l1_scaling(checks.DEFAULT_FOURIER, 1, (100, 200, 400), 500, SEED)])
    record("L1 width ratios in [0.4,0.6] (n doubling) and [1.7,2.3] (k doubling)", reports[0].passed, summarize(reports), dt, 300)


def test_clt():
    reports, dt = run_checks([lambda: checks.check_clt(checks.DEFAULT_FOURIER, n=200, k=1, m=500, replicates=1, seed=SEED)])
    record("standardized scores: |skew| <= 0.3, |excess kurtosis| <= 0.5, KS <= 0.08", reports[0].passed, summarize(reports), dt, 180)


def test_membership_probabilities():
    reports, dt = run_checks([lambda: checks.check_membership_trend(n=500, k_max=50, j_max=4, replicates=300, seed=SEED)])
    record("membership nondecreasing in k, final >= 0.95, control within 2 SE of k/(n-1)", reports[0].passed, summarize(reports), dt, 600)


def test_marked_variance_ratio():
    reports, dt = run_checks([lambda: checks.check_marked_variance_ratio(n=2000, p=0.3, k=1, replicates=4000, seed=SEED)])
    record("marked variance ratio within 20% of 3/7, centering within 0.05 of 1/(1-p)", reports[0].passed, summarize(reports), dt, 180)


ORACLES = {
    "localization paths": suites.path_suite,
    "restricted-distance neighbour orders": suites.neighbor_order_suite,
    "r-selection": suites.r_selection_suite,
    "fkNN votes": suites.fknn_suite,
    "modal labels": suites.modal_label_suite,
}


def test_oracle_suites():
    t0 = time.perf_counter()
    results = {name: fn(instances=200) for name, fn in ORACLES.items()}
    detail = "; ".join(f"{name}: {bad} mismatches / {total} comparisons" for name, (bad, total) in results.items())
    record("oracle suites on 200 instances each, exact agreement", all(bad == 0 for bad, _ in results.values()), detail, time.perf_counter() - t0)


INVARIANTS = {
    "width monotone in k": suites.width_monotone_suite,
    "donor shrinkage": suites.donor_shrinkage_suite,
    "affine invariance": suites.affine_suite,
    "weight normalisation": suites.weight_suite,
    "probability normalisation": suites.probability_suite,
}


def test_invariant_suites():
    t0 = time.perf_counter()
    results = {name: fn(seeds=1000) for name, fn in INVARIANTS.items()}
    detail = "; ".join(f"{name}: {int(bad)} violations / {total} seeds" for name, (bad, total) in results.items())
    record("invariant suites over 1000 seeds, zero violations", all(bad == 0 for bad, _ in results.values()), detail, time.perf_counter() - t0)


def test_reconstruction_beats_mean_imputation():
    reports, dt = run_checks([lambda: checks.check_reconstruction_baseline(checks.RECON_PANEL, replicates=200, seed=SEED)])
    r = reports[0]
    detail = f"median kNN MSE {r.details['median_knn']:.4g} vs baseline {r.details['median_baseline']:.4g}; " + summarize(reports)
    record("kNN median missing-range MSE strictly below mean imputation (200 replicates)", r.passed, detail, dt)


@pytest.mark.parametrize("kind", ["magnitude", "shape"])
def test_outlier_injection(kind):
    reports, dt = run_checks([lambda: checks.check_outlier_injection(checks.SHAPE_PANEL, kind, range(1, 10), 200, SEED)])
    record(f"{kind} outlier flagged in >= 95% of 200 panels for k=1..9", reports[0].passed, summarize(reports), dt)
