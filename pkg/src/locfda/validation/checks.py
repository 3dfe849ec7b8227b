"""Monte Carlo checks of the large-sample behaviour of localization widths."""

from __future__ import annotations

import time
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .._kernels import kth_nn_sorted, knn_widths
from ..classification import detect_outliers
from ..core import GroupLabels, LocFDAError, trapezoid_integral
from ..localization import self_scores_all_k
from ..reconstruction import baseline_mean_impute, knn_reconstruct, membership_curves, missing_mse
from ..simulation import (
    CensoringSpec,
    CoeffDist,
    GeneratorSpec,
    Marginal,
    censor,
    derive_seed,
    draw_coefficients,
    fourier_curves,
    generate,
    stream,
    thin_at_time,
)
from .report import Criterion, ValidationReport, tol

BLOCK = 1000


def _pointwise_widths(marginal: Marginal, n: int, kmax: int, replicates: int, seed: int) -> np.ndarray:
    """(kmax, R) k-th nearest distances of the first of n i.i.d. draws, one stream per replicate."""
    if n < kmax + 1:
        raise LocFDAError(f"n={n} too small for k={kmax}")
    out = np.empty((kmax, replicates))
    for start in range(0, replicates, BLOCK):
        stop = min(start + BLOCK, replicates)
        cols = np.empty((n, stop - start))
        for c, r in enumerate(range(start, stop)):
            cols[:, c] = marginal.draw(stream(seed, r), n)
        w, _ = knn_widths(cols[1:], cols[:1], kmax)
        out[:, start:stop] = w[0]
    return out


def check_mean_limit(marginal="uniform01", n=2000, k=1, replicates=5000, seed=0) -> ValidationReport:
    t0 = time.perf_counter()
    marginal = Marginal.parse(marginal)
    target = marginal.support_measure
    W = 2.0 * n / k * _pointwise_widths(marginal, n, k, replicates, seed)[k - 1]
    mean = float(W.mean())
    crit = [Criterion("mean_W", mean, target, tol("mean_limit", "abs_tol"))]
    details = {"marginal": str(marginal), "n": n, "k": k, "stderr": float(W.std(ddof=1) / np.sqrt(replicates))}
    return ValidationReport.from_criteria(f"mean_limit[{marginal},k={k}]", crit, replicates, seed, time.perf_counter() - t0, details)


def variance_target(marginal: Marginal, k: int) -> float:
    S = marginal.support_measure
    return (1.0 + 1.0 / k) * marginal.inverse_density_integral - S**2


def check_variance_limit(marginal="uniform01", n=2000, k=1, replicates=5000, seed=0) -> ValidationReport:
    t0 = time.perf_counter()
    marginal = Marginal.parse(marginal)
    name = f"variance_limit[{marginal},k={k}]"
    target = variance_target(marginal, k)
    if not np.isfinite(target):
        return ValidationReport.skip(name, "limit variance is infinite for this marginal", replicates, seed)
    W = 2.0 * n / k * _pointwise_widths(marginal, n, k, replicates, seed)[k - 1]
    var = float(W.var(ddof=1))
    crit = [Criterion("var_W", var, target, tol("variance_limit", "rel_tol") * target)]
    return ValidationReport.from_criteria(name, crit, replicates, seed, time.perf_counter() - t0, {"n": n, "k": k})


def check_gamma_limit(n=2000, k=1, replicates=5000, seed=0) -> ValidationReport:
    """n times the k-th width of a uniform sample against Gamma(shape k, rate 2)."""
    t0 = time.perf_counter()
    x = n * _pointwise_widths(Marginal(), n, k, replicates, seed)[k - 1]
    ks = float(stats.kstest(x, stats.gamma(a=k, scale=0.5).cdf).statistic)
    z = tol("gamma_limit", "moment_se")
    se1 = x.std(ddof=1) / np.sqrt(replicates)
    se2 = (x**2).std(ddof=1) / np.sqrt(replicates)
    crit = [
        Criterion("ks_distance", ks, "Gamma(k, rate 2)", tol("gamma_limit", "ks_max"), kind="max"),
        Criterion("mean", float(x.mean()), k / 2.0, z * se1),
        Criterion("second_moment", float((x**2).mean()), (k + 1) * k / 4.0, z * se2),
    ]
    return ValidationReport.from_criteria(f"gamma_limit[k={k}]", crit, replicates, seed, time.perf_counter() - t0, {"n": n, "k": k})


DEFAULT_FOURIER = GeneratorSpec(kind="fourier", n=100, m=101, num_terms=3, coeff_dist=CoeffDist("uniform", -1.0, 1.0))


def mean_l1_errors(generator: GeneratorSpec, k_values: Sequence[int], n_list: Sequence[int], replicates: int, seed: int) -> np.ndarray:
    """(len(n_list), len(k_values)) Monte Carlo means of the L1 width of curve 0."""
    kmax = int(max(k_values))
    k_idx = np.asarray(k_values) - 1
    out = np.empty((len(n_list), len(k_values)))
    for a, n in enumerate(n_list):
        acc = np.zeros(len(k_values))
        for rep in range(replicates):
            sample = generate(generator.replace(n=int(n), seed=derive_seed(seed, int(n), rep)))
            w, _ = knn_widths(sample.values[1:], sample.values[:1], kmax)
            acc += [trapezoid_integral(sample.grid, w[0, j]) for j in k_idx]
        out[a] = acc / replicates
    return out


def check_l1_scaling(generator: GeneratorSpec = DEFAULT_FOURIER, k=1, n_list=(100, 200, 400), replicates=500, seed=0) -> ValidationReport:
    """Mean L1 width should halve when n doubles and double when k doubles."""
    t0 = time.perf_counter()
    k = int(k)
    errs = mean_l1_errors(generator, (k, 2 * k), n_list, replicates, seed)
    details = {"n_list": list(n_list), "errors_k": errs[:, 0].tolist(), "errors_2k": errs[:, 1].tolist()}
    name = f"l1_scaling[k={k}]"
    if np.all(errs == 0):
        return ValidationReport.skip(name, "all widths are zero (degenerate panel)", replicates, seed, time.perf_counter() - t0, details)
    crit = []
    for a in range(len(n_list) - 1):
        crit.append(Criterion(f"ratio_n{n_list[a + 1]}/n{n_list[a]}", errs[a + 1, 0] / errs[a, 0], 0.5, tol("l1_scaling", "n_ratio"), kind="range"))
    for a, n in enumerate(n_list):
        crit.append(Criterion(f"ratio_k{2 * k}/k{k}@n{n}", errs[a, 1] / errs[a, 0], 2.0, tol("l1_scaling", "k_ratio"), kind="range"))
    return ValidationReport.from_criteria(name, crit, replicates, seed, time.perf_counter() - t0, details)


def standardized_scores(generator: GeneratorSpec, n: int, k: int, m: int, replicates: int, seed: int) -> np.ndarray:
    """Standardized self-localization scores on i.i.d. uniform times, pooled over panels."""
    out = []
    for rep in range(replicates):
        spec = generator.replace(n=n, m=m, grid_kind="iid_uniform_sorted", seed=derive_seed(seed, rep))
        sample = generate(spec)
        L = self_scores_all_k(sample, GroupLabels(np.ones(n, dtype=np.int64)), k)[:, k - 1]
        out.append((L - L.mean()) / L.std(ddof=1))
    return np.concatenate(out)


def check_clt(generator: GeneratorSpec = DEFAULT_FOURIER, n=200, k=1, m=500, replicates=1, seed=0) -> ValidationReport:
    t0 = time.perf_counter()
    min_m = tol("clt", "min_m")
    if m < min_m:
        raise LocFDAError(f"m={m} sampled times is too few for a normal approximation (need {min_m})")
    T = standardized_scores(generator, n, k, m, replicates, seed)
    crit = [
        Criterion("ks_to_normal", float(stats.kstest(T, "norm").statistic), "N(0,1)", tol("clt", "ks_max"), kind="max"),
        Criterion("abs_skewness", abs(float(stats.skew(T))), 0.0, tol("clt", "skew_max"), kind="max"),
        Criterion("abs_excess_kurtosis", abs(float(stats.kurtosis(T))), 0.0, tol("clt", "kurtosis_max"), kind="max"),
    ]
    details = {"n": n, "k": k, "m": m, "generator": generator.to_dict()}
    return ValidationReport.from_criteria(f"clt[k={k},m={m}]", crit, replicates, seed, time.perf_counter() - t0, details)


def clt_trend(generator: GeneratorSpec = DEFAULT_FOURIER, n=200, k=1, m_list=(100, 400, 1600), replicates=1, seed=0) -> dict:
    """KS distance to N(0,1) for growing numbers of sampled times (reported, not asserted)."""
    ks = []
    for m in m_list:
        T = standardized_scores(generator, n, k, m, replicates, seed)
        ks.append(float(stats.kstest(T, "norm").statistic))
    return {"m": list(m_list), "ks": ks, "decreasing": bool(np.all(np.diff(ks) <= 0))}


GAUSSIAN_HARMONIC = GeneratorSpec(kind="harmonic", n=500, m=101, coeff_dist=CoeffDist("normal", 0.0, 1.0))


def check_membership_trend(
    generator: GeneratorSpec = GAUSSIAN_HARMONIC,
    censoring: CensoringSpec = CensoringSpec("two_uniform_interval"),
    n=500,
    k_max=50,
    j_max=4,
    replicates=300,
    seed=0,
) -> ValidationReport:
    t0 = time.perf_counter()
    ks = np.arange(1, k_max + 1)
    js = np.arange(1, j_max + 1)
    est = membership_curves(generator, censoring, n, ks, js, replicates=replicates, seed=seed)
    se = est.stderr(est.estimate)
    z = tol("membership", "monotone_se")
    drop = est.estimate[:, :-1, :] - est.estimate[:, 1:, :] - z * se[:, :-1, :]
    crit = [Criterion("max_monotonicity_violation", float(drop.max()), 0.0, 0.0, kind="max")]
    final = est.estimate[:, -1, :].mean(axis=1)
    for j, v in zip(js, final):
        crit.append(Criterion(f"final_j{j}", float(v), None, tol("membership", "final_min"), kind="min"))
    # control donor: deviation from k/(n-1), pooled over k and s, per replicate
    dev = est.control_reps - ks[None, :] / (n - 1.0)
    per_rep = dev.mean(axis=1)
    zc = per_rep.mean() / (per_rep.std(ddof=1) / np.sqrt(replicates))
    crit.append(Criterion("control_z", abs(float(zc)), 0.0, tol("membership", "control_se"), kind="max"))
    details = {
        "n": n,
        "k_max": k_max,
        "final_by_j": final.tolist(),
        "estimate_s_mean": est.estimate.mean(axis=2).tolist(),
        "control_s_mean": est.control.mean(axis=1).tolist(),
    }
    return ValidationReport.from_criteria("membership_trend", crit, replicates, seed, time.perf_counter() - t0, details)


def marked_sums(n: int, p: float, k: int, replicates: int, seed: int):
    """Per replicate: sums of rescaled widths over observed (I0) and thinned (I1) points, and mean W over I0."""
    s0 = np.empty(replicates)
    s1 = np.empty(replicates)
    m0 = np.empty(replicates)
    scale = 2.0 * n / k
    for rep in range(replicates):
        rs = derive_seed(seed, rep)
        x = stream(rs, 0).random(n)
        i0, i1 = thin_at_time(n, p, rs)
        x0 = np.sort(x[i0])
        w0 = scale * kth_nn_sorted(x0, x0, k, np.arange(x0.size))
        w1 = scale * kth_nn_sorted(x0, x[i1], k) if i1.size else np.zeros(0)
        s0[rep] = w0.sum()
        s1[rep] = w1.sum()
        m0[rep] = w0.mean()
    return s0, s1, m0


def check_marked_variance_ratio(n=2000, p=0.3, k=1, replicates=4000, seed=0) -> ValidationReport:
    t0 = time.perf_counter()
    s0, s1, m0 = marked_sums(n, p, k, replicates, seed)
    centre = 1.0 / (1.0 - p)

    def ks_norm(s):
        if s.std() == 0:
            return float("nan")
        return float(stats.kstest((s - s.mean()) / s.std(ddof=1), "norm").statistic)

    details = {"n": n, "p": p, "k": k, "ks_normal_I0": ks_norm(s0), "ks_normal_I1": ks_norm(s1) if p > 0 else None}
    crit = []
    if p > 0:
        ratio = float(s1.var(ddof=1) / s0.var(ddof=1))
        target = p / (1.0 - p)
        crit.append(Criterion("variance_ratio", ratio, target, tol("marked", "ratio_rel_tol") * target))
    crit.append(Criterion("mean_W_I0", float(m0.mean()), centre, tol("marked", "centering_abs_tol")))
    return ValidationReport.from_criteria(f"marked_variance_ratio[p={p}]", crit, replicates, seed, time.perf_counter() - t0, details)


def _longest_dense_run(x: np.ndarray, kappa_min: float) -> float:
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        return 0.0
    counts, edges = np.histogram(x, bins="sturges")
    width = edges[1] - edges[0]
    dense = counts / (x.size * width) >= kappa_min
    best = run = 0
    for d in dense:
        run = run + 1 if d else 0
        best = max(best, run)
    return best * width


def check_regular_from_below(generator: GeneratorSpec, delta: float, kappa_min: float, t_grid=None) -> ValidationReport:
    """Histogram density at each time must stay above kappa_min on some interval of length delta."""
    t0 = time.perf_counter()
    sample = generate(generator)
    cols = np.arange(sample.m) if t_grid is None else sample.grid.snap(t_grid)
    runs = np.array([_longest_dense_run(sample.values[:, c], kappa_min) for c in cols])
    crit = [Criterion("min_dense_length", float(runs.min()), None, float(delta), kind="min")]
    details = {"kappa_min": kappa_min, "delta": delta, "n": generator.n}
    return ValidationReport.from_criteria("regular_from_below", crit, 1, generator.seed, time.perf_counter() - t0, details)


SHAPE_PANEL = GeneratorSpec(kind="fourier", n=50, m=101, num_terms=3, coeff_dist=CoeffDist("uniform", 1.0, 2.0))


def injected_panel(generator: GeneratorSpec, kind: str, shift_sd: float = 10.0):
    """Panel whose curve 0 is replaced by a magnitude or doubled-frequency outlier."""
    sample = generate(generator)
    values = sample.values.copy()
    if kind == "magnitude":
        values[0] += shift_sd * values.std(axis=0, ddof=1).mean()
    elif kind == "shape":
        A, B = draw_coefficients(generator)
        values[0] = fourier_curves(A[:1], B[:1], sample.grid.points, freq_scale=2.0)[0]
    else:
        raise LocFDAError(f"unknown outlier kind {kind!r}")
    return sample.with_values(values)


def check_outlier_injection(generator: GeneratorSpec = SHAPE_PANEL, kind="magnitude", k_values=range(1, 10), panels=200, seed=0) -> ValidationReport:
    t0 = time.perf_counter()
    k_values = list(k_values)
    hits = np.zeros(len(k_values))
    for rep in range(panels):
        sample = injected_panel(generator.replace(seed=derive_seed(seed, rep)), kind)
        for a, k in enumerate(k_values):
            hits[a] += 0 in detect_outliers(sample, k).flagged
    rates = hits / panels
    crit = [Criterion(f"rate_k{k}", float(r), None, tol("outlier_injection", "min_rate"), kind="min") for k, r in zip(k_values, rates)]
    order = np.argsort(rates, kind="stable")
    crit = [crit[i] for i in order]  # worst k first
    return ValidationReport.from_criteria(f"outlier_injection[{kind}]", crit, panels, seed, time.perf_counter() - t0, {"rates": rates.tolist()})


RECON_PANEL = GeneratorSpec(kind="fourier", n=200, m=101, num_terms=3, coeff_dist=CoeffDist("uniform", -1.0, 1.0))


def check_reconstruction_baseline(
    generator: GeneratorSpec = RECON_PANEL,
    censoring: CensoringSpec = CensoringSpec("consecutive_block", 1.0 / 3.0),
    replicates=200,
    seed=0,
    p=2,
) -> ValidationReport:
    """Median missing-range MSE of kNN completion must beat donor-mean imputation."""
    t0 = time.perf_counter()
    knn = np.empty(replicates)
    base = np.empty(replicates)
    for rep in range(replicates):
        sample = generate(generator.replace(seed=derive_seed(seed, 0, rep)))
        mask = censor(sample.values.shape, censoring.replace(seed=derive_seed(seed, 1, rep)), sample.grid, rows=[0])
        truth = sample.values[0]
        res = knn_reconstruct(sample, 0, mask, p=p, truth=truth)
        knn[rep] = res.missing_mse
        base[rep] = missing_mse(sample, baseline_mean_impute(sample, 0, mask), truth, mask.observed[0])
    mk, mb = float(np.median(knn)), float(np.median(base))
    crit = [Criterion("median_mse_ratio_knn_over_baseline", mk / mb if mb > 0 else float("inf"), None, 1.0, kind="lt")]
    details = {"median_knn": mk, "median_baseline": mb}
    return ValidationReport.from_criteria("reconstruction_vs_mean_baseline", crit, replicates, seed, time.perf_counter() - t0, details)
