"""kNN completion of partially observed curves from fully observed donors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._kernels import knn_widths
from .core import FunctionalSample, LocFDAError, ObservationMask
from .simulation import CensoringSpec, GeneratorSpec, censor, derive_seed, generate


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    target: int
    p_norm: int
    neighbor_order: np.ndarray
    distances: np.ndarray  # restricted distances, aligned with neighbor_order
    r: int
    weights: np.ndarray
    fitted: np.ndarray
    observed_mse: float
    missing_mse: Optional[float]
    observed: np.ndarray  # target's observed flags

    def completed(self, sample: FunctionalSample) -> np.ndarray:
        """Target's own values where observed, the kNN fit elsewhere."""
        return np.where(self.observed, sample.values[self.target], self.fitted)


R_TIE_RTOL = 1e-10


def _check_p(p) -> int:
    if p not in (1, 2):
        raise LocFDAError("p must be 1 or 2")
    return int(p)


def _restricted_distances(sample: FunctionalSample, target: int, donors: np.ndarray, observed: np.ndarray, p: int):
    if not observed.any():
        raise LocFDAError("target has an empty observed set")
    q = sample.grid.weights[observed]
    gap = np.abs(sample.values[donors][:, observed] - sample.values[target, observed])
    return (gap**p @ q) ** (1.0 / p)


def restricted_distance(sample: FunctionalSample, target: int, donor: int, observed, p: int = 2) -> float:
    """L^p distance between two curves over the target's observed grid cells."""
    p = _check_p(p)
    observed = np.asarray(observed, dtype=bool)
    if observed.shape != (sample.m,):
        raise LocFDAError("observed flags must have one entry per grid point")
    return float(_restricted_distances(sample, int(target), np.array([int(donor)]), observed, p)[0])


def inverse_distance_weights(d: np.ndarray, p: int) -> np.ndarray:
    """Weights proportional to d**-p; zero distances share all the weight."""
    d = np.asarray(d, dtype=np.float64)
    zero = d == 0
    if zero.any():
        return zero / zero.sum()
    w = d ** (-float(p))
    return w / w.sum()


def _resolve_donors(sample, target, mask, donors) -> np.ndarray:
    full = mask.fully_observed()
    if donors is None:
        pool = full
    else:
        pool = np.unique(np.asarray(donors, dtype=np.int64))
        pool = pool[np.isin(pool, full)]
    pool = pool[pool != target]
    if pool.size == 0:
        raise LocFDAError("no fully observed donors available")
    return pool


def knn_reconstruct(
    sample: FunctionalSample,
    target: int,
    mask: ObservationMask,
    donors=None,
    p: int = 2,
    r_max: Optional[int] = None,
    truth=None,
) -> ReconstructionResult:
    """Estimate a curve on its missing range from its nearest donors.

    Donors are ranked by the L^p distance over the target's observed range
    and combined with inverse-distance weights.  The number of neighbours r
    minimises the squared error on the observed range (ties: smallest r).
    ``truth`` (the full target curve) enables ``missing_mse``.
    """
    p = _check_p(p)
    target = int(target)
    mask.check(sample)
    pool = _resolve_donors(sample, target, mask, donors)
    r_max = min(20, pool.size) if r_max is None else int(r_max)
    if not 1 <= r_max <= pool.size:
        raise LocFDAError(f"r_max={r_max} out of range 1..{pool.size}")

    obs = mask.observed[target]
    d = _restricted_distances(sample, target, pool, obs, p)
    if not np.all(np.isfinite(d)):
        raise LocFDAError("restricted distances are not finite")
    order = np.argsort(d, kind="stable")
    donors_sorted = pool[order]
    d_sorted = d[order]

    q = sample.grid.weights
    x = sample.values[target]
    fits = []
    errs = np.empty(r_max)
    for r in range(1, r_max + 1):
        w = inverse_distance_weights(d_sorted[:r], p)
        fit = w @ sample.values[donors_sorted[:r]]
        errs[r - 1] = np.dot(q[obs], (fit[obs] - x[obs]) ** 2)
        fits.append((w, fit))
    # errors equal up to rounding count as ties; the smallest r wins
    r = int(np.flatnonzero(errs <= errs.min() + R_TIE_RTOL * errs.max())[0]) + 1
    err = float(errs[r - 1])
    w, fit = fits[r - 1]

    missing_mse = None
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64)
        missing_mse = float(np.dot(q[~obs], (fit[~obs] - truth[~obs]) ** 2))
    return ReconstructionResult(
        target=target,
        p_norm=p,
        neighbor_order=donors_sorted,
        distances=d_sorted,
        r=r,
        weights=w,
        fitted=fit,
        observed_mse=err,
        missing_mse=missing_mse,
        observed=obs.copy(),
    )


def baseline_mean_impute(sample: FunctionalSample, target: int, mask: ObservationMask, donors=None) -> np.ndarray:
    """Target's observed values, donor cross-sectional mean on the missing range."""
    mask.check(sample)
    pool = _resolve_donors(sample, int(target), mask, donors)
    obs = mask.observed[target]
    return np.where(obs, sample.values[target], sample.values[pool].mean(axis=0))


def missing_mse(sample: FunctionalSample, fitted, truth, observed) -> float:
    miss = ~np.asarray(observed, dtype=bool)
    gap = np.asarray(fitted) - np.asarray(truth)
    return float(np.dot(sample.grid.weights[miss], gap[miss] ** 2))


# ---------------------------------------------------------------------------
# interval-membership diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MembershipEstimate:
    k_values: np.ndarray
    j_values: np.ndarray
    s_index: np.ndarray
    estimate: np.ndarray  # (J, K, S): selected neighbours
    control: np.ndarray  # (K, S): fixed donor, not selected by distance
    control_reps: np.ndarray  # (R, K): per-replicate control frequency averaged over s
    replicates: int

    def stderr(self, est: np.ndarray) -> np.ndarray:
        return np.sqrt(np.clip(est * (1 - est), 0, None) / self.replicates)


def membership_curves(
    generator: GeneratorSpec,
    censoring: CensoringSpec,
    n: int,
    k_values: Sequence[int],
    j_values: Sequence[int],
    s_grid=None,
    replicates: int = 100,
    seed: int = 0,
    p: int = 2,
    control_donor: int = 1,
) -> MembershipEstimate:
    """Monte Carlo frequency with which a donor beats the k-th localization width.

    Per replicate a fresh panel of ``n`` curves is drawn, curve 0 is censored,
    curves 1..n-1 are the donors.  For the j-th nearest donor (restricted
    distance) we record whether ``|X_j(s) - X_0(s)|`` is at most the k-th
    localization width of curve 0 at s.  ``control_donor`` is a donor fixed in
    advance, whose frequency should be k/(n-1).
    """
    n = int(n)
    k_values = np.asarray(k_values, dtype=np.int64)
    j_values = np.asarray(j_values, dtype=np.int64)
    if k_values.min() < 1 or k_values.max() > n - 1:
        raise LocFDAError(f"k must lie in 1..{n - 1}")
    if j_values.min() < 1 or j_values.max() > n - 1:
        raise LocFDAError(f"j must lie in 1..{n - 1}")
    if not 1 <= control_donor <= n - 1:
        raise LocFDAError("control donor must be one of the donors")
    p = _check_p(p)
    kmax = int(k_values.max())

    grid_sample = generate(generator.replace(n=2, seed=derive_seed(seed, 0)))
    if s_grid is None:
        s_idx = np.arange(grid_sample.m)
    else:
        s_arr = np.atleast_1d(np.asarray(s_grid))
        s_idx = s_arr.astype(np.int64) if np.issubdtype(s_arr.dtype, np.integer) else grid_sample.grid.snap(s_arr)

    hits = np.zeros((j_values.size, k_values.size, s_idx.size))
    ctrl = np.zeros((k_values.size, s_idx.size))
    ctrl_reps = np.empty((int(replicates), k_values.size))
    donors = np.arange(1, n)
    for rep in range(int(replicates)):
        spec = generator.replace(n=n, seed=derive_seed(seed, 1, rep))
        sample = generate(spec)
        mask = censor((n, sample.m), censoring.replace(seed=derive_seed(seed, 2, rep)), sample.grid, rows=[0])
        obs = mask.observed[0]
        d = _restricted_distances(sample, 0, donors, obs, p)
        ranked = donors[np.argsort(d, kind="stable")]
        vals = sample.values[:, s_idx]
        widths, _ = knn_widths(vals[donors], vals[:1], kmax)
        L = widths[0, k_values - 1]  # (K, S)
        gaps = np.abs(vals[ranked[j_values - 1]] - vals[0])  # (J, S)
        hits += gaps[:, None, :] <= L[None, :, :]
        inside = np.abs(vals[control_donor] - vals[0])[None, :] <= L
        ctrl += inside
        ctrl_reps[rep] = inside.mean(axis=1)
    R = float(replicates)
    return MembershipEstimate(k_values, j_values, s_idx, hits / R, ctrl / R, ctrl_reps, int(replicates))


def membership_probability(
    generator: GeneratorSpec,
    censoring: CensoringSpec,
    n: int,
    k: int,
    j: int,
    s_grid=None,
    replicates: int = 100,
    seed: int = 0,
) -> np.ndarray:
    """Estimated probability that the k-th localization band contains the j-th neighbour, per s."""
    est = membership_curves(generator, censoring, n, [k], [j], s_grid, replicates, seed)
    return est.estimate[0, 0]
