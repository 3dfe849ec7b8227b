"""k-th localization processes, widths and empirical localization distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import knn_widths
from .core import FunctionalSample, GroupLabels, LocFDAError, TimeGrid, trapezoid_integral


@dataclass(frozen=True, eq=False)
class LocalizationPath:
    target: int
    k: int
    donor_index: np.ndarray
    donor_value: np.ndarray
    width: np.ndarray
    n_pool: int  # donors + target, the ``n`` of the rescaling
    grid: TimeGrid


@dataclass(frozen=True, eq=False)
class WidthSummary:
    k: int
    n: int
    rescaled: np.ndarray
    l1_mean_width: float


def _donor_pool(n: int, target: Optional[int], donors) -> np.ndarray:
    if donors is None:
        pool = np.arange(n)
    else:
        pool = np.unique(np.asarray(donors, dtype=np.int64))
        if pool.size and (pool[0] < 0 or pool[-1] >= n):
            raise LocFDAError("donor index out of range")
    if target is not None:
        pool = pool[pool != target]
    if pool.size == 0:
        raise LocFDAError("empty donor set")
    return pool


def _check_k(k: int, available: int) -> int:
    k = int(k)
    if k < 1 or k > available:
        raise LocFDAError(f"k={k} out of range 1..{available}")
    return k


def time_indices(sample: FunctionalSample, times=None) -> np.ndarray:
    """Grid indices selected by ``times``: None (all), integer indices, or reals to snap."""
    if times is None:
        return np.arange(sample.m)
    t = np.atleast_1d(np.asarray(times))
    if t.size == 0:
        raise LocFDAError("no time points selected")
    if np.issubdtype(t.dtype, np.integer):
        if t.min() < 0 or t.max() >= sample.m:
            raise LocFDAError("time index out of range")
        return t.astype(np.int64)
    return sample.grid.snap(t)


def localization_path(sample: FunctionalSample, target: int, k: int, donors=None) -> LocalizationPath:
    """k-th localization process of curve ``target``.

    At every grid point the donor whose value is the k-th closest to the
    target's value is selected; equal distances go to the smaller index.
    """
    target = int(target)
    if not 0 <= target < sample.n:
        raise LocFDAError(f"target {target} out of range")
    pool = _donor_pool(sample.n, target, donors)
    k = _check_k(k, pool.size)
    vals = sample.values
    w, idx = knn_widths(vals[pool], vals[target][None, :], k)
    donor_index = pool[idx[0, k - 1]]
    donor_value = vals[donor_index, np.arange(sample.m)]
    return LocalizationPath(
        target=target,
        k=k,
        donor_index=donor_index,
        donor_value=donor_value,
        width=w[0, k - 1].copy(),
        n_pool=pool.size + 1,
        grid=sample.grid,
    )


def rescaled_width(path: LocalizationPath, n: Optional[int] = None) -> WidthSummary:
    """Rescale widths by 2n/k; ``n`` defaults to the pool size plus the target."""
    n = path.n_pool if n is None else int(n)
    if n < 2:
        raise LocFDAError("n must be at least 2")
    width = np.asarray(path.width, dtype=np.float64)
    rescaled = (2.0 * n / path.k) * width
    l1 = trapezoid_integral(path.grid, width)
    return WidthSummary(k=path.k, n=n, rescaled=rescaled, l1_mean_width=l1)


def empirical_localization_distance(
    sample: FunctionalSample, target: int, k: int, times=None, donors=None
) -> float:
    """Average k-th localization width of ``target`` over the selected times."""
    path = localization_path(sample, target, k, donors)
    sel = time_indices(sample, times)
    return float(path.width[sel].mean())


def group_widths(sample: FunctionalSample, queries, group, kmax: int, exclude=None) -> np.ndarray:
    """Widths of orders 1..kmax for each query row against ``group``.

    ``exclude[a]`` is a curve index removed from the group for query a (or -1).
    Returns an array of shape (q, kmax, m).
    """
    group = np.unique(np.asarray(group, dtype=np.int64))
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != sample.m:
        raise LocFDAError("query curve length does not match the grid")
    pos = np.full(queries.shape[0], -1, dtype=np.int64)
    if exclude is not None:
        for a, e in enumerate(np.atleast_1d(exclude)):
            hit = np.flatnonzero(group == e)
            if hit.size:
                pos[a] = hit[0]
    need = group.size - (1 if np.any(pos >= 0) else 0)
    if kmax > need:
        raise LocFDAError(f"group of {group.size} curves is too small for k={kmax}")
    w, _ = knn_widths(sample.values[group], queries, kmax, pos)
    return w


def group_localization_distance(
    sample: FunctionalSample,
    query_curve,
    group,
    k: int,
    times=None,
    query_index: Optional[int] = None,
) -> float:
    """Empirical localization distance between a curve and a group of curves.

    If ``query_index`` is a member of ``group`` it is left out of the donors.
    """
    k = int(k)
    if k < 1:
        raise LocFDAError("k must be positive")
    excl = None if query_index is None else [query_index]
    w = group_widths(sample, query_curve, group, k, excl)
    sel = time_indices(sample, times)
    return float(w[0, k - 1, sel].mean())


def self_scores_all_k(sample: FunctionalSample, labels: GroupLabels, kmax: int, times=None) -> np.ndarray:
    """(n, kmax) matrix of each curve's distance to its own group, self excluded."""
    if len(labels) != sample.n:
        raise LocFDAError("labels length does not match the number of curves")
    sel = time_indices(sample, times)
    out = np.empty((sample.n, kmax))
    for g in labels.groups:
        members = labels.members(g)
        if members.size < kmax + 1:
            raise LocFDAError(f"group {g} has {members.size} curves, needs at least {kmax + 1}")
        w = group_widths(sample, sample.values[members], members, kmax, members)
        out[members] = w[:, :, sel].mean(axis=2)
    return out


def self_localization_scores(sample: FunctionalSample, labels: GroupLabels, k: int, times=None) -> np.ndarray:
    k = int(k)
    if k < 1:
        raise LocFDAError("k must be positive")
    return self_scores_all_k(sample, labels, k, times)[:, k - 1]
