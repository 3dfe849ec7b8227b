"""Localization classifier, functional kNN baseline and boxplot outlier flags."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.special import logsumexp

from .core import FunctionalSample, GroupLabels, LocFDAError
from .localization import group_widths, self_scores_all_k, time_indices

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def boxplot_whiskers(scores) -> tuple:
    """(Q1, Q3, IQR) with linearly interpolated quartiles."""
    q1, q3 = np.percentile(np.asarray(scores, dtype=np.float64), [25, 75])
    return float(q1), float(q3), float(q3 - q1)


def upper_outliers(scores, factor: float = 1.5) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    _, q3, iqr = boxplot_whiskers(scores)
    return scores > q3 + factor * iqr


# ---------------------------------------------------------------------------
# localization classifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    groups: tuple
    priors: np.ndarray  # aligned with groups
    mean: np.ndarray  # (G, k_max) trimmed means of self-scores
    sd: np.ndarray  # (G, k_max) trimmed standard deviations
    K: int
    k_max: int
    times: np.ndarray
    loo_error: np.ndarray  # (k_max,) training error of the modal rule for K = 1..k_max
    trimmed: Dict[tuple, np.ndarray]  # (group, k) -> flagged member indices

    @property
    def k_range(self) -> range:
        return range(1, self.k_max + 1)


def _trimmed_moments(x: np.ndarray):
    keep = ~upper_outliers(x)
    if keep.sum() < 2:
        keep = np.ones_like(keep)
    kept = x[keep]
    mean = float(kept.mean())
    sd = float(kept.std(ddof=1))
    return mean, sd, np.flatnonzero(~keep)


def _log_posteriors(dist: np.ndarray, model: ClassifierModel, k_idx) -> np.ndarray:
    """Normalised log posteriors; dist has shape (..., G) for the given order(s)."""
    tau = (dist - model.mean[:, k_idx].T) / model.sd[:, k_idx].T
    logp = np.log(model.priors) - 0.5 * tau**2 - _LOG_SQRT_2PI
    return logp - logsumexp(logp, axis=-1, keepdims=True)


def _modal(labels_by_k: np.ndarray, post_by_k: np.ndarray, G: int) -> int:
    """Most frequent group position; ties go to the larger summed posterior."""
    counts = np.bincount(labels_by_k, minlength=G)
    tied = np.flatnonzero(counts == counts.max())
    if tied.size == 1:
        return int(tied[0])
    mass = post_by_k.sum(axis=0)
    return int(tied[np.argmax(mass[tied])])


def _cross_distances(sample, labels, queries, k_max, sel, exclude=None) -> np.ndarray:
    """(q, k_max, G) distances of query curves to each group."""
    q = np.atleast_2d(queries).shape[0]
    out = np.empty((q, k_max, len(labels.groups)))
    for gi, g in enumerate(labels.groups):
        w = group_widths(sample, queries, labels.members(g), k_max, exclude)
        out[:, :, gi] = w[:, :, sel].mean(axis=2)
    return out


def fit(
    sample: FunctionalSample,
    labels: GroupLabels,
    k_max: int,
    times=None,
    priors: Optional[Dict[int, float]] = None,
) -> ClassifierModel:
    """Fit per-group trimmed moments of self-localization scores for k = 1..k_max.

    K is chosen to minimise the training misclassification of the modal
    rule, each training curve being scored with itself removed from its group.
    """
    k_max = int(k_max)
    if k_max < 1:
        raise LocFDAError("k_max must be at least 1")
    if len(labels) != sample.n:
        raise LocFDAError("labels length does not match the number of curves")
    sel = time_indices(sample, times)
    groups = labels.groups
    G = len(groups)
    for g, size in labels.sizes().items():
        if size < k_max + 1:
            raise LocFDAError(f"group {g} has {size} curves, needs at least {k_max + 1}")

    if priors is None:
        pri = np.array([labels.sizes()[g] / sample.n for g in groups])
    else:
        pri = np.array([float(priors[g]) for g in groups])
        if np.any(pri <= 0):
            raise LocFDAError("priors must be positive")
        pri = pri / pri.sum()

    self_scores = self_scores_all_k(sample, labels, k_max, sel)
    mean = np.empty((G, k_max))
    sd = np.empty((G, k_max))
    trimmed = {}
    for gi, g in enumerate(groups):
        members = labels.members(g)
        for k in range(k_max):
            mu, s, flagged = _trimmed_moments(self_scores[members, k])
            floor = 1e-8 * (mu + 1.0)
            if not s > floor:
                # rounding noise on tied scores counts as zero spread
                s = floor
                warnings.warn(f"zero spread in group {g} at k={k + 1}; using floor {s:.3g}", RuntimeWarning)
            mean[gi, k] = mu
            sd[gi, k] = s
            trimmed[(g, k + 1)] = members[flagged]

    partial = ClassifierModel(groups, pri, mean, sd, 1, k_max, sel, np.zeros(k_max), trimmed)
    cross = _cross_distances(sample, labels, sample.values, k_max, sel, exclude=np.arange(sample.n))
    logpost = _log_posteriors(cross, partial, slice(None))  # (n, k_max, G)
    eta = logpost.argmax(axis=2)
    post = np.exp(logpost)
    truth = np.searchsorted(groups, labels.labels)
    errors = np.empty(k_max)
    for K in range(1, k_max + 1):
        pred = [_modal(eta[i, :K], post[i, :K], G) for i in range(sample.n)]
        errors[K - 1] = np.mean(np.asarray(pred) != truth)
    K = int(np.argmin(errors)) + 1
    return ClassifierModel(groups, pri, mean, sd, K, k_max, sel, errors, trimmed)


def _query_distances(model, sample, labels, query, k_hi):
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (sample.m,):
        raise LocFDAError("query curve length does not match the grid")
    return _cross_distances(sample, labels, query, k_hi, model.times)[0]  # (k_hi, G)


def posterior_table(model: ClassifierModel, sample, labels, query) -> np.ndarray:
    """(K, G) posterior probabilities for orders 1..K."""
    dist = _query_distances(model, sample, labels, query, model.K)
    return np.exp(_log_posteriors(dist, model, slice(0, model.K)))


def predict_proba(model: ClassifierModel, sample, labels, query, k: Optional[int] = None) -> np.ndarray:
    """Posterior probabilities over ``model.groups`` at order k.

    Without k, the order among 1..K that voted for the modal label with the
    largest posterior for it is used.
    """
    if k is None:
        post = posterior_table(model, sample, labels, query)
        eta = post.argmax(axis=1)
        winner = _modal(eta, post, len(model.groups))
        voters = np.flatnonzero(eta == winner)
        return post[voters[np.argmax(post[voters, winner])]]
    k = int(k)
    if k not in model.k_range:
        raise LocFDAError(f"k={k} outside the fitted range 1..{model.k_max}")
    dist = _query_distances(model, sample, labels, query, k)
    return np.exp(_log_posteriors(dist[k - 1], model, k - 1))


def predict(model: ClassifierModel, sample, labels, query) -> int:
    """Modal label of the per-order Gaussian classifiers for k = 1..K."""
    post = posterior_table(model, sample, labels, query)
    winner = _modal(post.argmax(axis=1), post, len(model.groups))
    return int(model.groups[winner])


# ---------------------------------------------------------------------------
# functional kNN
# ---------------------------------------------------------------------------


def l2_distances(sample: FunctionalSample, curves) -> np.ndarray:
    """Trapezoid L2 distances from each row of ``curves`` to every sample curve."""
    curves = np.atleast_2d(np.asarray(curves, dtype=np.float64))
    q = sample.grid.weights
    diff = curves[:, None, :] - sample.values[None, :, :]
    return np.sqrt((diff**2) @ q)


def _vote(neigh_labels: np.ndarray) -> int:
    """Majority label; among tied labels the one with the nearest member wins."""
    uniq, counts = np.unique(neigh_labels, return_counts=True)
    tied = set(uniq[counts == counts.max()].tolist())
    for lab in neigh_labels:
        if lab in tied:
            return int(lab)
    raise AssertionError("unreachable")


def fknn_loo_errors(sample: FunctionalSample, labels: GroupLabels, k_max: int) -> np.ndarray:
    """Leave-one-out misclassification rate for k = 1..k_max."""
    k_max = int(k_max)
    if not 1 <= k_max <= sample.n - 1:
        raise LocFDAError(f"k_max must lie in 1..{sample.n - 1}")
    D = l2_distances(sample, sample.values)
    np.fill_diagonal(D, np.inf)
    order = np.argsort(D, axis=1, kind="stable")[:, :k_max]
    lab = labels.labels
    errors = np.empty(k_max)
    for k in range(1, k_max + 1):
        pred = np.array([_vote(lab[order[i, :k]]) for i in range(sample.n)])
        errors[k - 1] = np.mean(pred != lab)
    return errors


def fknn_classify(sample: FunctionalSample, labels: GroupLabels, query, k_max: int, k: Optional[int] = None) -> int:
    """Majority vote among the k nearest curves (L2); k by leave-one-out unless given."""
    if k is None:
        k = int(np.argmin(fknn_loo_errors(sample, labels, k_max))) + 1
    k = int(k)
    if not 1 <= k <= sample.n:
        raise LocFDAError("k out of range")
    d = l2_distances(sample, query)[0]
    nearest = np.argsort(d, kind="stable")[:k]
    return _vote(labels.labels[nearest])


# ---------------------------------------------------------------------------
# outliers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OutlierReport:
    k: int
    scores: np.ndarray
    q1: float
    q3: float
    iqr: float
    whisker_default: float
    whisker_extreme: float
    flagged: np.ndarray
    extreme_flagged: np.ndarray
    conservative: bool = False

    @property
    def outliers(self) -> np.ndarray:
        return self.extreme_flagged if self.conservative else self.flagged


def detect_outliers(sample: FunctionalSample, k: int, times=None, conservative: bool = False) -> OutlierReport:
    """Boxplot rule on localization distances of every curve to the rest of the sample."""
    k = int(k)
    if sample.n < 5:
        raise LocFDAError("outlier detection needs at least 5 curves")
    if not 1 <= k <= sample.n - 2:
        raise LocFDAError(f"k must lie in 1..{sample.n - 2}")
    one_group = GroupLabels(np.ones(sample.n, dtype=np.int64))
    scores = self_scores_all_k(sample, one_group, k, times)[:, k - 1]
    q1, q3, iqr = boxplot_whiskers(scores)
    hi = q3 + 1.5 * iqr
    ext = q3 + 3.0 * iqr
    return OutlierReport(
        k=k,
        scores=scores,
        q1=q1,
        q3=q3,
        iqr=iqr,
        whisker_default=hi,
        whisker_extreme=ext,
        flagged=np.flatnonzero(scores > hi),
        extreme_flagged=np.flatnonzero(scores > ext),
        conservative=bool(conservative),
    )
