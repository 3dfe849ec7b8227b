"""Randomised oracle and invariant suites.

Each ``*_suite`` returns ``(violations, checks)`` so callers can report the
mismatch count.  Integer-valued panels on a dyadic grid make exact ties
common while keeping every quadrature sum exact in floating point.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from locfda import (
    FunctionalSample,
    GroupLabels,
    ObservationMask,
    TimeGrid,
    affine_transform,
    detect_outliers,
    fit,
    fknn_classify,
    knn_reconstruct,
    localization_path,
    predict,
    predict_proba,
    rescaled_width,
)
from locfda.reconstruction import inverse_distance_weights

import oracles

DYADIC = np.arange(9) / 8.0


def _panel(rng, n, m, integer):
    t = np.sort(rng.choice(DYADIC, size=m, replace=False))
    vals = rng.integers(-3, 4, (n, m)).astype(float) if integer else rng.normal(size=(n, m))
    return FunctionalSample(TimeGrid(t), vals)


def _partial_mask(rng, n, m, target):
    obs = np.ones((n, m), dtype=bool)
    row = rng.random(m) < 0.6
    row[rng.integers(m)] = True
    obs[target] = row
    return ObservationMask(obs)


def path_suite(instances=200, seed=0):
    rng = np.random.default_rng(seed)
    bad = total = 0
    for i in range(instances):
        s = _panel(rng, int(rng.integers(2, 9)), int(rng.integers(2, 7)), integer=i % 2 == 0)
        target = int(rng.integers(s.n))
        for k in range(1, s.n):
            p = localization_path(s, target, k)
            idx, wid = oracles.path(s.values, target, k)
            total += 1
            bad += not (np.array_equal(p.donor_index, idx) and np.array_equal(p.width, wid))
    return bad, total


def neighbor_order_suite(instances=200, seed=1):
    rng = np.random.default_rng(seed)
    bad = total = 0
    for i in range(instances):
        s = _panel(rng, int(rng.integers(3, 9)), int(rng.integers(2, 7)), integer=i % 2 == 0)
        mask = _partial_mask(rng, s.n, s.m, 0)
        for p in (1, 2):
            res = knn_reconstruct(s, 0, mask, p=p, r_max=1)
            obs = mask.observed[0]
            want = [j for _, j in sorted((oracles.restricted_distance(s.grid.points, s.values[0], s.values[j], obs, p), j)
                                          for j in range(1, s.n))]
            total += 1
            bad += res.neighbor_order.tolist() != want
    return bad, total


def r_selection_suite(instances=200, seed=2):
    rng = np.random.default_rng(seed)
    bad = total = 0
    for _ in range(instances):
        s = _panel(rng, int(rng.integers(3, 9)), int(rng.integers(2, 7)), integer=False)
        mask = _partial_mask(rng, s.n, s.m, 0)
        for p in (1, 2):
            r_max = s.n - 1
            res = knn_reconstruct(s, 0, mask, p=p, r_max=r_max)
            order, r, w, fitted = oracles.reconstruct(s.grid.points, s.values, 0, mask.observed[0], range(1, s.n), p, r_max)
            total += 1
            bad += not (res.r == r and res.neighbor_order.tolist() == order and np.allclose(res.weights, w, rtol=1e-12)
                        and np.allclose(res.fitted, fitted, rtol=1e-12, atol=1e-14))
    return bad, total


def fknn_suite(instances=200, seed=3):
    rng = np.random.default_rng(seed)
    bad = total = 0
    for i in range(instances):
        n = int(rng.integers(3, 9))
        s = _panel(rng, n, int(rng.integers(2, 7)), integer=i % 2 == 0)
        lab = GroupLabels(rng.integers(1, 4, n))
        q = rng.integers(-3, 4, s.m).astype(float) if i % 2 == 0 else rng.normal(size=s.m)
        for k in range(1, n + 1):
            total += 1
            bad += fknn_classify(s, lab, q, n - 1, k=k) != oracles.fknn(s.grid.points, s.values, lab.labels.tolist(), q, k)
    return bad, total


def modal_label_suite(instances=200, seed=4):
    rng = np.random.default_rng(seed)
    bad = total = 0
    for _ in range(instances):
        sizes = rng.integers(3, 5, 2)
        n = int(sizes.sum())
        s = _panel(rng, n, int(rng.integers(2, 7)), integer=False)
        vals = s.values.copy()
        vals[sizes[0]:] += rng.uniform(0, 1.5)
        s = s.with_values(vals)
        lab = GroupLabels(np.repeat([1, 2], sizes))
        k_max = int(sizes.min()) - 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            model = fit(s, lab, k_max)
        q = rng.normal(size=s.m) + rng.uniform(0, 1.5)
        for K in range(1, k_max + 1):
            m_K = dataclasses.replace(model, K=K)
            total += 1
            bad += predict(m_K, s, lab, q) != oracles.modal_label(s.values, lab.labels.tolist(), q, K)
    return bad, total


# ---------------------------------------------------------------------------
# invariants over seeds
# ---------------------------------------------------------------------------


def _seed_panel(seed, integer=None):
    rng = np.random.default_rng(seed)
    integer = bool(seed % 2) if integer is None else integer
    return rng, _panel(rng, int(rng.integers(3, 9)), int(rng.integers(2, 7)), integer)


def width_monotone_suite(seeds=1000):
    bad = 0
    for sd in range(seeds):
        rng, s = _seed_panel(sd)
        target = int(rng.integers(s.n))
        w = [localization_path(s, target, k).width for k in range(1, s.n)]
        bad += any(np.any(b < a) for a, b in zip(w, w[1:]))
    return bad, seeds


def donor_shrinkage_suite(seeds=1000):
    bad = 0
    for sd in range(seeds):
        rng, s = _seed_panel(sd)
        target = 0
        small = [j for j in range(1, s.n) if rng.random() < 0.6] or [1]
        large = sorted(set(small) | {j for j in range(1, s.n) if rng.random() < 0.5})
        for k in range(1, len(small) + 1):
            bad += np.any(localization_path(s, target, k, large).width > localization_path(s, target, k, small).width)
    return bad, seeds


def affine_suite(seeds=1000):
    """Rescaled widths scale by |a|; classifier labels and outlier flags do not change."""
    bad = 0
    for sd in range(seeds):
        rng = np.random.default_rng(sd)
        a = float(rng.choice([-1, 1]) * rng.uniform(0.2, 5))
        b = float(rng.uniform(-10, 10))
        sizes = rng.integers(3, 6, 2)
        n = int(sizes.sum())
        vals = rng.normal(size=(n, int(rng.integers(2, 7))))
        vals[sizes[0]:] += rng.uniform(0, 1.5)
        s = FunctionalSample(TimeGrid.equispaced(vals.shape[1]), vals)
        t = affine_transform(s, a, b)
        k = int(rng.integers(1, n - 1))
        ok = np.allclose(rescaled_width(localization_path(t, 0, k)).rescaled,
                         abs(a) * rescaled_width(localization_path(s, 0, k)).rescaled, rtol=1e-9, atol=1e-12)
        lab = GroupLabels(np.repeat([1, 2], sizes))
        k_max = int(sizes.min()) - 1
        ms, mt = fit(s, lab, k_max), fit(t, lab, k_max)
        q = rng.normal(size=s.m) + rng.uniform(0, 1.5)
        ok &= ms.K == mt.K and predict(ms, s, lab, q) == predict(mt, t, lab, a * q + b)
        ko = int(rng.integers(1, n - 1))
        ok &= np.array_equal(detect_outliers(s, ko).flagged, detect_outliers(t, ko).flagged)
        bad += not ok
    return bad, seeds


def weight_suite(seeds=1000):
    bad = 0
    for sd in range(seeds):
        rng = np.random.default_rng(sd)
        d = rng.exponential(size=int(rng.integers(1, 21)))
        if sd % 4 == 0:
            d[rng.integers(d.size)] = 0.0
        for p in (1, 2):
            w = inverse_distance_weights(d, p)
            ok = abs(w.sum() - 1.0) <= 1e-12 and np.all(w >= 0)
            if np.all(d > 0):
                ok &= bool(np.all(w > 0))
            bad += not ok
        rng, s = _seed_panel(sd, integer=False)
        res = knn_reconstruct(s, 0, _partial_mask(rng, s.n, s.m, 0), p=int(rng.integers(1, 3)))
        bad += not (abs(res.weights.sum() - 1.0) <= 1e-12 and np.all(res.weights > 0))
    return bad, seeds


def probability_suite(seeds=1000):
    bad = 0
    for sd in range(seeds):
        rng = np.random.default_rng(sd)
        G = int(rng.integers(1, 4))
        sizes = rng.integers(3, 5, G)
        vals = rng.normal(size=(int(sizes.sum()), int(rng.integers(2, 7))))
        vals += np.repeat(rng.uniform(0, 2, G), sizes)[:, None]
        s = FunctionalSample(TimeGrid.equispaced(vals.shape[1]), vals)
        lab = GroupLabels(np.repeat(np.arange(1, G + 1), sizes))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            model = fit(s, lab, int(sizes.min()) - 1)
        q = rng.normal(size=s.m) * float(rng.choice([1, 100]))
        for k in [None, *model.k_range]:
            pr = predict_proba(model, s, lab, q, k=k)
            bad += not (pr.shape == (G,) and np.all(pr >= 0) and abs(pr.sum() - 1.0) <= 1e-12)
    return bad, seeds
