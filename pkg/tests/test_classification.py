import warnings

import numpy as np
import pytest

from locfda import (
    FunctionalSample,
    GroupLabels,
    LocFDAError,
    TimeGrid,
    affine_transform,
    detect_outliers,
    fit,
    fknn_classify,
    generate,
    GeneratorSpec,
    predict,
    predict_proba,
)
from locfda.classification import fknn_loo_errors, posterior_table, upper_outliers

import oracles
from conftest import constants, two_group_panel


def separated():
    s = constants([0, 0.1, -0.1, 10, 10.1, 9.9], m=4)
    return s, GroupLabels([1, 1, 1, 2, 2, 2])


def quiet_fit(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fit(*args, **kwargs)


class TestFit:
    def test_separated_constants(self):
        s, lab = separated()
        with pytest.warns(RuntimeWarning, match="zero spread"):
            model = fit(s, lab, 2)
        assert model.loo_error[0] == 0.0 and model.K == 1
        assert np.all(model.sd > 0)

    def test_equal_group_priors(self):
        s, lab = separated()
        assert quiet_fit(s, lab, 1).priors.tolist() == [0.5, 0.5]

    def test_custom_priors_are_normalised(self):
        s, lab = separated()
        model = quiet_fit(s, lab, 1, priors={1: 3, 2: 1})
        assert model.priors.tolist() == [0.75, 0.25]

    def test_group_too_small(self):
        s, lab = separated()
        with pytest.raises(LocFDAError):
            fit(s, lab, 3)

    def test_trimmed_mean_resists_a_wild_curve(self):
        base = generate(GeneratorSpec(n=20, m=31, num_terms=3, seed=1))
        lab = GroupLabels(np.ones(21, dtype=int))
        wild = np.vstack([base.values, base.values[0] + 25.0])
        lab0 = GroupLabels(np.ones(20, dtype=int))
        before = fit(base, lab0, 1)
        after = fit(FunctionalSample(base.grid, wild), lab, 1)
        assert 20 in after.trimmed[(1, 1)]
        assert 20 not in before.trimmed[(1, 1)]
        assert after.mean[0, 0] == pytest.approx(before.mean[0, 0], rel=0.15)

    def test_selected_K_minimises_training_error(self):
        rng = np.random.default_rng(3)
        s, lab = two_group_panel(rng, 8, 6)
        model = fit(s, lab, 5)
        assert model.loo_error[model.K - 1] == model.loo_error.min()
        assert model.K == int(np.argmin(model.loo_error)) + 1


class TestPredict:
    def test_member_gets_its_group(self):
        s, lab = separated()
        model = quiet_fit(s, lab, 2)
        assert predict_proba(model, s, lab, s.values[0], k=1)[0] >= 0.999
        assert predict(model, s, lab, np.full(4, 9.95)) == 2

    def test_every_order_votes_for_group_two(self):
        s, lab = separated()
        model = quiet_fit(s, lab, 2)
        post = posterior_table(model, s, lab, np.full(4, 10.05))
        assert np.all(post.argmax(axis=1) == 1)

    def test_identical_groups_are_uninformative(self):
        rng = np.random.default_rng(2)
        vals = rng.normal(size=(4, 5))
        s = FunctionalSample(TimeGrid.equispaced(5), np.vstack([vals, vals]))
        lab = GroupLabels([1, 1, 1, 1, 2, 2, 2, 2])
        model = fit(s, lab, 2)
        p = predict_proba(model, s, lab, rng.normal(size=5), k=1)
        assert np.allclose(p, [0.5, 0.5], atol=1e-12)

    def test_probabilities_normalised_and_affine_invariant(self):
        rng = np.random.default_rng(4)
        s, lab = two_group_panel(rng, 7, 5)
        q = rng.normal(size=5)
        model = fit(s, lab, 3)
        t = affine_transform(s, 2, -5)
        model_t = fit(t, lab, 3)
        for k in (1, 2, 3):
            a = predict_proba(model, s, lab, q, k=k)
            b = predict_proba(model_t, t, lab, 2 * q - 5, k=k)
            assert abs(a.sum() - 1) <= 1e-12 and np.all(a >= 0)
            assert np.allclose(a, b, atol=1e-9)
        assert predict(model, s, lab, q) == predict(model_t, t, lab, 2 * q - 5)

    def test_single_order_matches_argmax(self):
        rng = np.random.default_rng(5)
        s, lab = two_group_panel(rng, 6, 5)
        model = fit(s, lab, 1)
        assert model.K == 1
        for _ in range(10):
            q = rng.normal(size=5)
            assert predict(model, s, lab, q) == model.groups[int(np.argmax(predict_proba(model, s, lab, q)))]

    def test_modal_label_matches_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            s, lab = two_group_panel(rng, 6, 5)
            model = quiet_fit(s, lab, 4)
            for _ in range(3):
                q = rng.normal(size=5) + rng.uniform(0, 2)
                want = oracles.modal_label(s.values, lab.labels.tolist(), q, model.K)
                assert predict(model, s, lab, q) == want

    def test_single_group(self):
        rng = np.random.default_rng(7)
        s = FunctionalSample(TimeGrid.equispaced(4), rng.normal(size=(5, 4)))
        lab = GroupLabels(np.ones(5, dtype=int))
        model = fit(s, lab, 2)
        assert predict(model, s, lab, rng.normal(size=4)) == 1
        assert predict_proba(model, s, lab, rng.normal(size=4)).tolist() == [1.0]

    def test_k_outside_range(self):
        s, lab = separated()
        model = quiet_fit(s, lab, 1)
        with pytest.raises(LocFDAError):
            predict_proba(model, s, lab, np.zeros(4), k=2)

    def test_far_query_does_not_underflow(self):
        s, lab = separated()
        model = quiet_fit(s, lab, 2)
        p = predict_proba(model, s, lab, np.full(4, 1e6), k=1)
        assert np.all(np.isfinite(p)) and p.sum() == pytest.approx(1.0)


class TestFknn:
    def test_exact_match(self):
        rng = np.random.default_rng(8)
        s, lab = two_group_panel(rng, 5, 6)
        for i in range(s.n):
            assert fknn_classify(s, lab, s.values[i], 3, k=1) == lab.labels[i]

    def test_separated_constants_every_k(self):
        s, lab = separated()
        for k in (1, 2, 3):
            assert fknn_classify(s, lab, np.full(4, 0.05), 5, k=k) == 1
            assert fknn_classify(s, lab, np.full(4, 9.8), 5, k=k) == 2

    def test_matches_sorted_vote_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            s, lab = two_group_panel(rng, 4, 5, integer=True)
            q = rng.integers(-2, 4, 5).astype(float)
            for k in range(1, 8):
                want = oracles.fknn(s.grid.points, s.values, lab.labels.tolist(), q, k)
                assert fknn_classify(s, lab, q, 7, k=k) == want

    def test_loo_selection(self):
        rng = np.random.default_rng(10)
        s, lab = two_group_panel(rng, 6, 5)
        errs = fknn_loo_errors(s, lab, 7)
        k_best, oracle_errs = oracles.fknn_select_k(s.grid.points, s.values, lab.labels.tolist(), 7)
        assert np.allclose(errs, oracle_errs)
        assert errs[k_best - 1] <= errs.min()


class TestOutliers:
    def test_gross_outlier_score(self):
        scores = np.array([1.0, 1.1, 0.9, 1.05, 100])
        assert np.flatnonzero(upper_outliers(scores)).tolist() == [4]
        assert np.flatnonzero(upper_outliers(scores, 3.0)).tolist() == [4]

    def test_gross_outlier_panel(self):
        rep = detect_outliers(constants([0, 0.1, 0.2, 0.3, 50], m=4), 1)
        assert rep.flagged.tolist() == [4] and rep.extreme_flagged.tolist() == [4]

    def test_zero_spread(self):
        rep = detect_outliers(constants([1, 1, 1, 1, 1, 2]), 1)
        assert rep.iqr == 0.0
        assert rep.flagged.tolist() == [5]
        rep = detect_outliers(constants([1, 1, 1, 1, 1]), 1)
        assert rep.flagged.size == 0

    def test_quartile_convention(self):
        rep = detect_outliers(constants([0, 1, 2, 4, 7, 11], m=3), 1)
        s = sorted(rep.scores)
        assert rep.q1 == pytest.approx(oracles.quantile(s, 0.25))
        assert rep.q3 == pytest.approx(oracles.quantile(s, 0.75))
        assert rep.whisker_default == pytest.approx(rep.q3 + 1.5 * rep.iqr)
        assert rep.whisker_extreme == pytest.approx(rep.q3 + 3 * rep.iqr)

    def test_conservative_uses_extreme_whisker(self):
        rng = np.random.default_rng(11)
        vals = rng.normal(size=(30, 8))
        vals[0] += 4
        s = FunctionalSample(TimeGrid.equispaced(8), vals)
        rep = detect_outliers(s, 2, conservative=True)
        assert set(rep.extreme_flagged) <= set(rep.flagged)
        assert np.array_equal(rep.outliers, rep.extreme_flagged)

    def test_permutation_and_affine_invariance(self):
        rng = np.random.default_rng(12)
        vals = rng.normal(size=(25, 6))
        vals[3] *= 6
        s = FunctionalSample(TimeGrid.equispaced(6), vals)
        rep = detect_outliers(s, 2)
        perm = rng.permutation(25)
        rep_p = detect_outliers(s.with_values(vals[perm]), 2)
        assert sorted(perm[rep_p.flagged].tolist()) == rep.flagged.tolist()
        rep_a = detect_outliers(affine_transform(s, -0.5, 3), 2)
        assert np.array_equal(rep_a.flagged, rep.flagged)

    def test_preconditions(self):
        with pytest.raises(LocFDAError):
            detect_outliers(constants([0, 1, 2, 3]), 1)
        with pytest.raises(LocFDAError):
            detect_outliers(constants([0, 1, 2, 3, 4]), 4)
