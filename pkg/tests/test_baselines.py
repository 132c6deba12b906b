import numpy as np
import pytest

from cropshift.baselines import (
    largest_remainder_counts,
    major_class_classify,
    pipeline_smote_psa,
    pipeline_zt_fpsa,
    pipeline_zt_smote_fpsa,
    smote_resample,
    ztransform_apply,
    ztransform_fit,
    ztransform_invert,
)
from cropshift.classify import ClassifierConfig, ForestParams, lda_fit, predict_labels
from cropshift.dataset import ClassPriors, Dataset
from cropshift.errors import InsufficientData, SmoteInfeasible


def priors(values, classes, region="t"):
    return ClassPriors(region, classes, np.asarray(values, dtype=float))


def labeled_dataset(counts, seed=0, d=2, spread=4.0):
    """Gaussian blobs with the given per-class counts, classes in dict order."""
    rng = np.random.default_rng(seed)
    classes = tuple(counts)
    rows, labels = [], []
    for i, (cls, n) in enumerate(counts.items()):
        rows.append(rng.normal(size=(n, d)) + i * spread)
        labels += [cls] * n
    return Dataset(np.vstack(rows), labels, ["r1"] * len(labels), classes)


class TestLargestRemainder:
    def test_exact_split(self):
        np.testing.assert_array_equal(
            largest_remainder_counts(110, np.array([0.5, 0.5])), [55, 55]
        )

    def test_rounding(self):
        # 100 * (1/3, 1/3, 1/3) -> 33.33 each; remainder ties to lowest index
        np.testing.assert_array_equal(
            largest_remainder_counts(100, np.array([1 / 3, 1 / 3, 1 / 3])), [34, 33, 33]
        )

    def test_sums_to_total(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            k = int(rng.integers(2, 8))
            p = rng.random(k)
            p /= p.sum()
            total = int(rng.integers(1, 500))
            assert largest_remainder_counts(total, p).sum() == total


class TestSmote:
    def test_zero_delta_returns_input_unchanged(self):
        data = labeled_dataset({"a": 60, "b": 40})
        out = smote_resample(data, priors([0.6, 0.4], ("a", "b")), k=5, seed=1)
        assert out is data

    def test_target_counts_exact(self):
        data = labeled_dataset({"a": 100, "b": 10})
        out = smote_resample(data, priors([0.5, 0.5], ("a", "b")), k=5, seed=2)
        assert len(out) == 110
        counts = dict(zip(out.class_list, out.class_counts()))
        assert counts == {"a": 55, "b": 55}

    def test_infeasible_small_class(self):
        data = labeled_dataset({"a": 50, "b": 3})
        with pytest.raises(SmoteInfeasible):
            smote_resample(data, priors([0.5, 0.5], ("a", "b")), k=5, seed=3)

    def test_small_class_ok_with_reduced_k(self):
        data = labeled_dataset({"a": 50, "b": 5})
        out = smote_resample(data, priors([0.5, 0.5], ("a", "b")), k=4, seed=3)
        assert dict(zip(out.class_list, out.class_counts())) == {"a": 28, "b": 27}

    def test_synthetic_points_on_parent_segments(self):
        data = labeled_dataset({"a": 30, "b": 8}, seed=5)
        out = smote_resample(data, priors([0.4, 0.6], ("a", "b")), k=5, seed=6)
        originals = {tuple(row) for row in data.features}
        b_members = data.features[np.array([l == "b" for l in data.labels])]
        for row, label in zip(out.features, out.labels):
            if tuple(row) in originals:
                continue
            assert label == "b"  # only the deficit class gains synthetic points
            on_some_segment = False
            for i in range(len(b_members)):
                for j in range(len(b_members)):
                    if i == j:
                        continue
                    x, x2 = b_members[i], b_members[j]
                    seg = x2 - x
                    denom = np.dot(seg, seg)
                    if denom == 0:
                        continue
                    u = np.dot(row - x, seg) / denom
                    if -1e-9 <= u <= 1 + 1e-9 and np.all(
                        np.abs(x + u * seg - row) <= 1e-9
                    ):
                        on_some_segment = True
                        break
                if on_some_segment:
                    break
            assert on_some_segment

    def test_undersampled_rows_are_subset_of_input(self):
        data = labeled_dataset({"a": 100, "b": 10})
        out = smote_resample(data, priors([0.5, 0.5], ("a", "b")), k=5, seed=7)
        originals = {tuple(row) for row in data.features}
        a_rows = [r for r, l in zip(out.features, out.labels) if l == "a"]
        assert len(a_rows) == 55
        assert all(tuple(r) in originals for r in a_rows)

    def test_label_distribution_matches_targets(self):
        rng = np.random.default_rng(8)
        for trial in range(10):
            n_a, n_b, n_c = rng.integers(8, 60, size=3)
            data = labeled_dataset({"a": int(n_a), "b": int(n_b), "c": int(n_c)},
                                   seed=trial)
            p = rng.random(3)
            p /= p.sum()
            target = priors(p, ("a", "b", "c"))
            out = smote_resample(data, target, k=5, seed=trial)
            expected = largest_remainder_counts(len(data), p)
            np.testing.assert_array_equal(out.class_counts(), expected)

    def test_deterministic(self):
        data = labeled_dataset({"a": 40, "b": 12})
        t = priors([0.3, 0.7], ("a", "b"))
        o1 = smote_resample(data, t, k=5, seed=9)
        o2 = smote_resample(data, t, k=5, seed=9)
        np.testing.assert_array_equal(o1.features, o2.features)
        assert list(o1.labels) == list(o2.labels)

    def test_knn_ties_break_by_sample_index(self):
        from cropshift.baselines import _knn_table

        # neighbors of the origin at equal distance 1: indices 1 and 2
        points = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [3.0, 0.0]])
        table = _knn_table(points, k=2)
        np.testing.assert_array_equal(table[0], [1, 2])
        # duplicates of a point are eligible neighbors, the point itself is not
        dup = np.array([[0.0, 0.0], [0.0, 0.0], [2.0, 0.0]])
        np.testing.assert_array_equal(_knn_table(dup, k=1)[0], [1])
        np.testing.assert_array_equal(_knn_table(dup, k=1)[1], [0])


class TestZTransform:
    def test_standardizes_training_data(self):
        rng = np.random.default_rng(10)
        X = rng.normal(loc=3.0, scale=2.5, size=(200, 4))
        zt = ztransform_fit(X)
        Z = ztransform_apply(zt, X)
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-9)

    def test_constant_feature_maps_to_zero(self):
        X = np.column_stack([np.full(10, 7.0), np.arange(10.0)])
        zt = ztransform_fit(X)
        Z = ztransform_apply(zt, X)
        np.testing.assert_array_equal(Z[:, 0], 0.0)

    def test_population_convention(self):
        X = np.array([[-1.0], [1.0]])
        zt = ztransform_fit(X)
        assert zt.mean[0] == 0.0
        assert zt.std[0] == 1.0  # divide by N, not N-1
        np.testing.assert_array_equal(ztransform_apply(zt, X), X)

    def test_invertible_on_nondegenerate_features(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(50, 3)) * 5 + 1
        zt = ztransform_fit(X)
        x = rng.normal(size=3)
        np.testing.assert_allclose(
            ztransform_invert(zt, ztransform_apply(zt, x)), x, atol=1e-9
        )

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            ztransform_fit(np.zeros((1, 2)))


class TestMajorClass:
    def test_argmax(self):
        p = priors([0.7, 0.2, 0.1], ("a", "b", "c"))
        assert major_class_classify(p) == "a"

    def test_uniform_tie_breaks_low(self):
        p = priors([1 / 3, 1 / 3, 1 / 3], ("a", "b", "c"))
        assert major_class_classify(p) == "a"

    def test_dominant_class(self):
        p = priors([0.1, 0.8, 0.1], ("corn", "mfp", "wheat"))
        assert major_class_classify(p) == "mfp"


class TestPipelines:
    @staticmethod
    def setup_world(seed=12):
        train = labeled_dataset({"a": 80, "b": 60}, seed=seed, spread=3.0)
        rng = np.random.default_rng(seed + 100)
        test_features = np.vstack(
            [rng.normal(size=(30, 2)), rng.normal(size=(30, 2)) + 3.0]
        )
        return train, test_features

    def test_zt_fpsa_identical_regions_degenerates(self):
        train, _ = self.setup_world()
        config = ClassifierConfig(kind="lda")
        # same region for train and test; test priors = empirical train priors
        test_features = train.features
        test_priors = train.empirical_priors("t")
        got = pipeline_zt_fpsa(train, test_features, test_priors, config, seed=1)
        zt = ztransform_fit(train)
        train_z = Dataset(
            ztransform_apply(zt, train.features), train.labels, train.regions,
            train.class_list,
        )
        model = lda_fit(train_z)
        expect = predict_labels(
            model.posterior_matrix(ztransform_apply(zt, test_features)),
            train.class_list,
        )
        assert list(got) == list(expect)

    def test_smote_psa_matching_priors_equals_plain_fit(self):
        train, test_features = self.setup_world()
        config = ClassifierConfig(kind="lda")
        matching = train.empirical_priors("t")
        got = pipeline_smote_psa(train, test_features, matching, config, seed=2)
        model = lda_fit(train)
        expect = predict_labels(model.posterior_matrix(test_features), train.class_list)
        assert list(got) == list(expect)

    @pytest.mark.parametrize("kind", ["lda", "rf"])
    def test_pipelines_deterministic(self, kind):
        train, test_features = self.setup_world()
        config = ClassifierConfig(
            kind=kind, forest_params=ForestParams(n_trees=10, seed=0)
        )
        target = priors([0.3, 0.7], ("a", "b"))
        for pipe in (pipeline_smote_psa, pipeline_zt_fpsa, pipeline_zt_smote_fpsa):
            r1 = pipe(train, test_features, target, config, seed=33)
            r2 = pipe(train, test_features, target, config, seed=33)
            assert list(r1) == list(r2)
