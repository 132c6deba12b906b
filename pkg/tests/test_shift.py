import numpy as np
import pytest
from scipy.linalg import cho_factor

from cropshift.classify import LdaModel, lda_posteriors, predict_label
from cropshift.dataset import ClassPriors, Dataset
from cropshift.errors import (
    AllZeroAreas,
    AllZeroScores,
    ClassMismatch,
    DimensionMismatch,
    EmptyClass,
    ZeroMeanFieldArea,
    ZeroTrainPrior,
)
from cropshift.shift import (
    ClassMeans,
    RegionalShift,
    aggregate_to_priors,
    estimate_class_means,
    estimate_regional_shift,
    fpsa_classify,
    fsa_transform,
    psa_reweight,
)


def priors(*values, region="r", classes=None):
    classes = classes or tuple(f"c{i}" for i in range(len(values)))
    return ClassPriors(region, classes, np.array(values, dtype=float))


def random_simplex(rng, k):
    v = rng.random(k)
    return v / v.sum()


class TestPsaReweight:
    def test_identical_priors_is_identity_up_to_normalization(self):
        p = np.array([0.6, 0.4])
        out = psa_reweight(p, priors(0.5, 0.5), priors(0.5, 0.5))
        np.testing.assert_allclose(out, p, atol=1e-15)

    def test_hand_arithmetic(self):
        out = psa_reweight(np.array([0.6, 0.4]), priors(0.5, 0.5), priors(0.2, 0.8))
        np.testing.assert_allclose(out, [0.24 / 0.88, 0.64 / 0.88])
        assert np.argmax(out) == 1

    def test_one_hot_argmax_stable(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            k = int(rng.integers(2, 6))
            hot = int(rng.integers(k))
            p = np.zeros(k)
            p[hot] = 1.0
            tr_v = random_simplex(rng, k) + 1e-3
            te_v = random_simplex(rng, k) + 1e-3
            tr = priors(*tr_v / tr_v.sum(), classes=tuple(range(k)))
            te = priors(*te_v / te_v.sum(), classes=tuple(range(k)))
            assert np.argmax(psa_reweight(p, tr, te)) == hot

    def test_zero_train_prior_rejected(self):
        with pytest.raises(ZeroTrainPrior):
            psa_reweight(np.array([0.5, 0.5]), priors(1.0, 0.0), priors(0.5, 0.5))

    def test_class_mismatch(self):
        a = priors(0.5, 0.5, classes=("x", "y"))
        b = priors(0.5, 0.5, classes=("x", "z"))
        with pytest.raises(ClassMismatch):
            psa_reweight(np.array([0.5, 0.5]), a, b)

    def test_all_zero_scores(self):
        # posterior mass only on the class whose test prior is zero
        with pytest.raises(AllZeroScores):
            psa_reweight(np.array([0.0, 1.0]), priors(0.5, 0.5), priors(1.0, 0.0))

    def test_degeneracy_argmax_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(2000):
            k = int(rng.integers(2, 7))
            p = random_simplex(rng, k)
            tr = random_simplex(rng, k) + 1e-9
            tr /= tr.sum()
            pri = priors(*tr, classes=tuple(range(k)))
            out = psa_reweight(p, pri, pri)
            assert np.argmax(out) == np.argmax(p)

    def test_matches_unnormalized_ratio_argmax(self):
        # normalization and common positive scaling of the ratios never move the argmax
        rng = np.random.default_rng(4)
        for _ in range(1000):
            k = int(rng.integers(2, 6))
            p = random_simplex(rng, k)
            tr = random_simplex(rng, k) + 1e-9
            tr /= tr.sum()
            te = random_simplex(rng, k)
            scale = float(rng.uniform(0.01, 100))
            raw = p * (te / tr) * scale
            out = psa_reweight(p, priors(*tr, classes=tuple(range(k))),
                               priors(*te, classes=tuple(range(k))))
            assert np.argmax(out) == np.argmax(raw)

    def test_matrix_input(self):
        P = np.array([[0.6, 0.4], [0.1, 0.9]])
        out = psa_reweight(P, priors(0.5, 0.5), priors(0.2, 0.8))
        np.testing.assert_allclose(out[0], [0.24 / 0.88, 0.64 / 0.88])
        np.testing.assert_allclose(out.sum(axis=1), 1.0)


class TestPsaOptimality:
    def test_matches_bayes_rule_on_discrete_model(self):
        # 3 feature values, 2 classes, class-conditionals shared between
        # train and test; exact posteriors. PSA must reproduce the
        # brute-force Bayes rule of the test distribution everywhere.
        rng = np.random.default_rng(5)
        cond = np.array([[0.6, 0.3, 0.1], [0.2, 0.3, 0.5]])  # q(x | y)
        for _ in range(100):
            train_pri = random_simplex(rng, 2) + 1e-6
            train_pri /= train_pri.sum()
            test_pri = random_simplex(rng, 2)
            tr = priors(*train_pri)
            te = priors(*test_pri)
            for x in range(3):
                joint_train = cond[:, x] * train_pri
                post_train = joint_train / joint_train.sum()
                psa_label = int(np.argmax(psa_reweight(post_train, tr, te)))
                bayes_label = int(np.argmax(cond[:, x] * test_pri))
                assert psa_label == bayes_label


class TestClassMeans:
    def test_arithmetic_mean(self):
        X = np.array([[0.0, 0.0], [2.0, 2.0], [5.0, 5.0]])
        data = Dataset(X, ["a", "a", "b"], ["r"] * 3, ("a", "b"))
        means = estimate_class_means(data)
        np.testing.assert_allclose(means.means, [[1.0, 1.0], [5.0, 5.0]])

    def test_single_sample_classes(self):
        X = np.array([[1.0], [4.0]])
        data = Dataset(X, ["a", "b"], ["r"] * 2, ("a", "b"))
        np.testing.assert_allclose(estimate_class_means(data).means, [[1.0], [4.0]])

    def test_order_invariance(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(30, 3))
        labels = rng.choice(["a", "b"], size=30).tolist()
        data = Dataset(X, labels, ["r"] * 30, ("a", "b"))
        perm = rng.permutation(30)
        shuffled = data.subset(perm)
        np.testing.assert_allclose(
            estimate_class_means(data).means, estimate_class_means(shuffled).means
        )

    def test_empty_class(self):
        X = np.array([[1.0], [2.0]])
        data = Dataset(X, ["a", "a"], ["r"] * 2, ("a", "b"))
        with pytest.raises(EmptyClass):
            estimate_class_means(data)


class TestRegionalShift:
    def test_exact_cancellation(self):
        means = ClassMeans(("a", "b"), np.array([[0.0, 1.0], [2.0, 3.0]]))
        p = priors(0.25, 0.75, classes=("a", "b"))
        xbar = 0.25 * means.means[0] + 0.75 * means.means[1]
        shift = estimate_regional_shift(xbar, p, means)
        np.testing.assert_allclose(shift.offset, [0.0, 0.0], atol=1e-15)

    def test_hand_arithmetic_1d(self):
        means = ClassMeans(("a", "b"), np.array([[0.0], [10.0]]))
        shift = estimate_regional_shift(
            np.array([8.0]), priors(0.3, 0.7, classes=("a", "b")), means
        )
        np.testing.assert_allclose(shift.offset, [1.0])

    def test_noiseless_additive_model_recovers_offset(self):
        # population quantities built directly from the additive mean model
        b = np.array([[0.0, 1.0], [3.0, -2.0], [5.0, 5.0]])
        a_r = np.array([1.5, -0.5])
        p = np.array([0.2, 0.3, 0.5])
        xbar = p @ (a_r + b)
        means = ClassMeans(("a", "b", "c"), b)
        shift = estimate_regional_shift(
            xbar, priors(*p, classes=("a", "b", "c")), means
        )
        np.testing.assert_allclose(shift.offset, a_r, atol=1e-12)

    def test_class_mismatch(self):
        means = ClassMeans(("a", "b"), np.zeros((2, 2)))
        with pytest.raises(ClassMismatch):
            estimate_regional_shift(np.zeros(2), priors(1.0, classes=("a",)), means)


class TestFsaTransform:
    def test_zero_offset_identity(self):
        x = np.array([3.0, 4.0])
        out = fsa_transform(x, RegionalShift("r", np.zeros(2)))
        np.testing.assert_array_equal(out, x)

    def test_componentwise_subtraction(self):
        out = fsa_transform(np.array([5.0, 5.0]), RegionalShift("r", np.array([1.0, -1.0])))
        np.testing.assert_array_equal(out, [4.0, 6.0])

    def test_inverse_pair(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=4)
        s = RegionalShift("r", rng.normal(size=4))
        np.testing.assert_allclose(fsa_transform(fsa_transform(x, s), s.negate()), x)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatch):
            fsa_transform(np.zeros(3), RegionalShift("r", np.zeros(2)))

    def test_matrix_input(self):
        X = np.arange(6, dtype=float).reshape(3, 2)
        out = fsa_transform(X, RegionalShift("r", np.array([1.0, 1.0])))
        np.testing.assert_array_equal(out, X - 1.0)


class TestFpsaClassify:
    @staticmethod
    def make_model():
        cov = np.eye(2)
        return LdaModel(
            ("a", "b"),
            np.array([[0.0, 0.0], [3.0, 0.0]]),
            cov,
            ClassPriors("train", ("a", "b"), np.array([0.5, 0.5])),
            0.0,
            cho_factor(cov, lower=True),
        )

    def test_degenerates_to_unadjusted(self):
        model = self.make_model()
        zero = RegionalShift("r2", np.zeros(2))
        eq = priors(0.5, 0.5, classes=("a", "b"))
        rng = np.random.default_rng(8)
        for _ in range(100):
            x = rng.normal(size=2) * 3
            expect = predict_label(lda_posteriors(model, x), model.class_list)
            assert fpsa_classify(model, x, zero, eq, eq) == expect

    def test_zero_offset_equals_psa(self):
        model = self.make_model()
        zero = RegionalShift("r2", np.zeros(2))
        tr = priors(0.5, 0.5, classes=("a", "b"))
        te = priors(0.9, 0.1, classes=("a", "b"))
        rng = np.random.default_rng(9)
        for _ in range(100):
            x = rng.normal(size=2) * 3
            psa_label = predict_label(
                psa_reweight(lda_posteriors(model, x), tr, te), model.class_list
            )
            assert fpsa_classify(model, x, zero, tr, te) == psa_label


class TestFpsaGenerativeAgreement:
    def test_population_injected_fpsa_equals_regional_oracle(self):
        # Under the additive mixture with exact population parameters, the
        # shift-and-reweight rule built from the training region must agree
        # with an oracle LDA fitted directly on the target region, pointwise.
        rng = np.random.default_rng(21)
        d, k = 4, 3
        b = rng.normal(size=(k, d)) * 2
        a_r = rng.normal(size=d)
        cov = 0.4 ** np.abs(np.subtract.outer(np.arange(d), np.arange(d)))
        cho = cho_factor(cov, lower=True)
        p_train = np.array([0.5, 0.3, 0.2])
        p_test = np.array([0.1, 0.2, 0.7])
        classes = ("a", "b", "c")

        train_model = LdaModel(
            classes, b, cov, ClassPriors("train", classes, p_train), 0.0, cho
        )
        oracle_model = LdaModel(
            classes, b + a_r, cov, ClassPriors("test", classes, p_test), 0.0, cho
        )
        shift = RegionalShift("test", a_r)
        tr = ClassPriors("train", classes, p_train)
        te = ClassPriors("test", classes, p_test)
        for _ in range(500):
            x = rng.normal(size=d) * 3 + a_r
            fpsa_label = fpsa_classify(train_model, x, shift, tr, te)
            oracle_label = predict_label(lda_posteriors(oracle_model, x), classes)
            assert fpsa_label == oracle_label


class TestAggregateToPriors:
    def test_hand_arithmetic(self):
        out = aggregate_to_priors({"a": 100.0, "b": 300.0}, {"a": 10.0, "b": 30.0})
        np.testing.assert_allclose(out.as_vector(("a", "b")), [0.5, 0.5])

    def test_single_class(self):
        out = aggregate_to_priors({"a": 42.0}, {"a": 7.0})
        np.testing.assert_allclose(out.values, [1.0])

    def test_equal_field_areas_proportional(self):
        out = aggregate_to_priors({"a": 10.0, "b": 30.0}, {"a": 5.0, "b": 5.0})
        np.testing.assert_allclose(out.as_vector(("a", "b")), [0.25, 0.75])

    def test_counts_direct(self):
        out = aggregate_to_priors({"a": 2.0, "b": 6.0})
        np.testing.assert_allclose(out.as_vector(("a", "b")), [0.25, 0.75])

    def test_zero_mean_field_area(self):
        with pytest.raises(ZeroMeanFieldArea):
            aggregate_to_priors({"a": 1.0}, {"a": 0.0})

    def test_all_zero_areas(self):
        with pytest.raises(AllZeroAreas):
            aggregate_to_priors({"a": 0.0, "b": 0.0}, {"a": 1.0, "b": 1.0})

    def test_zero_area_class_allowed(self):
        out = aggregate_to_priors({"a": 0.0, "b": 5.0}, {"b": 1.0})
        np.testing.assert_allclose(out.as_vector(("a", "b")), [0.0, 1.0])
