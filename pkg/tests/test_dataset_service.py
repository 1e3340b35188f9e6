import numpy as np
import pytest

from models.pydantic_models import FitConfig, Hyperparams, QuantileSpec
from models.records import Cutpoints, OrdinalDataset
from services.dataset_service import (
    encode_dataset,
    infer_levels,
    mixture_constants,
    numeric_label,
    reject_constant_columns,
    standardize_covariates,
)
from utils.error_utils import InputValidationError


def test_encode_follows_declared_order():
    dataset = encode_dataset(["mid", "low", "high", "mid"], [[1.0], [2.0], [3.0], [4.0]], ["low", "mid", "high"])
    np.testing.assert_array_equal(dataset.responses, [2, 1, 3, 2])
    assert dataset.C == 3
    assert dataset.decode() == ["mid", "low", "high", "mid"]


def test_encode_reports_unknown_label_row():
    with pytest.raises(InputValidationError) as info:
        encode_dataset(["a", "b", "zz"], np.ones((3, 1)), ["a", "b"])
    assert info.value.row == 2
    assert "row 2" in str(info.value)


def test_encode_rejects_unobserved_category():
    with pytest.raises(InputValidationError, match="unobserved category"):
        encode_dataset(["a", "a", "c"], np.arange(3.0), ["a", "b", "c"])


def test_encode_rejects_dimension_mismatch():
    with pytest.raises(InputValidationError, match="dimension mismatch"):
        encode_dataset(["a", "b"], np.ones((3, 1)), ["a", "b"])


def test_non_finite_covariate_names_its_column():
    with pytest.raises(InputValidationError) as info:
        OrdinalDataset([1, 2, 1], np.array([[0.0, 1.0], [np.nan, 2.0], [1.0, 3.0]]), [1, 2], ["age", "bmi"])
    assert info.value.row == 1
    assert info.value.column == "age"


def test_dataset_arrays_are_read_only():
    dataset = OrdinalDataset([1, 2], [[0.5], [1.5]], ["a", "b"])
    with pytest.raises(ValueError):
        dataset.covariates[0, 0] = 9.0


def test_subset_keeps_labels_and_names():
    dataset = OrdinalDataset([1, 2, 3, 2], np.arange(8.0).reshape(4, 2), ["a", "b", "c"], ["u", "w"])
    sub = dataset.subset([0, 1, 2, 2])
    assert sub.covariate_names == ["u", "w"]
    np.testing.assert_array_equal(sub.category_counts(), [1, 1, 2])


def test_infer_levels_sorts_numbers():
    assert infer_levels(["3", "1", "2", "1"]) == [1, 2, 3]
    assert numeric_label("2.0") == 2
    assert numeric_label("2.5") == 2.5


def test_infer_levels_rejects_text():
    with pytest.raises(InputValidationError, match="declare --levels"):
        infer_levels(["1", "low"])


def test_standardize_returns_moments():
    x = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 50.0]])
    dataset = OrdinalDataset([1, 2, 1, 2], x, [1, 2])
    scaled, means, sds = standardize_covariates(dataset)
    np.testing.assert_allclose(means, x.mean(axis=0))
    np.testing.assert_allclose(sds, x.std(axis=0, ddof=1))
    np.testing.assert_allclose(scaled.covariates.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(scaled.covariates.std(axis=0, ddof=1), 1.0)


def test_constant_column_is_rejected():
    dataset = OrdinalDataset([1, 2, 1], np.array([[1.0, 0.2], [1.0, 0.5], [1.0, 0.9]]), [1, 2], ["one", "x"])
    with pytest.raises(InputValidationError) as info:
        reject_constant_columns(dataset)
    assert info.value.column == "one"
    with pytest.raises(InputValidationError):
        standardize_covariates(dataset)


class TestMixtureConstants:
    def test_median_has_no_skew(self):
        spec = mixture_constants(0.5)
        assert spec.theta == 0.0
        assert spec.tau == pytest.approx(np.sqrt(8.0))

    @pytest.mark.parametrize("q", [0.05, 0.25, 0.75, 0.95])
    def test_tau_identity(self, q):
        spec = mixture_constants(q)
        assert spec.tau2 * q * (1 - q) == pytest.approx(2.0, abs=1e-12)
        assert spec.theta == pytest.approx((1 - 2 * q) / (q * (1 - q)))

    def test_inconsistent_constants_rejected(self):
        with pytest.raises(ValueError):
            QuantileSpec(q=0.3, theta=0.0, tau=1.0)


class TestSchemas:
    def test_fixed_variant_needs_cutpoints(self):
        with pytest.raises(ValueError):
            FitConfig(iterations=100, burnin=50, variant="fixed")

    def test_burnin_below_iterations(self):
        with pytest.raises(ValueError):
            FitConfig(iterations=100, burnin=100)

    def test_retained_count_with_thinning(self):
        assert FitConfig(iterations=100, burnin=40, thin=7).retained == 9
        assert FitConfig().retained == 10_000

    def test_default_prior(self):
        hyper = Hyperparams.default(2)
        np.testing.assert_array_equal(hyper.b0, [0.0, 0.0])
        np.testing.assert_allclose(hyper.B0_inv, 1e-6 * np.eye(2))

    def test_prior_must_be_positive_definite(self):
        with pytest.raises(ValueError):
            Hyperparams(b0=[0.0, 0.0], B0=[[1.0, 2.0], [2.0, 1.0]])

    def test_cutpoints_bounds(self):
        cuts = Cutpoints([5.0, 8.0])
        lower, upper = cuts.bounds(np.array([1, 2, 3]))
        np.testing.assert_array_equal(lower, [-np.inf, 5.0, 8.0])
        np.testing.assert_array_equal(upper, [5.0, 8.0, np.inf])

    def test_cutpoints_must_increase(self):
        with pytest.raises(InputValidationError):
            Cutpoints([8.0, 5.0])
