import math

import numpy as np
import pytest

from models.pydantic_models import GroundTruth
from services.distribution_service import standard_error_draws
from services.simulation_service import (
    BaseRandomness,
    build_scenario,
    gen_custom,
    gen_multi,
    gen_single,
    shift_for_quantile,
    threshold,
)
from utils.error_utils import DomainError, InputValidationError


class TestShift:
    def test_examples(self):
        assert shift_for_quantile("normal", 0.5) == pytest.approx(0.0, abs=1e-15)
        assert shift_for_quantile("laplace", 0.25) == pytest.approx(-math.log(0.5), abs=1e-6)
        assert shift_for_quantile("normal", 0.25) == pytest.approx(0.674490, abs=1e-6)

    @pytest.mark.parametrize("law", ["normal", "laplace"])
    @pytest.mark.parametrize("q", [0.25, 0.5, 0.75])
    def test_shifted_error_has_zero_quantile(self, law, q):
        draws = standard_error_draws(law, np.random.default_rng(17), 1_000_000) + shift_for_quantile(law, q)
        assert abs(np.quantile(draws, q)) <= 0.005

    def test_rejects_bad_quantile(self):
        with pytest.raises(DomainError):
            shift_for_quantile("normal", 1.0)


class TestThreshold:
    @pytest.mark.parametrize("z, expected", [(4.9, 1), (5.0, 2), (7.99, 2), (8.0, 3), (-100.0, 1)])
    def test_left_closed_bins(self, z, expected):
        assert threshold(z, (5.0, 8.0)) == expected

    def test_monotone(self, rng):
        z = np.sort(rng.normal(6.0, 4.0, 1000))
        assert np.all(np.diff(threshold(z, (5.0, 8.0))) >= 0)


class TestGenerators:
    def test_single_nonnull(self, rng):
        dataset, truth = gen_single("single-nonnull", "normal", 0.5, 300, rng)
        assert (dataset.n, dataset.p, dataset.C) == (300, 1, 3)
        assert truth.ratios == pytest.approx((0.375,))
        assert np.all((dataset.covariates > 0) & (dataset.covariates < 4))

    def test_single_null(self, rng):
        _, truth = gen_single("single-null", "laplace", 0.75, 300, rng)
        assert truth.ratios == (0.0,)
        scenario = build_scenario("single-null", "laplace", 0.75)
        assert scenario.error_scale == 12.0 and scenario.error_shift == 0.0

    def test_multi_designs(self, rng):
        dataset, truth = gen_multi("multi-nonnull", "laplace", 0.25, 300, rng)
        assert truth.ratios == pytest.approx((0.375, 0.25))
        assert np.all((dataset.covariates[:, 1] > 0) & (dataset.covariates[:, 1] < 2))
        _, partial = gen_multi("multi-partialnull", "normal", 0.5, 300, rng)
        assert partial.ratios[1] == 0.0

    def test_design_family_is_checked(self, rng):
        with pytest.raises(DomainError):
            gen_single("multi-nonnull", "normal", 0.5, 300, rng)
        with pytest.raises(DomainError):
            gen_multi("single-null", "normal", 0.5, 300, rng)
        with pytest.raises(DomainError):
            build_scenario("single-nonnull", "cauchy", 0.5)

    def test_nonnull_shift_matches_law(self):
        scenario = build_scenario("single-nonnull", "laplace", 0.25)
        assert scenario.error_shift == pytest.approx(shift_for_quantile("laplace", 0.25))

    def test_seeded_generation_is_reproducible(self):
        first, _ = gen_multi("multi-nonnull", "normal", 0.75, 300, np.random.default_rng(3))
        second, _ = gen_multi("multi-nonnull", "normal", 0.75, 300, np.random.default_rng(3))
        np.testing.assert_array_equal(first.responses, second.responses)
        np.testing.assert_array_equal(first.covariates, second.covariates)

    def test_missing_category_gives_up(self, rng):
        # Two rows can never fill three categories
        with pytest.raises(InputValidationError):
            gen_single("single-nonnull", "normal", 0.5, 2, rng)

    def test_ground_truth_checks_ratios(self):
        with pytest.raises(ValueError):
            GroundTruth(beta=(3.0,), cutpoints=(5.0, 8.0), ratios=(0.5,))


class TestCustomGenerator:
    def test_location_invariance(self):
        base = BaseRandomness.record(500, 1, np.random.default_rng(9))
        shifted = gen_custom([1.5], [2.0, 5.0], intercept=2.0, base=base)
        moved = gen_custom([1.5], [0.0, 3.0], intercept=0.0, base=base)
        np.testing.assert_array_equal(shifted.responses, moved.responses)

    def test_scale_invariance(self):
        base = BaseRandomness.record(500, 2, np.random.default_rng(10))
        original = gen_custom([3.0, 2.0], [5.0, 8.0], base=base)
        scaled = gen_custom([6.0, 4.0], [10.0, 16.0], base=base, error_scale=2.0)
        np.testing.assert_array_equal(original.responses, scaled.responses)

    def test_dimensions(self, rng):
        dataset = gen_custom([3.0, 2.0], [5.0, 8.0], n=120, rng=rng)
        assert (dataset.n, dataset.p) == (120, 2)

    def test_custom_error_sampler(self, rng):
        dataset = gen_custom([3.0], [5.0, 8.0], error_sampler=lambda g, size: g.laplace(0.0, 1.0, size), rng=rng)
        assert dataset.C == 3

    def test_rejects_unordered_cutpoints(self, rng):
        with pytest.raises(DomainError):
            gen_custom([3.0], [8.0, 5.0], rng=rng)
