import numpy as np
import pytest
from scipy.optimize import linprog

from services.baseline_service import qr_baseline, smoothed_check, with_intercept
from services.distribution_service import check_loss, check_loss_objective
from services.simulation_service import gen_single
from utils.error_utils import DomainError, InputValidationError


def _linear_program_objective(y, x, q):
    # min q·1'u + (1-q)·1'w  s.t.  xβ + u - w = y,  u, w ≥ 0
    n, k = x.shape
    cost = np.concatenate([np.zeros(k), np.full(n, q), np.full(n, 1.0 - q)])
    equality = np.hstack([x, np.eye(n), -np.eye(n)])
    bounds = [(None, None)] * k + [(0, None)] * (2 * n)
    solution = linprog(cost, A_eq=equality, b_eq=y, bounds=bounds, method="highs")
    assert solution.status == 0
    return solution.fun


def test_sample_median_without_intercept():
    beta = qr_baseline([1.0, 2.0, 3.0, 4.0, 10.0], np.ones((5, 1)), 0.5, intercept=False)
    assert beta[0] == pytest.approx(3.0, abs=1e-8)


def test_recovers_exact_linear_relation(rng):
    x = rng.uniform(0, 4, 50)
    beta = qr_baseline(1.0 + 2.0 * x, x, 0.3)
    np.testing.assert_allclose(beta, [1.0, 2.0], atol=1e-8)


@pytest.mark.parametrize("q", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_matches_linear_program_objective(rng, q):
    x = rng.uniform(0, 4, (80, 2))
    y = 0.5 + x @ np.array([1.0, -0.5]) + rng.standard_t(3, 80)
    beta = qr_baseline(y, x, q)
    achieved = check_loss_objective(y - with_intercept(x) @ beta, q)
    optimum = _linear_program_objective(y, with_intercept(x), q)
    assert achieved <= optimum * (1 + 1e-6) + 1e-9


def test_smoothed_loss_converges_to_check_loss(rng):
    residuals = rng.normal(size=200)
    exact = float(np.sum(check_loss(residuals, 0.7)))
    value, _, _ = smoothed_check(residuals, 0.7, 1e-9)
    assert value == pytest.approx(exact, abs=1e-6)


def test_needs_more_rows_than_coefficients():
    with pytest.raises(InputValidationError):
        qr_baseline([1.0, 2.0], [[0.5], [1.5]], 0.5)


def test_length_mismatch():
    with pytest.raises(InputValidationError):
        qr_baseline([1.0, 2.0, 3.0, 4.0], [[0.5], [1.5], [2.5]], 0.5)


def test_rejects_bad_quantile():
    with pytest.raises(DomainError):
        qr_baseline([1.0, 2.0, 3.0], [[0.5], [1.5], [2.5]], 1.0)


@pytest.mark.slow
class TestOrdinalResponses:
    @pytest.mark.parametrize("q", [0.25, 0.5, 0.75])
    def test_nonnull_slope_is_biased(self, q):
        # Category codes compress the latent scale, so the slope lands well below 3
        biases = []
        for seed in range(5):
            dataset, _ = gen_single("single-nonnull", "normal", q, 300, np.random.default_rng(seed))
            beta = qr_baseline(dataset.responses.astype(np.float64), dataset.covariates, q)
            biases.append(abs(beta[1] - 3.0))
        assert 2.0 <= np.mean(biases) <= 2.8

    def test_null_slope_is_near_zero(self):
        dataset, _ = gen_single("single-null", "normal", 0.5, 300, np.random.default_rng(4))
        beta = qr_baseline(dataset.responses.astype(np.float64), dataset.covariates, 0.5)
        assert abs(beta[1]) <= 0.1
