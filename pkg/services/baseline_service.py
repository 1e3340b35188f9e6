"""
Frequentist continuous quantile regression used as the comparison baseline.

The ordinal response is treated as a continuous outcome and an intercept is
included, as standard continuous QR does. The check loss is minimized through
a smoothing continuation: the kink at zero is replaced by a quadratic of
radius ε, each smoothed problem is solved by damped Newton, and ε shrinks
geometrically. A final vertex polish solves for the exact basic solution
through the k smallest residuals.
"""
from typing import Tuple

import numpy as np

import config
from services.distribution_service import check_loss_objective, require_quantile
from utils.error_utils import InputValidationError, OptimizationError
from utils.helpers import as_float_matrix
from utils.logger import logger


def with_intercept(covariates) -> np.ndarray:
    x = as_float_matrix(covariates)
    return np.column_stack([np.ones(x.shape[0]), x])


def smoothed_check(residuals: np.ndarray, q: float, eps: float) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Quadratically smoothed check loss with its first and second derivatives
    in the residual: (q - 1/2)r + (r²/ε + ε)/4 inside |r| < ε, ρ_q(r) outside.
    """
    inside = np.abs(residuals) < eps
    loss = np.where(
        inside,
        (q - 0.5) * residuals + 0.25 * (residuals * residuals / eps + eps),
        residuals * (q - (residuals < 0)),
    )
    score = np.where(inside, (q - 0.5) + 0.5 * residuals / eps, q - (residuals < 0))
    curvature = np.where(inside, 0.5 / eps, 0.0)
    return float(np.sum(loss)), score, curvature


def _newton(x: np.ndarray, y: np.ndarray, beta: np.ndarray, q: float, eps: float) -> Tuple[np.ndarray, bool, float]:
    gram = x.T @ x
    ridge = 1e-8 * np.trace(gram) / gram.shape[0] / eps
    value, score, curvature = smoothed_check(y - x @ beta, q, eps)
    gap = np.inf
    for _ in range(config.BASELINE_MAX_NEWTON):
        hessian = x.T @ (curvature[:, None] * x) + ridge * np.eye(x.shape[1])
        direction = np.linalg.solve(hessian, x.T @ score)
        step = 1.0
        while step > 1e-12:
            candidate = beta + step * direction
            new_value, new_score, new_curvature = smoothed_check(y - x @ candidate, q, eps)
            if new_value <= value:
                break
            step *= 0.5
        else:
            return beta, True, 0.0
        gap = (value - new_value) / max(abs(value), 1e-300)
        beta, value, score, curvature = candidate, new_value, new_score, new_curvature
        if gap <= config.BASELINE_TOL * 1e-4 or np.max(np.abs(step * direction)) <= 1e-14 * (1 + np.max(np.abs(beta))):
            return beta, True, gap
    return beta, False, gap


def _vertex_polish(x: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Basic solution interpolating the k observations with the smallest residuals"""
    k = x.shape[1]
    closest = np.argsort(np.abs(y - x @ beta), kind="stable")[:k]
    subset = x[closest]
    if np.linalg.matrix_rank(subset) < k:
        return beta
    return np.linalg.solve(subset, y[closest])


def qr_baseline(responses, covariates, q: float, intercept: bool = True) -> np.ndarray:
    """
    Minimizer of Σ ρ_q(y_i - x_i'β); with intercept=True the first
    coefficient is the intercept.
    """
    require_quantile(q)
    y = np.asarray(responses, dtype=np.float64)
    x = with_intercept(covariates) if intercept else as_float_matrix(covariates)
    if x.shape[0] != y.shape[0]:
        raise InputValidationError("responses and covariates differ in length")
    if x.shape[0] <= x.shape[1]:
        raise InputValidationError(f"need more observations ({x.shape[0]}) than coefficients ({x.shape[1]})")

    beta = np.linalg.lstsq(x, y, rcond=None)[0]
    best, best_value = beta, check_loss_objective(y - x @ beta, q)
    converged, gap = True, 0.0
    for eps in config.BASELINE_EPSILONS:
        beta, converged, gap = _newton(x, y, beta, q, eps)
        value = check_loss_objective(y - x @ beta, q)
        if value < best_value:
            best, best_value = beta, value

    if not converged and gap > 1e-6:
        raise OptimizationError(
            "baseline quantile regression did not converge",
            {"final_gap": gap, "objective": best_value, "eps": config.BASELINE_EPSILONS[-1]},
        )

    polished = _vertex_polish(x, y, best)
    polished_value = check_loss_objective(y - x @ polished, q)
    if polished_value <= best_value:
        best, best_value = polished, polished_value
    logger.debug(f"Baseline QR q={q}: objective {best_value:.10g}")
    return best
