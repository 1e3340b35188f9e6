"""
Generators for the simulated dataset families with known ground truth.

Every family draws covariates from uniform laws, builds a latent response,
and thresholds it at the interior cutpoints (5, 8) into three categories
with the left-closed convention δ_{j-1} ≤ z < δ_j.
"""
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

import config
from models.pydantic_models import GroundTruth, SimulationScenario
from models.records import OrdinalDataset
from services.distribution_service import quantile_of, require_quantile, standard_error_draws
from utils.error_utils import DomainError, InputValidationError
from utils.logger import logger

ErrorSampler = Callable[[np.random.Generator, int], np.ndarray]

SINGLE_DESIGNS = ("single-nonnull", "single-null")
MULTI_DESIGNS = ("multi-nonnull", "multi-partialnull")
DESIGNS = SINGLE_DESIGNS + MULTI_DESIGNS
ERROR_LAWS = ("normal", "laplace")

_DESIGN_BETA = {
    "single-nonnull": (3.0,),
    "single-null": (0.0,),
    "multi-nonnull": (3.0, 2.0),
    "multi-partialnull": (3.0, 0.0),
}
_COVARIATE_UPPER = {1: (4.0,), 2: (4.0, 2.0)}


def shift_for_quantile(error_law: str, q: float) -> float:
    """Location that puts the q-quantile of the shifted unit error at zero"""
    require_quantile(q)
    return -quantile_of(error_law, q)


def threshold(z, interior_cutpoints: Sequence[float]):
    """Category codes 1..C for latent values, δ_{j-1} ≤ z < δ_j"""
    cuts = np.asarray(interior_cutpoints, dtype=np.float64)
    codes = np.searchsorted(cuts, np.asarray(z, dtype=np.float64), side="right") + 1
    return int(codes) if np.ndim(codes) == 0 else codes.astype(np.int64)


def build_scenario(design: str, error_law: str, q: float, n: int = config.SIM_N) -> SimulationScenario:
    if design not in DESIGNS:
        raise DomainError(f"unknown design {design!r}; expected one of {', '.join(DESIGNS)}")
    if error_law not in ERROR_LAWS:
        raise DomainError(f"unknown error law {error_law!r}; expected one of {', '.join(ERROR_LAWS)}")
    require_quantile(q)
    null = design == "single-null"
    return SimulationScenario(
        design=design,
        error_law=error_law,
        q=q,
        n=n,
        true_beta=_DESIGN_BETA[design],
        true_cutpoints=config.SIM_CUTPOINTS,
        # The fully null family scales an unshifted unit error: z = 12u
        error_shift=0.0 if null else shift_for_quantile(error_law, q),
        error_scale=config.SIM_NULL_SCALE if null else 1.0,
    )


def ground_truth(scenario: SimulationScenario) -> GroundTruth:
    return GroundTruth.from_beta(scenario.true_beta, scenario.true_cutpoints)


def _draw_covariates(p: int, n: int, rng: np.random.Generator) -> np.ndarray:
    uppers = _COVARIATE_UPPER.get(p, (4.0,) * p)
    return np.column_stack([rng.uniform(0.0, upper, n) for upper in uppers])


def generate(scenario: SimulationScenario, rng: np.random.Generator) -> Tuple[OrdinalDataset, GroundTruth]:
    """
    Draw one dataset for a scenario, regenerating (up to config.MAX_REDRAWS
    times) when a category comes out empty.
    """
    beta = np.asarray(scenario.true_beta)
    C = len(scenario.true_cutpoints) + 1
    labels = list(range(1, C + 1))
    for attempt in range(config.MAX_REDRAWS):
        x = _draw_covariates(scenario.p, scenario.n, rng)
        errors = standard_error_draws(scenario.error_law, rng, scenario.n)
        z = x @ beta + scenario.error_scale * (errors + scenario.error_shift)
        y = threshold(z, scenario.true_cutpoints)
        if np.unique(y).shape[0] == C:
            names = [f"x{j + 1}" for j in range(scenario.p)]
            return OrdinalDataset(y, x, labels, names), ground_truth(scenario)
        logger.debug(f"{scenario.design}/{scenario.error_law}/q={scenario.q}: empty category, regenerating")
    raise InputValidationError(
        f"could not generate all {C} categories in {config.MAX_REDRAWS} attempts for "
        f"{scenario.design}/{scenario.error_law}/q={scenario.q}"
    )


def gen_single(design: str, error_law: str, q: float, n: int, rng: np.random.Generator) -> Tuple[OrdinalDataset, GroundTruth]:
    """Single covariate x ~ U(0, 4): z = 3x + u (non-null) or z = 12u (null)"""
    if design not in SINGLE_DESIGNS:
        raise DomainError(f"{design!r} is not a single-covariate design")
    return generate(build_scenario(design, error_law, q, n), rng)


def gen_multi(design: str, error_law: str, q: float, n: int, rng: np.random.Generator) -> Tuple[OrdinalDataset, GroundTruth]:
    """x1 ~ U(0, 4), x2 ~ U(0, 2): z = 3x1 + 2x2 + u (non-null) or z = 3x1 + u (partial null)"""
    if design not in MULTI_DESIGNS:
        raise DomainError(f"{design!r} is not a multiple-covariate design")
    return generate(build_scenario(design, error_law, q, n), rng)


class BaseRandomness:
    """
    Recorded covariates and unit errors that several generators can share,
    so that two parameterizations see exactly the same underlying draws.
    """

    def __init__(self, covariates: np.ndarray, errors: np.ndarray):
        self.covariates = np.asarray(covariates, dtype=np.float64)
        self.errors = np.asarray(errors, dtype=np.float64)

    @classmethod
    def record(
        cls,
        n: int,
        p: int,
        rng: np.random.Generator,
        error_sampler: Optional[ErrorSampler] = None,
    ) -> "BaseRandomness":
        error_sampler = error_sampler or (lambda g, size: g.standard_normal(size))
        return cls(_draw_covariates(p, n, rng), error_sampler(rng, n))


def gen_custom(
    beta: Sequence[float],
    interior_cutpoints: Sequence[float],
    intercept: float = 0.0,
    error_sampler: Optional[ErrorSampler] = None,
    n: int = config.SIM_N,
    rng: Optional[np.random.Generator] = None,
    base: Optional[BaseRandomness] = None,
    error_scale: float = 1.0,
) -> OrdinalDataset:
    """
    z_i = intercept + x_i'β + error_scale·e_i, thresholded at the given cutpoints.

    With `base`, covariates and errors come from the recorded stream and no
    fresh randomness is drawn; otherwise they are drawn from `rng` and a
    dataset with an empty category is regenerated.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    cuts = np.asarray(interior_cutpoints, dtype=np.float64)
    if np.any(np.diff(cuts) <= 0):
        raise DomainError("cutpoints must be strictly increasing")
    C = cuts.shape[0] + 1
    labels = list(range(1, C + 1))

    attempts = 1 if base is not None else config.MAX_REDRAWS
    for _ in range(attempts):
        stream = base if base is not None else BaseRandomness.record(n, beta.shape[0], rng, error_sampler)
        if stream.covariates.shape[1] != beta.shape[0]:
            raise InputValidationError("recorded covariates do not match the coefficient count")
        z = intercept + stream.covariates @ beta + error_scale * stream.errors
        y = threshold(z, cuts)
        if np.unique(y).shape[0] == C:
            return OrdinalDataset(y, stream.covariates, labels)
    raise InputValidationError(f"generated data left a category empty after {attempts} attempt(s)")
