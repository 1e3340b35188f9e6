"""
Partially collapsed Gibbs sampler for Bayesian ordinal quantile regression.

One sweep updates, in this order:
  1. σ⁻¹ ~ Gamma(c0 + n, d0 + Σ ρ_q(z_i - x_i'β))            (v integrated out)
  2. v_i⁻¹ ~ IG(1 / (q(1-q)|z_i - x_i'β|), 1 / (2σq(1-q)))
  3. β ~ MVN(β̂, (x'Vx / (τ²σ) + B0⁻¹)⁻¹)
  4. z_i ~ TN_(δ_{y_i - 1}, δ_{y_i})(x_i'β + θv_i, τ²σv_i)
  5. δ_c ~ U(L_c, U_c) for c = 1..C-1

Reordering the steps changes the stationary distribution.
The "full" variant swaps step 1 for the non-collapsed σ conditional and the
"fixed" variant skips step 5, keeping user-supplied cutpoints throughout.
"""
from typing import Dict, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import cho_solve

import config
from models.pydantic_models import FitConfig, Hyperparams, QuantileSpec
from models.records import ChainState, Cutpoints, MultiRunSummary, OrdinalDataset, PosteriorSummary
from services.dataset_service import mixture_constants
from services.distribution_service import (
    check_loss,
    cholesky_with_jitter,
    sample_gamma,
    sample_inverse_gaussian,
    sample_mvn,
    sample_truncated_normal,
)
from utils.error_utils import DegenerateScaleError, InputValidationError, SamplerInvariantError
from utils.helpers import SeedLike, spawn_seeds
from utils.logger import logger


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def initial_cutpoints(dataset: OrdinalDataset, rng: np.random.Generator) -> Cutpoints:
    """
    δ_j = 2·u_j·R_{j/C} with R the row sums of the covariates and u_j ~ U(0, 1),
    redrawn until strictly increasing. For C = 3 the quantile levels are
    0.33 and 0.67.
    """
    row_sums = dataset.covariates.sum(axis=1)
    levels = np.round(np.arange(1, dataset.C) / dataset.C, 2)
    anchors = np.quantile(row_sums, levels)

    for _ in range(config.MAX_REDRAWS):
        interior = 2.0 * rng.random(dataset.C - 1) * anchors
        if np.all(np.diff(interior) > 0):
            return Cutpoints(interior)

    interior = np.sort(interior)
    if np.any(np.diff(interior) <= 0):
        logger.warning("Initial cutpoints tied after redraws; using 1..C-1")
        interior = np.arange(1.0, dataset.C)
    return Cutpoints(interior)


def init_state(dataset: OrdinalDataset, rng: np.random.Generator) -> ChainState:
    """β = 0, z = 1, v = 1, σ = 1 and cutpoints from initial_cutpoints"""
    return ChainState(
        beta=np.zeros(dataset.p),
        sigma=1.0,
        v=np.ones(dataset.n),
        z=np.ones(dataset.n),
        cutpoints=initial_cutpoints(dataset, rng),
    )


# ---------------------------------------------------------------------------
# Gibbs steps
# ---------------------------------------------------------------------------

def collapsed_sigma_conditional(
    z: np.ndarray, beta: np.ndarray, covariates: np.ndarray, spec: QuantileSpec, hyper: Hyperparams
) -> Tuple[float, float]:
    """(shape, rate) of σ⁻¹ given (z, β) with v integrated out"""
    loss = np.sum(check_loss(z - covariates @ beta, spec.q))
    return hyper.c0 + z.shape[0], hyper.d0 + float(loss)


def step_sigma_collapsed(
    z: np.ndarray,
    beta: np.ndarray,
    covariates: np.ndarray,
    spec: QuantileSpec,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> float:
    """Collapsed σ update; reads only z and β, never the latent weights."""
    shape, rate = collapsed_sigma_conditional(z, beta, covariates, spec, hyper)
    return 1.0 / sample_gamma(shape, rate, rng)


def full_sigma_conditional(
    state: ChainState, dataset: OrdinalDataset, spec: QuantileSpec, hyper: Hyperparams
) -> Tuple[float, float]:
    """
    (shape, rate) of σ⁻¹ given (z, β, v) with v retained.

    From the joint posterior, the σ-dependent factors are σ^{-n/2} from the
    normal likelihood, σ^{-n} from the exponential prior on v and the gamma
    prior on σ⁻¹, giving shape c0 + 3n/2 and rate d0 + Σv_i + Q/(2τ²) with
    Q = (adjusted - Xβ)'V(adjusted - Xβ).
    """
    adjusted = state.z - spec.theta * state.v
    residual = adjusted - dataset.covariates @ state.beta
    quadratic = float(np.sum(residual * residual / state.v))
    shape = hyper.c0 + 1.5 * dataset.n
    rate = hyper.d0 + float(np.sum(state.v)) + quadratic / (2.0 * spec.tau2)
    return shape, rate


def step_sigma_full(
    state: ChainState,
    dataset: OrdinalDataset,
    spec: QuantileSpec,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> float:
    shape, rate = full_sigma_conditional(state, dataset, spec, hyper)
    return 1.0 / sample_gamma(shape, rate, rng)


def inverse_weight_parameters(
    state: ChainState, dataset: OrdinalDataset, spec: QuantileSpec
) -> Tuple[np.ndarray, float]:
    """IG (mean, shape) for each v_i⁻¹; residual magnitudes floored at config.RESIDUAL_FLOOR"""
    spread = spec.q * (1.0 - spec.q)
    residual = np.abs(state.z - dataset.covariates @ state.beta)
    residual = np.maximum(residual, config.RESIDUAL_FLOOR)
    return 1.0 / (spread * residual), 1.0 / (2.0 * state.sigma * spread)


def step_v(state: ChainState, dataset: OrdinalDataset, spec: QuantileSpec, rng: np.random.Generator) -> np.ndarray:
    mean, shape = inverse_weight_parameters(state, dataset, spec)
    return 1.0 / sample_inverse_gaussian(mean, shape, rng)


def adjusted_response(state: ChainState, spec: QuantileSpec) -> np.ndarray:
    """z_i - θv_i, the response with the mixture's location term removed"""
    return state.z - spec.theta * state.v


def beta_conditional(
    state: ChainState, dataset: OrdinalDataset, spec: QuantileSpec, hyper: Hyperparams
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of β given (z, v, σ); note q(1-q)/(2σ) = 1/(τ²σ)"""
    x = dataset.covariates
    weights = 1.0 / state.v
    scale = 1.0 / (spec.tau2 * state.sigma)
    prior_precision = hyper.B0_inv
    precision = scale * (x.T @ (weights[:, None] * x)) + prior_precision
    rhs = scale * (x.T @ (weights * adjusted_response(state, spec))) + prior_precision @ hyper.b0
    factor = cholesky_with_jitter(precision, "beta posterior precision")
    mean = cho_solve((factor, True), rhs)
    covariance = cho_solve((factor, True), np.eye(dataset.p))
    return mean, 0.5 * (covariance + covariance.T)


def step_beta(
    state: ChainState,
    dataset: OrdinalDataset,
    spec: QuantileSpec,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> np.ndarray:
    mean, covariance = beta_conditional(state, dataset, spec, hyper)
    return sample_mvn(mean, covariance, rng)


def step_z(state: ChainState, dataset: OrdinalDataset, spec: QuantileSpec, rng: np.random.Generator) -> np.ndarray:
    """Latent responses from normals truncated to each observed category's interval"""
    lower, upper = state.cutpoints.bounds(dataset.responses)
    mean = dataset.covariates @ state.beta + spec.theta * state.v
    variance = spec.tau2 * state.sigma * state.v
    return sample_truncated_normal(mean, variance, lower, upper, rng)


def category_extremes(z: np.ndarray, responses: np.ndarray, C: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-category max and min of z, indexed by response code (slot 0 unused)"""
    highest = np.full(C + 1, -np.inf)
    lowest = np.full(C + 1, np.inf)
    np.maximum.at(highest, responses, z)
    np.minimum.at(lowest, responses, z)
    return highest, lowest


def delta_bounds(highest: np.ndarray, lowest: np.ndarray, delta: np.ndarray, c: int) -> Tuple[float, float]:
    """
    (L_c, U_c) for interior cutpoint c:
    L_c = max(max(z | y = c), δ_{c-1}), U_c = min(min(z | y = c + 1), δ_{c+1}).
    """
    return max(float(highest[c]), float(delta[c - 1])), min(float(lowest[c + 1]), float(delta[c + 1]))


def step_delta(state: ChainState, dataset: OrdinalDataset, rng: np.random.Generator) -> Cutpoints:
    """Interior cutpoints one at a time, each uniform between its binding neighbours"""
    delta = state.cutpoints.delta.copy()
    highest, lowest = category_extremes(state.z, dataset.responses, dataset.C)

    for c in range(1, dataset.C):
        lower, upper = delta_bounds(highest, lowest, delta, c)
        if not lower < upper:
            raise SamplerInvariantError(
                f"empty interval for cutpoint {c}",
                {"cutpoint": c, "lower": float(lower), "upper": float(upper)},
            )
        delta[c] = rng.uniform(lower, upper)
    return Cutpoints(delta[1:-1])


# ---------------------------------------------------------------------------
# Chains
# ---------------------------------------------------------------------------

def _check_inputs(dataset: OrdinalDataset, hyper: Hyperparams, fit_config: FitConfig) -> None:
    if hyper.p != dataset.p:
        raise InputValidationError(f"prior has dimension {hyper.p} but the dataset has {dataset.p} covariates")
    if fit_config.variant == "fixed" and len(fit_config.fixed_cutpoints) != dataset.C - 1:
        raise InputValidationError(
            f"fixed cutpoints need {dataset.C - 1} values for {dataset.C} categories, "
            f"got {len(fit_config.fixed_cutpoints)}"
        )


def run_chain(
    dataset: OrdinalDataset,
    q: float,
    hyper: Optional[Hyperparams],
    fit_config: FitConfig,
    rng: np.random.Generator,
) -> PosteriorSummary:
    """
    Initialize, run fit_config.iterations sweeps and summarize the retained
    (post-burn-in, thinned) draws.
    """
    spec = mixture_constants(q)
    hyper = hyper or Hyperparams.default(dataset.p)
    _check_inputs(dataset, hyper, fit_config)

    state = init_state(dataset, rng)
    if fit_config.variant == "fixed":
        state.cutpoints = Cutpoints(fit_config.fixed_cutpoints)

    retained = fit_config.retained
    beta_draws = np.empty((retained, dataset.p))
    cutpoint_draws = np.empty((retained, dataset.C - 1))
    sigma_draws = np.empty(retained)
    kept_iterations = np.empty(retained, dtype=np.int64)
    x = dataset.covariates

    logger.info(
        f"Chain start: q={spec.q} variant={fit_config.variant} n={dataset.n} p={dataset.p} "
        f"C={dataset.C} iterations={fit_config.iterations} burnin={fit_config.burnin}"
    )
    slot = 0
    for t in range(fit_config.iterations):
        if fit_config.variant == "full":
            state.sigma = step_sigma_full(state, dataset, spec, hyper, rng)
        else:
            state.sigma = step_sigma_collapsed(state.z, state.beta, x, spec, hyper, rng)
        state.v = step_v(state, dataset, spec, rng)
        state.beta = step_beta(state, dataset, spec, hyper, rng)
        state.z = step_z(state, dataset, spec, rng)
        if fit_config.variant != "fixed":
            state.cutpoints = step_delta(state, dataset, rng)
        state.check_invariants(dataset.responses)

        if t >= fit_config.burnin and (t - fit_config.burnin) % fit_config.thin == 0:
            beta_draws[slot] = state.beta
            cutpoint_draws[slot] = state.cutpoints.interior
            sigma_draws[slot] = state.sigma
            kept_iterations[slot] = t
            slot += 1

    summary = summarize(
        beta_draws, cutpoint_draws, sigma_draws, q=spec.q, variant=fit_config.variant, iterations=kept_iterations
    )
    logger.info(f"Chain done: q={spec.q} ratios={np.round(summary.ratios, 4).tolist()}")
    return summary


def summarize(
    beta_draws: np.ndarray,
    cutpoint_draws: np.ndarray,
    sigma_draws: np.ndarray,
    q: Optional[float] = None,
    variant: Optional[str] = None,
    iterations: Optional[np.ndarray] = None,
) -> PosteriorSummary:
    """
    Posterior means and the ratio mean(β) / mean(δ_{C-1}).

    Raises DegenerateScaleError when mean δ_{C-1} is within
    config.DEGENERATE_SCALE_TOL of zero.
    """
    beta_draws = np.atleast_2d(np.asarray(beta_draws, dtype=np.float64))
    cutpoint_draws = np.atleast_2d(np.asarray(cutpoint_draws, dtype=np.float64))
    sigma_draws = np.atleast_1d(np.asarray(sigma_draws, dtype=np.float64))
    if beta_draws.shape[0] == 0:
        raise InputValidationError("at least one retained draw is required")

    scale = float(cutpoint_draws[:, -1].mean())
    if abs(scale) < config.DEGENERATE_SCALE_TOL:
        raise DegenerateScaleError(
            "mean of the last interior cutpoint is too close to zero to identify the scale",
            {"mean_last_cutpoint": scale},
        )
    ratios = beta_draws.mean(axis=0) / scale

    traces = {f"beta_{j + 1}": beta_draws[:, j] for j in range(beta_draws.shape[1])}
    traces.update({f"delta_{c + 1}": cutpoint_draws[:, c] for c in range(cutpoint_draws.shape[1])})
    traces["sigma"] = sigma_draws
    return PosteriorSummary(
        beta_draws, cutpoint_draws, sigma_draws, ratios, trace_diagnostics(traces),
        q=q, variant=variant, iterations=iterations,
    )


def _autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    x = x - x.mean()
    n = x.shape[0]
    nfft = 1 << int(np.ceil(np.log2(2 * n - 1)))
    spectrum = np.fft.rfft(x, n=nfft)
    acf = np.fft.irfft(spectrum * np.conj(spectrum), n=nfft)[:n]
    if acf[0] <= 0:
        return np.zeros(min(max_lag, n - 1) + 1)
    return (acf / acf[0])[: max_lag + 1]


def trace_diagnostics(traces: Dict[str, np.ndarray], max_lag: int = 500) -> Dict[str, Dict[str, float]]:
    """
    Per-parameter trace summaries for external convergence inspection:
    mean, sd, 2.5%/97.5% quantiles, lag-1 autocorrelation, integrated
    autocorrelation time (truncated at the first negative lag) and the
    implied effective sample size.
    """
    out = {}
    for name, trace in traces.items():
        trace = np.asarray(trace, dtype=np.float64)
        n = trace.shape[0]
        entry = {
            "mean": float(trace.mean()),
            "sd": float(trace.std(ddof=1)) if n > 1 else 0.0,
            "q025": float(np.quantile(trace, 0.025)),
            "q975": float(np.quantile(trace, 0.975)),
        }
        if n > 2:
            acf = _autocorrelation(trace, max_lag)
            tail = acf[1:]
            cutoff = int(np.argmax(tail < 0)) if np.any(tail < 0) else tail.shape[0]
            tau_int = max(1.0 + 2.0 * float(np.sum(tail[:cutoff])), 1.0)
            entry["lag1_autocorrelation"] = float(acf[1]) if acf.shape[0] > 1 else 0.0
            entry["tau_int"] = tau_int
            entry["effective_sample_size"] = n / tau_int
        out[name] = entry
    return out


def _run_child(dataset, q, hyper, fit_config, seed) -> PosteriorSummary:
    return run_chain(dataset, q, hyper, fit_config, np.random.default_rng(seed))


def run_chains(
    dataset: OrdinalDataset,
    q: float,
    hyper: Optional[Hyperparams],
    fit_config: FitConfig,
    runs: int = 1,
    seed: Optional[SeedLike] = None,
    n_jobs: Optional[int] = None,
) -> MultiRunSummary:
    """
    Independent chains on child streams of `seed` (default fit_config.seed),
    run concurrently; estimates are averaged over runs.
    """
    if runs < 1:
        raise InputValidationError("runs must be at least 1")
    seeds = spawn_seeds(fit_config.seed if seed is None else seed, runs)
    n_jobs = min(n_jobs or config.THREADS, runs)
    if n_jobs == 1:
        results = [_run_child(dataset, q, hyper, fit_config, s) for s in seeds]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_run_child)(dataset, q, hyper, fit_config, s) for s in seeds
        )
    return MultiRunSummary(results)
