"""
Samplers and densities the model needs, independent of the regression itself.

Every sampler takes an explicit ``numpy.random.Generator``; identical seeds give
identical draw sequences. Functions broadcast over numpy arrays where the Gibbs
steps need vectorized draws.
"""
from typing import Literal, Union

import numpy as np
from scipy.special import ndtr, ndtri

import config
from models.pydantic_models import AldParams
from utils.error_utils import DomainError, NumericError
from utils.logger import logger

ArrayLike = Union[float, np.ndarray]


def require_quantile(q: float, name: str = "q") -> float:
    if not (0.0 < q < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {q}")
    return float(q)


def _require_positive(value, name: str) -> None:
    value = np.asarray(value, dtype=np.float64)
    if np.any(value <= 0) or np.any(~np.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got min {np.min(value)}")


def _scalar_or_array(values: np.ndarray):
    return float(values) if np.ndim(values) == 0 else values


# ---------------------------------------------------------------------------
# Check loss and the asymmetric Laplace distribution
# ---------------------------------------------------------------------------

def check_loss(u: ArrayLike, q: float) -> ArrayLike:
    """ρ_q(u) = u(q - I(u < 0)): q|u| above zero, (1 - q)|u| below."""
    require_quantile(q)
    u = np.asarray(u, dtype=np.float64)
    return _scalar_or_array(u * (q - (u < 0)))


def check_loss_objective(residuals: np.ndarray, q: float) -> float:
    """Σ ρ_q(r_i) over a residual vector"""
    return float(np.sum(check_loss(np.asarray(residuals, dtype=np.float64), q)))


def ald_logpdf(u: ArrayLike, params: AldParams) -> ArrayLike:
    q, sigma = params.q, params.sigma
    scaled = (np.asarray(u, dtype=np.float64) - params.mu) / sigma
    return _scalar_or_array(np.log(q * (1.0 - q) / sigma) - check_loss(scaled, q))


def ald_pdf(u: ArrayLike, params: AldParams) -> ArrayLike:
    """(q(1-q)/σ) exp(-ρ_q((u - μ)/σ))"""
    return _scalar_or_array(np.exp(ald_logpdf(u, params)))


def ald_cdf(u: ArrayLike, params: AldParams) -> ArrayLike:
    """Closed form from integrating each exponential branch; equals q at μ."""
    q, sigma = params.q, params.sigma
    x = (np.asarray(u, dtype=np.float64) - params.mu) / sigma
    with np.errstate(over="ignore"):
        left = q * np.exp((1.0 - q) * np.minimum(x, 0.0))
        right = 1.0 - (1.0 - q) * np.exp(-q * np.maximum(x, 0.0))
    return _scalar_or_array(np.where(x < 0, left, right))


def sample_ald_mixture(params: AldParams, rng: np.random.Generator, size=None) -> ArrayLike:
    """
    ALD draw through the normal-exponential mixture
    z = μ + σθw + στ√w·u with w ~ Exp(1) and u ~ N(0, 1).
    """
    q = params.q
    theta = (1.0 - 2.0 * q) / (q * (1.0 - q))
    tau = np.sqrt(2.0 / (q * (1.0 - q)))
    w = np.asarray(rng.standard_exponential(size), dtype=np.float64)
    u = np.asarray(rng.standard_normal(size), dtype=np.float64)
    draws = params.mu + params.sigma * theta * w + params.sigma * tau * np.sqrt(w) * u
    return _scalar_or_array(draws)


# ---------------------------------------------------------------------------
# Inverse Gaussian, gamma and multivariate normal
# ---------------------------------------------------------------------------

def sample_inverse_gaussian(mean: ArrayLike, shape: ArrayLike, rng: np.random.Generator, size=None) -> ArrayLike:
    """
    IG(mean, shape) by the Michael-Schucany-Haas transformation.

    The smaller root is written as μ / (1 + a + sqrt(a² + 2a)) with
    a = μy / (2λ), which stays positive and accurate for very large means.
    """
    _require_positive(mean, "inverse Gaussian mean")
    _require_positive(shape, "inverse Gaussian shape")
    mu = np.asarray(mean, dtype=np.float64)
    lam = np.asarray(shape, dtype=np.float64)
    if size is None:
        size = np.broadcast(mu, lam).shape
    y = rng.standard_normal(size) ** 2
    a = mu * y / (2.0 * lam)
    x = mu / (1.0 + a + np.sqrt(a * a + 2.0 * a))
    u = rng.random(size)
    draws = np.where(u <= mu / (mu + x), x, mu * mu / x)
    return _scalar_or_array(draws)


def sample_gamma(shape: ArrayLike, rate: ArrayLike, rng: np.random.Generator, size=None) -> ArrayLike:
    """Gamma(shape, rate); numpy uses Marsaglia-Tsang with the shape < 1 boost."""
    _require_positive(shape, "gamma shape")
    _require_positive(rate, "gamma rate")
    return _scalar_or_array(rng.gamma(shape, 1.0 / np.asarray(rate, dtype=np.float64), size))


def cholesky_with_jitter(matrix: np.ndarray, what: str = "covariance") -> np.ndarray:
    """
    Lower Cholesky factor, adding diagonal jitter from config.JITTER_SCHEDULE
    (relative to the mean diagonal) when the plain factorization fails.
    """
    matrix = 0.5 * (matrix + matrix.T)
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.mean(np.abs(np.diag(matrix)))), 1e-300)
    identity = np.eye(matrix.shape[0])
    for jitter in config.JITTER_SCHEDULE:
        try:
            factor = np.linalg.cholesky(matrix + jitter * scale * identity)
            logger.debug(f"{what} factorized with jitter {jitter:g}")
            return factor
        except np.linalg.LinAlgError:
            continue
    eigenvalues = np.linalg.eigvalsh(matrix)
    with np.errstate(divide="ignore"):
        condition = float(np.linalg.cond(matrix))
    raise NumericError(
        f"{what} is not positive definite after jitter up to {config.JITTER_SCHEDULE[-1]:g}",
        {
            "condition_number": condition,
            "min_eigenvalue": float(eigenvalues[0]),
            "max_eigenvalue": float(eigenvalues[-1]),
            "max_jitter": config.JITTER_SCHEDULE[-1],
        },
    )


def sample_mvn(mean: np.ndarray, covariance: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    mean = np.asarray(mean, dtype=np.float64)
    covariance = np.atleast_2d(np.asarray(covariance, dtype=np.float64))
    if not np.any(covariance):
        return mean.copy()
    factor = cholesky_with_jitter(covariance)
    return mean + factor @ rng.standard_normal(mean.shape[0])


# ---------------------------------------------------------------------------
# Truncated normal
# ---------------------------------------------------------------------------

def _tail_draws(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Standard normal restricted to (a, b) with a beyond the tail switch.

    Wide intervals use the exponential proposal with optimal rate
    α = (a + sqrt(a² + 4)) / 2; intervals narrower than 1/a use a uniform
    proposal on (a, b), whose acceptance stays above e^{-1}.
    """
    out = np.empty_like(a)
    pending = np.arange(a.shape[0])
    while pending.size:
        la, ub = a[pending], b[pending]
        narrow = (ub - la) * la < 1.0
        alpha = 0.5 * (la + np.sqrt(la * la + 4.0))
        width = np.where(narrow, ub - la, 0.0)
        uniform_step = width * rng.random(pending.size)
        exponential_step = rng.standard_exponential(pending.size) / alpha
        proposal = la + np.where(narrow, uniform_step, exponential_step)
        log_u = np.log(rng.random(pending.size))
        log_accept = np.where(
            narrow,
            0.5 * (la * la - proposal * proposal),
            -0.5 * (proposal - alpha) ** 2,
        )
        accepted = (log_u <= log_accept) & (proposal > la) & (proposal < ub)
        out[pending[accepted]] = proposal[accepted]
        pending = pending[~accepted]
    return out


def sample_truncated_normal(
    mean: ArrayLike,
    variance: ArrayLike,
    lo: ArrayLike,
    hi: ArrayLike,
    rng: np.random.Generator,
) -> ArrayLike:
    """
    N(mean, variance) restricted to the open interval (lo, hi); either bound
    may be infinite.

    Inverse-CDF sampling handles mild truncation; once the interval lies more
    than config.TAIL_SWITCH_SD standard deviations out, draws come from
    one-sided rejection instead.
    """
    _require_positive(variance, "truncated normal variance")
    mean, variance, lo, hi = (np.asarray(x, dtype=np.float64) for x in (mean, variance, lo, hi))
    if np.any(lo >= hi):
        raise DomainError("truncation interval must satisfy lo < hi")
    mean, variance, lo, hi = np.broadcast_arrays(mean, variance, lo, hi)
    sd = np.sqrt(variance)
    a = np.ravel((lo - mean) / sd)
    b = np.ravel((hi - mean) / sd)

    # Mirror intervals below the mean so that the tail, if any, is on the right
    flip = b < 0
    a, b = np.where(flip, -b, a), np.where(flip, -a, b)

    x = np.empty_like(a)
    tail = a > config.TAIL_SWITCH_SD
    if np.any(tail):
        x[tail] = _tail_draws(a[tail], b[tail], rng)

    body = ~tail
    if np.any(body):
        ab, bb = a[body], b[body]
        u = rng.random(ab.shape[0])
        upper_side = ab > 0
        # Survival-function form above the mean keeps precision out to the switch point
        sa, sb = ndtr(-ab), ndtr(-bb)
        fa, fb = ndtr(ab), ndtr(bb)
        with np.errstate(invalid="ignore", divide="ignore"):
            x_upper = -ndtri(sa - u * (sa - sb))
            x_lower = ndtri(fa + u * (fb - fa))
        x[body] = np.where(upper_side, x_upper, x_lower)

    x = np.where(flip, -x, x).reshape(mean.shape)
    draws = mean + sd * x
    draws = np.clip(draws, np.nextafter(lo, np.inf), np.nextafter(hi, -np.inf))
    return _scalar_or_array(draws)


# ---------------------------------------------------------------------------
# Quantiles
# ---------------------------------------------------------------------------

def quantile_of(dist: Literal["normal", "laplace"], p: float, scale: float = 1.0) -> float:
    """
    Quantile of a standard normal or a zero-centred Laplace with scale b.

    The normal quantile comes from scipy's ndtri; the Laplace quantile is the
    closed form b·ln(2p) for p ≤ 1/2 and -b·ln(2 - 2p) above.
    """
    require_quantile(p, "p")
    if dist in ("normal", "standard-normal"):
        return float(ndtri(p)) * scale
    if dist in ("laplace", "standard-laplace"):
        if p <= 0.5:
            return scale * float(np.log(2.0 * p))
        return -scale * float(np.log(2.0 - 2.0 * p))
    raise DomainError(f"unknown distribution {dist!r}")


def standard_error_draws(dist: str, rng: np.random.Generator, size) -> np.ndarray:
    """Unit-scale, zero-centred error draws for the simulation error laws"""
    if dist == "normal":
        return rng.standard_normal(size)
    if dist == "laplace":
        return rng.laplace(0.0, 1.0, size)
    raise DomainError(f"unknown error law {dist!r}")
