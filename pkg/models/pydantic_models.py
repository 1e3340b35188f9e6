import datetime
import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config

Variant = Literal["collapsed", "full", "fixed"]
Design = Literal["single-nonnull", "single-null", "multi-nonnull", "multi-partialnull"]
ErrorLaw = Literal["normal", "laplace"]
Method = Literal["borps", "full", "fixed", "qr"]


class QuantileSpec(BaseModel):
    """Target quantile with the normal-exponential mixture constants θ and τ."""
    model_config = ConfigDict(frozen=True)

    q: float = Field(..., gt=0.0, lt=1.0, description="Target quantile in (0, 1)")
    theta: float = Field(..., description="(1 - 2q) / (q(1 - q))")
    tau: float = Field(..., gt=0.0, description="sqrt(2 / (q(1 - q)))")

    @model_validator(mode="after")
    def _constants_match_q(self):
        if abs(self.tau ** 2 * self.q * (1.0 - self.q) - 2.0) > 1e-12:
            raise ValueError("tau^2 * q(1-q) must equal 2")
        if abs(self.theta - (1.0 - 2.0 * self.q) / (self.q * (1.0 - self.q))) > 1e-9 * max(1.0, abs(self.theta)):
            raise ValueError("theta does not match q")
        return self

    @property
    def tau2(self) -> float:
        return self.tau ** 2


class AldParams(BaseModel):
    """Location, scale and skew of an asymmetric Laplace distribution."""
    model_config = ConfigDict(frozen=True)

    mu: float = 0.0
    sigma: float = Field(1.0, gt=0.0)
    q: float = Field(0.5, gt=0.0, lt=1.0)


class Hyperparams(BaseModel):
    """Priors: σ⁻¹ ~ Gamma(c0, d0) and β ~ MVN(b0, B0)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    c0: float = Field(config.DEFAULT_C0, gt=0.0)
    d0: float = Field(config.DEFAULT_D0, gt=0.0)
    b0: np.ndarray
    B0: np.ndarray

    @field_validator("b0", mode="before")
    @classmethod
    def _as_vector(cls, value):
        return np.atleast_1d(np.asarray(value, dtype=np.float64))

    @field_validator("B0", mode="before")
    @classmethod
    def _as_matrix(cls, value):
        return np.atleast_2d(np.asarray(value, dtype=np.float64))

    @model_validator(mode="after")
    def _check_prior(self):
        p = self.b0.shape[0]
        if self.B0.shape != (p, p):
            raise ValueError(f"B0 must be {p}x{p}, got {self.B0.shape}")
        if not np.allclose(self.B0, self.B0.T):
            raise ValueError("B0 must be symmetric")
        try:
            np.linalg.cholesky(self.B0)
        except np.linalg.LinAlgError:
            raise ValueError("B0 must be positive definite")
        return self

    @classmethod
    def default(cls, p: int) -> "Hyperparams":
        return cls(b0=np.zeros(p), B0=config.DEFAULT_B0_SCALE * np.eye(p))

    @property
    def p(self) -> int:
        return self.b0.shape[0]

    @property
    def B0_inv(self) -> np.ndarray:
        return np.linalg.inv(self.B0)


class FitConfig(BaseModel):
    """Chain length, seed and sampler variant for one fit."""
    model_config = ConfigDict(frozen=True)

    iterations: int = Field(config.DEFAULT_ITERATIONS, gt=0)
    burnin: int = Field(config.DEFAULT_BURNIN, ge=0)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    variant: Variant = "collapsed"
    fixed_cutpoints: Optional[Tuple[float, ...]] = None
    thin: int = Field(config.DEFAULT_THIN, gt=0)

    @model_validator(mode="after")
    def _check_lengths(self):
        if self.burnin >= self.iterations:
            raise ValueError(f"burnin ({self.burnin}) must be below iterations ({self.iterations})")
        if self.variant == "fixed":
            cuts = self.fixed_cutpoints
            if not cuts:
                raise ValueError("variant 'fixed' needs fixed_cutpoints")
            if not all(math.isfinite(c) for c in cuts):
                raise ValueError("fixed cutpoints must be finite")
            if any(b <= a for a, b in zip(cuts, cuts[1:])):
                raise ValueError("fixed cutpoints must be strictly increasing")
        return self

    @classmethod
    def fast(cls, **overrides) -> "FitConfig":
        """Shorter chains for bootstrap smoke runs"""
        values = {"iterations": config.FAST_ITERATIONS, "burnin": config.FAST_BURNIN}
        values.update(overrides)
        return cls(**values)

    @property
    def retained(self) -> int:
        return -(-(self.iterations - self.burnin) // self.thin)


class SimulationScenario(BaseModel):
    """Generative recipe for one of the simulated dataset families."""
    model_config = ConfigDict(frozen=True)

    design: Design
    error_law: ErrorLaw
    q: float = Field(..., gt=0.0, lt=1.0)
    n: int = Field(config.SIM_N, gt=0)
    true_beta: Tuple[float, ...]
    true_cutpoints: Tuple[float, ...] = config.SIM_CUTPOINTS
    error_shift: float = 0.0
    error_scale: float = Field(1.0, gt=0.0)

    @property
    def p(self) -> int:
        return len(self.true_beta)


class GroundTruth(BaseModel):
    """Known coefficients, cutpoints and identifiable ratios of a scenario."""
    model_config = ConfigDict(frozen=True)

    beta: Tuple[float, ...]
    cutpoints: Tuple[float, ...]
    ratios: Tuple[float, ...]

    @model_validator(mode="after")
    def _ratios_match(self):
        scale = self.cutpoints[-1]
        expected = tuple(b / scale for b in self.beta)
        if not np.allclose(self.ratios, expected, rtol=0.0, atol=1e-12):
            raise ValueError("ratios must equal beta / last interior cutpoint")
        return self

    @classmethod
    def from_beta(cls, beta, cutpoints) -> "GroundTruth":
        beta = tuple(float(b) for b in beta)
        cutpoints = tuple(float(c) for c in cutpoints)
        return cls(beta=beta, cutpoints=cutpoints, ratios=tuple(b / cutpoints[-1] for b in beta))


class CellSpec(BaseModel):
    """One cell of an experiment table."""
    model_config = ConfigDict(frozen=True)

    design: Design
    error_law: ErrorLaw
    q: float = Field(..., gt=0.0, lt=1.0)
    method: Method = "borps"
    fixed_cutpoints: Optional[Tuple[float, ...]] = None
    label: str = ""

    @model_validator(mode="after")
    def _fixed_needs_cutpoints(self):
        if self.method == "fixed" and not self.fixed_cutpoints:
            raise ValueError("method 'fixed' needs fixed_cutpoints")
        return self

    @property
    def key(self) -> Tuple[str, str, float, str]:
        method = self.method if not self.label else f"{self.method}:{self.label}"
        return (self.design, self.error_law, self.q, method)


class RunManifest(BaseModel):
    """Provenance written beside every output set."""
    command: str
    parameters: Dict[str, object]
    seed: int
    tool_version: str = config.APP_VERSION
    schema_version: int = config.SCHEMA_VERSION
    input_digests: Dict[str, str] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    started_at: str = Field(
        default_factory=lambda: datetime.datetime.now(datetime.timezone.utc).isoformat()
    )
    finished_at: Optional[str] = None

    def finish(self) -> "RunManifest":
        return self.model_copy(
            update={"finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat()}
        )


class ErrorResponse(BaseModel):
    """Error payload printed to stderr when a command fails."""
    success: bool = Field(False, description="Operation failed")
    error: str = Field(..., description="Error message")
    error_type: str = Field(..., description="Exception class name")
    exit_code: int = Field(..., description="Process exit status")
    diagnostics: Optional[Dict[str, object]] = Field(None, description="Numeric failure context")
    traceback: Optional[str] = Field(None, description="Error traceback (debug only)")
