from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.error_utils import InputValidationError, SamplerInvariantError


class OrdinalDataset:
    """
    Ordinal responses coded 1..C with an n×p covariate matrix.

    No intercept column is ever stored; the model fixes the intercept to zero.
    Every category must be observed at least once, since the cutpoint update
    draws each interior cutpoint between occupied neighbouring categories.
    """

    def __init__(
        self,
        responses,
        covariates,
        category_labels: Sequence,
        covariate_names: Optional[Sequence[str]] = None,
    ):
        responses = np.asarray(responses)
        covariates = np.asarray(covariates, dtype=np.float64)
        if covariates.ndim == 1:
            covariates = covariates.reshape(-1, 1)
        if responses.ndim != 1:
            raise InputValidationError("responses must be a vector")
        if covariates.ndim != 2:
            raise InputValidationError("covariates must be an n×p matrix")
        if covariates.shape[0] != responses.shape[0]:
            raise InputValidationError(
                f"dimension mismatch: {responses.shape[0]} responses but {covariates.shape[0]} covariate rows"
            )
        if responses.shape[0] == 0:
            raise InputValidationError("dataset is empty")

        labels = list(category_labels)
        if len(labels) < 2:
            raise InputValidationError("an ordinal response needs at least two categories")
        if len(set(labels)) != len(labels):
            raise InputValidationError("category labels must be distinct")

        if not np.issubdtype(responses.dtype, np.integer):
            if not np.all(np.mod(responses, 1) == 0):
                raise InputValidationError("response codes must be integers")
            responses = responses.astype(np.int64)
        C = len(labels)
        bad = np.flatnonzero((responses < 1) | (responses > C))
        if bad.size:
            raise InputValidationError(f"response code {responses[bad[0]]} outside 1..{C}", row=int(bad[0]))

        counts = np.bincount(responses, minlength=C + 1)[1:]
        missing = [labels[c] for c in range(C) if counts[c] == 0]
        if missing:
            raise InputValidationError(f"unobserved category: {', '.join(map(str, missing))}")

        non_finite = np.argwhere(~np.isfinite(covariates))
        if non_finite.size:
            row, col = non_finite[0]
            names = list(covariate_names) if covariate_names else None
            raise InputValidationError(
                "non-finite covariate", row=int(row), column=names[col] if names else f"x{col + 1}"
            )

        if covariate_names is None:
            covariate_names = [f"x{j + 1}" for j in range(covariates.shape[1])]
        if len(covariate_names) != covariates.shape[1]:
            raise InputValidationError("covariate name count does not match the matrix")

        self.responses = responses.astype(np.int64)
        self.covariates = covariates
        self.category_labels = labels
        self.covariate_names = list(covariate_names)
        self.responses.setflags(write=False)
        self.covariates.setflags(write=False)

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    @property
    def C(self) -> int:
        return len(self.category_labels)

    def category_counts(self) -> np.ndarray:
        return np.bincount(self.responses, minlength=self.C + 1)[1:]

    def decode(self) -> List:
        """Map response codes back to the original labels"""
        return [self.category_labels[c - 1] for c in self.responses]

    def subset(self, rows) -> "OrdinalDataset":
        """Rows drawn (possibly with repeats) from this dataset"""
        rows = np.asarray(rows)
        return OrdinalDataset(
            self.responses[rows], self.covariates[rows], self.category_labels, self.covariate_names
        )

    def with_covariates(self, covariates: np.ndarray) -> "OrdinalDataset":
        return OrdinalDataset(self.responses, covariates, self.category_labels, self.covariate_names)


class Cutpoints:
    """(C+1)-vector δ with δ₀ = -∞, δ_C = +∞ and finite increasing interior."""

    def __init__(self, interior):
        interior = np.atleast_1d(np.asarray(interior, dtype=np.float64))
        if interior.ndim != 1 or interior.size == 0:
            raise InputValidationError("cutpoints need at least one interior value")
        if not np.all(np.isfinite(interior)):
            raise InputValidationError("interior cutpoints must be finite")
        if np.any(np.diff(interior) <= 0):
            raise InputValidationError(f"cutpoints must be strictly increasing: {interior.tolist()}")
        self.delta = np.concatenate(([-np.inf], interior, [np.inf]))

    @property
    def interior(self) -> np.ndarray:
        return self.delta[1:-1]

    @property
    def C(self) -> int:
        return self.delta.shape[0] - 1

    def bounds(self, codes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(δ_{y-1}, δ_y) for each response code y"""
        return self.delta[codes - 1], self.delta[codes]


class ChainState:
    """Full Gibbs state, owned by exactly one chain and mutated every sweep."""

    def __init__(self, beta, sigma: float, v, z, cutpoints: Cutpoints):
        self.beta = np.asarray(beta, dtype=np.float64)
        self.sigma = float(sigma)
        self.v = np.asarray(v, dtype=np.float64)
        self.z = np.asarray(z, dtype=np.float64)
        self.cutpoints = cutpoints

    def check_invariants(self, responses: np.ndarray) -> None:
        if not self.sigma > 0:
            raise SamplerInvariantError(f"sigma must be positive, got {self.sigma}")
        if not np.all(self.v > 0):
            raise SamplerInvariantError("latent weights v must be positive",
                                        {"min_v": float(np.min(self.v))})
        if np.any(np.diff(self.cutpoints.delta) <= 0):
            raise SamplerInvariantError("cutpoints lost their ordering",
                                        {"cutpoints": self.cutpoints.interior.tolist()})
        lower, upper = self.cutpoints.bounds(responses)
        outside = np.flatnonzero((self.z <= lower) | (self.z >= upper))
        if outside.size:
            i = int(outside[0])
            raise SamplerInvariantError(
                "latent response left its category interval",
                {"row": i, "z": float(self.z[i]), "lower": float(lower[i]), "upper": float(upper[i])},
            )


class PosteriorSummary:
    """
    Retained draws of one chain plus the identifiable ratios β / δ_{C-1}.

    The ratio is taken between posterior means, not averaged over per-draw ratios.
    """

    def __init__(
        self,
        beta_draws: np.ndarray,
        cutpoint_draws: np.ndarray,
        sigma_draws: np.ndarray,
        ratios: np.ndarray,
        diagnostics: Dict[str, Dict[str, float]],
        q: Optional[float] = None,
        variant: Optional[str] = None,
        iterations: Optional[np.ndarray] = None,
    ):
        self.beta_draws = beta_draws
        self.cutpoint_draws = cutpoint_draws
        self.sigma_draws = sigma_draws
        self.mean_beta = beta_draws.mean(axis=0)
        self.mean_cutpoints = cutpoint_draws.mean(axis=0)
        self.mean_sigma = float(sigma_draws.mean())
        self.ratios = ratios
        self.diagnostics = diagnostics
        self.q = q
        self.variant = variant
        self.iterations = iterations if iterations is not None else np.arange(beta_draws.shape[0])

    @property
    def retained(self) -> int:
        return self.beta_draws.shape[0]

    @property
    def retained_draws(self) -> np.ndarray:
        """(β, δ, σ) draws side by side, one row per retained iteration"""
        return np.column_stack([self.beta_draws, self.cutpoint_draws, self.sigma_draws])

    def to_dict(self) -> Dict:
        return {
            "q": self.q,
            "variant": self.variant,
            "ratios": self.ratios.tolist(),
            "mean_beta": self.mean_beta.tolist(),
            "mean_cutpoints": self.mean_cutpoints.tolist(),
            "mean_sigma": self.mean_sigma,
            "retained_draws": self.retained,
            "diagnostics": self.diagnostics,
        }


class MultiRunSummary:
    """Estimates averaged over independent chains, as in the repeated-run protocol."""

    def __init__(self, runs: List[PosteriorSummary]):
        if not runs:
            raise InputValidationError("at least one run is required")
        self.runs = runs
        self.ratios = np.mean([r.ratios for r in runs], axis=0)
        self.mean_beta = np.mean([r.mean_beta for r in runs], axis=0)
        self.mean_cutpoints = np.mean([r.mean_cutpoints for r in runs], axis=0)
        self.mean_sigma = float(np.mean([r.mean_sigma for r in runs]))
        self.q = runs[0].q
        self.variant = runs[0].variant

    @property
    def run_ratios(self) -> np.ndarray:
        return np.array([r.ratios for r in self.runs])

    def to_dict(self) -> Dict:
        out = {
            "q": self.q,
            "variant": self.variant,
            "ratios": self.ratios.tolist(),
            "mean_beta": self.mean_beta.tolist(),
            "mean_cutpoints": self.mean_cutpoints.tolist(),
            "mean_sigma": self.mean_sigma,
            "retained_draws": sum(r.retained for r in self.runs),
        }
        if len(self.runs) == 1:
            out["diagnostics"] = self.runs[0].diagnostics
        else:
            out["runs"] = [r.to_dict() for r in self.runs]
        return out


class BootstrapResult:
    """Percentile bootstrap interval for each covariate's ratio."""

    def __init__(self, point, lower, upper, level: float, replicates: np.ndarray):
        self.point = np.asarray(point, dtype=np.float64)
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        self.level = float(level)
        self.replicates = np.asarray(replicates, dtype=np.float64)
        if np.any(self.lower >= self.upper):
            raise SamplerInvariantError("bootstrap interval must have lower < upper",
                                        {"lower": self.lower.tolist(), "upper": self.upper.tolist()})

    @property
    def B(self) -> int:
        return self.replicates.shape[0]

    def contains(self, value: float = 0.0) -> np.ndarray:
        return (self.lower <= value) & (value <= self.upper)

    def to_dict(self) -> Dict:
        return {
            "level": self.level,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "replicates": self.B,
        }


class CellResult:
    """Scores for one experiment cell."""

    def __init__(
        self,
        key: Tuple[str, str, float, str],
        estimates: np.ndarray,
        truth: np.ndarray,
        rmse: np.ndarray,
        coverage: Optional[np.ndarray] = None,
        intervals: Optional[List[BootstrapResult]] = None,
    ):
        self.key = key
        self.estimates = estimates
        self.truth = truth
        self.rmse = rmse
        self.coverage = coverage
        self.intervals = intervals or []

    @property
    def run_count(self) -> int:
        return self.estimates.shape[0]


class ExperimentReport:
    """RMSE and coverage per (design, error law, quantile, method) cell."""

    def __init__(self, target: str):
        self.target = target
        self.cells: Dict[Tuple[str, str, float, str], CellResult] = {}

    def add(self, cell: CellResult) -> None:
        if np.any(cell.rmse < 0):
            raise SamplerInvariantError("negative RMSE", {"cell": list(cell.key)})
        self.cells[cell.key] = cell

    def rows(self) -> List[Dict]:
        """Long format: one row per cell and covariate"""
        rows = []
        for key in sorted(self.cells, key=lambda k: (k[0], k[1], k[2], k[3])):
            cell = self.cells[key]
            design, law, q, method = key
            for j in range(cell.truth.shape[0]):
                row = {
                    "design": design,
                    "error_law": law,
                    "q": q,
                    "method": method,
                    "covariate": f"x{j + 1}",
                    "truth": float(cell.truth[j]),
                    "mean_estimate": float(cell.estimates[:, j].mean()),
                    "rmse": float(cell.rmse[j]),
                    "runs": cell.run_count,
                }
                if cell.coverage is not None:
                    row["covers_truth"] = bool(cell.coverage[j])
                if cell.intervals:
                    row["lower"] = float(np.mean([ci.lower[j] for ci in cell.intervals]))
                    row["upper"] = float(np.mean([ci.upper[j] for ci in cell.intervals]))
                    row["excludes_zero"] = bool(all(not ci.contains(0.0)[j] for ci in cell.intervals))
                rows.append(row)
        return rows
