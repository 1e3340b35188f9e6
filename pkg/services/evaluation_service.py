"""
Scoring, bootstrap intervals and the experiment runner behind `reproduce`.

Bayesian cells are scored against the identifiable ratios β/δ_{C-1}; the
fixed-cutpoint and continuous-QR cells report raw coefficients and are
scored against the raw β, since their scale is pinned by the given cutpoints
(or by the continuous response) rather than by δ_{C-1}.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

import config
from models.pydantic_models import CellSpec, FitConfig, Hyperparams
from models.records import (
    BootstrapResult,
    CellResult,
    ExperimentReport,
    OrdinalDataset,
    PosteriorSummary,
)
from services.baseline_service import qr_baseline
from services.sampler_service import run_chain
from services.simulation_service import MULTI_DESIGNS, SINGLE_DESIGNS, build_scenario, generate, ground_truth
from utils.error_utils import DomainError, InputValidationError
from utils.helpers import SeedLike, spawn_seeds
from utils.logger import logger

TARGETS = ("table1", "table2", "fig2", "fig5")


def rmse(estimates, truth):
    """
    sqrt(mean((estimate - truth)²)) over runs.

    A list of scalars against a scalar truth gives a float; a runs×p matrix
    against a p-vector gives one value per covariate.
    """
    estimates = np.asarray(estimates, dtype=np.float64)
    if estimates.size == 0:
        raise InputValidationError("rmse needs at least one estimate")
    values = np.sqrt(np.mean((estimates - np.asarray(truth, dtype=np.float64)) ** 2, axis=0))
    return float(values) if np.ndim(values) == 0 else values


# ---------------------------------------------------------------------------
# Bootstrap
# ---------------------------------------------------------------------------

def resample_rows(dataset: OrdinalDataset, rng: np.random.Generator) -> np.ndarray:
    """
    Row indices drawn with replacement, redrawn (up to config.MAX_REDRAWS
    times) while a category is missing from the resample.
    """
    for _ in range(config.MAX_REDRAWS):
        rows = rng.integers(0, dataset.n, dataset.n)
        counts = np.bincount(dataset.responses[rows], minlength=dataset.C + 1)[1:]
        if np.all(counts > 0):
            return rows
    raise InputValidationError(
        f"every bootstrap resample in {config.MAX_REDRAWS} attempts dropped a category"
    )


def percentile_interval(replicates: np.ndarray, level: float) -> Tuple[np.ndarray, np.ndarray]:
    """Type-7 (linear interpolation) percentiles at (1-level)/2 and 1-(1-level)/2"""
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    tail = (1.0 - level) / 2.0
    lower, upper = np.quantile(np.asarray(replicates, dtype=np.float64), [tail, 1.0 - tail], axis=0)
    return lower, upper


def _bootstrap_replicate(dataset, q, hyper, fit_config, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rows = resample_rows(dataset, rng)
    return run_chain(dataset.subset(rows), q, hyper, fit_config, rng).ratios


def bootstrap_ci(
    dataset: OrdinalDataset,
    q: float,
    hyper: Optional[Hyperparams],
    fit_config: FitConfig,
    B: int = config.DEFAULT_BOOTSTRAP_REPLICATES,
    level: float = config.DEFAULT_BOOTSTRAP_LEVEL,
    seed: Optional[SeedLike] = None,
    point: Optional[np.ndarray] = None,
    n_jobs: Optional[int] = None,
) -> BootstrapResult:
    """
    Percentile bootstrap interval for the ratios.

    Replicate i resamples rows with replacement and reruns the sampler on
    child stream i + 1 of `seed`; child 0 is reserved for the full-data
    point fit, which is skipped when `point` is supplied.
    """
    if B < 2:
        raise DomainError(f"bootstrap needs at least 2 replicates, got {B}")
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")

    seeds = spawn_seeds(fit_config.seed if seed is None else seed, B + 1)
    if point is None:
        point = run_chain(dataset, q, hyper, fit_config, np.random.default_rng(seeds[0])).ratios

    n_jobs = min(n_jobs or config.THREADS, B)
    logger.info(f"Bootstrap start: q={q} B={B} level={level} n_jobs={n_jobs}")
    if n_jobs == 1:
        replicates = [_bootstrap_replicate(dataset, q, hyper, fit_config, s) for s in seeds[1:]]
    else:
        replicates = Parallel(n_jobs=n_jobs)(
            delayed(_bootstrap_replicate)(dataset, q, hyper, fit_config, s) for s in seeds[1:]
        )
    replicates = np.vstack(replicates)
    lower, upper = percentile_interval(replicates, level)
    logger.info(f"Bootstrap done: q={q} lower={np.round(lower, 4).tolist()} upper={np.round(upper, 4).tolist()}")
    return BootstrapResult(point, lower, upper, level, replicates)


def significant(result: BootstrapResult, index: int) -> bool:
    """True when the interval for covariate `index` excludes zero"""
    if not 0 <= index < result.lower.shape[0]:
        raise InputValidationError(f"covariate index {index} out of range 0..{result.lower.shape[0] - 1}")
    return not bool(result.contains(0.0)[index])


def coefficient_table(
    fits: Dict[float, PosteriorSummary],
    intervals: Optional[Dict[float, BootstrapResult]] = None,
    covariate_names: Optional[Sequence[str]] = None,
) -> List[Dict]:
    """One row per (quantile, covariate): ratio, and interval and significance when bootstrapped"""
    intervals = intervals or {}
    rows = []
    for q in sorted(fits):
        ratios = np.asarray(fits[q].ratios)
        names = list(covariate_names) if covariate_names else [f"x{j + 1}" for j in range(ratios.shape[0])]
        for j, name in enumerate(names):
            row = {"q": q, "covariate": name, "ratio": float(ratios[j])}
            if q in intervals:
                row["lower"] = float(intervals[q].lower[j])
                row["upper"] = float(intervals[q].upper[j])
                row["significant"] = significant(intervals[q], j)
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Experiment cells
# ---------------------------------------------------------------------------

def _method_config(cell: CellSpec, fit_config: FitConfig) -> FitConfig:
    values = fit_config.model_dump()
    if cell.method == "full":
        values.update(variant="full", fixed_cutpoints=None)
    elif cell.method == "fixed":
        values.update(variant="fixed", fixed_cutpoints=tuple(cell.fixed_cutpoints))
    else:
        values.update(variant="collapsed", fixed_cutpoints=None)
    return FitConfig(**values)


def _run_once(
    cell: CellSpec,
    fit_config: FitConfig,
    seed,
    bootstrap: int,
    level: float,
    n_jobs: int,
) -> Tuple[np.ndarray, Optional[BootstrapResult]]:
    rng = np.random.default_rng(seed)
    dataset, _ = generate(build_scenario(cell.design, cell.error_law, cell.q), rng)

    if cell.method == "qr":
        coefficients = qr_baseline(dataset.responses.astype(np.float64), dataset.covariates, cell.q)
        return coefficients[1:], None

    summary = run_chain(dataset, cell.q, None, _method_config(cell, fit_config), rng)
    estimate = summary.mean_beta if cell.method == "fixed" else summary.ratios
    interval = None
    if bootstrap:
        interval = bootstrap_ci(
            dataset, cell.q, None, _method_config(cell, fit_config), bootstrap, level,
            seed=spawn_seeds(seed, 1)[0], point=summary.ratios, n_jobs=n_jobs,
        )
    return estimate, interval


def run_experiment(
    cell: CellSpec,
    runs: int = config.DEFAULT_RUNS,
    seed: SeedLike = 0,
    fit_config: Optional[FitConfig] = None,
    bootstrap: int = 0,
    level: float = config.DEFAULT_BOOTSTRAP_LEVEL,
    n_jobs: Optional[int] = None,
) -> CellResult:
    """
    Score one (design, error law, q, method) cell over `runs` independent
    datasets, each generated and fitted on its own child stream of `seed`.

    The continuous-QR baseline is deterministic given the data, so it is
    scored on a single run. With `bootstrap` > 0 each run also gets a
    percentile interval and the cell records whether it covers the truth.
    """
    if runs < 1:
        raise InputValidationError("runs must be at least 1")
    if cell.method == "qr":
        runs = 1
    fit_config = fit_config or FitConfig()
    scenario = build_scenario(cell.design, cell.error_law, cell.q)
    known = ground_truth(scenario)
    truth = np.asarray(known.ratios if cell.method in ("borps", "full") else known.beta, dtype=np.float64)

    seeds = spawn_seeds(seed, runs)
    n_jobs = n_jobs or config.THREADS
    logger.info(f"Cell start: {cell.key} runs={runs}")
    if bootstrap or n_jobs == 1 or runs == 1:
        # Bootstrap replicates carry the parallelism, so runs stay sequential
        outcomes = [_run_once(cell, fit_config, s, bootstrap, level, n_jobs) for s in seeds]
    else:
        outcomes = Parallel(n_jobs=min(n_jobs, runs))(
            delayed(_run_once)(cell, fit_config, s, 0, level, 1) for s in seeds
        )

    estimates = np.vstack([estimate for estimate, _ in outcomes])
    intervals = [interval for _, interval in outcomes if interval is not None]
    coverage = None
    if intervals:
        coverage = np.all([ci.contains(truth) for ci in intervals], axis=0)
    result = CellResult(cell.key, estimates, truth, rmse(estimates, truth), coverage, intervals)
    logger.info(f"Cell done: {cell.key} rmse={np.round(np.atleast_1d(result.rmse), 4).tolist()}")
    return result


# ---------------------------------------------------------------------------
# Experiment tables
# ---------------------------------------------------------------------------

def cells_for(target: str, error_laws: Optional[Sequence[str]] = None) -> List[CellSpec]:
    """
    Cells behind each reproducible table or figure:
      table1  single-covariate designs, BORPS and continuous QR
      table2  multiple-covariate designs, BORPS and continuous QR
      fig2    fixed-cutpoint sampler at correct, slight and dramatic misspecification
      fig5    BORPS with bootstrap intervals on every design
    """
    quantiles = config.SIM_QUANTILES
    if target == "table1":
        laws = error_laws or ("normal", "laplace")
        return [CellSpec(design=d, error_law=law, q=q, method=m)
                for d in SINGLE_DESIGNS for law in laws for q in quantiles for m in ("borps", "qr")]
    if target == "table2":
        laws = error_laws or ("normal", "laplace")
        return [CellSpec(design=d, error_law=law, q=q, method=m)
                for d in MULTI_DESIGNS for law in laws for q in quantiles for m in ("borps", "qr")]
    if target == "fig2":
        laws = error_laws or ("normal",)
        return [CellSpec(design="single-nonnull", error_law=law, q=q, method="fixed",
                         fixed_cutpoints=cuts, label=label)
                for law in laws for label, cuts in config.FIXED_CUTPOINT_SETTINGS.items() for q in quantiles]
    if target == "fig5":
        laws = error_laws or ("normal",)
        return [CellSpec(design=d, error_law=law, q=q, method="borps")
                for d in SINGLE_DESIGNS + MULTI_DESIGNS for law in laws for q in quantiles]
    raise InputValidationError(f"unknown target {target!r}; expected one of {', '.join(TARGETS)}")


def build_table(
    target: str,
    runs: int = config.DEFAULT_RUNS,
    seed: SeedLike = 0,
    fast: bool = False,
    bootstrap: int = config.DEFAULT_BOOTSTRAP_REPLICATES,
    level: float = config.DEFAULT_BOOTSTRAP_LEVEL,
    error_laws: Optional[Sequence[str]] = None,
    n_jobs: Optional[int] = None,
) -> ExperimentReport:
    """
    Run every cell of a target. Cell i uses child stream i of `seed`, so a
    cell's numbers do not depend on which other cells ran. fig5 runs one
    dataset per cell with `bootstrap` replicates.
    """
    cells = cells_for(target, error_laws)
    fit_config = FitConfig.fast() if fast else FitConfig()
    report = ExperimentReport(target)
    for cell, cell_seed in zip(cells, spawn_seeds(seed, len(cells))):
        if target == "fig5":
            result = run_experiment(cell, 1, cell_seed, fit_config, bootstrap, level, n_jobs)
        else:
            result = run_experiment(cell, runs, cell_seed, fit_config, n_jobs=n_jobs)
        report.add(result)
    logger.info(f"Target {target}: {len(cells)} cells done")
    return report
