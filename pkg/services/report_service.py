"""
Orchestration behind the `fit`, `simulate` and `reproduce` commands: read
inputs, call the sampler, simulation and evaluation services, and write the
output set with its manifest.
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

import config
from models.pydantic_models import FitConfig, RunManifest
from models.records import BootstrapResult, ExperimentReport, MultiRunSummary, OrdinalDataset
from services.dataset_service import (
    encode_dataset,
    infer_levels,
    numeric_label,
    reject_constant_columns,
    standardize_covariates,
)
from services.evaluation_service import bootstrap_ci, build_table, coefficient_table
from services.sampler_service import run_chains
from services.simulation_service import build_scenario, generate
from storage.files import initialize_output_dir, read_table, write_csv, write_json, write_manifest
from utils.helpers import seed_sequence, sha256_file, spawn_seeds
from utils.logger import logger


def parse_levels(levels: Optional[str]) -> Optional[List[str]]:
    """'1,2,3' -> ['1', '2', '3']"""
    if levels is None:
        return None
    return [level.strip() for level in levels.split(",") if level.strip()]


def load_dataset(input_path, response: str, levels: Optional[str] = None) -> OrdinalDataset:
    """
    Read and code a CSV: declared levels are matched as text, otherwise the
    response is parsed as numbers and ordered ascending.
    """
    raw_labels, covariates, names = read_table(input_path, response)
    label_order = parse_levels(levels)
    if label_order is None:
        raw_labels = [numeric_label(label, row) for row, label in enumerate(raw_labels)]
        label_order = infer_levels(raw_labels)
    dataset = encode_dataset(raw_labels, covariates, label_order, names)
    reject_constant_columns(dataset)
    return dataset


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def draws_frame(fit: MultiRunSummary, covariate_names: Sequence[str]) -> pd.DataFrame:
    """Retained draws, one row per kept iteration (per run when runs > 1)"""
    frames = []
    for index, run in enumerate(fit.runs):
        columns = {"iteration": run.iterations}
        for j, name in enumerate(covariate_names):
            columns[f"beta_{name}"] = run.beta_draws[:, j]
        for c in range(run.cutpoint_draws.shape[1]):
            columns[f"delta_{c + 1}"] = run.cutpoint_draws[:, c]
        columns["sigma"] = run.sigma_draws
        frame = pd.DataFrame(columns)
        if len(fit.runs) > 1:
            frame.insert(0, "run", index + 1)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def run_fit(
    input_path,
    response: str,
    quantiles: Sequence[float],
    fit_config: FitConfig,
    out_dir,
    runs: int = 1,
    bootstrap: int = 0,
    level: float = config.DEFAULT_BOOTSTRAP_LEVEL,
    levels: Optional[str] = None,
    standardize: bool = False,
    emit_draws: bool = False,
) -> List[Path]:
    """
    Fit every requested quantile and write summary.json, coefficients.csv,
    optional draws_q<q>.csv files and manifest.json.

    Quantile i runs on child stream i of the master seed; its bootstrap uses
    a child of that stream.
    """
    manifest = RunManifest(
        command="fit",
        parameters={
            "response": response,
            "quantiles": list(quantiles),
            "iterations": fit_config.iterations,
            "burnin": fit_config.burnin,
            "thin": fit_config.thin,
            "variant": fit_config.variant,
            "fixed_cutpoints": list(fit_config.fixed_cutpoints) if fit_config.fixed_cutpoints else None,
            "runs": runs,
            "bootstrap": bootstrap,
            "level": level,
            "levels": levels,
            "standardize": standardize,
        },
        seed=fit_config.seed,
        input_digests={str(input_path): sha256_file(input_path)},
    )
    out_dir = initialize_output_dir(out_dir)
    dataset = load_dataset(input_path, response, levels)
    standardization = None
    if standardize:
        dataset, means, sds = standardize_covariates(dataset)
        standardization = {"means": means.tolist(), "sds": sds.tolist()}

    fits: Dict[float, MultiRunSummary] = {}
    intervals: Dict[float, BootstrapResult] = {}
    entries = []
    written: List[Path] = []
    for q, stream in zip(quantiles, spawn_seeds(fit_config.seed, len(quantiles))):
        fit = run_chains(dataset, q, None, fit_config, runs=runs, seed=stream)
        fits[q] = fit
        entry = fit.to_dict()
        if bootstrap:
            intervals[q] = bootstrap_ci(
                dataset, q, None, fit_config, bootstrap, level,
                seed=spawn_seeds(stream, 1)[0], point=fit.ratios,
            )
            entry["bootstrap"] = intervals[q].to_dict()
        entries.append(entry)
        if emit_draws:
            written.append(write_csv(out_dir / f"draws_q{q}.csv", draws_frame(fit, dataset.covariate_names)))

    summary = {
        "schema_version": config.SCHEMA_VERSION,
        "command": "fit",
        "quantiles": entries,
        "covariates": dataset.covariate_names,
        "category_labels": dataset.category_labels,
        "standardization": standardization,
    }
    written.insert(0, write_json(out_dir / "summary.json", summary))
    table = pd.DataFrame(coefficient_table(fits, intervals, dataset.covariate_names))
    written.insert(1, write_csv(out_dir / "coefficients.csv", table))

    manifest = manifest.model_copy(update={"outputs": [p.name for p in written]}).finish()
    written.append(write_manifest(out_dir, manifest))
    return written


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def run_simulate(design: str, error_law: str, q: float, n: int, seed: int, out_dir) -> List[Path]:
    """data.csv with columns y, x1[, x2] plus truth.json"""
    scenario = build_scenario(design, error_law, q, n)
    dataset, truth = generate(scenario, np.random.default_rng(seed_sequence(seed)))
    out_dir = initialize_output_dir(out_dir)

    frame = pd.DataFrame({"y": dataset.responses})
    for j, name in enumerate(dataset.covariate_names):
        frame[name] = dataset.covariates[:, j]
    data_path = write_csv(out_dir / "data.csv", frame)
    truth_path = write_json(out_dir / "truth.json", {
        "schema_version": config.SCHEMA_VERSION,
        "design": design,
        "error_law": error_law,
        "q": q,
        "n": n,
        "seed": seed,
        "beta": list(truth.beta),
        "cutpoints": list(truth.cutpoints),
        "ratios": list(truth.ratios),
        "error_shift": scenario.error_shift,
        "error_scale": scenario.error_scale,
    })
    manifest = RunManifest(
        command="simulate",
        parameters={"design": design, "error_law": error_law, "q": q, "n": n},
        seed=seed,
        outputs=[data_path.name, truth_path.name],
    ).finish()
    return [data_path, truth_path, write_manifest(out_dir, manifest)]


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------

def wide_table(report: ExperimentReport) -> pd.DataFrame:
    """RMSE with one row per method and one column per design/law/covariate/quantile"""
    long = pd.DataFrame(report.rows())
    long["column"] = (
        long["design"] + "|" + long["error_law"] + "|" + long["covariate"] + "|q=" + long["q"].map(str)
    )
    wide = long.pivot(index="method", columns="column", values="rmse")
    ordered = list(dict.fromkeys(long["column"]))
    return wide[ordered].reset_index()


def run_reproduce(
    target: str,
    runs: int,
    seed: int,
    out_dir,
    fast: bool = False,
    bootstrap: int = config.DEFAULT_BOOTSTRAP_REPLICATES,
    level: float = config.DEFAULT_BOOTSTRAP_LEVEL,
    error_laws: Optional[Sequence[str]] = None,
) -> List[Path]:
    """<target>.csv (wide), <target>_long.csv (plot-ready) and <target>.json"""
    report = build_table(target, runs, seed, fast, bootstrap, level, error_laws)
    out_dir = initialize_output_dir(out_dir)
    rows = report.rows()
    written = [
        write_csv(out_dir / f"{target}.csv", wide_table(report)),
        write_csv(out_dir / f"{target}_long.csv", pd.DataFrame(rows)),
        write_json(out_dir / f"{target}.json", {
            "schema_version": config.SCHEMA_VERSION,
            "target": target,
            "runs": runs,
            "seed": seed,
            "fast": fast,
            "cells": rows,
        }),
    ]
    manifest = RunManifest(
        command="reproduce",
        parameters={"target": target, "runs": runs, "fast": fast, "bootstrap": bootstrap, "level": level,
                    "error_laws": list(error_laws) if error_laws else None},
        seed=seed,
        outputs=[p.name for p in written],
    ).finish()
    written.append(write_manifest(out_dir, manifest))
    logger.info(f"Reproduced {target}: {len(report.cells)} cells")
    return written
