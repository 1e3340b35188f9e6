import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from models.pydantic_models import FitConfig  # noqa: E402
from services.simulation_service import gen_multi, gen_single  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def short_config():
    """A few hundred sweeps: enough to exercise every step, too short for accuracy checks"""
    return FitConfig(iterations=300, burnin=150, seed=11)


@pytest.fixture
def single_dataset():
    dataset, truth = gen_single("single-nonnull", "normal", 0.5, 300, np.random.default_rng(7))
    return dataset, truth


@pytest.fixture
def multi_dataset():
    dataset, truth = gen_multi("multi-nonnull", "normal", 0.5, 300, np.random.default_rng(8))
    return dataset, truth


@pytest.fixture
def csv_dataset(tmp_path, single_dataset):
    """The single-covariate simulation written as y,x1 CSV"""
    dataset, _ = single_dataset
    path = tmp_path / "data.csv"
    lines = ["y,x1"] + [f"{y},{float(x)!r}" for y, x in zip(dataset.responses, dataset.covariates[:, 0])]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
