import json
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from models.pydantic_models import RunManifest
from utils.error_utils import InputValidationError
from utils.logger import logger

PathLike = Union[str, Path]


def initialize_output_dir(path: PathLike) -> Path:
    """Create the output directory (and parents) if it does not exist"""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def read_table(path: PathLike, response: str) -> Tuple[List[str], np.ndarray, List[str]]:
    """
    Read a comma-separated, UTF-8 CSV with a header row.

    Returns the raw response labels (as text), the remaining columns as a
    float covariate matrix, and the covariate names. Blank or non-numeric
    covariate cells are reported with their data row and column.
    """
    path = Path(path)
    if not path.is_file():
        raise InputValidationError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise InputValidationError(f"input file is empty: {path}")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputValidationError(f"cannot parse {path} as UTF-8 CSV: {e}")

    if response not in frame.columns:
        raise InputValidationError("response column not found in header", column=response)
    names = [column for column in frame.columns if column != response]
    if not names:
        raise InputValidationError("no covariate columns besides the response")

    covariates = np.empty((len(frame), len(names)))
    for j, name in enumerate(names):
        values = pd.to_numeric(frame[name].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise InputValidationError(
                f"non-numeric or non-finite covariate value {frame[name].iloc[bad[0]]!r}",
                row=int(bad[0]), column=name,
            )
        covariates[:, j] = values

    labels = [label.strip() for label in frame[response].tolist()]
    logger.info(f"Read {len(frame)} rows and {len(names)} covariates from {path}")
    return labels, covariates, names


def write_csv(path: PathLike, frame: pd.DataFrame) -> Path:
    """Header row, no index, '\\n' line endings; floats in shortest round-trip form"""
    path = Path(path)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def _to_builtin(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def to_json(payload: Dict[str, Any]) -> str:
    """Sorted keys and two-space indent so equal payloads serialize to equal bytes"""
    return json.dumps(payload, sort_keys=True, indent=2, default=_to_builtin, allow_nan=True) + "\n"


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.write_text(to_json(payload), encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_manifest(directory: PathLike, manifest: RunManifest) -> Path:
    """manifest.json beside the outputs it describes"""
    return write_json(Path(directory) / "manifest.json", manifest.model_dump(mode="json"))
