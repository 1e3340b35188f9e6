import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models.pydantic_models import QuantileSpec
from models.records import OrdinalDataset
from services.distribution_service import require_quantile
from utils.error_utils import InputValidationError
from utils.helpers import as_float_matrix
from utils.logger import logger


def encode_dataset(
    raw_labels: Sequence,
    covariates,
    label_order: Sequence,
    covariate_names: Optional[Sequence[str]] = None,
) -> OrdinalDataset:
    """
    Code raw ordinal labels as 1..C following label_order.

    Raises InputValidationError for unknown labels, unobserved categories,
    dimension mismatches and non-finite covariates.
    """
    label_order = list(label_order)
    codes = {label: index + 1 for index, label in enumerate(label_order)}
    if len(codes) != len(label_order):
        raise InputValidationError("label order contains duplicates")

    covariates = as_float_matrix(covariates)
    raw_labels = list(raw_labels)
    if len(raw_labels) != covariates.shape[0]:
        raise InputValidationError(
            f"dimension mismatch: {len(raw_labels)} labels but {covariates.shape[0]} covariate rows"
        )

    responses = np.empty(len(raw_labels), dtype=np.int64)
    for row, label in enumerate(raw_labels):
        if label not in codes:
            raise InputValidationError(f"unknown label {label!r}", row=row)
        responses[row] = codes[label]

    return OrdinalDataset(responses, covariates, label_order, covariate_names)


def numeric_label(label, row: Optional[int] = None):
    """Parse a response label as a number; integral values come back as int"""
    try:
        value = float(label)
    except (TypeError, ValueError):
        raise InputValidationError(
            f"cannot infer an ordering for non-numeric label {label!r}; declare --levels", row=row
        )
    if not math.isfinite(value):
        raise InputValidationError(f"non-finite response {label!r}", row=row)
    return int(value) if value.is_integer() else value


def infer_levels(raw_labels: Sequence) -> List:
    """Ordered level set for responses declared without --levels: sorted distinct numeric values"""
    return sorted({numeric_label(label, row) for row, label in enumerate(raw_labels)})


def standardize_covariates(dataset: OrdinalDataset) -> Tuple[OrdinalDataset, np.ndarray, np.ndarray]:
    """
    z-score every covariate column (sample sd, ddof=1).

    Returns the new dataset with the column means and sds so callers can
    rescale coefficients back to the raw units.
    """
    x = dataset.covariates
    means = x.mean(axis=0)
    sds = x.std(axis=0, ddof=1) if dataset.n > 1 else np.zeros(dataset.p)
    for j, sd in enumerate(sds):
        if not sd > 0 or np.ptp(x[:, j]) == 0:
            raise InputValidationError("constant covariate column cannot be standardized",
                                       column=dataset.covariate_names[j])
    standardized = (x - means) / sds
    logger.debug(f"Standardized {dataset.p} covariate columns")
    return dataset.with_covariates(standardized), means, sds


def reject_constant_columns(dataset: OrdinalDataset) -> None:
    """A constant column would act as an intercept, which the model fixes at zero"""
    for j in range(dataset.p):
        if np.ptp(dataset.covariates[:, j]) == 0:
            raise InputValidationError(
                "constant covariate column (the model has no intercept; drop it)",
                column=dataset.covariate_names[j],
            )


def mixture_constants(q: float) -> QuantileSpec:
    """θ = (1 - 2q)/(q(1 - q)) and τ = sqrt(2/(q(1 - q)))"""
    q = require_quantile(q)
    spread = q * (1.0 - q)
    return QuantileSpec(q=q, theta=(1.0 - 2.0 * q) / spread, tau=math.sqrt(2.0 / spread))
