"""Push-forward dynamics on spaces of probability measures."""

import json

from ._core import (
    ConvergenceFailure,
    Error,
    EstimateInvalid,
    InvalidPoint,
    Measure,
    ParameterError,
    Space,
    System,
    apply_matrix,
    dense_periodic_measure,
    entropy_base,
    entropy_embedded,
    entropy_product,
    invariant_measure,
    iterate,
    matrices,
    prokhorov,
    push_forward,
    quantize,
    wasserstein,
    weak_star,
)
from ._core import run_config as _run_config

__version__ = "0.1.0"


def run_config(toml_text, threads=None):
    """Run an experiment config in memory; returns (summary dict, CSV text)."""
    summary, csv = _run_config(toml_text, threads)
    return json.loads(summary), csv


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
