"""Hybrid conditional Gaussian density estimation for triad models."""

import json as _json

from ._cgpdf import (
    ConfigError,
    NumericalError,
    TriadParams,
    gaussian_l2_norm,
    hybrid_density,
    invariant_covariance,
    scaling_bandwidth_H,
    simulate,
    simulate_filtered,
    structural_constants,
    triad_preset,
)
from . import _cgpdf

__all__ = [
    "ConfigError",
    "NumericalError",
    "TriadParams",
    "gaussian_l2_norm",
    "hybrid_density",
    "invariant_covariance",
    "run",
    "scaling_bandwidth_H",
    "simulate",
    "simulate_filtered",
    "structural_constants",
    "triad_preset",
]


def run(command, config=None, sets=(), check=False):
    """Run simulate | estimate | compare | diagnose with a config dict."""
    text = _json.dumps(config) if config else ""
    return _cgpdf.run(command, text, list(sets), check)
