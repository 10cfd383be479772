"""Adaptive neighbor-graph learning and feature propagation.

Arrays are numpy float64. Config-level functions take the same JSON keys as
the angpn command-line tool (flag names with '_' for '-').
"""

import json

from ._core import (
    AngpnError,
    DataError,
    HyperParams,
    NumericError,
    ParameterError,
    ShapeError,
    TrainingError,
    anfp_exact,
    anfp_propagate,
    auto_gamma,
    format_cell,
    nfp_closed_form,
    nfp_iterate,
    pairwise_euclidean,
    s_step,
    simplex_project,
)
from . import _core


def default_config():
    return json.loads(_core.default_config())


def _config_text(config):
    return config if isinstance(config, str) else json.dumps(config)


def load_dataset(config, seed=0):
    """(features after the configured transform, labels) for a config dict."""
    return _core.load_dataset(_config_text(config), seed)


def run(config, seed=0):
    """Trains once at `seed`. Returns (metrics dict, class probabilities)."""
    metrics, probs = _core.run_once(_config_text(config), seed)
    return json.loads(metrics), probs


__all__ = [
    "AngpnError", "DataError", "HyperParams", "NumericError", "ParameterError", "ShapeError",
    "TrainingError", "anfp_exact", "anfp_propagate", "auto_gamma", "default_config",
    "format_cell", "load_dataset", "nfp_closed_form", "nfp_iterate", "pairwise_euclidean",
    "run", "s_step", "simplex_project",
]
