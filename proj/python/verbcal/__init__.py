"""Calibration of verbalized confidence from chat models."""

import json as _json

from ._core import (  # noqa: F401
    AuthError,
    ConfigError,
    DatasetError,
    InvalidInput,
    ParseFailure,
    VerbcalError,
    brier,
    cross_fit_metrics,
    ece,
    entropy_score,
    fit_temperature,
    load_questions,
    metrics_table,
    parse_guess,
    parse_guess_prob,
    parse_topk,
    reliability_bins,
    render_prompt,
    run,
    sample_ids,
    scale_confidence,
    score_json,
    selective_auc,
)

__version__ = "0.1.0"


def score(config_path):
    """Score the manifest named by a run config; returns the report as a dict."""
    return _json.loads(score_json(str(config_path)))
