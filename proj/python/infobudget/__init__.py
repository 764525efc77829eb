"""Information-budget planning, permutation gating and dispersion analysis."""

import json as _json

from ._infobudget import (
    InfobudgetError,
    bits_to_trust,
    clipped_budget,
    dispersion_stats,
    expected_harmonic_distance,
    isr,
    jensen_gap,
    kl_bernoulli,
    p_max,
    plan,
    prior_for_budget,
    qmv_bound,
    qmv_bound_finite,
    run_cli,
    synthetic_dispersion,
)
from ._infobudget import gate_synthetic as _gate_synthetic


def gate(item, config=None, model_seed=0):
    """Gate one item dict against the synthetic backend; returns the outcome dict."""
    return _json.loads(_gate_synthetic(_json.dumps(item), _json.dumps(config or {}), model_seed))


__all__ = [
    "InfobudgetError",
    "bits_to_trust",
    "clipped_budget",
    "dispersion_stats",
    "expected_harmonic_distance",
    "gate",
    "isr",
    "jensen_gap",
    "kl_bernoulli",
    "p_max",
    "plan",
    "prior_for_budget",
    "qmv_bound",
    "qmv_bound_finite",
    "run_cli",
    "synthetic_dispersion",
]
