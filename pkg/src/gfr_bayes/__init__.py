"""Bayes estimation for the general failure rate model ``r(t) = a + b t^(theta-1)``
with a Farlie-Gumbel-Morgenstern prior on ``(a, b)`` and Type-II censored data."""

__version__ = "0.1.0"

from .model import (
    ModelConfig,
    ParamPair,
    hazard,
    lifetime_pdf,
    marginal_lifetime_pdf,
    plugin_hazard,
    plugin_reliability,
    prior_density,
    survival,
)
from .sample import CensoredSample, SummaryStats, summarize, validate
from .posterior import (
    EstimateSet,
    LossConstants,
    PosteriorContext,
    estimate,
    estimate_entropy,
    estimate_linex,
    estimate_squared_error,
    normalizer,
    phi,
    posterior_density,
)

__all__ = [
    "CensoredSample",
    "EstimateSet",
    "LossConstants",
    "ModelConfig",
    "ParamPair",
    "PosteriorContext",
    "SummaryStats",
    "estimate",
    "estimate_entropy",
    "estimate_linex",
    "estimate_squared_error",
    "hazard",
    "lifetime_pdf",
    "marginal_lifetime_pdf",
    "normalizer",
    "phi",
    "plugin_hazard",
    "plugin_reliability",
    "posterior_density",
    "prior_density",
    "summarize",
    "survival",
    "validate",
]
