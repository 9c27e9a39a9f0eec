"""Probabilistic models trained from additive sufficient statistics."""

from ._core import (
    Model,
    SufstatError,
    fit_bayesnet,
    fit_classifier,
    fit_distribution,
    fit_hmm,
    fit_kmeans,
    fit_markov_chain,
    fit_mixture,
    run_cli,
)

__all__ = [
    "Model",
    "SufstatError",
    "fit_bayesnet",
    "fit_classifier",
    "fit_distribution",
    "fit_hmm",
    "fit_kmeans",
    "fit_markov_chain",
    "fit_mixture",
    "run_cli",
]
