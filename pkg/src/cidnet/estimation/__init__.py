"""Bayesian estimation of the four CID models on partially observed networks."""
from __future__ import annotations

from ..graph import Network
from .base import (
    FitError,
    FitResult,
    McmcConfig,
    ModelSpec,
    Priors,
    SeparationError,
    predictive_edge_probability,
)
from .er import fit_er
from .lsm import fit_lsm, lsm_predictive
from .sbm import fit_sbm
from .sr import fit_sr

__all__ = [
    "FitError",
    "FitResult",
    "McmcConfig",
    "ModelSpec",
    "Priors",
    "SeparationError",
    "fit_er",
    "fit_lsm",
    "fit_model",
    "fit_sbm",
    "fit_sr",
    "lsm_predictive",
    "predictive_edge_probability",
]


def fit_model(net: Network, spec: ModelSpec, priors: Priors = Priors(), cfg: McmcConfig = McmcConfig()) -> FitResult:
    if spec.tag == "er":
        return fit_er(net, priors, cfg)
    if spec.tag == "sbm":
        return fit_sbm(net, spec.k, priors, cfg)
    if spec.tag == "sr":
        return fit_sr(net, priors, cfg, link=spec.link)
    return fit_lsm(net, spec.d, priors, cfg, link=spec.link)
