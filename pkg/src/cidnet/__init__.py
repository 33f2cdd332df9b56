"""Conditionally independent dyad network models with Bayesian fits and
stratified cross-validation."""
from .graph import MISSING, DyadSet, Network, apply_mask, density, parse_edge_list, reciprocity
from .models import ERParams, LinkKind, LSMParams, SBMParams, SRParams, edge_probability, log_likelihood, sample_network

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "DyadSet",
    "ERParams",
    "LSMParams",
    "LinkKind",
    "Network",
    "SBMParams",
    "SRParams",
    "apply_mask",
    "density",
    "edge_probability",
    "log_likelihood",
    "parse_edge_list",
    "reciprocity",
    "sample_network",
]
