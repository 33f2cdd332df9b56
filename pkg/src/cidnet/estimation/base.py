from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ..graph import MISSING, Network, NetworkDomainError, universe_indices
from ..models import LinkKind, ModelParams, params_to_dict


class FitError(RuntimeError):
    """The model cannot be fitted to the observed part of the network."""


class SeparationError(FitError):
    """Observed dyads are all edges or all non-edges."""


@dataclass(frozen=True)
class McmcConfig:
    burn_in: int = 500
    draws: int = 1000
    thin: int = 1
    seed: int = 0
    metropolis_step: float = 0.1

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if self.draws < 10:
            raise ValueError("draws must be at least 10")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if not self.metropolis_step > 0:
            raise ValueError("metropolis_step must be positive")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    @property
    def total_sweeps(self) -> int:
        return self.burn_in + self.draws * self.thin

    def is_retained(self, sweep: int) -> bool:
        after = sweep - self.burn_in
        return after >= 0 and (after + 1) % self.thin == 0


@dataclass(frozen=True)
class Priors:
    er_beta: tuple[float, float] = (1.0, 1.0)
    block_beta: tuple[float, float] = (1.0, 1.0)
    block_concentration: float = 1.0
    intercept_sd: float = 10.0
    node_effect_sd: float = 1.0
    position_sd: float = 1.0

    def __post_init__(self):
        values = [*self.er_beta, *self.block_beta, self.block_concentration,
                  self.intercept_sd, self.node_effect_sd, self.position_sd]
        if any(not (v > 0) for v in values):
            raise ValueError("all prior hyperparameters must be strictly positive")


@dataclass(frozen=True)
class ModelSpec:
    """Which model to fit, with its hyperparameters."""

    tag: str
    k: int | None = None
    d: int | None = None
    link: LinkKind = LinkKind.PROBIT

    def __post_init__(self):
        if self.tag not in ("er", "sbm", "sr", "lsm"):
            raise ValueError(f"unknown model {self.tag!r}")
        if self.tag == "sbm" and (self.k is None or self.k < 1):
            raise ValueError("sbm needs k >= 1")
        if self.tag == "lsm" and (self.d is None or self.d < 1):
            raise ValueError("lsm needs d >= 1")
        object.__setattr__(self, "link", LinkKind(self.link))

    @property
    def label(self) -> str:
        if self.tag == "sbm":
            return f"sbm{self.k}"
        if self.tag == "lsm":
            return f"lsm{self.d}"
        return self.tag

    @classmethod
    def parse(cls, text: str, link: str = "probit") -> "ModelSpec":
        """Parse ``er``, ``sr``, ``sbm3`` / ``sbm:3`` or ``lsm2`` / ``lsm:2``."""
        text = text.strip().lower().replace(":", "")
        for tag, key in (("sbm", "k"), ("lsm", "d")):
            if text.startswith(tag):
                rest = text[len(tag):]
                if not rest.isdigit():
                    raise ValueError(f"{tag} needs a size, e.g. {tag}2")
                return cls(tag, **{key: int(rest)}, link=link)
        return cls(text, link=link)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Posterior summary of one fit.

    ``predictive`` is the n x n matrix of posterior-mean edge probabilities
    with a NaN diagonal.  ``draws`` keeps raw retained draws that later
    computations need (LSM positions, for instance).
    """

    model: str
    directed: bool
    posterior_mean: ModelParams
    predictive: np.ndarray
    draws_summary: dict
    final_loglik: float
    initial_loglik: float
    loglik_trace: np.ndarray
    membership: np.ndarray | None = None
    draws: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.predictive.shape[0]

    def to_dict(self, labels: list[str] | None = None) -> dict:
        rows, cols = universe_indices(self.n, self.directed)
        p = self.predictive[rows, cols]
        doc = {
            "model": self.model,
            "directed": self.directed,
            "params": params_to_dict(self.posterior_mean, self.directed),
            "predictive": [[int(i), int(j), float(v)] for i, j, v in zip(rows, cols, p)],
            "draws_summary": _jsonable(self.draws_summary),
            "final_loglik": float(self.final_loglik),
            "initial_loglik": float(self.initial_loglik),
            "mean_loglik": float(np.mean(self.loglik_trace)),
            "diagnostics": _jsonable(self.diagnostics),
        }
        if labels is not None:
            doc["node_labels"] = list(labels)
        if self.membership is not None:
            doc["membership"] = self.membership.tolist()
        return doc

    def to_json(self, labels: list[str] | None = None) -> str:
        return json.dumps(self.to_dict(labels), indent=1, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def predictive_edge_probability(fit: FitResult, i: int, j: int) -> float:
    if int(i) == int(j):
        raise NetworkDomainError("predictive probability is not defined for i == j")
    n = fit.n
    if not (0 <= int(i) < n and 0 <= int(j) < n):
        raise IndexError(f"dyad ({i}, {j}) outside a {n}-node fit")
    return float(fit.predictive[int(i), int(j)])


@dataclass(frozen=True)
class ObservedDyads:
    rows: np.ndarray
    cols: np.ndarray
    y: np.ndarray

    @property
    def size(self) -> int:
        return int(self.y.size)

    @property
    def edges(self) -> int:
        return int(np.count_nonzero(self.y))


def observed_dyads(net: Network) -> ObservedDyads:
    rows, cols = universe_indices(net.n, net.directed)
    y = net.adjacency[rows, cols]
    keep = y != MISSING
    return ObservedDyads(rows[keep], cols[keep], y[keep].astype(np.int8))


def require_observed(obs: ObservedDyads):
    if obs.size == 0:
        raise FitError("no observed dyads to fit")


def require_both_classes(obs: ObservedDyads):
    require_observed(obs)
    if obs.edges == 0 or obs.edges == obs.size:
        raise SeparationError(
            "observed dyads are all edges or all non-edges; the posterior is improper"
        )


def truncated_normal_latents(eta: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw ``w ~ N(eta, 1)`` truncated to ``w > 0`` where ``y == 1`` and
    ``w < 0`` elsewhere, by inversion on the tail side."""
    u = rng.random(eta.size)
    sign = np.where(y == 1, 1.0, -1.0)
    # mass of the allowed side, clipped so ndtri never sees 0
    tail = np.maximum(u * special.ndtr(sign * eta), 1e-300)
    return eta - sign * special.ndtri(tail)


def summarize(stack: np.ndarray) -> dict:
    stack = np.asarray(stack, dtype=float)
    return {"mean": stack.mean(axis=0), "sd": stack.std(axis=0)}


def fill_diag_nan(P: np.ndarray) -> np.ndarray:
    np.fill_diagonal(P, np.nan)
    return P
