"""Conditionally independent dyad models: parameters, edge probabilities,
observed-data log-likelihood and generative sampling."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .graph import MISSING, Network, NetworkDomainError, from_adjacency, universe_indices

# clamp used by log_likelihood only; exact 0/1 parameters still give -inf
PROB_FLOOR = 1e-12


class LinkKind(str, enum.Enum):
    PROBIT = "probit"
    LOGISTIC = "logistic"

    def __call__(self, x):
        if self is LinkKind.PROBIT:
            # ndtr is erfc-based, accurate to ~1e-16 absolute
            return special.ndtr(x)
        return special.expit(x)

    def log_cdf(self, x):
        """log link(x); log(1 - link(x)) is ``log_cdf(-x)`` by symmetry."""
        if self is LinkKind.PROBIT:
            return special.log_ndtr(x)
        return -np.logaddexp(0.0, -np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ERParams:
    p: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        _check_n(self.n)


@dataclass(frozen=True, eq=False)
class SBMParams:
    """Block assignments ``z`` are 0-based here; ``M[a, b]`` is the edge
    probability from block ``a`` to block ``b``."""

    k: int
    z: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.int64)
        M = np.asarray(self.M, dtype=float)
        if self.k < 1 or M.shape != (self.k, self.k):
            raise ValueError("M must be k x k with k >= 1")
        if z.ndim != 1 or z.size == 0 or z.min() < 0 or z.max() >= self.k:
            raise ValueError("z entries must be block indices in [0, k)")
        if np.any(~np.isfinite(M)) or np.any(M < 0) or np.any(M > 1):
            raise ValueError("M entries must be probabilities")
        _check_n(z.size)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "M", M)

    @property
    def n(self) -> int:
        return int(self.z.size)


@dataclass(frozen=True, eq=False)
class SRParams:
    beta0: float
    beta_send: np.ndarray
    beta_recv: np.ndarray
    link: LinkKind = LinkKind.PROBIT

    def __post_init__(self):
        s = np.asarray(self.beta_send, dtype=float)
        r = np.asarray(self.beta_recv, dtype=float)
        if s.ndim != 1 or s.shape != r.shape:
            raise ValueError("beta_send and beta_recv must be vectors of equal length")
        _check_n(s.size)
        object.__setattr__(self, "beta_send", s)
        object.__setattr__(self, "beta_recv", r)
        object.__setattr__(self, "link", LinkKind(self.link))

    @property
    def n(self) -> int:
        return int(self.beta_send.size)


@dataclass(frozen=True, eq=False)
class LSMParams:
    mu: float
    positions: np.ndarray
    link: LinkKind = LinkKind.PROBIT

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] < 1:
            raise ValueError("positions must be an n x d matrix with d >= 1")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        _check_n(pos.shape[0])
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "link", LinkKind(self.link))

    @property
    def n(self) -> int:
        return int(self.positions.shape[0])

    @property
    def d(self) -> int:
        return int(self.positions.shape[1])


ModelParams = Union[ERParams, SBMParams, SRParams, LSMParams]

MODEL_TAGS = {ERParams: "er", SBMParams: "sbm", SRParams: "sr", LSMParams: "lsm"}


def _check_n(n: int):
    if n < 2:
        raise ValueError("models need at least two nodes")


def model_tag(params: ModelParams) -> str:
    return MODEL_TAGS[type(params)]


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def probability_matrix(params: ModelParams) -> np.ndarray:
    """Full n x n matrix of edge probabilities; the diagonal is NaN."""
    n = params.n
    if isinstance(params, ERParams):
        P = np.full((n, n), float(params.p))
    elif isinstance(params, SBMParams):
        P = params.M[np.ix_(params.z, params.z)]
    elif isinstance(params, SRParams):
        P = params.link(params.beta0 + params.beta_send[:, None] + params.beta_recv[None, :])
    elif isinstance(params, LSMParams):
        P = params.link(params.mu - pairwise_distances(params.positions))
    else:
        raise TypeError(f"unknown parameter type {type(params).__name__}")
    P = np.array(P, dtype=float)
    np.fill_diagonal(P, np.nan)
    return P


def _linear_predictor(params: ModelParams, rows, cols):
    if isinstance(params, SRParams):
        return params.beta0 + params.beta_send[rows] + params.beta_recv[cols]
    if isinstance(params, LSMParams):
        diff = params.positions[rows] - params.positions[cols]
        return params.mu - np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return None


def edge_probability(params: ModelParams, i: int, j: int) -> float:
    i, j = int(i), int(j)
    if i == j:
        raise NetworkDomainError("edge probability is not defined for i == j")
    if not (0 <= i < params.n and 0 <= j < params.n):
        raise IndexError(f"dyad ({i}, {j}) outside a {params.n}-node model")
    if isinstance(params, ERParams):
        return float(params.p)
    if isinstance(params, SBMParams):
        return float(params.M[params.z[i], params.z[j]])
    eta = _linear_predictor(params, np.array([i]), np.array([j]))
    return float(params.link(eta)[0])


def dyad_log_likelihood(params: ModelParams, rows, cols, y) -> float:
    """Sum of Bernoulli log-likelihood terms for the listed observed dyads."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    y = np.asarray(y)
    if rows.size == 0:
        return 0.0
    eta = _linear_predictor(params, rows, cols)
    if eta is not None:
        link = params.link
        # exact 0/1 is impossible for finite eta; the floor only guards underflow
        lp = np.maximum(link.log_cdf(eta), math.log(PROB_FLOOR))
        lq = np.maximum(link.log_cdf(-eta), math.log(PROB_FLOOR))
        return float(np.sum(np.where(y == 1, lp, lq)))
    if isinstance(params, ERParams):
        p = np.full(rows.size, float(params.p))
    else:
        p = params.M[params.z[rows], params.z[cols]]
    ones = y == 1
    if np.any(p[ones] == 0.0) or np.any(p[~ones] == 1.0):
        return -math.inf
    p = np.clip(p, PROB_FLOOR, 1 - PROB_FLOOR)
    return float(np.sum(np.where(ones, np.log(p), np.log1p(-p))))


def log_likelihood(params: ModelParams, net: Network) -> float:
    """Log-likelihood of the observed dyads of ``net``; MISSING dyads are skipped."""
    if params.n != net.n:
        raise ValueError(f"parameters are for {params.n} nodes, network has {net.n}")
    rows, cols = universe_indices(net.n, net.directed)
    y = net.adjacency[rows, cols]
    keep = y != MISSING
    return dyad_log_likelihood(params, rows[keep], cols[keep], y[keep])


def sample_network(params: ModelParams, directed: bool, rng: np.random.Generator) -> Network:
    """Draw one network with independent Bernoulli dyads."""
    n = params.n
    rows, cols = universe_indices(n, directed)
    P = probability_matrix(params)
    draws = rng.random(rows.size) < P[rows, cols]
    adj = np.zeros((n, n), dtype=np.int8)
    adj[rows[draws], cols[draws]] = 1
    return from_adjacency(adj, directed)


def params_to_dict(params: ModelParams, directed: bool | None = None) -> dict:
    doc: dict = {"model": model_tag(params), "n": params.n}
    if directed is not None:
        doc["directed"] = bool(directed)
    if isinstance(params, ERParams):
        doc["p"] = float(params.p)
    elif isinstance(params, SBMParams):
        doc.update(k=int(params.k), z=params.z.tolist(), M=params.M.tolist())
    elif isinstance(params, SRParams):
        doc.update(
            link=params.link.value,
            beta0=float(params.beta0),
            beta_send=params.beta_send.tolist(),
            beta_recv=params.beta_recv.tolist(),
        )
    else:
        doc.update(
            link=params.link.value,
            d=params.d,
            mu=float(params.mu),
            positions=params.positions.tolist(),
        )
    return doc


def params_from_dict(doc: dict) -> ModelParams:
    """Inverse of :func:`params_to_dict`; raises ``ValueError`` on schema errors."""
    try:
        tag = doc["model"]
        if tag == "er":
            return ERParams(p=float(doc["p"]), n=int(doc["n"]))
        if tag == "sbm":
            return SBMParams(k=int(doc["k"]), z=np.asarray(doc["z"]), M=np.asarray(doc["M"]))
        if tag == "sr":
            return SRParams(
                beta0=float(doc["beta0"]),
                beta_send=np.asarray(doc["beta_send"]),
                beta_recv=np.asarray(doc["beta_recv"]),
                link=LinkKind(doc.get("link", "probit")),
            )
        if tag == "lsm":
            return LSMParams(
                mu=float(doc["mu"]),
                positions=np.asarray(doc["positions"]),
                link=LinkKind(doc.get("link", "probit")),
            )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"invalid parameter document: {exc!r}") from exc
    raise ValueError(f"unknown model tag {doc.get('model')!r}")


def params_to_json(params: ModelParams, directed: bool | None = None) -> str:
    return json.dumps(params_to_dict(params, directed), indent=2)


def params_from_json(text: str) -> ModelParams:
    return params_from_dict(json.loads(text))
