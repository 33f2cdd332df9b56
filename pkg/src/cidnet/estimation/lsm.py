"""Metropolis-within-Gibbs for the latent space model (distance form)."""
from __future__ import annotations

import numpy as np
from scipy import linalg, optimize
from scipy.sparse.csgraph import shortest_path

from ..graph import Network
from ..models import LinkKind, LSMParams, dyad_log_likelihood, pairwise_distances
from .base import (
    FitResult,
    McmcConfig,
    Priors,
    fill_diag_nan,
    observed_dyads,
    require_both_classes,
    summarize,
    truncated_normal_latents,
)


def graph_distance_matrix(net: Network) -> np.ndarray:
    """Hop distances on the observed edges, ignoring direction.

    Pairs in different components get the largest finite distance plus one.
    """
    A = (net.adjacency == 1)
    A = (A | A.T).astype(float)
    D = shortest_path(A, method="D", unweighted=True, directed=False)
    finite = np.isfinite(D)
    fill = D[finite].max() + 1 if finite.any() else 1.0
    D[~finite] = fill
    return D


def classical_mds(D: np.ndarray, d: int) -> np.ndarray:
    n = D.shape[0]
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D**2) @ J
    vals, vecs = np.linalg.eigh(B)
    order = np.argsort(vals)[::-1][:d]
    vals = np.clip(vals[order], 0.0, None)
    X = vecs[:, order] * np.sqrt(vals)
    # eigenvector signs are arbitrary; fix them for reproducibility
    signs = np.sign(X[np.argmax(np.abs(X), axis=0), np.arange(X.shape[1])])
    signs[signs == 0] = 1.0
    X = X * signs
    if X.shape[1] < d:
        X = np.hstack([X, np.zeros((n, d - X.shape[1]))])
    return X


def lsm_predictive(mu_draws: np.ndarray, position_draws: np.ndarray, link: LinkKind) -> np.ndarray:
    """Posterior-mean edge probabilities from retained draws.

    Depends on the draws only through pairwise distances, so any rigid
    motion applied to every draw leaves it unchanged.
    """
    link = LinkKind(link)
    n = position_draws.shape[1]
    P = np.zeros((n, n))
    for mu, pos in zip(mu_draws, position_draws):
        P += link(mu - pairwise_distances(pos))
    return fill_diag_nan(P / len(mu_draws))


def procrustes_align(position_draws: np.ndarray) -> np.ndarray:
    """Centre every draw and rotate it onto the first one."""
    ref = position_draws[0] - position_draws[0].mean(axis=0)
    out = np.empty_like(position_draws)
    for t, pos in enumerate(position_draws):
        X = pos - pos.mean(axis=0)
        R, _ = linalg.orthogonal_procrustes(X, ref)
        out[t] = X @ R
    return out


def _pair_counts(obs, n):
    """Edge and non-edge counts per unordered pair; the distance is shared by
    both orientations of a directed pair."""
    E = np.zeros((n, n))
    N = np.zeros((n, n))
    np.add.at(E, (obs.rows, obs.cols), obs.y == 1)
    np.add.at(N, (obs.rows, obs.cols), obs.y == 0)
    return E + E.T, N + N.T


def fit_lsm(
    net: Network,
    d: int,
    priors: Priors = Priors(),
    cfg: McmcConfig = McmcConfig(),
    link: LinkKind = LinkKind.PROBIT,
) -> FitResult:
    """Fit ``p_ij = link(mu - ||z_i - z_j||)`` by Metropolis-within-Gibbs.

    Positions start from classical MDS of graph distances and are updated one
    node at a time with spherical Gaussian proposals of scale
    ``cfg.metropolis_step``; ``mu`` gets an augmented Gibbs draw (probit) or a
    random-walk step (logistic).  Positions are recentred at the origin after
    every sweep.
    """
    if d < 1:
        raise ValueError("latent dimension d must be at least 1")
    link = LinkKind(link)
    obs = observed_dyads(net)
    require_both_classes(obs)
    n = net.n
    rng = cfg.rng()

    E, N = _pair_counts(obs, n)
    neighbours = [np.flatnonzero((E[i] + N[i]) > 0) for i in range(n)]
    pos_prec = 1.0 / priors.position_sd**2
    mu_prec = 1.0 / priors.intercept_sd**2

    pos = classical_mds(graph_distance_matrix(net), d)
    pos -= pos.mean(axis=0)

    def dyad_dist(p):
        diff = p[obs.rows] - p[obs.cols]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def mu_objective(mu, dist):
        eta = mu - dist
        return -np.sum(np.where(obs.y == 1, link.log_cdf(eta), link.log_cdf(-eta)))

    dist0 = dyad_dist(pos)
    mu = float(optimize.minimize_scalar(mu_objective, bounds=(-30, 30), args=(dist0,), method="bounded").x)

    def loglik(mu_, pos_):
        return dyad_log_likelihood(LSMParams(mu_, pos_, link), obs.rows, obs.cols, obs.y)

    initial_loglik = loglik(mu, pos)
    rate = obs.edges / obs.size
    mu_scale = 2.4 / np.sqrt(max(rate * (1 - rate), 0.01) * obs.size + mu_prec)
    step = cfg.metropolis_step

    mu_draws, pos_draws, trace = [], [], []
    accepted = 0
    proposed = 0
    for sweep in range(cfg.total_sweeps):
        dist = dyad_dist(pos)
        if link is LinkKind.PROBIT:
            w = truncated_normal_latents(mu - dist, obs.y, rng)
            prec = obs.size + mu_prec
            mu = float(np.sum(w + dist) / prec + rng.standard_normal() / np.sqrt(prec))
        else:
            prop = mu + mu_scale * rng.standard_normal()
            logr = (mu_objective(mu, dist) - mu_objective(prop, dist)
                    - 0.5 * mu_prec * (prop**2 - mu**2))
            if np.log(rng.random()) < logr:
                mu = prop

        noise = step * rng.standard_normal((n, d))
        log_u = np.log(rng.random(n))
        for i in range(n):
            nb = neighbours[i]
            cur = pos[i]
            new = cur + noise[i]
            others = pos[nb]
            d_cur = np.sqrt(((others - cur) ** 2).sum(axis=1))
            d_new = np.sqrt(((others - new) ** 2).sum(axis=1))
            e, ne = E[i, nb], N[i, nb]
            logr = (
                e @ (link.log_cdf(mu - d_new) - link.log_cdf(mu - d_cur))
                + ne @ (link.log_cdf(d_new - mu) - link.log_cdf(d_cur - mu))
                - 0.5 * pos_prec * (new @ new - cur @ cur)
            )
            proposed += 1
            if log_u[i] < logr:
                pos[i] = new
                accepted += 1
        pos -= pos.mean(axis=0)

        if cfg.is_retained(sweep):
            mu_draws.append(mu)
            pos_draws.append(pos.copy())
            trace.append(loglik(mu, pos))

    mu_draws = np.array(mu_draws)
    pos_draws = np.array(pos_draws)
    aligned = summarize(procrustes_align(pos_draws))
    return FitResult(
        model="lsm",
        directed=net.directed,
        posterior_mean=LSMParams(float(mu_draws.mean()), aligned["mean"], link),
        predictive=lsm_predictive(mu_draws, pos_draws, link),
        draws_summary={
            "mu": summarize(mu_draws),
            "positions": aligned,
        },
        final_loglik=trace[-1],
        initial_loglik=initial_loglik,
        loglik_trace=np.array(trace),
        draws={"mu": mu_draws, "positions": pos_draws},
        diagnostics={
            "retained_draws": len(trace),
            "link": link.value,
            "position_acceptance_rate": accepted / proposed,
        },
    )
