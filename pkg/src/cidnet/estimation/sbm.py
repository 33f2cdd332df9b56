"""Gibbs sampler for the stochastic block model on partially observed networks."""
from __future__ import annotations

import warnings

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.optimize import linear_sum_assignment

from ..graph import Network
from ..models import SBMParams
from .base import FitError, FitResult, McmcConfig, Priors, fill_diag_nan, observed_dyads, require_observed

_EPS = 1e-12


def spectral_init(A: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Initial blocks from k-means on the leading eigenvectors of A + A^T."""
    n = A.shape[0]
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    S = A + A.T
    vals, vecs = np.linalg.eigh(S)
    top = np.argsort(-np.abs(vals), kind="stable")[:k]
    X = vecs[:, top] * np.abs(vals[top])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, labels = kmeans2(X, k, minit="++", seed=rng)
    # make sure every block starts non-empty
    labels = np.asarray(labels, dtype=np.int64)
    for b in range(k):
        if not np.any(labels == b):
            labels[rng.integers(n)] = b
    return labels


def block_counts(A, O, z, k, directed):
    """Observed edge and non-edge counts per block pair."""
    Z = np.eye(k)[z]
    E = Z.T @ A @ Z
    T = Z.T @ O @ Z
    if not directed:
        # diagonal pairs were counted once per orientation
        E[np.diag_indices(k)] /= 2
        T[np.diag_indices(k)] /= 2
    return E, T - E


def sample_block_matrix(E, N, prior, directed, rng):
    a, b = prior
    M = rng.beta(a + E, b + N)
    if not directed:
        M = np.triu(M) + np.triu(M, 1).T
    return M


def block_loglik(E, N, M, directed) -> float:
    logM = np.log(np.clip(M, _EPS, 1 - _EPS))
    log1mM = np.log1p(-np.clip(M, _EPS, 1 - _EPS))
    terms = E * logM + N * log1mM
    if not directed:
        terms = np.triu(terms)
    return float(terms.sum())


def align_labels(z: np.ndarray, reference: np.ndarray, k: int) -> np.ndarray:
    """Permutation ``perm`` maximizing agreement of ``perm[z]`` with ``reference``.

    Solved exactly as an assignment problem, which equals the best of all k!
    relabelings.
    """
    overlap = np.zeros((k, k))
    np.add.at(overlap, (z, reference), 1)
    row, col = linear_sum_assignment(-overlap)
    perm = np.empty(k, dtype=np.int64)
    perm[row] = col
    return perm


def fit_sbm(
    net: Network,
    k: int,
    priors: Priors = Priors(),
    cfg: McmcConfig = McmcConfig(),
) -> FitResult:
    """Alternate node-wise block updates and conjugate Beta draws of M.

    Block weights are integrated out under a symmetric Dirichlet prior, so
    node ``i`` joins block ``a`` with weight ``(n_a + concentration)`` times
    its likelihood.  Memberships are reported after relabeling each retained
    draw against the running modal assignment; predictive probabilities are
    averaged per draw and need no relabeling.
    """
    n = net.n
    if k < 1:
        raise FitError("k must be at least 1")
    if k > n:
        raise FitError(f"k={k} exceeds the number of nodes n={n}")
    obs = observed_dyads(net)
    require_observed(obs)
    directed = net.directed
    rng = cfg.rng()

    O = net.observed_mask().astype(float)
    A = (net.adjacency == 1).astype(float)
    alpha = priors.block_concentration

    z = spectral_init(A, k, rng)
    E, N = block_counts(A, O, z, k, directed)
    M = sample_block_matrix(E, N, priors.block_beta, directed, rng)
    initial_loglik = block_loglik(E, N, M, directed)

    Z = np.eye(k)[z]
    AZ_out = A @ Z  # edges from i into each block
    OZ_out = O @ Z
    AZ_in = A.T @ Z
    OZ_in = O.T @ Z
    sizes = Z.sum(axis=0)

    membership_counts = np.zeros((n, k))
    M_sum = np.zeros((k, k))
    M_sq = np.zeros((k, k))
    P_sum = np.zeros((n, n))
    size_draws = []
    trace = []
    retained = 0

    for sweep in range(cfg.total_sweeps):
        logM = np.log(np.clip(M, _EPS, 1 - _EPS))
        log1mM = np.log1p(-np.clip(M, _EPS, 1 - _EPS))
        for i in range(n):
            old = z[i]
            e_out = AZ_out[i]
            t_out = OZ_out[i]
            ll = logM @ e_out + log1mM @ (t_out - e_out)
            if directed:
                e_in = AZ_in[i]
                t_in = OZ_in[i]
                ll += logM.T @ e_in + log1mM.T @ (t_in - e_in)
            counts = sizes.copy()
            counts[old] -= 1
            logw = ll + np.log(counts + alpha)
            w = np.exp(logw - logw.max())
            cw = np.cumsum(w)
            new = min(int(np.searchsorted(cw, rng.random() * cw[-1], side="right")), k - 1)
            if new != old:
                z[i] = new
                sizes[old] -= 1
                sizes[new] += 1
                AZ_out[:, old] -= A[:, i]
                AZ_out[:, new] += A[:, i]
                OZ_out[:, old] -= O[:, i]
                OZ_out[:, new] += O[:, i]
                if directed:
                    AZ_in[:, old] -= A[i, :]
                    AZ_in[:, new] += A[i, :]
                    OZ_in[:, old] -= O[i, :]
                    OZ_in[:, new] += O[i, :]
        E, N = block_counts(A, O, z, k, directed)
        M = sample_block_matrix(E, N, priors.block_beta, directed, rng)

        if not cfg.is_retained(sweep):
            continue
        reference = z if retained == 0 else membership_counts.argmax(axis=1)
        perm = align_labels(z, reference, k)
        z_rel = perm[z]
        M_rel = np.empty_like(M)
        M_rel[np.ix_(perm, perm)] = M
        membership_counts[np.arange(n), z_rel] += 1
        M_sum += M_rel
        M_sq += M_rel**2
        size_draws.append(np.bincount(z_rel, minlength=k))
        P_sum += M[np.ix_(z, z)]
        trace.append(block_loglik(E, N, M, directed))
        retained += 1

    membership = membership_counts / retained
    z_hat = membership.argmax(axis=1)
    M_mean = M_sum / retained
    M_sd = np.sqrt(np.maximum(M_sq / retained - M_mean**2, 0.0))
    return FitResult(
        model="sbm",
        directed=directed,
        posterior_mean=SBMParams(k=k, z=z_hat, M=M_mean),
        predictive=fill_diag_nan(P_sum / retained),
        draws_summary={
            "M": {"mean": M_mean, "sd": M_sd},
            "block_sizes": {"mean": np.mean(size_draws, axis=0), "sd": np.std(size_draws, axis=0)},
        },
        final_loglik=trace[-1],
        initial_loglik=initial_loglik,
        loglik_trace=np.array(trace),
        membership=membership,
        diagnostics={"retained_draws": retained},
    )
