from __future__ import annotations

import numpy as np
from scipy import stats

from ..graph import Network
from ..models import ERParams, log_likelihood
from .base import FitResult, McmcConfig, Priors, fill_diag_nan, observed_dyads, require_observed


def er_posterior(s: int, m: int, a: float, b: float) -> tuple[float, float]:
    """Posterior Beta(a + s, b + m - s) for ``s`` edges among ``m`` dyads."""
    return a + s, b + m - s


def fit_er(net: Network, priors: Priors = Priors(), cfg: McmcConfig = McmcConfig()) -> FitResult:
    """Conjugate Beta-Bernoulli update; exact, no sampling involved.

    ``cfg`` is accepted for interface symmetry with the MCMC fits.
    """
    obs = observed_dyads(net)
    require_observed(obs)
    a, b = er_posterior(obs.edges, obs.size, *priors.er_beta)
    p_hat = a / (a + b)
    post = stats.beta(a, b)
    params = ERParams(p=p_hat, n=net.n)
    loglik = log_likelihood(params, net)
    return FitResult(
        model="er",
        directed=net.directed,
        posterior_mean=params,
        predictive=fill_diag_nan(np.full((net.n, net.n), p_hat)),
        draws_summary={"p": {"mean": p_hat, "sd": float(post.std())}},
        final_loglik=loglik,
        initial_loglik=loglik,
        loglik_trace=np.array([loglik]),
        diagnostics={"posterior_beta": [a, b], "observed_dyads": obs.size, "observed_edges": obs.edges},
    )
