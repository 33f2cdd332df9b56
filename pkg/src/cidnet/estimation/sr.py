"""Sender-receiver model fits.

Probit link: Albert-Chib data augmentation with one truncated-normal latent
per observed dyad and a joint Gaussian draw of all coefficients.  Logistic
link: coordinate-wise random-walk Metropolis.

Undirected networks tie sender and receiver effects into one sociality
effect per node.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from ..graph import Network
from ..models import LinkKind, SRParams, dyad_log_likelihood
from .base import (
    FitResult,
    McmcConfig,
    ObservedDyads,
    Priors,
    fill_diag_nan,
    observed_dyads,
    require_both_classes,
    summarize,
    truncated_normal_latents,
)


class _Design:
    """Sparse description of the regression design for observed dyads.

    Coefficients are laid out as ``[beta0, send_0..send_{n-1}, recv_0..]``
    (directed) or ``[beta0, u_0..u_{n-1}]`` (undirected, tied).
    """

    def __init__(self, obs: ObservedDyads, n: int, directed: bool, priors: Priors):
        self.obs = obs
        self.n = n
        self.directed = directed
        rows, cols = obs.rows, obs.cols
        m = obs.size
        if directed:
            dim = 2 * n + 1
            C = np.zeros((n, n))
            C[rows, cols] = 1.0
            out_c, in_c = C.sum(axis=1), C.sum(axis=0)
            Q = np.zeros((dim, dim))
            Q[0, 0] = m
            Q[0, 1:n + 1] = Q[1:n + 1, 0] = out_c
            Q[0, n + 1:] = Q[n + 1:, 0] = in_c
            Q[1:n + 1, 1:n + 1] = np.diag(out_c)
            Q[n + 1:, n + 1:] = np.diag(in_c)
            Q[1:n + 1, n + 1:] = C
            Q[n + 1:, 1:n + 1] = C.T
        else:
            dim = n + 1
            C = np.zeros((n, n))
            C[rows, cols] = 1.0
            C = C + C.T
            deg = C.sum(axis=1)
            Q = np.zeros((dim, dim))
            Q[0, 0] = m
            Q[0, 1:] = Q[1:, 0] = deg
            Q[1:, 1:] = C + np.diag(deg)
        prior_prec = np.full(dim, 1.0 / priors.node_effect_sd**2)
        prior_prec[0] = 1.0 / priors.intercept_sd**2
        self.dim = dim
        self.gram = Q
        self.prior_prec = prior_prec

    def unpack(self, theta):
        n = self.n
        if self.directed:
            return theta[0], theta[1:n + 1], theta[n + 1:]
        return theta[0], theta[1:], theta[1:]

    def eta(self, theta):
        b0, s, r = self.unpack(theta)
        return b0 + s[self.obs.rows] + r[self.obs.cols]

    def xt(self, w):
        n = self.n
        rows, cols = self.obs.rows, self.obs.cols
        out = np.empty(self.dim)
        out[0] = w.sum()
        if self.directed:
            out[1:n + 1] = np.bincount(rows, w, minlength=n)
            out[n + 1:] = np.bincount(cols, w, minlength=n)
        else:
            out[1:] = np.bincount(rows, w, minlength=n) + np.bincount(cols, w, minlength=n)
        return out

    def recentre(self, theta):
        """Move the mean of each effect vector into the intercept."""
        n = self.n
        theta = theta.copy()
        if self.directed:
            for block in (slice(1, n + 1), slice(n + 1, 2 * n + 1)):
                c = theta[block].mean()
                theta[block] -= c
                theta[0] += c
        else:
            c = theta[1:].mean()
            theta[1:] -= c
            theta[0] += 2 * c
        return theta

    def params(self, theta, link) -> SRParams:
        b0, s, r = self.unpack(theta)
        return SRParams(beta0=float(b0), beta_send=s.copy(), beta_recv=r.copy(), link=link)


def _initial_theta(design: _Design, link: LinkKind) -> np.ndarray:
    theta = np.zeros(design.dim)
    rate = (design.obs.edges + 0.5) / (design.obs.size + 1.0)
    if link is LinkKind.PROBIT:
        from scipy.special import ndtri

        theta[0] = ndtri(rate)
    else:
        theta[0] = np.log(rate / (1 - rate))
    return theta


def _probit_sweep(design: _Design, theta, chol, rng):
    w = truncated_normal_latents(design.eta(theta), design.obs.y, rng)
    mean = linalg.cho_solve(chol, design.xt(w))
    noise = linalg.solve_triangular(chol[0], rng.standard_normal(design.dim), lower=False)
    return mean + noise


def _node_loglik(link, eta, y, index, n):
    terms = np.where(y == 1, link.log_cdf(eta), link.log_cdf(-eta))
    return np.bincount(index, terms, minlength=n)


class _LogisticSampler:
    def __init__(self, design: _Design):
        self.d = design
        obs = design.obs
        n = design.n
        rate = obs.edges / obs.size
        info_unit = max(rate * (1 - rate), 0.01)
        if design.directed:
            out_c = np.bincount(obs.rows, minlength=n)
            in_c = np.bincount(obs.cols, minlength=n)
            counts = np.concatenate([[obs.size], out_c, in_c])
        else:
            counts = np.concatenate(
                [[obs.size], np.bincount(obs.rows, minlength=n) + np.bincount(obs.cols, minlength=n)]
            )
        self.scale = 2.4 / np.sqrt(info_unit * counts + design.prior_prec)
        self.accepted = np.zeros(design.dim)
        self.proposed = 0
        if not design.directed:
            incident = [[] for _ in range(n)]
            for t, (i, j) in enumerate(zip(obs.rows.tolist(), obs.cols.tolist())):
                incident[i].append(t)
                incident[j].append(t)
            self.incident = [np.array(x, dtype=np.int64) for x in incident]

    def _log_prior(self, theta):
        return -0.5 * self.d.prior_prec * theta**2

    def sweep(self, theta, rng):
        d = self.d
        link = LinkKind.LOGISTIC
        y = d.obs.y
        n = d.n
        self.proposed += 1
        theta = theta.copy()

        # intercept
        prop = theta.copy()
        prop[0] += self.scale[0] * rng.standard_normal()
        diff = (
            dyad_sum(link, d.eta(prop), y) - dyad_sum(link, d.eta(theta), y)
            + self._log_prior(prop)[0] - self._log_prior(theta)[0]
        )
        if np.log(rng.random()) < diff:
            theta = prop
            self.accepted[0] += 1

        if d.directed:
            # sender effects are conditionally independent given the rest, as are receivers
            for block, index in ((slice(1, n + 1), d.obs.rows), (slice(n + 1, 2 * n + 1), d.obs.cols)):
                prop = theta.copy()
                prop[block] += self.scale[block] * rng.standard_normal(n)
                cur = _node_loglik(link, d.eta(theta), y, index, n)
                new = _node_loglik(link, d.eta(prop), y, index, n)
                logr = new - cur + self._log_prior(prop)[block] - self._log_prior(theta)[block]
                accept = np.log(rng.random(n)) < logr
                theta[block] = np.where(accept, prop[block], theta[block])
                self.accepted[block] += accept
        else:
            rows, cols = d.obs.rows, d.obs.cols
            for i in range(n):
                idx = self.incident[i]
                step = self.scale[i + 1] * rng.standard_normal()
                if idx.size:
                    other = np.where(rows[idx] == i, cols[idx], rows[idx])
                    base = theta[0] + theta[1 + other]
                    yi = y[idx]
                    old = theta[i + 1]
                    delta = dyad_sum(link, base + old + step, yi) - dyad_sum(link, base + old, yi)
                else:
                    old = theta[i + 1]
                    delta = 0.0
                prior_prec = d.prior_prec[i + 1]
                delta += -0.5 * prior_prec * ((old + step) ** 2 - old**2)
                if np.log(rng.random()) < delta:
                    theta[i + 1] = old + step
                    self.accepted[i + 1] += 1
        return theta


def dyad_sum(link, eta, y) -> float:
    return float(np.sum(np.where(y == 1, link.log_cdf(eta), link.log_cdf(-eta))))


def fit_sr(
    net: Network,
    priors: Priors = Priors(),
    cfg: McmcConfig = McmcConfig(),
    link: LinkKind = LinkKind.PROBIT,
) -> FitResult:
    """Sample sender/receiver effects; effects are recentred to mean zero
    after every sweep with the removed means folded into the intercept."""
    link = LinkKind(link)
    obs = observed_dyads(net)
    require_both_classes(obs)
    n = net.n
    rng = cfg.rng()
    design = _Design(obs, n, net.directed, priors)
    theta = _initial_theta(design, link)

    def loglik(th):
        p = design.params(th, link)
        return dyad_log_likelihood(p, obs.rows, obs.cols, obs.y)

    initial_loglik = loglik(theta)
    if link is LinkKind.PROBIT:
        chol = linalg.cho_factor(design.gram + np.diag(design.prior_prec), lower=False)
        step = lambda th: _probit_sweep(design, th, chol, rng)  # noqa: E731
        sampler = None
    else:
        sampler = _LogisticSampler(design)
        step = lambda th: sampler.sweep(th, rng)  # noqa: E731

    kept = []
    trace = []
    P_sum = np.zeros((n, n))
    for sweep in range(cfg.total_sweeps):
        theta = design.recentre(step(theta))
        if not cfg.is_retained(sweep):
            continue
        kept.append(theta)
        b0, s, r = design.unpack(theta)
        P_sum += link(b0 + s[:, None] + r[None, :])
        trace.append(loglik(theta))

    stack = np.array(kept)
    mean_theta = stack.mean(axis=0)
    b0, s, r = design.unpack(stack.T)
    diagnostics = {"retained_draws": len(kept), "link": link.value}
    if sampler is not None:
        diagnostics["acceptance_rate"] = float(sampler.accepted.mean() / sampler.proposed)
    draws = {"theta": stack}
    return FitResult(
        model="sr",
        directed=net.directed,
        posterior_mean=design.params(mean_theta, link),
        predictive=fill_diag_nan(P_sum / len(kept)),
        draws_summary={
            "beta0": summarize(b0),
            "beta_send": summarize(s.T),
            "beta_recv": summarize(r.T),
        },
        final_loglik=trace[-1],
        initial_loglik=initial_loglik,
        loglik_trace=np.array(trace),
        draws=draws,
        diagnostics=diagnostics,
    )
