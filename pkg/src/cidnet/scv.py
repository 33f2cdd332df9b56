"""Stratified-sampling cross-validation of CID model fits.

An iteration hides a set of dyads, fits a model to what is left and scores
the predictions on the hidden dyads separately for true edges and true
non-edges.  Three maskers are provided: stratified (equal fractions of
edges and non-edges), naive (uniform over dyads) and latin (fold matrix).
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .estimation import FitResult, McmcConfig, ModelSpec, Priors, fit_model
from .graph import DyadSet, Network, NetworkDomainError, apply_mask, universe_indices

CSV_HEADER = (
    "network", "model", "trial", "iteration", "edge_acc", "nonedge_acc",
    "held_edges", "held_nonedges", "loglik",
)


class Sampler(str, enum.Enum):
    STRATIFIED = "stratified"
    NAIVE = "naive"
    LATIN = "latin"


class PredictionMode(str, enum.Enum):
    BERNOULLI = "bernoulli"
    EXPECTED = "expected"


class ScvError(RuntimeError):
    """A cross-validation iteration failed; carries its (trial, iteration)."""

    def __init__(self, message: str, trial: int, iteration: int):
        super().__init__(f"trial {trial}, iteration {iteration}: {message}")
        self.trial = trial
        self.iteration = iteration


@dataclass(frozen=True)
class ModelConfig:
    spec: ModelSpec
    priors: Priors = Priors()
    mcmc: McmcConfig = McmcConfig()


@dataclass(frozen=True)
class ScvConfig:
    model: ModelConfig
    fraction: float = 0.2
    iterations_per_trial: int = 10
    trials: int = 5
    sampler: Sampler = Sampler.STRATIFIED
    k_folds: int | None = None
    prediction_mode: PredictionMode = PredictionMode.BERNOULLI
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sampler", Sampler(self.sampler))
        object.__setattr__(self, "prediction_mode", PredictionMode(self.prediction_mode))
        if not 0 < self.fraction < 1:
            raise ValueError("fraction must lie strictly between 0 and 1")
        if self.iterations_per_trial < 1 or self.trials < 1:
            raise ValueError("trials and iterations_per_trial must be positive")
        if self.sampler is Sampler.LATIN and (self.k_folds is None or self.k_folds < 2):
            raise ValueError("the latin sampler needs k_folds >= 2")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def iterations(self) -> int:
        """Iterations per trial; a latin trial runs one per fold."""
        return self.k_folds if self.sampler is Sampler.LATIN else self.iterations_per_trial


@dataclass(frozen=True)
class IterationResult:
    trial: int
    iteration: int
    edge_accuracy: float
    nonedge_accuracy: float
    held_out_edges: int
    held_out_nonedges: int
    fit_loglik: float


@dataclass
class SCVReport:
    network: str
    model: str
    config: ScvConfig
    trials: list[list[IterationResult]] = field(default_factory=list)

    def _matrix(self, attr: str) -> np.ndarray:
        return np.array([[getattr(r, attr) for r in trial] for trial in self.trials], dtype=float)

    @property
    def results(self) -> list[IterationResult]:
        return [r for trial in self.trials for r in trial]

    @property
    def trial_mean_edge_accuracy(self) -> np.ndarray:
        return _nanmean_rows(self._matrix("edge_accuracy"))

    @property
    def trial_mean_nonedge_accuracy(self) -> np.ndarray:
        return _nanmean_rows(self._matrix("nonedge_accuracy"))

    def summary(self) -> dict:
        """Mean and standard deviation over all iterations."""
        out = {}
        for key, attr in (("edge", "edge_accuracy"), ("nonedge", "nonedge_accuracy")):
            values = self._matrix(attr).ravel()
            values = values[~np.isnan(values)]
            out[key] = {
                "mean": float(values.mean()) if values.size else math.nan,
                "sd": float(values.std(ddof=1)) if values.size > 1 else math.nan,
            }
        return out

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["sampler"] = self.config.sampler.value
        cfg["prediction_mode"] = self.config.prediction_mode.value
        cfg["model"]["spec"]["link"] = self.config.model.spec.link.value
        return {
            "network": self.network,
            "model": self.model,
            "config": cfg,
            "trials": [
                {
                    "trial": t + 1,
                    "mean_edge_accuracy": _num(self.trial_mean_edge_accuracy[t]),
                    "mean_nonedge_accuracy": _num(self.trial_mean_nonedge_accuracy[t]),
                    "iterations": [_result_dict(r) for r in trial],
                }
                for t, trial in enumerate(self.trials)
            ],
            "summary": {k: {s: _num(v) for s, v in d.items()} for k, d in self.summary().items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    def csv_rows(self) -> list[list]:
        return [
            [
                self.network, self.model, r.trial + 1, r.iteration + 1,
                _fmt(r.edge_accuracy), _fmt(r.nonedge_accuracy),
                r.held_out_edges, r.held_out_nonedges, _fmt(r.fit_loglik),
            ]
            for r in self.results
        ]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(CSV_HEADER)
        writer.writerows(self.csv_rows())
        return buf.getvalue()


def _nanmean_rows(X: np.ndarray) -> np.ndarray:
    out = np.full(X.shape[0], np.nan)
    for t, row in enumerate(X):
        row = row[~np.isnan(row)]
        if row.size:
            out[t] = row.mean()
    return out


def _num(x):
    x = float(x)
    return None if math.isnan(x) or math.isinf(x) else x


def _fmt(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _result_dict(r: IterationResult) -> dict:
    d = asdict(r)
    d["trial"] += 1
    d["iteration"] += 1
    return {k: _num(v) if isinstance(v, float) else v for k, v in d.items()}


# ---------------------------------------------------------------- samplers


def _observed_universe(net: Network):
    if net.has_missing():
        raise NetworkDomainError("cross-validation masks need a fully observed network")
    rows, cols = universe_indices(net.n, net.directed)
    return rows, cols, net.adjacency[rows, cols]


def _dyad_set(rows, cols, labels, pick) -> DyadSet:
    pick = np.sort(pick)
    return DyadSet(rows[pick], cols[pick], labels[pick])


def stratified_counts(edges: int, nonedges: int, fraction: float) -> tuple[int, int]:
    """Number of edges and non-edges a stratified mask hides."""
    if edges < 1 or nonedges < 1:
        raise NetworkDomainError("stratified sampling needs at least one edge and one non-edge")
    return max(1, math.floor(fraction * edges)), max(1, math.floor(fraction * nonedges))


def stratified_sample(net: Network, fraction: float, rng: np.random.Generator) -> DyadSet:
    """Hide ``max(1, floor(fraction * E))`` edges and as many non-edges by the
    same rule, each drawn uniformly without replacement."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    rows, cols, labels = _observed_universe(net)
    edges = np.flatnonzero(labels == 1)
    nonedges = np.flatnonzero(labels == 0)
    n_e, n_0 = stratified_counts(edges.size, nonedges.size, fraction)
    pick = np.concatenate([
        rng.choice(edges, size=n_e, replace=False),
        rng.choice(nonedges, size=n_0, replace=False),
    ])
    return _dyad_set(rows, cols, labels, pick)


def naive_sample(net: Network, fraction: float, rng: np.random.Generator) -> DyadSet:
    """Hide ``max(1, floor(fraction * |universe|))`` dyads uniformly, ignoring labels."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    rows, cols, labels = _observed_universe(net)
    if rows.size == 0:
        raise NetworkDomainError("the dyad universe is empty")
    size = max(1, math.floor(fraction * rows.size))
    return _dyad_set(rows, cols, labels, rng.choice(rows.size, size=size, replace=False))


def latin_fold_matrix(size: int, k: int) -> np.ndarray:
    """Cyclic fold matrix ``F[r, c] = (r + c) mod k``; with ``k | size`` every
    row and column holds each fold ``size / k`` times."""
    r = np.arange(size)
    return (r[:, None] + r[None, :]) % k


def latin_folds(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """n x n fold labels after independent row and column permutations.

    When ``k`` does not divide ``n`` the matrix is built at the next multiple
    of ``k`` and the surplus rows and columns are dropped.
    """
    if k < 2:
        raise ValueError("k_folds must be at least 2")
    if k > n:
        raise ValueError(f"k_folds={k} exceeds the number of nodes n={n}")
    size = -(-n // k) * k
    F = latin_fold_matrix(size, k)
    row_perm = rng.permutation(size)
    col_perm = rng.permutation(size)
    return F[np.ix_(row_perm, col_perm)][:n, :n]


def latin_sample(net: Network, k_folds: int, rng: np.random.Generator) -> list[DyadSet]:
    """Split the dyad universe into ``k_folds`` disjoint masks."""
    rows, cols, labels = _observed_universe(net)
    F = latin_folds(net.n, k_folds, rng)
    fold = F[rows, cols]
    return [_dyad_set(rows, cols, labels, np.flatnonzero(fold == f)) for f in range(k_folds)]


# -------------------------------------------------------------- prediction


def predict_mask(
    fit: FitResult,
    mask: DyadSet,
    mode: PredictionMode = PredictionMode.BERNOULLI,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """(edge accuracy, non-edge accuracy) on the hidden dyads.

    An accuracy whose stratum is empty is NaN.
    """
    mode = PredictionMode(mode)
    p = fit.predictive[mask.rows, mask.cols]
    if np.any(np.isnan(p)):
        raise ValueError("mask contains dyads without a predictive probability")
    y = mask.labels
    if mode is PredictionMode.BERNOULLI:
        if rng is None:
            raise ValueError("BERNOULLI prediction needs a random generator")
        guess = rng.random(p.size) < p
        hit_edge = guess.astype(float)
        hit_non = 1.0 - hit_edge
    else:
        hit_edge = p
        hit_non = 1.0 - p
    is_edge = y == 1
    edge_acc = float(hit_edge[is_edge].mean()) if is_edge.any() else math.nan
    non_acc = float(hit_non[~is_edge].mean()) if (~is_edge).any() else math.nan
    return edge_acc, non_acc


def zero_imputation_baseline(mask: DyadSet) -> tuple[float, float, float]:
    """Scores of always predicting a non-edge: (edge, non-edge, overall)."""
    if len(mask) == 0:
        raise ValueError("empty mask")
    edge_acc = 0.0 if mask.edge_count else math.nan
    non_acc = 1.0 if mask.nonedge_count else math.nan
    return edge_acc, non_acc, mask.nonedge_count / len(mask)


# -------------------------------------------------------------- experiment


def child_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Independent stream for one (trial, iteration) pair, or one trial."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(key))


def _run_iteration(net: Network, cfg: ScvConfig, trial: int, iteration: int, mask: DyadSet | None):
    rng = np.random.default_rng(child_seed(cfg.master_seed, trial, iteration))
    if mask is None:
        sample = stratified_sample if cfg.sampler is Sampler.STRATIFIED else naive_sample
        mask = sample(net, cfg.fraction, rng)
    mcmc = replace(cfg.model.mcmc, seed=int(rng.integers(2**63)))
    try:
        fit = fit_model(apply_mask(net, mask), cfg.model.spec, cfg.model.priors, mcmc)
    except Exception as exc:
        raise ScvError(f"{type(exc).__name__}: {exc}", trial + 1, iteration + 1) from exc
    edge_acc, non_acc = predict_mask(fit, mask, cfg.prediction_mode, rng)
    return IterationResult(
        trial=trial,
        iteration=iteration,
        edge_accuracy=edge_acc,
        nonedge_accuracy=non_acc,
        held_out_edges=mask.edge_count,
        held_out_nonedges=mask.nonedge_count,
        fit_loglik=float(fit.final_loglik),
    )


def _job(args):
    return _run_iteration(*args)


def iteration_jobs(net: Network, cfg: ScvConfig) -> list[tuple]:
    jobs = []
    for t in range(cfg.trials):
        if cfg.sampler is Sampler.LATIN:
            folds = latin_sample(net, cfg.k_folds, np.random.default_rng(child_seed(cfg.master_seed, t)))
            jobs.extend((net, cfg, t, i, fold) for i, fold in enumerate(folds))
        else:
            jobs.extend((net, cfg, t, i, None) for i in range(cfg.iterations_per_trial))
    return jobs


def run_experiment(net: Network, cfg: ScvConfig, name: str = "network", jobs: int = 1) -> SCVReport:
    """Run ``trials x iterations`` mask-fit-predict rounds.

    Every round draws from its own stream derived from ``cfg.master_seed``
    and its (trial, iteration) position, so the report is identical for any
    ``jobs`` value.
    """
    work = iteration_jobs(net, cfg)
    if jobs > 1 and len(work) > 1:
        # fork keeps worker start-up cheap and needs no __main__ guard
        method = "fork" if "fork" in multiprocessing.get_all_start_methods() else None
        ctx = multiprocessing.get_context(method)
        with ProcessPoolExecutor(max_workers=min(jobs, len(work)), mp_context=ctx) as pool:
            results = list(pool.map(_job, work))
    else:
        results = [_job(w) for w in work]
    report = SCVReport(network=name, model=cfg.model.spec.label, config=cfg)
    for t in range(cfg.trials):
        report.trials.append([r for r in results if r.trial == t])
    return report
