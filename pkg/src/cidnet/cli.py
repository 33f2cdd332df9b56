"""Command-line entry point: ``cidnet {stats,scv,fit,generate}``.

Exit codes: 0 success, 1 runtime or fit failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import datasets
from .estimation import FitError, McmcConfig, ModelSpec, Priors, fit_model
from .graph import Network, NetworkDomainError, ParseError, degrees, density, format_edge_list, read_edge_list, reciprocity
from .models import LinkKind, SBMParams, SRParams, LSMParams, params_from_dict, sample_network
from .scv import ModelConfig, PredictionMode, Sampler, ScvConfig, run_experiment

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad configuration; maps to exit code 2."""


# ------------------------------------------------------------------ helpers


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _f(x: float) -> str:
    return repr(float(x))


def load_network(ref: str, data_dir=None, directed: bool = False, nodes: str | None = None) -> tuple[str, Network]:
    """A bundled dataset name, or a path to an edge-list file."""
    manifest = datasets.load_manifest(data_dir)
    if ref in manifest:
        return ref, datasets.load_bundled(ref, data_dir)
    path = Path(ref)
    if not path.exists():
        raise datasets.DatasetMissingError(
            f"{ref!r} is neither a known dataset ({', '.join(sorted(manifest))}) nor an existing file"
        )
    return path.stem, read_edge_list(path, directed=directed, nodes_path=nodes)


def _model_spec(text: str, args) -> ModelSpec:
    try:
        spec = ModelSpec.parse(text, link=args.link)
    except ValueError:
        tag = text.strip().lower()
        if tag == "sbm" and getattr(args, "k", None):
            return ModelSpec("sbm", k=args.k, link=args.link)
        if tag == "lsm" and getattr(args, "d", None):
            return ModelSpec("lsm", d=args.d, link=args.link)
        raise
    return spec


def _mcmc(args) -> McmcConfig:
    return McmcConfig(
        burn_in=args.burn_in, draws=args.draws, thin=args.thin, seed=args.seed, metropolis_step=args.step
    )


def _models_list(values) -> list[str]:
    out = []
    for v in values:
        out.extend(x for x in str(v).replace(",", " ").split() if x)
    return out


# ----------------------------------------------------------------- commands


STATS_HEADER = ("name", "nodes", "edges", "density", "reciprocity")


def cmd_stats(args) -> int:
    names = args.networks or list(datasets.load_manifest(args.data_dir))
    if args.available_only and not args.networks:
        names = datasets.available_datasets(args.data_dir)
    rows, failed = [], 0
    for ref in names:
        try:
            name, net = load_network(ref, args.data_dir, args.directed, args.nodes)
            recip = reciprocity(net) if net.edge_count() else float("nan")
            row = [name, net.n, net.edge_count(), f"{density(net):.3f}", f"{recip:.3f}"]
        except (OSError, datasets.IntegrityError, ParseError, NetworkDomainError) as exc:
            print(f"error: {ref}: {exc}", file=sys.stderr)
            failed += 1
            continue
        rows.append(row)
        print(",".join(str(x) for x in row))
    if rows:
        _write_csv(Path(args.output_dir) / "stats.csv", STATS_HEADER, rows)
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_scv(args) -> int:
    name, net = load_network(args.network, args.data_dir, args.directed, args.nodes)
    model_texts = _models_list(args.models)
    if not model_texts:
        raise UsageError("at least one model is required")
    try:
        specs = [_model_spec(m, args) for m in model_texts]
        base = dict(
            fraction=args.fraction,
            iterations_per_trial=args.iterations,
            trials=args.trials,
            sampler=Sampler(args.sampler),
            k_folds=args.k_folds,
            prediction_mode=PredictionMode(args.mode),
            master_seed=args.seed,
        )
        configs = [ScvConfig(ModelConfig(s, Priors(), _mcmc(args)), **base) for s in specs]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    out = Path(args.output_dir)
    combined = []
    ok = 0
    for spec, cfg in zip(specs, configs):
        try:
            report = run_experiment(net, cfg, name=name, jobs=args.jobs)
        except Exception as exc:  # reported and skipped
            print(f"error: {name} {spec.label}: {exc}", file=sys.stderr)
            continue
        ok += 1
        _write_text(out / f"{name}_{spec.label}.csv", report.to_csv())
        combined.append(report.to_dict())
        s = report.summary()
        print(
            f"{name} {spec.label}: edge {s['edge']['mean']:.3f} +/- {s['edge']['sd']:.3f}, "
            f"non-edge {s['nonedge']['mean']:.3f} +/- {s['nonedge']['sd']:.3f}"
        )
    if combined:
        _write_text(out / f"{name}_scv.json", json.dumps(combined, indent=2, allow_nan=False) + "\n")
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_fit(args) -> int:
    name, net = load_network(args.network, args.data_dir, args.directed, args.nodes)
    try:
        spec = _model_spec(args.model, args)
        cfg = _mcmc(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    fit = fit_model(net, spec, Priors(), cfg)
    labels = net.labels()
    out = Path(args.output_dir)
    _write_text(out / f"{name}_{spec.label}_fit.json", fit.to_json(labels) + "\n")

    params = fit.posterior_mean
    if isinstance(params, SBMParams):
        header = ["node", "block"] + [f"p_block{b + 1}" for b in range(params.k)]
        rows = [
            [labels[i], int(params.z[i]) + 1, *(_f(p) for p in fit.membership[i])]
            for i in range(net.n)
        ]
        _write_csv(out / "blocks.csv", header, rows)
    elif isinstance(params, SRParams):
        indeg, outdeg = degrees(net) if not net.has_missing() else (np.zeros(net.n), np.zeros(net.n))
        rows = [
            [labels[i], _f(params.beta_send[i]), _f(params.beta_recv[i]), int(indeg[i]), int(outdeg[i])]
            for i in range(net.n)
        ]
        _write_csv(out / "effects.csv", ["node", "beta_send", "beta_recv", "in_degree", "out_degree"], rows)
    elif isinstance(params, LSMParams):
        header = ["node"] + [f"dim{c + 1}" for c in range(params.d)]
        rows = [[labels[i], *(_f(x) for x in params.positions[i])] for i in range(net.n)]
        _write_csv(out / "positions.csv", header, rows)
        _write_csv(out / "edges.csv", ["source", "target"], [[labels[i], labels[j]] for i, j in net.edges()])
    print(f"{name} {spec.label}: mean retained log-likelihood {float(np.mean(fit.loglik_trace)):.3f}")
    return EXIT_OK


GENERATE_HEADER = ("sample", "nodes", "edges", "density", "reciprocity", "source_density", "source_reciprocity")


def _read_params(path: str):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: expected a JSON object")
    directed = doc.get("directed")
    if "params" in doc and isinstance(doc["params"], dict):  # a fit document
        doc = doc["params"]
        directed = doc.get("directed", directed)
    try:
        params = params_from_dict(doc)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    return params, bool(directed)


def cmd_generate(args) -> int:
    params, directed = _read_params(args.params)
    if args.directed:
        directed = True
    if args.count < 1:
        raise UsageError("--count must be positive")
    source = None
    if args.source:
        _, source = load_network(args.source, args.data_dir, args.directed, args.nodes)
    rng = np.random.default_rng(args.seed)
    out = Path(args.output_dir)
    width = max(3, len(str(args.count)))
    rows = []
    for s in range(1, args.count + 1):
        net = sample_network(params, directed, rng)
        folder = out / f"sample_{s:0{width}d}"
        _write_text(folder / "edges.csv", format_edge_list(net))
        _write_text(folder / "nodes.txt", "".join(f"{x}\n" for x in net.labels()))
        recip = _f(reciprocity(net)) if net.edge_count() else ""
        row = [s, net.n, net.edge_count(), _f(density(net)), recip, "", ""]
        if source is not None:
            row[5] = _f(density(source))
            row[6] = _f(reciprocity(source)) if source.edge_count() else ""
        rows.append(row)
    _write_csv(out / "samples_stats.csv", GENERATE_HEADER, rows)
    mean_density = np.mean([float(r[3]) for r in rows])
    print(f"wrote {args.count} samples to {out}; mean density {mean_density:.4f}")
    return EXIT_OK


# ------------------------------------------------------------------- parser


def _common(suppress: bool = False) -> argparse.ArgumentParser:
    """Global options; subcommand copies use SUPPRESS so values given before
    the subcommand are not reset."""
    def dflt(value):
        return argparse.SUPPRESS if suppress else value

    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=dflt(0), help="master random seed")
    g.add_argument("--data-dir", default=dflt(None), help=f"dataset directory (default ${datasets.ENV_VAR} or bundled)")
    g.add_argument("--output-dir", default=dflt("."), help="where output files are written")
    g.add_argument("--jobs", type=int, default=dflt(1), help="concurrent SCV iterations")
    g.add_argument("--config", default=dflt(None), help="key=value file; command-line flags win")
    g.add_argument("--directed", action="store_true", default=dflt(False), help="treat an edge-list path as directed")
    g.add_argument("--nodes", default=dflt(None), help="node list for an edge-list path")
    return p


def _mcmc_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("model and sampler")
    g.add_argument("--link", choices=[k.value for k in LinkKind], default="probit")
    g.add_argument("--k", type=int, default=None, help="SBM block count")
    g.add_argument("--d", type=int, default=None, help="LSM latent dimension")
    g.add_argument("--burn-in", type=int, default=500)
    g.add_argument("--draws", type=int, default=1000)
    g.add_argument("--thin", type=int, default=1)
    g.add_argument("--step", type=float, default=0.1, help="LSM position proposal scale")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cidnet", description=__doc__.splitlines()[0], parents=[_common()])
    common = _common(suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="summary statistics table")
    p.add_argument("networks", nargs="*", help="dataset names or edge-list paths (default: all)")
    p.add_argument("--available-only", action="store_true", help="skip datasets without a local file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("scv", parents=[common], help="stratified cross-validation experiment")
    p.add_argument("network")
    p.add_argument("--models", nargs="+", default=["er", "sbm3", "sr", "lsm2"],
                   help="model tags such as er sbm3 sr lsm2")
    p.add_argument("--fraction", type=float, default=0.2)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--sampler", choices=[s.value for s in Sampler], default="stratified")
    p.add_argument("--k-folds", type=int, default=None)
    p.add_argument("--mode", choices=[m.value for m in PredictionMode], default="bernoulli")
    _mcmc_args(p)
    p.set_defaults(func=cmd_scv)

    p = sub.add_parser("fit", parents=[common], help="fit one model and export parameters")
    p.add_argument("network")
    p.add_argument("model", help="er, sbm, sr, lsm (or sbm3, lsm2)")
    _mcmc_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", parents=[common], help="sample networks from fitted parameters")
    p.add_argument("params", help="parameter or fit JSON file")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--source", default=None, help="network to compare sample statistics against")
    p.set_defaults(func=cmd_generate)
    return parser


def read_config(path: str) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _apply_config(parser, argv, config: dict[str, str]):
    """Re-parse with config values as defaults so explicit flags still win."""
    first = parser.parse_args(argv)
    sp = _subparser(parser, first.command)
    global_dests = {a.dest for a in parser._actions}
    actions = {a.dest: a for a in parser._actions}
    actions.update({a.dest: a for a in sp._actions if a.dest not in global_dests})
    defaults = {}
    for key, raw in config.items():
        if key in ("config", "command", "func") or key not in actions:
            raise UsageError(f"unknown config key {key!r} for {first.command}")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key}: expected a boolean, got {raw!r}")
            defaults[key] = raw.lower() in ("true", "1", "yes")
        elif action.nargs in ("+", "*"):
            defaults[key] = raw.replace(",", " ").split()
        else:
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except ValueError as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
            if action.choices and defaults[key] not in action.choices:
                raise UsageError(f"config key {key}: {raw!r} not in {sorted(action.choices)}")
    parser.set_defaults(**{k: v for k, v in defaults.items() if k in global_dests})
    sp.set_defaults(**{k: v for k, v in defaults.items() if k not in global_dests})
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, argv, read_config(args.config))
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, OSError, datasets.IntegrityError, ParseError, NetworkDomainError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
