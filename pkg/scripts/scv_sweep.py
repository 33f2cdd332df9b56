"""Cross-validate a roster of models on one network and tabulate accuracies.

    python scripts/scv_sweep.py karate --models er sbm2 sbm3 sr lsm2 --jobs 4
"""
import argparse
import time

from cidnet.cli import load_network
from cidnet.estimation import McmcConfig, ModelSpec
from cidnet.scv import ModelConfig, ScvConfig, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("network", help="dataset name or edge-list path")
    parser.add_argument("--directed", action="store_true")
    parser.add_argument("--models", nargs="+", default=["er", "sbm2", "sbm3", "sr", "lsm2"])
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--iterations", type=int, default=10)
    parser.add_argument("--fraction", type=float, default=0.2)
    parser.add_argument("--mode", default="bernoulli", choices=["bernoulli", "expected"])
    parser.add_argument("--burn-in", type=int, default=500)
    parser.add_argument("--draws", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    name, net = load_network(args.network, directed=args.directed)
    mcmc = McmcConfig(burn_in=args.burn_in, draws=args.draws)
    print(f"{'model':<8}{'edge':>16}{'non-edge':>16}{'secs':>8}")
    for label in args.models:
        cfg = ScvConfig(
            ModelConfig(ModelSpec.parse(label), mcmc=mcmc),
            fraction=args.fraction,
            iterations_per_trial=args.iterations,
            trials=args.trials,
            prediction_mode=args.mode,
            master_seed=args.seed,
        )
        start = time.perf_counter()
        s = run_experiment(net, cfg, name=name, jobs=args.jobs).summary()
        took = time.perf_counter() - start
        edge = f"{s['edge']['mean']:.3f} ({s['edge']['sd']:.3f})"
        non = f"{s['nonedge']['mean']:.3f} ({s['nonedge']['sd']:.3f})"
        print(f"{label:<8}{edge:>16}{non:>16}{took:>8.1f}")


if __name__ == "__main__":
    main()
