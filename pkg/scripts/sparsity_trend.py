"""Edge accuracy of the ER model on ER-generated graphs of increasing density.

With expected-value prediction the edge accuracy should track p itself.
"""
import argparse

import numpy as np

from cidnet.estimation import ModelSpec
from cidnet.models import ERParams, sample_network
from cidnet.scv import ModelConfig, ScvConfig, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--p", type=float, nargs="+", default=[0.05, 0.15, 0.35])
    parser.add_argument("--mode", default="expected", choices=["bernoulli", "expected"])
    args = parser.parse_args()

    print(f"{'p':>6}{'edge':>10}{'non-edge':>10}")
    for p in args.p:
        edge, non = [], []
        for seed in range(args.seeds):
            net = sample_network(ERParams(p, args.n), False, np.random.default_rng(seed))
            cfg = ScvConfig(ModelConfig(ModelSpec("er")), prediction_mode=args.mode, master_seed=seed)
            s = run_experiment(net, cfg).summary()
            edge.append(s["edge"]["mean"])
            non.append(s["nonedge"]["mean"])
        print(f"{p:>6.2f}{np.mean(edge):>10.3f}{np.mean(non):>10.3f}")


if __name__ == "__main__":
    main()
