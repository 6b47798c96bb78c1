"""Compare serial dictatorship under beta bias with the closed-form predictions.

Uniform utilities, two equal groups and K = n/2 slots split over p
institutions. Prints empirical mean +- SEM next to the predicted values.
"""

import argparse

import numpy as np

from fairselect.harness import ExperimentConfig, Sweep, run_experiment
from fairselect.theory import TheoryParams, logconcave_bound, predicted_metrics_uniform


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=10000)
    parser.add_argument("--p", type=int, default=5)
    parser.add_argument("--iterations", type=int, default=50)
    parser.add_argument("--utility", choices=("uniform", "gaussian", "pareto"), default="uniform")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    K = args.n // 2
    betas = tuple(np.round(np.arange(0.1, 1.01, 0.1), 2))
    config = ExperimentConfig(
        Sweep("beta", betas),
        n=args.n,
        p=args.p,
        capacity=K // args.p,
        utility=args.utility,
        algorithms=("st",),
        metrics=("U", "R", "P1"),
        iterations=args.iterations,
        seed=args.seed,
    )
    result = run_experiment(config, workers=args.workers)
    print(f"{'beta':>5} {'R':>15} {'R_pred':>7} {'U':>15} {'U_pred':>7} {'P1':>15} {'logconc':>7}")
    for beta in betas:
        pred = predicted_metrics_uniform(TheoryParams(args.n - args.n // 2, args.n // 2, K, beta))
        cells = []
        for m in ("R", "U", "P1"):
            st = result.stat(beta, "st", m)
            cells.append(f"{st.mean:.4f}+-{st.sem:.4f}")
        print(
            f"{beta:5.2f} {cells[0]:>15} {pred.R:7.4f} {cells[1]:>15} {pred.U:7.4f} {cells[2]:>15} "
            f"{logconcave_bound(beta):7.4f}"
        )


if __name__ == "__main__":
    main()
