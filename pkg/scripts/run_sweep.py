"""Run one sweep config and write its table, e.g.

    python3 scripts/run_sweep.py configs/relaxed_alpha.json --out results/relaxed_alpha.csv
"""

import argparse
import sys
from pathlib import Path

from fairselect.harness import ExperimentConfig, emit_results, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--out", required=True)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    config = ExperimentConfig.from_file(args.config)
    result = run_experiment(config, seed=args.seed, workers=args.workers)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    emit_results(result, args.out, args.format)
    for point in result.points:
        if point.error:
            print(f"{config.sweep.axis}={point.sweep_value}: {point.error}", file=sys.stderr)
    print(f"{config.name}: seed {result.seed}, config {result.config_hash} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
