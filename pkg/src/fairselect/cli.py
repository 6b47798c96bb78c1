"""Command-line entry point: simulate, ingest, theory and oracle subcommands.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
runtime failures such as unreadable files.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Sequence

import numpy as np

from fairselect.core import ConfigError, InputError, Instance, brute_force_stable
from fairselect.harness import ExperimentConfig, emit_results, resolve_seed, results_to_csv, results_to_json, run_experiment
from fairselect.ingest import ParseError, build_central_ranking, load_candidates, read_programs, top_by_score
from fairselect.matching import serial_dictatorship
from fairselect.theory import (
    TheoryParams,
    logconcave_bound,
    logconcave_bound_applies,
    predicted_metrics_uniform,
    uncertainty_band,
    utility_ratio_equal_groups,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairselect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a sweep described by a JSON config")
    sim.add_argument("config")
    sim.add_argument("--seed", type=int, default=None, help="master seed (default: config, then $FAIRSELECT_SEED, then 0)")
    sim.add_argument("--out", default=None, help="output file (default: stdout)")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--iterations", type=int, default=None)
    sim.add_argument("--workers", type=int, default=None)

    ing = sub.add_parser("ingest", help="load candidate and program tables and summarise the instance")
    ing.add_argument("candidates")
    ing.add_argument("programs")
    ing.add_argument("--group-column", default="gender")
    ing.add_argument("--rank-limit", type=int, default=None)
    ing.add_argument("--cutoff", type=float, default=1000, help="closing-rank cutoff for programs")

    th = sub.add_parser("theory", help="closed-form predictions for uniform utilities")
    th.add_argument("--beta", type=float, required=True)
    th.add_argument("--n1", type=int, required=True)
    th.add_argument("--n2", type=int, required=True)
    th.add_argument("--K", type=int, required=True)

    orc = sub.add_parser("oracle", help="check uniqueness of the stable assignment on random small instances")
    orc.add_argument("--n", type=int, required=True)
    orc.add_argument("--p", type=int, required=True)
    orc.add_argument("--trials", type=int, default=100)
    orc.add_argument("--seed", type=int, default=None)
    return parser


def _simulate(args) -> None:
    config = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        config = dataclasses.replace(config, **overrides)
    result = run_experiment(config, seed=args.seed)
    for point in result.points:
        if point.error is not None:
            print(f"sweep point {point.sweep_value}: {point.error}", file=sys.stderr)
    if args.out is None:
        sys.stdout.write(results_to_csv(result) if args.format == "csv" else results_to_json(result))
    else:
        emit_results(result, args.out, args.format)
        print(f"wrote {args.out} (seed {result.seed}, config {result.config_hash})", file=sys.stderr)


def _ingest(args) -> None:
    data = load_candidates(args.candidates, args.group_column)
    ranking = build_central_ranking(read_programs(args.programs), args.cutoff)
    keep = top_by_score(data.scores, data.ids, args.rank_limit)
    sizes = np.bincount(data.groups.labels[keep], minlength=data.groups.num_groups)
    print(f"candidates: {len(keep)} of {len(data.scores)}")
    for label, gid in data.mapping.items():
        print(f"  group {gid} = {label!r}: {sizes[gid]} candidates")
    print(f"programs: p = {len(ranking.program_ids)}, total capacity K = {sum(ranking.capacities)}")
    print(f"  most selective: {ranking.program_ids[0]}")
    for tie in ranking.ties:
        print(f"  tie on closing rank broken by program_id: {list(tie)}")


def _theory(args) -> None:
    params = TheoryParams(args.n1, args.n2, args.K, args.beta)
    pred = predicted_metrics_uniform(params)
    print(f"R_pred={pred.R:.6g}")
    print(f"U_pred={pred.U:.6g}")
    if args.n1 == args.n2 == args.K:
        print(f"U_limit={utility_ratio_equal_groups(args.beta):.6g}")
    print(f"P_upper={pred.P_upper:.6g}")
    print(f"alpha1={pred.alpha1:.6g} alpha2={pred.alpha2:.6g}")
    if 0 < args.beta <= 1:
        flag = "applies" if logconcave_bound_applies(args.beta) else "outside proven range"
        print(f"logconcave_bound={logconcave_bound(args.beta):.6g} ({flag})")
    if params.n >= 2:
        print(f"uncertainty_band={uncertainty_band(params.n):.4g}")


def _oracle(args) -> None:
    if args.n < 1 or args.p < 1 or args.trials < 1:
        raise ConfigError("--n, --p and --trials must be positive")
    rng = np.random.default_rng(resolve_seed(args.seed, None))
    unique = matched = 0
    for _ in range(args.trials):
        caps = tuple(int(k) for k in rng.integers(0, args.n + 1, args.p))
        prefs = np.array([rng.permutation(args.p) for _ in range(args.n)])
        instance = Instance(caps, rng.random(args.n), prefs)
        stable = brute_force_stable(instance)
        unique += len(stable) == 1
        matched += len(stable) == 1 and stable[0] == serial_dictatorship(instance)
    print(f"{unique}/{args.trials} unique; {matched}/{args.trials} match A_st")
    if matched != args.trials:
        raise RuntimeError("stable assignment was not unique or differed from serial dictatorship")


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    handlers = {"simulate": _simulate, "ingest": _ingest, "theory": _theory, "oracle": _oracle}
    try:
        handlers[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
