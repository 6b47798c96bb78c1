"""Declarative Monte Carlo sweeps over one parameter with mean and SEM aggregation.

Draw ``i`` at sweep point ``s`` uses its own generator keyed by
``(seed, s, i)``, so results do not depend on how draws are scheduled.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np

from fairselect.bias import BetaBias, BiasModel, ImplicitVariance, NoisyBeta, apply_bias
from fairselect.core import ConfigError, GroupLabels, Instance, LatentProfile
from fairselect.ingest import bundled_fixture, build_central_ranking, load_candidates, read_programs, top_by_score
from fairselect.matching import ALGORITHMS, ConstraintPolicy, InfeasibleError
from fairselect.metrics import evaluate
from fairselect.sampling import (
    MallowsModel,
    Pareto,
    TruncGaussian,
    Uniform01,
    UtilityDistribution,
    ranking_at_distance,
    sample_mallows_many,
    sample_utilities,
)

SWEEP_AXES = ("beta", "phi", "gamma", "alpha", "delta")
UTILITIES = ("uniform", "gaussian", "pareto")
BIASES = ("beta", "noisy_beta", "implicit_variance")
CSV_COLUMNS = ("sweep_value", "algorithm", "metric", "mean", "sem", "iterations")
SEED_ENV = "FAIRSELECT_SEED"
_METRIC = re.compile(r"^(U|R|P[1-9][0-9]*)$")


def _reject_unknown(cls, data: dict, where: str) -> None:
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {unknown}; allowed: {sorted(known)}")


def _check_scalar(key: str, value) -> None:
    if value is None and key == "gamma":
        return
    if key == "beta" and not value > 0:
        raise ConfigError(f"beta must be positive, got {value}")
    if key in ("phi", "alpha") and not 0 <= value <= 1:
        raise ConfigError(f"{key} must lie in [0, 1], got {value}")
    if key in ("delta1", "delta2", "gamma") and not value >= 0:
        raise ConfigError(f"{key} must be non-negative, got {value}")


@dataclass(frozen=True)
class Sweep:
    axis: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        values = tuple(self.values)
        if not values:
            raise ConfigError("sweep grid must be nonempty")
        if any(not isinstance(v, (int, float)) or isinstance(v, bool) for v in values):
            raise ConfigError(f"sweep values must be numbers, got {values}")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class IngestSource:
    """Observed scores and programs read from CSV instead of sampled.

    ``"bundled"`` in either path selects the shipped synthetic fixture.
    """

    candidates: str = "bundled"
    programs: str = "bundled"
    group_column: str = "gender"
    rank_limit: int | None = None
    closing_rank_cutoff: float = 1000

    def resolved(self) -> tuple[str, str]:
        default_c, default_p = bundled_fixture()
        c = str(default_c) if self.candidates == "bundled" else self.candidates
        p = str(default_p) if self.programs == "bundled" else self.programs
        return c, p


@dataclass(frozen=True)
class ExperimentConfig:
    sweep: Sweep
    n: int = 1000
    p: int = 5
    capacity: int = 100
    capacities: tuple[int, ...] | None = None
    group_sizes: tuple[int, ...] | None = None
    utility: str = "gaussian"
    pareto_shape: float = 3.0
    bias: str = "beta"
    beta: float = 1.0
    delta1: float = 0.0
    delta2: float = 0.0
    phi: float = 0.25
    gamma: int | None = None
    alpha: float = 1.0
    algorithms: tuple[str, ...] = ("st", "group", "inst_wise")
    metrics: tuple[str, ...] = ("U", "R", "P1")
    iterations: int = 50
    seed: int | None = None
    workers: int = 1
    ingest: IngestSource | None = None
    name: str = "experiment"

    def __post_init__(self) -> None:
        for key in ("capacities", "group_sizes", "algorithms", "metrics"):
            value = getattr(self, key)
            if value is not None:
                object.__setattr__(self, key, tuple(value))
        if self.iterations < 1:
            raise ConfigError(f"iterations must be at least 1, got {self.iterations}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            raise ConfigError(f"algorithms must be a nonempty subset of {ALGORITHMS}, got {self.algorithms}")
        if not self.metrics or any(not _METRIC.match(m) for m in self.metrics):
            raise ConfigError(f"metrics must be names like U, R, P1, P3; got {self.metrics}")
        if self.utility not in UTILITIES:
            raise ConfigError(f"utility must be one of {UTILITIES}, got {self.utility!r}")
        if self.bias not in BIASES:
            raise ConfigError(f"bias must be one of {BIASES}, got {self.bias!r}")
        axis = self.sweep.axis
        for key in ("beta", "phi", "alpha", "delta1", "delta2", "gamma"):
            values = [getattr(self, key)]
            if axis == key or (axis == "delta" and key == "delta2"):
                values = list(self.sweep.values)
            for v in values:
                _check_scalar(key, v)
        if axis == "delta" and self.bias != "implicit_variance":
            raise ConfigError("a delta sweep needs bias = 'implicit_variance'")
        if axis == "beta" and self.bias == "implicit_variance":
            raise ConfigError("a beta sweep needs bias = 'beta' or 'noisy_beta'")
        if axis == "gamma" and any(float(v) != int(v) for v in self.sweep.values):
            raise ConfigError("gamma values must be integers")
        if self.ingest is not None:
            if axis in ("beta", "delta"):
                raise ConfigError("ingested scores are already observed; sweep phi, gamma or alpha instead")
            if "U" in self.metrics:
                raise ConfigError("the utility ratio needs latent utilities, which ingested data lacks")
            return
        if self.n < 1 or self.p < 1:
            raise ConfigError(f"need n >= 1 and p >= 1, got n={self.n}, p={self.p}")
        caps = self.resolved_capacities()
        if len(caps) != self.p or any(k < 0 for k in caps):
            raise ConfigError(f"capacities must be {self.p} non-negative integers, got {caps}")
        sizes = self.resolved_group_sizes()
        if sum(sizes) != self.n or any(s < 1 for s in sizes) or len(sizes) < 2:
            raise ConfigError(f"group_sizes must be at least two positive counts summing to n={self.n}, got {sizes}")
        for m in self.metrics:
            if m.startswith("P") and int(m[1:]) > self.p:
                raise ConfigError(f"metric {m} needs ell <= p = {self.p}")

    def resolved_capacities(self) -> tuple[int, ...]:
        return self.capacities if self.capacities is not None else (self.capacity,) * self.p

    def resolved_group_sizes(self) -> tuple[int, ...]:
        if self.group_sizes is not None:
            return self.group_sizes
        return (self.n // 2, self.n - self.n // 2)

    def with_point(self, value: float) -> ExperimentConfig:
        """This config with the sweep axis fixed to ``value``."""
        axis = self.sweep.axis
        key = {"delta": "delta2"}.get(axis, axis)
        if axis == "gamma":
            value = int(value)
        return dataclasses.replace(self, **{key: value})

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown(cls, data, "config")
        data = dict(data)
        if "sweep" not in data:
            raise ConfigError("config needs a 'sweep' entry with 'axis' and 'values'")
        sweep = data["sweep"]
        if not isinstance(sweep, dict):
            raise ConfigError("'sweep' must be an object with 'axis' and 'values'")
        _reject_unknown(Sweep, sweep, "sweep")
        if set(sweep) != {"axis", "values"}:
            raise ConfigError("'sweep' needs exactly the keys 'axis' and 'values'")
        data["sweep"] = Sweep(sweep["axis"], tuple(sweep["values"]))
        if data.get("ingest") is not None:
            if not isinstance(data["ingest"], dict):
                raise ConfigError("'ingest' must be an object")
            _reject_unknown(IngestSource, data["ingest"], "ingest")
            data["ingest"] = IngestSource(**data["ingest"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        config = cls.from_dict(data)
        if config.ingest is not None:
            config = dataclasses.replace(config, ingest=_relative_to(config.ingest, Path(path).parent))
        return config

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _relative_to(source: IngestSource, base: Path) -> IngestSource:
    def fix(p: str) -> str:
        return p if p == "bundled" or os.path.isabs(p) else str(base / p)

    return dataclasses.replace(source, candidates=fix(source.candidates), programs=fix(source.programs))


def resolve_seed(explicit: int | None, config_seed: int | None) -> int:
    """Explicit seed, else the config's, else ``$FAIRSELECT_SEED``, else 0."""
    for value in (explicit, config_seed):
        if value is not None:
            return int(value)
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def draw_rng(seed: int, point: int, iteration: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(point, iteration))))


def utility_distribution(config: ExperimentConfig) -> UtilityDistribution:
    if config.utility == "uniform":
        return Uniform01()
    if config.utility == "gaussian":
        return TruncGaussian()
    return Pareto(shape=config.pareto_shape)


def bias_model(config: ExperimentConfig, num_groups: int) -> BiasModel:
    if config.bias == "implicit_variance":
        return ImplicitVariance((config.delta1,) + (config.delta2,) * (num_groups - 1))
    betas = (1.0,) + (config.beta,) * (num_groups - 1)
    if config.bias == "noisy_beta":
        return NoisyBeta(betas)
    return BetaBias(betas)


@dataclass(frozen=True)
class _IngestedData:
    scores: np.ndarray
    groups: GroupLabels
    capacities: tuple[int, ...]


@lru_cache(maxsize=8)
def _load_ingest(source: IngestSource) -> _IngestedData:
    cand_path, prog_path = source.resolved()
    data = load_candidates(cand_path, source.group_column)
    ranking = build_central_ranking(read_programs(prog_path), source.closing_rank_cutoff)
    keep = top_by_score(data.scores, data.ids, source.rank_limit)
    groups = GroupLabels(data.groups.labels[keep], data.groups.num_groups)
    return _IngestedData(data.scores[keep], groups, ranking.capacities)


def _preferences(config: ExperimentConfig, groups: GroupLabels, p: int, rng: np.random.Generator) -> np.ndarray:
    rho = tuple(range(p))
    prefs = np.empty((len(groups), p), dtype=np.int64)
    centers = [rho] * groups.num_groups
    if config.gamma is not None:
        # every group other than the first shares a second centre at distance gamma
        other = ranking_at_distance(rho, config.gamma, rng)
        centers = [rho] + [other] * (groups.num_groups - 1)
    for g in range(groups.num_groups):
        idx = groups.members(g)
        prefs[idx] = sample_mallows_many(MallowsModel(centers[g], config.phi), len(idx), rng)
    return prefs


def run_draw(config: ExperimentConfig, seed: int, point: int, iteration: int) -> dict[tuple[str, str], float]:
    """Metric values of every algorithm on one random draw of ``config`` (sweep value already applied)."""
    rng = draw_rng(seed, point, iteration)
    latent = None
    if config.ingest is not None:
        data = _load_ingest(config.ingest)
        groups, capacities, observed = data.groups, data.capacities, data.scores
        prefs = _preferences(config, groups, len(capacities), rng)
    else:
        groups = GroupLabels.from_sizes(config.resolved_group_sizes())
        capacities = config.resolved_capacities()
        latent = sample_utilities(utility_distribution(config), config.n, rng)
        prefs = _preferences(config, groups, config.p, rng)
        observed = apply_bias(bias_model(config, groups.num_groups), latent, groups, rng)
    instance = Instance(capacities, observed, prefs)
    ells = sorted({int(m[1:]) for m in config.metrics if m.startswith("P")})
    out = {}
    for name in config.algorithms:
        assignment = ConstraintPolicy(name, config.alpha).assign(instance, groups)
        scalars = evaluate(assignment, instance, groups, latent, ells).scalars()
        for m in config.metrics:
            out[(name, m)] = scalars[m]
    return out


@dataclass(frozen=True)
class Stat:
    mean: float
    sem: float
    iterations: int

    @classmethod
    def of(cls, values: list[float]) -> Stat:
        arr = np.asarray(values, dtype=float)
        sem = float(np.std(arr, ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else math.nan
        return cls(float(np.mean(arr)), sem, len(arr))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Stat):
            return NotImplemented
        same_sem = self.sem == other.sem or (math.isnan(self.sem) and math.isnan(other.sem))
        return self.mean == other.mean and same_sem and self.iterations == other.iterations


@dataclass
class PointResult:
    sweep_value: float
    stats: dict[tuple[str, str], Stat] = field(default_factory=dict)
    error: str | None = None


@dataclass
class ExperimentResult:
    axis: str
    points: list[PointResult]
    config_hash: str
    seed: int
    algorithms: tuple[str, ...]
    metrics: tuple[str, ...]

    def stat(self, sweep_value: float, algorithm: str, metric: str) -> Stat:
        for point in self.points:
            if point.sweep_value == sweep_value:
                if point.error is not None:
                    raise KeyError(f"sweep point {sweep_value} failed: {point.error}")
                return point.stats[(algorithm, metric)]
        raise KeyError(f"no sweep point {sweep_value}")

    def series(self, algorithm: str, metric: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sweep values, means and SEMs of one algorithm and metric, skipping failed points."""
        ok = [pt for pt in self.points if pt.error is None]
        stats = [pt.stats[(algorithm, metric)] for pt in ok]
        return (
            np.array([pt.sweep_value for pt in ok]),
            np.array([s.mean for s in stats]),
            np.array([s.sem for s in stats]),
        )


def _run_task(args) -> dict[tuple[str, str], float] | str:
    config, seed, point, iteration = args
    try:
        return run_draw(config, seed, point, iteration)
    except InfeasibleError as exc:
        return f"infeasible: {exc}"


def run_experiment(config: ExperimentConfig, seed: int | None = None, workers: int | None = None) -> ExperimentResult:
    """Run every sweep point for ``config.iterations`` draws and aggregate mean and SEM.

    A sweep point whose quotas are infeasible is recorded with its error and
    the remaining points still run.
    """
    seed = resolve_seed(seed, config.seed)
    workers = config.workers if workers is None else workers
    if config.ingest is not None:
        ells = [int(m[1:]) for m in config.metrics if m.startswith("P")]
        p = len(_load_ingest(config.ingest).capacities)
        if any(ell > p for ell in ells):
            raise ConfigError(f"metric P{max(ells)} needs ell <= p = {p}")
    point_configs = [config.with_point(v) for v in config.sweep.values]
    tasks = [(pc, seed, s, i) for s, pc in enumerate(point_configs) for i in range(config.iterations)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        outcomes = [_run_task(t) for t in tasks]
    points = []
    for s, value in enumerate(config.sweep.values):
        draws = outcomes[s * config.iterations : (s + 1) * config.iterations]
        errors = [d for d in draws if isinstance(d, str)]
        if errors:
            points.append(PointResult(value, error=errors[0]))
            continue
        stats = {key: Stat.of([d[key] for d in draws]) for key in draws[0]}
        points.append(PointResult(value, stats))
    return ExperimentResult(config.sweep.axis, points, config.digest(), seed, config.algorithms, config.metrics)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def results_to_csv(result: ExperimentResult) -> str:
    """Long-format table; failed sweep points contribute no rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for point in result.points:
        if point.error is not None:
            continue
        for algorithm in result.algorithms:
            for metric in result.metrics:
                st = point.stats[(algorithm, metric)]
                writer.writerow([repr(point.sweep_value), algorithm, metric, _fmt(st.mean), _fmt(st.sem), st.iterations])
    return buf.getvalue()


def _json_float(x: float) -> float | None:
    return None if math.isnan(x) else x


def results_to_json(result: ExperimentResult) -> str:
    points = []
    for point in result.points:
        nested: dict[str, dict[str, dict]] = {}
        for (algorithm, metric), st in point.stats.items():
            nested.setdefault(algorithm, {})[metric] = {
                "mean": _json_float(st.mean),
                "sem": _json_float(st.sem),
                "iterations": st.iterations,
            }
        points.append({"sweep_value": point.sweep_value, "error": point.error, "results": nested})
    doc = {
        "axis": result.axis,
        "config_hash": result.config_hash,
        "seed": result.seed,
        "algorithms": list(result.algorithms),
        "metrics": list(result.metrics),
        "points": points,
    }
    return json.dumps(doc, indent=2) + "\n"


def results_from_json(text: str) -> ExperimentResult:
    doc = json.loads(text)

    def num(x):
        return math.nan if x is None else float(x)

    points = []
    for pt in doc["points"]:
        stats = {
            (algorithm, metric): Stat(num(v["mean"]), num(v["sem"]), int(v["iterations"]))
            for algorithm, by_metric in pt["results"].items()
            for metric, v in by_metric.items()
        }
        points.append(PointResult(pt["sweep_value"], stats, pt["error"]))
    return ExperimentResult(
        doc["axis"], points, doc["config_hash"], doc["seed"], tuple(doc["algorithms"]), tuple(doc["metrics"])
    )


def emit_results(result: ExperimentResult, path: str | Path, fmt: str = "csv") -> Path:
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be 'csv' or 'json', got {fmt!r}")
    text = results_to_csv(result) if fmt == "csv" else results_to_json(result)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
