import dataclasses
import json
import math

import numpy as np
import pytest

from fairselect.core import ConfigError
from fairselect.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    IngestSource,
    Stat,
    Sweep,
    emit_results,
    resolve_seed,
    results_from_json,
    results_to_csv,
    results_to_json,
    run_experiment,
)


def small_config(**overrides) -> ExperimentConfig:
    base = dict(
        sweep=Sweep("beta", (0.25, 0.5, 0.75, 1.0, 0.1)),
        n=120,
        p=3,
        capacity=10,
        utility="uniform",
        iterations=6,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


BASE_DICT = {"n": 100, "p": 3, "capacity": 10, "sweep": {"axis": "phi", "values": [0.0, 0.5]}}


@pytest.mark.parametrize(
    "patch",
    [
        {"colour": "red"},
        {"sweep": {"axis": "phi", "values": [0.5], "extra": 1}},
        {"sweep": {"axis": "nu", "values": [0.5]}},
        {"sweep": {"axis": "phi", "values": []}},
        {"sweep": {"axis": "phi", "values": [1.5]}},
        {"iterations": 0},
        {"workers": 0},
        {"beta": 0},
        {"utility": "cauchy"},
        {"algorithms": ["st", "lottery"]},
        {"metrics": ["P4"]},
        {"metrics": ["Q"]},
        {"capacities": [10, 10]},
        {"group_sizes": [100]},
        {"group_sizes": [50, 60]},
        {"sweep": {"axis": "delta", "values": [0.1]}},
        {"sweep": {"axis": "gamma", "values": [0.5]}},
        {"ingest": {"group_column": "gender"}, "metrics": ["U"]},
        {"ingest": {"group_column": "gender"}, "sweep": {"axis": "beta", "values": [0.5]}},
        {"ingest": {"path": "x.csv"}},
    ],
)
def test_config_rejects(patch):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**BASE_DICT, **patch})


def test_config_requires_sweep():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n": 10})


def test_config_round_trip_and_digest():
    config = ExperimentConfig.from_dict(BASE_DICT)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(config.to_dict())))
    assert again == config
    assert again.digest() == config.digest()
    assert dataclasses.replace(config, n=99, group_sizes=(50, 49)).digest() != config.digest()


def test_with_point_sets_axis():
    config = ExperimentConfig.from_dict({**BASE_DICT, "bias": "implicit_variance", "sweep": {"axis": "delta", "values": [0.2]}})
    assert config.with_point(0.2).delta2 == 0.2
    assert config.with_point(0.2).delta1 == 0.0


def test_bundled_configs_parse():
    from pathlib import Path

    paths = sorted((Path(__file__).parents[1] / "configs").glob("*.json"))
    assert paths
    for path in paths:
        ExperimentConfig.from_file(path)


def test_seed_precedence(monkeypatch):
    monkeypatch.setenv("FAIRSELECT_SEED", "77")
    assert resolve_seed(3, 5) == 3
    assert resolve_seed(None, 5) == 5
    assert resolve_seed(None, None) == 77
    monkeypatch.delenv("FAIRSELECT_SEED")
    assert resolve_seed(None, None) == 0
    monkeypatch.setenv("FAIRSELECT_SEED", "abc")
    with pytest.raises(ConfigError):
        resolve_seed(None, None)


def test_env_seed_reaches_results(monkeypatch):
    config = small_config(sweep=Sweep("beta", (0.5,)))
    monkeypatch.setenv("FAIRSELECT_SEED", "11")
    from_env = run_experiment(config)
    assert from_env.seed == 11
    assert results_to_csv(from_env) == results_to_csv(run_experiment(config, seed=11))
    assert results_to_csv(from_env) != results_to_csv(run_experiment(config, seed=12))


def test_same_seed_gives_identical_csv():
    config = small_config()
    assert results_to_csv(run_experiment(config, seed=4)) == results_to_csv(run_experiment(config, seed=4))


def test_parallel_matches_serial():
    config = small_config()
    serial = run_experiment(config, seed=4, workers=1)
    parallel = run_experiment(config, seed=4, workers=4)
    assert results_to_csv(serial) == results_to_csv(parallel)
    assert results_to_json(serial) == results_to_json(parallel)


def test_draws_do_not_depend_on_grid():
    # a point keeps its draws when other points are added after it
    one = run_experiment(small_config(sweep=Sweep("beta", (0.5,))), seed=2)
    two = run_experiment(small_config(sweep=Sweep("beta", (0.5, 0.9))), seed=2)
    assert one.points[0].stats == two.points[0].stats


def test_csv_layout():
    config = small_config()
    result = run_experiment(config, seed=0)
    lines = results_to_csv(result).splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) - 1 == 5 * 3 * 3
    single = run_experiment(small_config(sweep=Sweep("beta", (0.5,))), seed=0)
    assert len(results_to_csv(single).splitlines()) - 1 == 3 * 3
    assert all(line.endswith(",6") for line in lines[1:])


def test_json_round_trip(tmp_path):
    result = run_experiment(small_config(), seed=1)
    text = results_to_json(result)
    back = results_from_json(text)
    assert results_to_csv(back) == results_to_csv(result)
    assert results_to_json(back) == text
    path = emit_results(result, tmp_path / "out.json", "json")
    assert path.read_text() == text
    with pytest.raises(ConfigError):
        emit_results(result, tmp_path / "out.txt", "xml")


def test_single_iteration_sem_is_missing():
    result = run_experiment(small_config(iterations=1), seed=0)
    stat = result.stat(0.5, "st", "U")
    assert stat.iterations == 1 and math.isnan(stat.sem)
    row = results_to_csv(result).splitlines()[1].split(",")
    assert row[4] == ""
    doc = json.loads(results_to_json(result))
    assert doc["points"][0]["results"]["st"]["U"]["sem"] is None


def test_stat_of_known_values():
    stat = Stat.of([1.0, 2.0, 3.0, 4.0])
    assert stat.mean == 2.5
    assert stat.sem == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)


def test_sem_scales_with_iterations():
    sweep = Sweep("beta", (0.5,))
    few = run_experiment(small_config(sweep=sweep, iterations=50), seed=0).stat(0.5, "st", "U").sem
    many = run_experiment(small_config(sweep=sweep, iterations=200), seed=0).stat(0.5, "st", "U").sem
    assert many / few == pytest.approx(0.5, rel=0.25)


def test_unbiased_baseline_is_near_optimal():
    result = run_experiment(small_config(sweep=Sweep("beta", (1.0,)), iterations=10), seed=0)
    assert result.stat(1.0, "st", "U").mean == pytest.approx(1.0)
    assert result.stat(1.0, "group", "R").mean == pytest.approx(1.0)


def test_infeasible_point_is_recorded(monkeypatch):
    from fairselect import harness
    from fairselect.matching import InfeasibleError

    real = harness.run_draw

    def flaky(config, seed, point, iteration):
        if point == 1:
            raise InfeasibleError("no room")
        return real(config, seed, point, iteration)

    monkeypatch.setattr(harness, "run_draw", flaky)
    result = run_experiment(small_config(sweep=Sweep("beta", (0.5, 0.6, 0.7))), seed=0)
    assert [pt.error is None for pt in result.points] == [True, False, True]
    assert "no room" in result.points[1].error
    assert len(results_to_csv(result).splitlines()) - 1 == 2 * 9
    with pytest.raises(KeyError):
        result.stat(0.6, "st", "U")
    xs, _, _ = result.series("st", "U")
    assert xs.tolist() == [0.5, 0.7]


def test_implicit_variance_and_noisy_beta_run():
    iv = small_config(bias="implicit_variance", delta1=0.0, sweep=Sweep("delta", (0.0, 0.5)))
    result = run_experiment(iv, seed=0)
    assert result.stat(0.0, "st", "R").mean == pytest.approx(1.0, abs=0.35)
    noisy = small_config(bias="noisy_beta", sweep=Sweep("beta", (0.5,)))
    assert run_experiment(noisy, seed=0).points[0].error is None


def test_ingest_config_runs():
    config = ExperimentConfig(
        sweep=Sweep("phi", (0.0,)),
        ingest=IngestSource(group_column="gender", rank_limit=2000),
        metrics=("R", "P1"),
        iterations=2,
    )
    result = run_experiment(config, seed=0)
    assert result.stat(0.0, "inst_wise", "R").mean == pytest.approx(1.0, abs=0.02)


def test_gamma_sweep_keeps_institution_wise_fair():
    config = ExperimentConfig(
        sweep=Sweep("gamma", (0, 2, 5, 10)),
        n=1000,
        p=5,
        capacity=100,
        beta=0.25,
        gamma=0,
        algorithms=("inst_wise",),
        metrics=("P1",),
        iterations=20,
    )
    result = run_experiment(config, seed=0, workers=4)
    _, means, _ = result.series("inst_wise", "P1")
    assert means[0] >= 0.9
    assert np.all(means >= 0.75)
