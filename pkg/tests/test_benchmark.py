'''
Unit tests for the benchmark scripts
'''

# pylint: disable=missing-function-docstring

import pandas as pd
import pytest

from textspot import ConfigurationError, load_config
from textspot.benchmark import BenchmarkReport, ListSteps, ParameterSet, ResultPrinter
from textspot.benchmark import StageStats, benchmark_aggregation, run_benchmark, run_sweep
from textspot.fixtures import make_scene
from textspot.pipeline import STAGES

SMALL = "test-files/configs/small.toml"


def test_list_steps():
    steps = ListSteps("foo", ["bar", "baz"])

    assert steps.key() == "foo"
    assert steps.values == ("bar", "baz")

    with pytest.raises(ConfigurationError):
        ListSteps("foo", [])


def test_parse_list_steps():
    steps = ListSteps.parse("pa.dist_threshold = 2, 3 ,4")

    assert steps.key() == "pa.dist_threshold"
    assert steps.values == ("2", "3", "4")

    with pytest.raises(ConfigurationError):
        ListSteps.parse("pa.dist_threshold")
    with pytest.raises(ConfigurationError):
        ListSteps.parse("pa.dist_threshold=")


def test_params():
    params = ParameterSet([ListSteps("foo", ["2", "5"]), ListSteps("bar", ["x", "z"])])

    assert params.variables == ["foo", "bar"]
    assert not params.at_end()

    configs = []
    config = params.next()
    while config is not None:
        configs.append(config)
        config = params.next()

    assert configs == [{"foo": "2", "bar": "x"}, {"foo": "2", "bar": "z"},
                       {"foo": "5", "bar": "x"}, {"foo": "5", "bar": "z"}]
    assert params.at_end()


def test_params_without_steps():
    params = ParameterSet([])

    assert params.next() == {}
    assert params.next() is None


def test_params_reject_duplicate_keys():
    with pytest.raises(ConfigurationError):
        ParameterSet([ListSteps("foo", ["1"]), ListSteps("foo", ["2"])])


def test_stage_stats():
    stats = StageStats.from_samples([1.0, 2.0, 3.0, 4.0, 100.0])

    assert stats.mean == 22.0
    assert stats.p50 == 3.0
    assert 96.0 < stats.p99 < 100.0

    with pytest.raises(ValueError):
        StageStats.from_samples([])


def test_report():
    runs = [{"backbone": 2.0, "fpem": 1.0}, {"backbone": 4.0, "fpem": 3.0}]
    report = BenchmarkReport.from_timings(runs)

    assert report.repetitions == 2
    assert report.total_mean == 5.0
    assert report.fps == 200.0

    row = report.to_row()
    assert list(row) == ["backbone_mean_ms", "backbone_p50_ms", "backbone_p99_ms",
                         "fpem_mean_ms", "fpem_p50_ms", "fpem_p99_ms", "total_mean_ms", "fps"]
    assert row["backbone_mean_ms"] == 3.0
    assert report.lines()[-1] == "fps=200.00 repetitions=2"


def test_printer(tmp_path):
    path = str(tmp_path / "results" / "bench.csv")
    printer = ResultPrinter(path, ["pa.dist_threshold"])

    printer.print("run-0", {"seed": 7, "pa.dist_threshold": "2"}, {"fps": 10.0})
    printer.print("run-1", {"seed": 7, "pa.dist_threshold": "3"}, {"fps": 12.5})
    assert printer.rows == 2

    with open(path, encoding='utf-8') as result_file:
        lines = result_file.read().splitlines()

    assert lines[0].startswith("# command:")
    assert lines[1] == "# constants: seed=7"
    assert lines[2].startswith("# ---")
    assert lines[3] == "uid, pa.dist_threshold, fps"
    assert lines[4] == "run-0, 2, 10.0"

    frame = pd.read_csv(path, comment='#', skipinitialspace=True)
    assert frame["fps"].tolist() == [10.0, 12.5]


def test_run_benchmark():
    config = load_config(SMALL)
    report = run_benchmark(config, map_size=16)

    assert report.repetitions == config.run.bench_repetitions
    assert list(report.stages) == list(STAGES)
    assert all(stats.mean >= 0.0 for stats in report.stages.values())


def test_benchmark_aggregation():
    config = load_config(SMALL)
    scene = make_scene(seed=1, map_height=32, map_width=32)

    stats = benchmark_aggregation(scene.p_tex, scene.p_ker, scene.emb, config, 3)
    assert 0.0 <= stats.p50 <= stats.p99

    with pytest.raises(ValueError):
        benchmark_aggregation(scene.p_tex, scene.p_ker, scene.emb, config, 0)


def test_sweep(tmp_path):
    config = load_config(SMALL)
    seen = []

    def runner(current):
        seen.append((current.pa.dist_threshold, current.model.n_stk))
        return BenchmarkReport.from_timings([{stage: 1.0 for stage in STAGES}])

    steps = [ListSteps.parse("pa.dist_threshold=2,4"), ListSteps.parse("model.n_stk=1,2")]
    printer = ResultPrinter(str(tmp_path / "sweep.csv"), ["pa.dist_threshold", "model.n_stk"])
    reports = run_sweep(config, steps, runner, printer)

    assert len(reports) == 4
    assert seen == [(2.0, 1), (2.0, 2), (4.0, 1), (4.0, 2)]

    frame = pd.read_csv(printer.path, comment='#', skipinitialspace=True)
    assert frame["pa.dist_threshold"].tolist() == [2, 2, 4, 4]
    assert frame["total_mean_ms"].tolist() == [4.0] * 4
    assert frame["uid"].tolist() == [f"{printer.uid}-{row}" for row in range(4)]
