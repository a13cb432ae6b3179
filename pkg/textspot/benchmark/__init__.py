'''
Helper scripts to time the spotting pipeline.

A benchmark runs the pipeline several times on a synthetic scene and reports
mean, median and 99th percentile wall-clock milliseconds of the four stages:
backbone, FPEMs, detection head plus Pixel Aggregation, and recognition.
Sweeps over config keys append one CSV row per configuration.
'''

from time import perf_counter
from typing import Callable, Optional

from ..config import RunConfig
from ..fixtures import make_scene
from ..logging import RunLogger
from ..pa import aggregate
from ..pipeline import STAGES, Pipeline, load_charset, load_weights
from ..tensor import TensorMap
from .params import ListSteps, ParameterSet
from .printer import ResultPrinter
from .stats import BenchmarkReport, StageStats

DEFAULT_MAP_SIZE = 40

__all__ = [
    "BenchmarkReport", "ListSteps", "ParameterSet", "ResultPrinter", "StageStats",
    "benchmark_aggregation", "benchmark_image", "benchmark_pipeline", "run_benchmark",
    "run_sweep",
]


def benchmark_image(cfg: RunConfig, map_size: int = DEFAULT_MAP_SIZE) -> TensorMap:
    ''' The seeded synthetic image benchmarks run on (4·map_size pixels per side) '''
    scene = make_scene(cfg.run.seed, map_size, map_size, emb_dim=cfg.model.emb_dim,
                       delta_dis=cfg.loss.delta_dis)
    return scene.image


def benchmark_pipeline(pipeline: Pipeline, image: TensorMap, repetitions: int,
                       det_only: bool = False, warmups: int = 0) -> BenchmarkReport:
    ''' Run the pipeline `repetitions` times and summarize the stage timings '''
    if repetitions < 1:
        raise ValueError("Need at least one benchmark repetition")

    for _ in range(warmups):
        pipeline.run(image, det_only=det_only)

    runs = []
    for _ in range(repetitions):
        result = pipeline.run(image, det_only=det_only)
        runs.append({stage: result.timings[stage] for stage in STAGES})

    return BenchmarkReport.from_timings(runs)


def benchmark_aggregation(p_tex: TensorMap, p_ker: TensorMap, emb: TensorMap,
                          cfg: RunConfig, repetitions: int) -> StageStats:
    ''' Time Pixel Aggregation alone on fixed prediction maps '''
    if repetitions < 1:
        raise ValueError("Need at least one benchmark repetition")

    samples = []
    for _ in range(repetitions):
        start = perf_counter()
        aggregate(p_tex, p_ker, emb, cfg.pa)
        samples.append((perf_counter() - start) * 1000.0)

    return StageStats.from_samples(samples)


def run_benchmark(cfg: RunConfig, map_size: int = DEFAULT_MAP_SIZE, det_only: bool = False,
                  logger: Optional[RunLogger] = None) -> BenchmarkReport:
    ''' Set up a pipeline from the config and time it on the synthetic image '''
    charset = load_charset(cfg)
    weights = load_weights(cfg, charset, with_recognition=not det_only)
    pipeline = Pipeline(cfg, weights, charset, logger)
    return benchmark_pipeline(pipeline, benchmark_image(cfg, map_size),
                              cfg.run.bench_repetitions, det_only=det_only)


def run_sweep(cfg: RunConfig, steps: list[ListSteps],
              runner: Callable[[RunConfig], BenchmarkReport],
              printer: Optional[ResultPrinter] = None,
              logger: Optional[RunLogger] = None) -> list[BenchmarkReport]:
    ''' Run the benchmark once for every combination of swept values '''
    params = ParameterSet(steps)
    reports = []

    config = params.next()
    while config is not None:
        current = cfg
        for (key, value) in config.items():
            current = current.override(f"{key}={value}")

        if logger:
            logger.log_meta(f"🔬 Running benchmark with {config or 'defaults'}")

        report = runner(current)
        if printer:
            constants = {"repetitions": report.repetitions, "seed": current.run.seed}
            printer.print(f"{printer.uid}-{printer.rows}", constants | config, report.to_row())
        reports.append(report)

        config = params.next()

    return reports
