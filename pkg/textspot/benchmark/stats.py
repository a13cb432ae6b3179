''' This is part of the benchmark scripts. See __init__.py for more details. '''

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class StageStats:
    ''' Wall-clock statistics of one stage, in milliseconds '''
    mean: float
    p50: float
    p99: float

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> 'StageStats':
        ''' Summarize repeated measurements '''
        if len(samples) == 0:
            raise ValueError("Need at least one sample")
        values = np.asarray(samples, dtype=np.float64)
        return cls(float(values.mean()), float(np.percentile(values, 50)),
                   float(np.percentile(values, 99)))


@dataclass(frozen=True)
class BenchmarkReport:
    ''' Per-stage statistics of repeated runs '''
    stages: dict[str, StageStats]
    repetitions: int

    @classmethod
    def from_timings(cls, runs: Sequence[dict[str, float]]) -> 'BenchmarkReport':
        ''' Build a report from one {stage: ms} dict per run '''
        if not runs:
            raise ValueError("Need at least one run")
        names = list(runs[0].keys())
        return cls({name: StageStats.from_samples([run[name] for run in runs])
                    for name in names}, len(runs))

    @property
    def total_mean(self) -> float:
        ''' Mean milliseconds of a full run '''
        return sum(stats.mean for stats in self.stages.values())

    @property
    def fps(self) -> float:
        ''' Images per second, from the mean of a full run '''
        total = self.total_mean
        return 1000.0 / total if total > 0 else float('inf')

    def to_row(self) -> dict[str, float]:
        ''' Flat columns for the result CSV '''
        row = {}
        for (name, stats) in self.stages.items():
            row[f"{name}_mean_ms"] = round(stats.mean, 4)
            row[f"{name}_p50_ms"] = round(stats.p50, 4)
            row[f"{name}_p99_ms"] = round(stats.p99, 4)
        row["total_mean_ms"] = round(self.total_mean, 4)
        row["fps"] = round(self.fps, 4)
        return row

    def lines(self) -> list[str]:
        ''' Human-readable table '''
        result = [f"{'stage':<14}{'mean ms':>12}{'p50 ms':>12}{'p99 ms':>12}"]
        for (name, stats) in self.stages.items():
            result.append(f"{name:<14}{stats.mean:>12.3f}{stats.p50:>12.3f}{stats.p99:>12.3f}")
        result.append(f"{'total':<14}{self.total_mean:>12.3f}")
        result.append(f"fps={self.fps:.2f} repetitions={self.repetitions}")
        return result
