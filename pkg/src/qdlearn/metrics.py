"""Per-generation run metrics: max fitness, novelty means, QD score.

All metrics are computed over the valid individuals only. Sentinel values
produced by the competition functions (+inf for lone or undominated
individuals) are excluded from the averages; a row where an average has no
finite entries left is flagged degenerate instead of silently zeroed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import competition


@dataclass(frozen=True)
class GenerationMetrics:
    generation: int
    max_fitness: float
    mean_novelty: float
    mean_dominated_novelty: float
    qd_score: float
    valid_count: int
    degenerate: bool

    def as_row(self) -> tuple:
        return (
            self.generation,
            self.max_fitness,
            self.mean_novelty,
            self.mean_dominated_novelty,
            self.qd_score,
            self.valid_count,
        )


CSV_FIELDS = (
    "generation",
    "max_fitness",
    "mean_novelty",
    "mean_dominated_novelty",
    "qd_score",
    "valid_count",
)


def _finite_mean(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return float(finite.mean()) if finite.size else float("nan")


def compute_metrics(pop, k: int = 3) -> GenerationMetrics:
    """Metrics over the valid rows of a population.

    ``k`` is the neighborhood size for both novelty measures, matching the
    competition-side default.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    mask = np.asarray(pop.valid, dtype=bool)
    f = np.asarray(pop.fitness, dtype=float)[mask]
    d = np.asarray(pop.descriptors, dtype=float)[mask]
    count = int(f.size)
    if count == 0:
        return GenerationMetrics(
            generation=pop.generation,
            max_fitness=float("nan"),
            mean_novelty=float("nan"),
            mean_dominated_novelty=float("nan"),
            qd_score=float("nan"),
            valid_count=0,
            degenerate=True,
        )
    novelty = competition.novelty_competition(f, d, k)
    dominated = competition.dominated_novelty_competition(f, d, k)
    mean_novelty = _finite_mean(novelty)
    mean_dominated = _finite_mean(dominated)
    max_fitness = float(f.max())
    qd_score = max_fitness * mean_dominated
    degenerate = bool(np.isnan(mean_novelty) or np.isnan(mean_dominated))
    return GenerationMetrics(
        generation=pop.generation,
        max_fitness=max_fitness,
        mean_novelty=mean_novelty,
        mean_dominated_novelty=mean_dominated,
        qd_score=qd_score,
        valid_count=count,
        degenerate=degenerate,
    )


def normalize_to_baseline(metric_series, baseline_series):
    """Elementwise ratio of a metric series to a baseline series.

    Returns (ratios, flagged); positions where the baseline is zero are
    flagged and carry NaN rather than an invented value.
    """
    metric = np.asarray(metric_series, dtype=float)
    baseline = np.asarray(baseline_series, dtype=float)
    if metric.shape != baseline.shape:
        raise ValueError(
            f"series shapes differ: {metric.shape} vs {baseline.shape}"
        )
    flagged = baseline == 0.0
    safe = np.where(flagged, 1.0, baseline)
    ratios = np.where(flagged, np.nan, metric / safe)
    return ratios, flagged
