"""Generic population loop: reproduce, evaluate, compete, truncate.

Every algorithm in the toolkit (plain GA, the archive-based and novelty-based
baselines, and the learned competition) is this one loop with a different
competition function plugged in. Selection is always truncation on the
competition fitness over the union of parents and offspring.

Randomness is drawn from streams keyed by (seed, role, generation), so runs
are reproducible bit for bit regardless of how evaluation work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import benchfn, competition, descriptor as descriptor_mod, metrics, streams


@dataclass
class Population:
    """Genotypes with cached fitness, descriptors, and validity flags.

    Invalid rows (eliminated by a -inf competition verdict but kept because
    the archive was under-full) carry fitness -inf and never act as parents,
    distance neighbors, or metric contributors.
    """

    genotypes: np.ndarray
    fitness: np.ndarray
    descriptors: np.ndarray
    valid: np.ndarray
    generation: int = 0

    def __post_init__(self):
        n = self.genotypes.shape[0]
        if not (self.fitness.shape == (n,) and self.valid.shape == (n,) and self.descriptors.shape[0] == n):
            raise ValueError("population row counts disagree")

    @property
    def size(self) -> int:
        return self.genotypes.shape[0]


@dataclass(frozen=True)
class LoopConfig:
    population_size: int = 128
    batch_size: int = 32
    generations: int = 256
    mutation_sigma: float = 0.05  # fraction of box width per coordinate
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 1 or self.batch_size < 1 or self.generations < 1:
            raise ValueError("population_size, batch_size, and generations must be >= 1")
        if self.mutation_sigma < 0:
            raise ValueError("mutation_sigma must be >= 0")


@dataclass
class Trajectory:
    """Per-generation metric snapshots plus the final population."""

    metrics: list = field(default_factory=list)
    final: Population | None = None


# ---------------------------------------------------------------------------
# Task and descriptor dispatch
# ---------------------------------------------------------------------------


def evaluate_task(instance, X: np.ndarray, rngs=None) -> np.ndarray:
    """Fitness of each genotype row under either task flavor."""
    if isinstance(instance, benchfn.ObjectiveInstance):
        return benchfn.evaluate_batch(instance, X, rngs=rngs)
    return instance.evaluate_batch(X, rngs=rngs)


def _noise_active(instance) -> bool:
    noise = getattr(instance, "noise", None)
    return noise is not None and noise.active


def compute_descriptors(describer, X: np.ndarray, rng=None) -> np.ndarray:
    """Descriptor rows for genotypes.

    ``describer`` is a ProjectionDescriptor, a DescriptorSpec with the
    random_noise ablation kind (needs ``rng``), or a task object exposing
    describe_batch (the task-specific kind).
    """
    if isinstance(describer, descriptor_mod.ProjectionDescriptor):
        return descriptor_mod.describe_batch(describer, X)
    if isinstance(describer, descriptor_mod.DescriptorSpec):
        if describer.kind != "random_noise":
            raise ValueError(
                f"bare DescriptorSpec only drives the random_noise kind, got {describer.kind!r}"
            )
        if rng is None:
            raise ValueError("random_noise descriptors need an rng stream")
        return descriptor_mod.noise_descriptors(X.shape[0], describer.dim, rng)
    return describer.describe_batch(X)


def _evaluation_streams(instance, seed: int, gen: int, count: int):
    if not _noise_active(instance):
        return None
    return [streams.stream(seed, streams.EVALUATE, gen, i) for i in range(count)]


# ---------------------------------------------------------------------------
# Loop operations
# ---------------------------------------------------------------------------


def init_population(cfg: LoopConfig, instance, describer) -> Population:
    """Uniform genotypes in the box, evaluated and described; all rows valid."""
    box = np.asarray(instance.box, dtype=float)
    rng = streams.stream(cfg.seed, streams.INIT)
    span = box[:, 1] - box[:, 0]
    X = box[:, 0] + span * rng.random((cfg.population_size, box.shape[0]))
    f = evaluate_task(instance, X, rngs=_evaluation_streams(instance, cfg.seed, 0, cfg.population_size))
    d = compute_descriptors(describer, X, rng=streams.stream(cfg.seed, streams.DESCRIBE, 0))
    return Population(
        genotypes=X,
        fitness=np.asarray(f, dtype=float),
        descriptors=np.asarray(d, dtype=float),
        valid=np.ones(cfg.population_size, dtype=bool),
        generation=0,
    )


def reproduce(pop: Population, batch_size: int, rng, mutation_sigma: float, box: np.ndarray) -> np.ndarray:
    """Offspring via uniform parent choice among valid rows plus Gaussian mutation.

    Parent indices come from floor(u * valid_count) on unit uniforms, so the
    same draws remain usable when several populations with different valid
    counts share one stream. Draw order (uniforms, then one normal block) is
    part of the determinism contract.
    """
    valid_idx = np.flatnonzero(pop.valid)
    if valid_idx.size == 0:
        raise RuntimeError("cannot reproduce: population has no valid individuals")
    u = rng.random(batch_size)
    noise = rng.standard_normal((batch_size, pop.genotypes.shape[1]))
    parents = valid_idx[(u * valid_idx.size).astype(np.int64)]
    span = box[:, 1] - box[:, 0]
    offspring = pop.genotypes[parents] + mutation_sigma * span * noise
    return np.clip(offspring, box[:, 0], box[:, 1])


def step_generation(
    pop: Population,
    cfg: LoopConfig,
    instance,
    describer,
    fn: competition.CompetitionFn,
) -> Population:
    """One generation: reproduce, evaluate offspring, compete over the union, truncate.

    Survivors are the population-size rows with the highest competition
    fitness; ties keep the lower union index, so incumbents win against
    equal-scored offspring. Surviving rows whose competition fitness is -inf
    are marked invalid and their fitness is pinned to -inf.
    """
    gen = pop.generation + 1
    box = np.asarray(instance.box, dtype=float)
    n = cfg.population_size

    rng_rep = streams.stream(cfg.seed, streams.REPRODUCE, gen)
    offspring = reproduce(pop, cfg.batch_size, rng_rep, cfg.mutation_sigma, box)
    off_f = evaluate_task(
        instance, offspring, rngs=_evaluation_streams(instance, cfg.seed, gen, cfg.batch_size)
    )
    off_d = compute_descriptors(
        describer, offspring, rng=streams.stream(cfg.seed, streams.DESCRIBE, gen)
    )

    union_x = np.concatenate([pop.genotypes, offspring], axis=0)
    union_f = np.concatenate([pop.fitness, np.asarray(off_f, dtype=float)])
    union_d = np.concatenate([pop.descriptors, np.asarray(off_d, dtype=float)], axis=0)
    union_valid = np.concatenate([pop.valid, np.ones(cfg.batch_size, dtype=bool)])

    rng_compete = (
        streams.stream(cfg.seed, streams.COMPETE, gen) if fn.kind == "random" else None
    )
    scores = competition.compete(fn, union_f, union_d, union_valid, rng=rng_compete)

    order = np.argsort(-scores, kind="stable")[:n]
    survivors = np.sort(order)
    alive = scores[survivors] != -np.inf
    return Population(
        genotypes=union_x[survivors],
        fitness=np.where(alive, union_f[survivors], -np.inf),
        descriptors=union_d[survivors],
        valid=alive,
        generation=gen,
    )


def run(
    cfg: LoopConfig,
    instance,
    describer,
    fn: competition.CompetitionFn,
    metric_k: int = 3,
    record_metrics: bool = True,
) -> Trajectory:
    """Full inner-loop run: one metric snapshot per generation, plus the final state."""
    pop = init_population(cfg, instance, describer)
    traj = Trajectory()
    for _ in range(cfg.generations):
        pop = step_generation(pop, cfg, instance, describer, fn)
        if record_metrics:
            traj.metrics.append(metrics.compute_metrics(pop, k=metric_k))
    traj.final = pop
    return traj
