"""Meta-optimization of the learned competition function.

An outer separable CMA-ES proposes flat parameter vectors; each candidate is
scored by running full inner evolution loops on a shared batch of benchmark
tasks and reducing the final populations to a scalar meta-objective. Scores
are normalized per task across the meta-population and averaged.

Every candidate in a meta-generation sees identical task instances and
identical inner-loop seeds, so comparisons are paired. All candidates are
rolled out together in one stacked pass per task: populations live in
(candidates, rows, ...) arrays, the network forward broadcasts over the
candidate axis, and shared reproduction draws are broadcast too. The result
matches running `rollout` per candidate up to floating-point associativity.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import benchfn, competition, descriptor, evoloop, lqdnet, metrics, stats, streams

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "qdlearn-meta-checkpoint"
CHECKPOINT_VERSION = 1

LOG_FIELDS = ("meta_gen", "mean_meta_fitness", "best_meta_fitness", "sigma")

OBJECTIVE_KINDS = ("F", "N", "FplusN")
AGGREGATIONS = ("final", "mean")
NORMALIZATIONS = ("zscore", "rank")

# Variance floor keeping the diagonal covariance strictly positive.
_VAR_FLOOR = 1e-32


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetaObjective:
    """Scalar reduction of a finished inner-loop population."""

    kind: str = "F"
    k: int = 3

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"objective kind must be one of {OBJECTIVE_KINDS}, got {self.kind!r}")
        if self.k < 1:
            raise ValueError(f"objective k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class TaskDistribution:
    """Sampling ranges for meta-training tasks and their inner loops."""

    dim_low: int = 2
    dim_high: int = 12
    descriptor_dim: int = 2
    noise_kinds: tuple = ("none",)
    noise_strength_low: float = 0.0
    noise_strength_high: float = 0.0
    population_size: int = 128
    batch_size: int = 32
    generations: int = 256
    mutation_sigma: float = 0.05

    def __post_init__(self):
        if not (1 <= self.dim_low <= self.dim_high):
            raise ValueError(f"invalid dim range [{self.dim_low}, {self.dim_high}]")
        if self.descriptor_dim < 1:
            raise ValueError("descriptor_dim must be >= 1")
        for kind in self.noise_kinds:
            if kind not in benchfn.NoiseSpec.KINDS:
                raise ValueError(f"unknown noise kind {kind!r}")
        if not self.noise_kinds:
            raise ValueError("noise_kinds must not be empty")
        if not (0.0 <= self.noise_strength_low <= self.noise_strength_high):
            raise ValueError("invalid noise strength range")
        # remaining loop fields are validated by LoopConfig at task build time


@dataclass(frozen=True)
class MetaConfig:
    objective: MetaObjective = MetaObjective()
    net: lqdnet.NetConfig = lqdnet.NetConfig()
    tasks: TaskDistribution = TaskDistribution()
    meta_population: int = 256
    tasks_per_generation: int = 256
    meta_generations: int = 16384
    sigma0: float = 0.1
    seed: int = 0
    aggregation: str = "final"
    normalization: str = "zscore"
    validation_tasks: int = 32
    validate_every: int = 50

    def __post_init__(self):
        if self.meta_population < 2:
            raise ValueError("meta_population must be >= 2")
        if self.tasks_per_generation < 1 or self.meta_generations < 1:
            raise ValueError("tasks_per_generation and meta_generations must be >= 1")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be > 0")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if self.validation_tasks < 1 or self.validate_every < 1:
            raise ValueError("validation_tasks and validate_every must be >= 1")
        if self.net.descriptor_dim != self.tasks.descriptor_dim:
            raise ValueError(
                f"network descriptor_dim {self.net.descriptor_dim} does not match "
                f"task descriptor_dim {self.tasks.descriptor_dim}"
            )


@dataclass(frozen=True)
class MetaTaskSpec:
    """One sampled inner-loop task: objective instance, descriptors, loop settings."""

    instance: benchfn.ObjectiveInstance
    projection: descriptor.ProjectionDescriptor
    loop: evoloop.LoopConfig


def sample_meta_task(cfg: MetaConfig, rng: np.random.Generator) -> MetaTaskSpec:
    """Draw one task: training function, dimension, noise, rotation, projection."""
    dist = cfg.tasks
    fid = benchfn.TRAINING_FUNCTIONS[int(rng.integers(len(benchfn.TRAINING_FUNCTIONS)))]
    dim = int(rng.integers(dist.dim_low, dist.dim_high + 1))
    kind = dist.noise_kinds[int(rng.integers(len(dist.noise_kinds)))]
    if kind == "none":
        noise = benchfn.NoiseSpec()
    else:
        strength = float(rng.uniform(dist.noise_strength_low, dist.noise_strength_high))
        noise = benchfn.NoiseSpec(kind=kind, strength=strength)
    instance_seed = int(rng.integers(2**63))
    projection_seed = int(rng.integers(2**63))
    loop_seed = int(rng.integers(2**63))
    instance = benchfn.build_instance(fid, dim, noise=noise, seed=instance_seed)
    projection = descriptor.sample_projection(dim, dist.descriptor_dim, seed=projection_seed)
    loop = evoloop.LoopConfig(
        population_size=dist.population_size,
        batch_size=dist.batch_size,
        generations=dist.generations,
        mutation_sigma=dist.mutation_sigma,
        seed=loop_seed,
    )
    return MetaTaskSpec(instance=instance, projection=projection, loop=loop)


# ---------------------------------------------------------------------------
# Meta-objectives
# ---------------------------------------------------------------------------


def _objective_value(f: np.ndarray, d: np.ndarray, valid: np.ndarray, objective: MetaObjective) -> float:
    """Scalar objective of one population; -inf sentinel when undefined."""
    f = np.asarray(f, dtype=float)[valid]
    d = np.asarray(d, dtype=float)[valid]
    if f.size == 0:
        return -math.inf
    if objective.kind == "F":
        return float(f.max())
    if objective.kind == "N":
        novelty = competition.novelty_competition(f, d, objective.k)
        finite = novelty[np.isfinite(novelty)]
        return float(finite.mean()) if finite.size else -math.inf
    dominated = competition.dominated_novelty_competition(f, d, objective.k)
    finite = dominated[np.isfinite(dominated)]
    if finite.size == 0:
        return -math.inf
    return float(f.max()) * float(finite.mean())


def meta_objective_value(trajectory: evoloop.Trajectory, objective: MetaObjective,
                         aggregation: str = "final") -> float:
    """Reduce a finished inner-loop run to its meta-objective scalar.

    "final" reads the last generation's population; "mean" averages the
    per-generation values (requires the trajectory to carry metrics recorded
    with the objective's k). A degenerate generation contributes -inf, which
    propagates through the mean.
    """
    if aggregation == "final":
        pop = trajectory.final
        return _objective_value(pop.fitness, pop.descriptors, pop.valid, objective)
    if not trajectory.metrics:
        raise ValueError("mean aggregation needs recorded per-generation metrics")
    field = {"F": "max_fitness", "N": "mean_novelty", "FplusN": "qd_score"}[objective.kind]
    values = [getattr(m, field) for m in trajectory.metrics]
    values = [-math.inf if math.isnan(v) else v for v in values]
    return float(np.mean(values))


def normalize_aggregate(scores, method: str = "zscore") -> np.ndarray:
    """Per-task normalization across candidates, then mean over tasks.

    ``scores`` is (candidates, tasks). Sentinels (-inf/NaN) are first mapped
    to the column minimum of the finite entries, so a failed rollout ranks
    worst without poisoning the column statistics.
    """
    s = np.array(scores, dtype=float, copy=True)
    if s.ndim != 2:
        raise ValueError(f"scores must be 2-D, got shape {s.shape}")
    finite = np.isfinite(s)
    col_has_finite = finite.any(axis=0)
    col_min = np.where(
        col_has_finite, np.where(finite, s, np.inf).min(axis=0), 0.0
    )
    s = np.where(finite, s, col_min[np.newaxis, :])
    m = s.shape[0]
    if method == "zscore":
        centered = s - s.mean(axis=0, keepdims=True)
        std = s.std(axis=0, keepdims=True)
        normalized = centered / np.maximum(std, 1e-8)
    elif method == "rank":
        if m == 1:
            normalized = np.zeros_like(s)
        else:
            normalized = np.empty_like(s)
            for j in range(s.shape[1]):
                ranks = stats._midranks(s[:, j])  # 1..m with mid-rank ties
                normalized[:, j] = (ranks - 1.0) / (m - 1.0) - 0.5
    else:
        raise ValueError(f"unknown normalization {method!r}")
    return normalized.mean(axis=1)


# ---------------------------------------------------------------------------
# Separable CMA-ES (diagonal covariance)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SepCmaState:
    mean: np.ndarray
    sigma: float
    variances: np.ndarray  # diagonal of the covariance (before sigma^2)
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int
    lam: int
    weights: np.ndarray
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float

    @property
    def mu(self) -> int:
        return self.weights.size


def cma_init(dim: int, population: int, sigma0: float, mean=None) -> SepCmaState:
    """Fresh strategy state; constants follow the separable recipe.

    Rank-one and rank-mu diagonal learning rates carry the (dim+2)/3 speedup
    factor of the separable variant, with the rank-mu rate capped so the
    variance update stays a convex combination.
    """
    if dim < 1 or population < 2:
        raise ValueError("need dim >= 1 and population >= 2")
    if sigma0 <= 0:
        raise ValueError("sigma0 must be > 0")
    mean = np.zeros(dim) if mean is None else np.array(mean, dtype=float, copy=True)
    if mean.shape != (dim,):
        raise ValueError(f"mean must have shape ({dim},), got {mean.shape}")
    mu = population // 2
    raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / float(np.sum(weights**2))
    c_sigma = (mu_eff + 2.0) / (dim + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (dim + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / dim) / (dim + 4.0 + 2.0 * mu_eff / dim)
    sep_boost = (dim + 2.0) / 3.0
    c_1 = sep_boost * 2.0 / ((dim + 1.3) ** 2 + mu_eff)
    c_mu = min(
        1.0 - c_1,
        sep_boost * 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((dim + 2.0) ** 2 + mu_eff),
    )
    chi_n = math.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim**2))
    return SepCmaState(
        mean=mean,
        sigma=float(sigma0),
        variances=np.ones(dim),
        p_sigma=np.zeros(dim),
        p_c=np.zeros(dim),
        generation=0,
        lam=int(population),
        weights=weights,
        mu_eff=mu_eff,
        c_sigma=c_sigma,
        d_sigma=d_sigma,
        c_c=c_c,
        c_1=c_1,
        c_mu=c_mu,
        chi_n=chi_n,
    )


def cma_ask(state: SepCmaState, rng: np.random.Generator) -> np.ndarray:
    """Sample the candidate matrix (population, dim)."""
    z = rng.standard_normal((state.lam, state.mean.size))
    return state.mean + state.sigma * np.sqrt(state.variances) * z


def cma_tell(state: SepCmaState, candidates: np.ndarray, meta_fitnesses) -> SepCmaState:
    """One strategy update from evaluated candidates (maximization)."""
    candidates = np.asarray(candidates, dtype=float)
    fit = np.asarray(meta_fitnesses, dtype=float)
    if candidates.shape != (state.lam, state.mean.size) or fit.shape != (state.lam,):
        raise ValueError("candidate or fitness shape does not match the state")
    nan_mask = np.isnan(fit)
    if nan_mask.any():
        logger.warning("cma_tell: %d NaN meta-fitness values ranked worst", int(nan_mask.sum()))
        fit = np.where(nan_mask, -np.inf, fit)

    order = np.argsort(-fit, kind="stable")
    selected = candidates[order[: state.mu]]
    y = (selected - state.mean) / state.sigma
    y_w = state.weights @ y

    dim = state.mean.size
    gen = state.generation + 1
    p_sigma = (1.0 - state.c_sigma) * state.p_sigma + math.sqrt(
        state.c_sigma * (2.0 - state.c_sigma) * state.mu_eff
    ) * (y_w / np.sqrt(state.variances))
    ps_norm = float(np.linalg.norm(p_sigma))
    sigma = state.sigma * math.exp(
        (state.c_sigma / state.d_sigma) * (ps_norm / state.chi_n - 1.0)
    )
    # stall flag: freeze the rank-one path while sigma is still adapting fast
    expected = math.sqrt(1.0 - (1.0 - state.c_sigma) ** (2 * gen))
    h_sigma = 1.0 if ps_norm / expected < (1.4 + 2.0 / (dim + 1.0)) * state.chi_n else 0.0
    p_c = (1.0 - state.c_c) * state.p_c + h_sigma * math.sqrt(
        state.c_c * (2.0 - state.c_c) * state.mu_eff
    ) * y_w
    delta_h = (1.0 - h_sigma) * state.c_c * (2.0 - state.c_c)
    variances = (
        (1.0 - state.c_1 - state.c_mu) * state.variances
        + state.c_1 * (p_c**2 + delta_h * state.variances)
        + state.c_mu * (state.weights @ y**2)
    )
    return dataclasses.replace(
        state,
        mean=state.mean + state.sigma * y_w,
        sigma=sigma,
        variances=np.maximum(variances, _VAR_FLOOR),
        p_sigma=p_sigma,
        p_c=p_c,
        generation=gen,
    )


# ---------------------------------------------------------------------------
# Rollouts
# ---------------------------------------------------------------------------


def rollout(theta: np.ndarray, task: MetaTaskSpec, net: lqdnet.NetConfig,
            objective: MetaObjective, aggregation: str = "final") -> float:
    """Reference single-candidate rollout through the standard loop."""
    params = lqdnet.LqdParams(config=net, theta=np.asarray(theta, dtype=float))
    fn = competition.CompetitionFn(kind="learned", params=params)
    traj = evoloop.run(
        task.loop,
        task.instance,
        task.projection,
        fn,
        metric_k=objective.k,
        record_metrics=(aggregation == "mean"),
    )
    return meta_objective_value(traj, objective, aggregation)


def _stacked_evaluate(instance, offspring: np.ndarray, seed: int, gen: int) -> np.ndarray:
    """Fitness for (candidates, rows, dim) offspring, matching the loop's streams."""
    m, b, n = offspring.shape
    if not instance.noise.active:
        flat = benchfn.evaluate_batch(instance, offspring.reshape(m * b, n))
        return flat.reshape(m, b)
    out = np.empty((m, b))
    for i in range(m):
        rngs = [streams.stream(seed, streams.EVALUATE, gen, j) for j in range(b)]
        out[i] = benchfn.evaluate_batch(instance, offspring[i], rngs)
    return out


def _stacked_descriptors(task: MetaTaskSpec, offspring: np.ndarray, seed: int, gen: int,
                         candidates: int) -> np.ndarray:
    proj = task.projection
    if isinstance(proj, descriptor.ProjectionDescriptor):
        return offspring @ proj.matrix.T
    if isinstance(proj, descriptor.DescriptorSpec) and proj.kind == "random_noise":
        rng = streams.stream(seed, streams.DESCRIBE, gen)
        rows = descriptor.noise_descriptors(offspring.shape[1], proj.dim, rng)
        return np.broadcast_to(rows, (candidates,) + rows.shape).copy()
    raise ValueError("stacked rollouts support projection or random_noise descriptors")


def _loop_shape(task: MetaTaskSpec) -> tuple:
    loop = task.loop
    return (loop.population_size, loop.batch_size, loop.generations)


def _objective_matrix(f, d, valid, objective: MetaObjective) -> np.ndarray:
    """(candidates, tasks) objective values from stacked population state."""
    m, k = f.shape[:2]
    out = np.empty((m, k))
    for i in range(m):
        for j in range(k):
            out[i, j] = _objective_value(f[i, j], d[i, j], valid[i, j], objective)
    return out


def _stacked_group(thetas: np.ndarray, tasks: list, net: lqdnet.NetConfig,
                   objective: MetaObjective, aggregation: str) -> np.ndarray:
    """Roll out every candidate on every task of one shared loop shape.

    Populations live in (candidates, tasks, rows, ...) arrays so each
    generation needs one featurize and one network forward; the candidate
    tensors get a broadcast task axis. Genotypes stay per task because task
    dimensions differ. Matches per-candidate ``rollout`` results because each
    task's streams and draw order are untouched by the batching.
    """
    m, k = thetas.shape[0], len(tasks)
    n_pop, batch, gens = _loop_shape(tasks[0])
    d_dim = net.descriptor_dim
    tensors = {
        name: t[:, np.newaxis] for name, t in lqdnet.unflatten(thetas, net).items()
    }

    xs = []
    f = np.empty((m, k, n_pop))
    d = np.empty((m, k, n_pop, d_dim))
    boxes = []
    for j, task in enumerate(tasks):
        instance, seed = task.instance, task.loop.seed
        box = np.asarray(instance.box, dtype=float)
        lo, hi = box[:, 0], box[:, 1]
        rng = streams.stream(seed, streams.INIT)
        x0 = lo + (hi - lo) * rng.random((n_pop, instance.dim))
        f[:, j] = _stacked_evaluate(instance, x0[np.newaxis], seed, 0)[0]
        d[:, j] = _stacked_descriptors(task, x0[np.newaxis], seed, 0, 1)[0]
        xs.append(np.repeat(x0[np.newaxis], m, axis=0))
        boxes.append((lo, hi))
    valid = np.ones((m, k, n_pop), dtype=bool)

    per_gen = []
    rows = n_pop + batch
    for gen in range(1, gens + 1):
        union_xs = []
        union_f = np.empty((m, k, rows))
        union_d = np.empty((m, k, rows, d_dim))
        for j, task in enumerate(tasks):
            instance, loop = task.instance, task.loop
            lo, hi = boxes[j]
            rng_rep = streams.stream(loop.seed, streams.REPRODUCE, gen)
            u = rng_rep.random(batch)
            mut = rng_rep.standard_normal((batch, instance.dim))

            counts = valid[:, j].sum(axis=1)
            ranks = (u[np.newaxis, :] * counts[:, np.newaxis]).astype(np.int64)
            by_validity = np.argsort(~valid[:, j], axis=1, kind="stable")
            parents = np.take_along_axis(by_validity, ranks, axis=1)
            parent_geno = np.take_along_axis(xs[j], parents[:, :, np.newaxis], axis=1)
            offspring = np.clip(
                parent_geno + loop.mutation_sigma * (hi - lo) * mut[np.newaxis], lo, hi
            )
            union_xs.append(np.concatenate([xs[j], offspring], axis=1))
            union_f[:, j, :n_pop] = f[:, j]
            union_f[:, j, n_pop:] = _stacked_evaluate(instance, offspring, loop.seed, gen)
            union_d[:, j, :n_pop] = d[:, j]
            union_d[:, j, n_pop:] = _stacked_descriptors(task, offspring, loop.seed, gen, m)
        union_valid = np.concatenate(
            [valid, np.ones((m, k, batch), dtype=bool)], axis=2
        )

        z = lqdnet.featurize(union_f, union_d)
        scores = lqdnet.forward_features(tensors, net, z)
        scores = np.where(union_valid, scores, -np.inf)

        order = np.argsort(-scores, axis=2, kind="stable")[:, :, :n_pop]
        survivors = np.sort(order, axis=2)
        alive = np.take_along_axis(scores, survivors, axis=2) != -np.inf
        f = np.where(alive, np.take_along_axis(union_f, survivors, axis=2), -np.inf)
        d = np.take_along_axis(union_d, survivors[:, :, :, np.newaxis], axis=2)
        valid = alive
        xs = [
            np.take_along_axis(union_xs[j], survivors[:, j, :, np.newaxis], axis=1)
            for j in range(k)
        ]

        if aggregation == "mean":
            per_gen.append(_objective_matrix(f, d, valid, objective))

    if aggregation == "mean":
        return np.mean(per_gen, axis=0)
    return _objective_matrix(f, d, valid, objective)


def stacked_scores(thetas: np.ndarray, tasks, net: lqdnet.NetConfig,
                   objective: MetaObjective, aggregation: str = "final") -> np.ndarray:
    """(candidates, tasks) meta-objective matrix, rolled out in stacked batches.

    Equivalent to ``rollout`` per (theta, task) pair: each task keeps its own
    seed-keyed streams, so batching changes grouping of the arithmetic but
    not any random draw. Tasks whose inner loops differ in population size,
    batch size, or generation count are grouped and run separately.
    """
    thetas = np.ascontiguousarray(thetas, dtype=float)
    if thetas.ndim != 2:
        raise ValueError(f"thetas must be (candidates, params), got {thetas.shape}")
    tasks = list(tasks)
    groups: dict[tuple, list[int]] = {}
    for j, task in enumerate(tasks):
        groups.setdefault(_loop_shape(task), []).append(j)
    out = np.empty((thetas.shape[0], len(tasks)))
    for cols in groups.values():
        out[:, cols] = _stacked_group(
            thetas, [tasks[j] for j in cols], net, objective, aggregation
        )
    return out


def stacked_task_scores(thetas: np.ndarray, task: MetaTaskSpec, net: lqdnet.NetConfig,
                        objective: MetaObjective, aggregation: str = "final") -> np.ndarray:
    """Meta-objective of every candidate on one task; see ``stacked_scores``."""
    return stacked_scores(thetas, [task], net, objective, aggregation)[:, 0]


def _stacked_job(args):
    return stacked_scores(*args)


def worker_count() -> int:
    """Worker override from the environment; never less than 1."""
    try:
        value = int(os.environ.get("QDLEARN_WORKERS", "1"))
    except ValueError:
        return 1
    return max(value, 1)


def _score_tasks(executor, thetas, tasks, net, objective, aggregation) -> np.ndarray:
    """(candidates, tasks) score matrix, reduced in fixed task order.

    With an executor the task list is split into contiguous chunks, one per
    worker. Chunking only regroups batched arithmetic, so the matrix is
    identical whatever the worker count.
    """
    if executor is None:
        return stacked_scores(thetas, tasks, net, objective, aggregation)
    n_chunks = min(executor._max_workers, len(tasks))
    bounds = np.linspace(0, len(tasks), n_chunks + 1).astype(int)
    jobs = [
        (thetas, tasks[a:b], net, objective, aggregation)
        for a, b in zip(bounds[:-1], bounds[1:])
        if b > a
    ]
    return np.hstack(list(executor.map(_stacked_job, jobs)))


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------


def _state_to_json(state: SepCmaState) -> dict:
    return {
        "mean": [float(v) for v in state.mean],
        "sigma": float(state.sigma),
        "variances": [float(v) for v in state.variances],
        "p_sigma": [float(v) for v in state.p_sigma],
        "p_c": [float(v) for v in state.p_c],
        "generation": int(state.generation),
        "lam": int(state.lam),
    }


def _state_from_json(payload: dict, sigma0_unused: float = 0.0) -> SepCmaState:
    fresh = cma_init(len(payload["mean"]), payload["lam"], max(payload["sigma"], 1e-300))
    return dataclasses.replace(
        fresh,
        mean=np.array(payload["mean"], dtype=float),
        sigma=float(payload["sigma"]),
        variances=np.array(payload["variances"], dtype=float),
        p_sigma=np.array(payload["p_sigma"], dtype=float),
        p_c=np.array(payload["p_c"], dtype=float),
        generation=int(payload["generation"]),
    )


def save_checkpoint(path, cfg: MetaConfig, state: SepCmaState, next_meta_gen: int,
                    log_rows: list, validation: dict, config_hash: str | None) -> None:
    """Atomic JSON checkpoint; floats serialize via repr and round-trip exactly."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layout_version": lqdnet.LAYOUT_VERSION,
        "objective": cfg.objective.kind,
        "config_hash": config_hash,
        "next_meta_gen": int(next_meta_gen),
        "state": _state_to_json(state),
        "log": [list(row) for row in log_rows],
        "validation": {
            "meta_gens": [int(g) for g in validation["meta_gens"]],
            "scores": [[float(v) for v in row] for row in validation["scores"]],
            "thetas": [[float(v) for v in row] for row in validation["thetas"]],
        },
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload))
    os.replace(tmp, path)


def load_checkpoint(path) -> dict:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a meta checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    if payload.get("layout_version") != lqdnet.LAYOUT_VERSION:
        raise ValueError(
            f"checkpoint layout {payload.get('layout_version')!r} does not match "
            f"{lqdnet.LAYOUT_VERSION!r}"
        )
    return payload


# ---------------------------------------------------------------------------
# Meta-training
# ---------------------------------------------------------------------------


@dataclass
class MetaTrainResult:
    best_theta: np.ndarray
    best_meta_gen: int
    init_theta: np.ndarray
    log_rows: list  # (meta_gen, mean_meta_fitness, best_meta_fitness, sigma)
    validation_meta_gens: list
    validation_scores: np.ndarray  # (checkpoints, validation_tasks) raw objectives
    validation_thetas: np.ndarray  # (checkpoints, params)
    final_state: SepCmaState


def _validation_row(theta: np.ndarray, tasks, cfg: MetaConfig, executor) -> np.ndarray:
    scores = _score_tasks(
        executor, theta[np.newaxis], tasks, cfg.net, cfg.objective, cfg.aggregation
    )
    return scores[0]


def meta_train(
    cfg: MetaConfig,
    checkpoint_path=None,
    checkpoint_every: int = 50,
    resume_from=None,
    config_hash: str | None = None,
) -> MetaTrainResult:
    """Full outer loop; returns the validation-selected best parameters.

    The candidate distribution mean is scored on the fixed held-out
    validation batch before training, every ``validate_every``
    meta-generations, and at the end; the best checkpoint is the argmax of
    the normalized validation aggregate. Resuming from a checkpoint
    continues bit-for-bit because every stream is keyed by meta-generation.
    """
    param_dim = lqdnet.param_count(cfg.net)
    init_theta = lqdnet.init_params(
        cfg.net, seed=streams.derive_seed(cfg.seed, streams.INIT)
    ).theta
    validation_rng = streams.stream(cfg.seed, streams.META_VALIDATION)
    validation_tasks = [
        sample_meta_task(cfg, validation_rng) for _ in range(cfg.validation_tasks)
    ]

    workers = worker_count()
    executor = None
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        executor = ProcessPoolExecutor(max_workers=workers)

    try:
        if resume_from is not None:
            payload = load_checkpoint(resume_from)
            if config_hash is not None and payload.get("config_hash") not in (None, config_hash):
                raise ValueError("checkpoint was produced by a different configuration")
            state = _state_from_json(payload["state"])
            start_gen = int(payload["next_meta_gen"])
            log_rows = [tuple(row) for row in payload["log"]]
            val_gens = list(payload["validation"]["meta_gens"])
            val_scores = [np.array(r, dtype=float) for r in payload["validation"]["scores"]]
            val_thetas = [np.array(r, dtype=float) for r in payload["validation"]["thetas"]]
        else:
            state = cma_init(param_dim, cfg.meta_population, cfg.sigma0, mean=init_theta)
            start_gen = 0
            log_rows = []
            val_gens = [0]
            val_scores = [_validation_row(init_theta, validation_tasks, cfg, executor)]
            val_thetas = [init_theta.copy()]

        for meta_gen in range(start_gen, cfg.meta_generations):
            task_rng = streams.stream(cfg.seed, streams.META_TASKS, meta_gen)
            tasks = [sample_meta_task(cfg, task_rng) for _ in range(cfg.tasks_per_generation)]
            candidates = cma_ask(state, streams.stream(cfg.seed, streams.META_ASK, meta_gen))
            scores = _score_tasks(
                executor, candidates, tasks, cfg.net, cfg.objective, cfg.aggregation
            )
            meta_fitness = normalize_aggregate(scores, cfg.normalization)
            log_rows.append(
                (
                    meta_gen,
                    float(meta_fitness.mean()),
                    float(meta_fitness.max()),
                    float(state.sigma),  # the sigma that produced this generation
                )
            )
            state = cma_tell(state, candidates, meta_fitness)

            done = meta_gen + 1
            if done % cfg.validate_every == 0 or done == cfg.meta_generations:
                val_gens.append(done)
                val_scores.append(_validation_row(state.mean, validation_tasks, cfg, executor))
                val_thetas.append(state.mean.copy())
            if checkpoint_path is not None and (
                done % checkpoint_every == 0 or done == cfg.meta_generations
            ):
                save_checkpoint(
                    checkpoint_path,
                    cfg,
                    state,
                    done,
                    log_rows,
                    {"meta_gens": val_gens, "scores": val_scores, "thetas": val_thetas},
                    config_hash,
                )
    finally:
        if executor is not None:
            executor.shutdown()

    score_matrix = np.stack(val_scores, axis=0)
    aggregate = normalize_aggregate(score_matrix, cfg.normalization)
    best = int(np.argmax(aggregate))
    return MetaTrainResult(
        best_theta=np.array(val_thetas[best], dtype=float),
        best_meta_gen=int(val_gens[best]),
        init_theta=init_theta,
        log_rows=log_rows,
        validation_meta_gens=list(val_gens),
        validation_scores=score_matrix,
        validation_thetas=np.stack(val_thetas, axis=0),
        final_state=state,
    )
