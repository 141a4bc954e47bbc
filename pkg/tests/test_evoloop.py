"""Tests for the generic population loop."""

import numpy as np
import pytest

from qdlearn import benchfn, competition, descriptor, evoloop, streams


def _sphere(dim=2, seed=0):
    return benchfn.build_instance(benchfn.FunctionId.SPHERE, dim, seed=seed)


def _projection(instance, d=2, seed=0):
    return descriptor.sample_projection(instance.dim, d, seed=seed)


class _FirstCoordTask:
    """Stub task: fitness is the first genotype coordinate. No noise."""

    def __init__(self, dim=1, lo=0.0, hi=10.0):
        self.dim = dim
        self.box = np.array([[lo, hi]] * dim, dtype=float)

    def evaluate_batch(self, X, rngs=None):
        return X[:, 0].astype(float)


class _ConstantTask(_FirstCoordTask):
    """Stub task: every genotype evaluates to the same fitness."""

    def __init__(self, value, dim=1, lo=0.0, hi=10.0):
        super().__init__(dim=dim, lo=lo, hi=hi)
        self.value = float(value)

    def evaluate_batch(self, X, rngs=None):
        return np.full(X.shape[0], self.value)


# ---------------------------------------------------------------------------
# init_population
# ---------------------------------------------------------------------------


def test_init_population_basic():
    cfg = evoloop.LoopConfig(population_size=4, batch_size=2, generations=1, seed=3)
    inst = _sphere()
    pop = evoloop.init_population(cfg, inst, _projection(inst))
    assert pop.size == 4
    assert pop.valid.all()
    assert np.all(np.isfinite(pop.fitness))
    assert pop.generation == 0
    assert np.all(pop.genotypes >= inst.box[:, 0]) and np.all(pop.genotypes <= inst.box[:, 1])


def test_init_population_deterministic():
    cfg = evoloop.LoopConfig(population_size=6, batch_size=2, generations=1, seed=9)
    inst = _sphere()
    proj = _projection(inst)
    a = evoloop.init_population(cfg, inst, proj)
    b = evoloop.init_population(cfg, inst, proj)
    assert np.array_equal(a.genotypes, b.genotypes)
    assert np.array_equal(a.fitness, b.fitness)
    assert np.array_equal(a.descriptors, b.descriptors)


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------


def test_reproduce_zero_sigma_copies_parents():
    cfg = evoloop.LoopConfig(population_size=5, batch_size=8, generations=1, seed=1)
    inst = _sphere()
    pop = evoloop.init_population(cfg, inst, _projection(inst))
    rng = streams.stream(1, streams.REPRODUCE, 1)
    offspring = evoloop.reproduce(pop, 8, rng, 0.0, inst.box)
    # every offspring equals some parent exactly
    for row in offspring:
        assert any(np.array_equal(row, parent) for parent in pop.genotypes)


def test_reproduce_within_box():
    cfg = evoloop.LoopConfig(population_size=5, batch_size=64, generations=1, seed=2)
    inst = _sphere()
    pop = evoloop.init_population(cfg, inst, _projection(inst))
    rng = streams.stream(2, streams.REPRODUCE, 1)
    offspring = evoloop.reproduce(pop, 64, rng, 0.5, inst.box)
    assert np.all(offspring >= inst.box[:, 0]) and np.all(offspring <= inst.box[:, 1])


def test_reproduce_single_valid_parent():
    cfg = evoloop.LoopConfig(population_size=4, batch_size=16, generations=1, seed=4)
    inst = _sphere()
    pop = evoloop.init_population(cfg, inst, _projection(inst))
    pop.valid[:] = [False, False, True, False]
    rng = streams.stream(4, streams.REPRODUCE, 1)
    offspring = evoloop.reproduce(pop, 16, rng, 0.0, inst.box)
    assert np.all(offspring == pop.genotypes[2])


def test_reproduce_no_valid_parent_error():
    cfg = evoloop.LoopConfig(population_size=3, batch_size=2, generations=1, seed=5)
    inst = _sphere()
    pop = evoloop.init_population(cfg, inst, _projection(inst))
    pop.valid[:] = False
    with pytest.raises(RuntimeError):
        evoloop.reproduce(pop, 2, streams.stream(5, streams.REPRODUCE, 1), 0.1, inst.box)


# ---------------------------------------------------------------------------
# step_generation
# ---------------------------------------------------------------------------


def test_step_keeps_incumbents_when_offspring_worse():
    # Parents sit exactly at the optimum; any mutated offspring is worse.
    inst = _sphere(dim=2, seed=7)
    cfg = evoloop.LoopConfig(population_size=3, batch_size=4, generations=1,
                             mutation_sigma=0.05, seed=11)
    pop = evoloop.init_population(cfg, inst, _projection(inst))
    pop.genotypes[:] = inst.x_opt
    pop.fitness[:] = benchfn.evaluate_batch(inst, pop.genotypes)
    fn = competition.CompetitionFn(kind="identity")
    new = evoloop.step_generation(pop, cfg, inst, _projection(inst), fn)
    assert np.array_equal(new.genotypes, pop.genotypes)
    assert new.generation == 1


def test_step_hand_union_top_n():
    # Union f = [1,2,3,4]: parents carry [1,2,3], the one offspring scores 4.
    task = _ConstantTask(4.0)
    cfg = evoloop.LoopConfig(population_size=3, batch_size=1, generations=1, seed=0)
    proj = descriptor.ProjectionDescriptor(matrix=np.eye(1), seed=0)
    pop = evoloop.Population(
        genotypes=np.array([[1.0], [2.0], [3.0]]),
        fitness=np.array([1.0, 2.0, 3.0]),
        descriptors=np.array([[1.0], [2.0], [3.0]]),
        valid=np.ones(3, dtype=bool),
    )
    fn = competition.CompetitionFn(kind="identity")
    new = evoloop.step_generation(pop, cfg, task, proj, fn)
    assert np.array_equal(np.sort(new.fitness), [2.0, 3.0, 4.0])


def test_step_tie_breaks_favor_incumbents():
    # Constant fitness everywhere: identity competition ties across the union,
    # so the incumbents (lower union indices) must all survive.
    task = _ConstantTask(1.0)
    cfg = evoloop.LoopConfig(population_size=4, batch_size=4, generations=1, seed=1)
    proj = descriptor.ProjectionDescriptor(matrix=np.eye(1), seed=0)
    pop = evoloop.init_population(cfg, task, proj)
    new = evoloop.step_generation(pop, cfg, task, proj, fn=competition.CompetitionFn(kind="identity"))
    assert np.array_equal(new.genotypes, pop.genotypes)


def test_step_population_size_constant():
    inst = _sphere()
    cfg = evoloop.LoopConfig(population_size=8, batch_size=3, generations=1, seed=2)
    proj = _projection(inst)
    pop = evoloop.init_population(cfg, inst, proj)
    for kind, kwargs in [
        ("identity", {}),
        ("novelty", {"k": 2}),
        ("dominated_novelty", {"k": 2}),
    ]:
        fn = competition.CompetitionFn(kind=kind, **kwargs)
        new = evoloop.step_generation(pop, cfg, inst, proj, fn)
        assert new.size == 8


def test_step_map_elites_marks_losers_invalid():
    # One centroid: the whole union shares a cell, one winner remains valid.
    inst = _sphere()
    cfg = evoloop.LoopConfig(population_size=4, batch_size=2, generations=1, seed=3)
    proj = _projection(inst)
    centroids = competition.CentroidSet(centroids=np.zeros((1, 2)), seed=0)
    fn = competition.CompetitionFn(kind="map_elites", centroids=centroids)
    pop = evoloop.init_population(cfg, inst, proj)
    new = evoloop.step_generation(pop, cfg, inst, proj, fn)
    assert new.size == 4
    assert new.valid.sum() == 1
    assert np.all(new.fitness[~new.valid] == -np.inf)
    assert np.isfinite(new.fitness[new.valid]).all()
    # winner is the union's best raw fitness
    union_best = max(
        pop.fitness.max(),
        new.fitness[new.valid][0],
    )
    assert new.fitness[new.valid][0] == union_best
    # next generation still works, breeding only from the single valid parent
    newer = evoloop.step_generation(new, cfg, inst, proj, fn)
    assert newer.valid.sum() == 1


def test_step_random_kind_reproducible():
    inst = _sphere()
    cfg = evoloop.LoopConfig(population_size=6, batch_size=4, generations=5, seed=13)
    proj = _projection(inst)
    fn = competition.CompetitionFn(kind="random")
    a = evoloop.run(cfg, inst, proj, fn)
    b = evoloop.run(cfg, inst, proj, fn)
    assert np.array_equal(a.final.genotypes, b.final.genotypes)
    assert np.array_equal(a.final.fitness, b.final.fitness)
    rows_a = [m.as_row() for m in a.metrics]
    rows_b = [m.as_row() for m in b.metrics]
    assert rows_a == rows_b


# ---------------------------------------------------------------------------
# Full-step oracle: naive reference implementation of one generation
# ---------------------------------------------------------------------------


def _naive_step(pop, cfg, task, proj, fn):
    box = np.asarray(task.box, dtype=float)
    gen = pop.generation + 1
    rng = streams.stream(cfg.seed, streams.REPRODUCE, gen)
    u = rng.random(cfg.batch_size)
    noise = rng.standard_normal((cfg.batch_size, pop.genotypes.shape[1]))
    valid_idx = [i for i in range(pop.size) if pop.valid[i]]
    offspring = []
    for b in range(cfg.batch_size):
        parent = pop.genotypes[valid_idx[int(u[b] * len(valid_idx))]]
        child = parent + cfg.mutation_sigma * (box[:, 1] - box[:, 0]) * noise[b]
        offspring.append(np.minimum(np.maximum(child, box[:, 0]), box[:, 1]))
    offspring = np.array(offspring)
    off_f = benchfn.evaluate_batch(task, offspring)
    off_d = descriptor.describe_batch(proj, offspring)

    union_f = list(pop.fitness) + list(off_f)
    union_d = list(pop.descriptors) + list(off_d)
    union_x = list(pop.genotypes) + list(offspring)
    union_valid = list(pop.valid) + [True] * cfg.batch_size

    vi = [i for i in range(len(union_f)) if union_valid[i]]
    vf = np.array([union_f[i] for i in vi])
    vd = np.array([union_d[i] for i in vi])
    if fn.kind == "novelty":
        sub = competition.novelty_competition(vf, vd, fn.k)
    elif fn.kind == "dominated_novelty":
        sub = competition.dominated_novelty_competition(vf, vd, fn.k)
    elif fn.kind == "map_elites":
        sub = competition.map_elites_competition(vf, vd, fn.centroids)
    else:
        sub = vf.copy()
    scores = np.full(len(union_f), -np.inf)
    scores[vi] = sub

    ranked = sorted(range(len(union_f)), key=lambda i: (-scores[i], i))
    survivors = sorted(ranked[: cfg.population_size])
    return (
        np.array([union_x[i] for i in survivors]),
        np.array([
            union_f[i] if scores[i] != -np.inf else -np.inf for i in survivors
        ]),
        np.array([scores[i] != -np.inf for i in survivors]),
    )


@pytest.mark.parametrize("kind,kwargs", [
    ("identity", {}),
    ("novelty", {"k": 3}),
    ("dominated_novelty", {"k": 3}),
    ("map_elites", {}),
])
def test_step_matches_naive_reference(kind, kwargs):
    inst = _sphere(dim=3, seed=21)
    proj = _projection(inst, seed=5)
    if kind == "map_elites":
        kwargs = {"centroids": competition.build_centroids(
            2, 8, np.array([[-4.0, 4.0], [-4.0, 4.0]]), seed=6
        )}
    fn = competition.CompetitionFn(kind=kind, **kwargs)
    for seed in range(5):
        cfg = evoloop.LoopConfig(population_size=10, batch_size=6, generations=1, seed=seed)
        pop = evoloop.init_population(cfg, inst, proj)
        for _ in range(3):  # iterate so invalid-row handling is exercised
            ref_x, ref_f, ref_valid = _naive_step(pop, cfg, inst, proj, fn)
            pop = evoloop.step_generation(pop, cfg, inst, proj, fn)
            assert np.array_equal(pop.genotypes, ref_x)
            assert np.array_equal(pop.fitness, ref_f)
            assert np.array_equal(pop.valid, ref_valid)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def test_run_trajectory_length():
    inst = _sphere()
    cfg = evoloop.LoopConfig(population_size=8, batch_size=4, generations=7, seed=0)
    traj = evoloop.run(cfg, inst, _projection(inst), competition.CompetitionFn(kind="identity"))
    assert len(traj.metrics) == 7
    assert [m.generation for m in traj.metrics] == list(range(1, 8))
    assert traj.final.generation == 7


def test_run_t1_equals_single_step():
    inst = _sphere()
    cfg = evoloop.LoopConfig(population_size=5, batch_size=3, generations=1, seed=8)
    proj = _projection(inst)
    fn = competition.CompetitionFn(kind="identity")
    traj = evoloop.run(cfg, inst, proj, fn)
    stepped = evoloop.step_generation(
        evoloop.init_population(cfg, inst, proj), cfg, inst, proj, fn
    )
    assert np.array_equal(traj.final.genotypes, stepped.genotypes)
    assert np.array_equal(traj.final.fitness, stepped.fitness)


def test_run_identity_elitism():
    inst = _sphere(seed=4)
    cfg = evoloop.LoopConfig(population_size=8, batch_size=4, generations=30, seed=14)
    traj = evoloop.run(cfg, inst, _projection(inst), competition.CompetitionFn(kind="identity"))
    series = [m.max_fitness for m in traj.metrics]
    assert all(b >= a for a, b in zip(series, series[1:]))


def test_run_identity_improves_sphere():
    inst = _sphere(seed=5)
    cfg = evoloop.LoopConfig(population_size=32, batch_size=16, generations=60, seed=15)
    traj = evoloop.run(cfg, inst, _projection(inst), competition.CompetitionFn(kind="identity"))
    pop0 = evoloop.init_population(cfg, inst, _projection(inst))
    assert traj.final.fitness.max() > pop0.fitness.max()


def test_run_record_metrics_flag():
    inst = _sphere()
    cfg = evoloop.LoopConfig(population_size=4, batch_size=2, generations=3, seed=1)
    traj = evoloop.run(cfg, inst, _projection(inst),
                       competition.CompetitionFn(kind="identity"), record_metrics=False)
    assert traj.metrics == []
    assert traj.final is not None


def test_loop_config_validation():
    with pytest.raises(ValueError):
        evoloop.LoopConfig(population_size=0)
    with pytest.raises(ValueError):
        evoloop.LoopConfig(batch_size=0)
    with pytest.raises(ValueError):
        evoloop.LoopConfig(generations=0)
    with pytest.raises(ValueError):
        evoloop.LoopConfig(mutation_sigma=-0.1)


def test_noisy_instance_runs_with_per_row_streams():
    inst = benchfn.build_instance(
        benchfn.FunctionId.SPHERE, 2, seed=0,
        noise=benchfn.NoiseSpec(kind="gaussian", strength=0.1),
    )
    cfg = evoloop.LoopConfig(population_size=6, batch_size=3, generations=4, seed=2)
    a = evoloop.run(cfg, inst, _projection(inst), competition.CompetitionFn(kind="identity"))
    b = evoloop.run(cfg, inst, _projection(inst), competition.CompetitionFn(kind="identity"))
    assert np.array_equal(a.final.fitness, b.final.fitness)
