"""Command-line front end: config-driven runs, meta-training, comparisons,
competition-landscape grids, and the descriptor ablation.

All outputs are CSV (plus JSON sidecars for wall time and parameter
vectors). Every CSV embeds the canonical config hash in a leading comment,
and rerunning a config reproduces each CSV byte for byte: wall-clock time
never enters a CSV. Replications may run in parallel (QDLEARN_WORKERS);
each writes only its own files, so the worker count cannot change content.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import (
    armtask,
    benchfn,
    competition,
    descriptor,
    evoloop,
    lqdnet,
    metaopt,
    metrics,
    stats,
    streams,
)
from .config import (
    ConfigError,
    canonical_hash,
    load_ablation_config,
    load_meta_config,
    load_run_config,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

THETA_FORMAT = "qdlearn-theta"
POPULATION_FORMAT = "qdlearn-population"

META_LOG_FIELDS = ("meta_gen", "mean_meta_fitness", "best_meta_fitness", "sigma")

LANDSCAPE_KINDS = ("identity", "novelty", "dominated_novelty", "map_elites", "learned")


def _config_hash(resolved: dict) -> str:
    """Hash of the experiment content; the output location is not identity."""
    return canonical_hash({k: v for k, v in resolved.items() if k != "output_dir"})


def _format_value(value) -> str:
    """Shortest round-trip decimal text; integers stay integers."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, comments: list[str], header, rows) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Building blocks shared by run and ablation
# ---------------------------------------------------------------------------


def _build_task(task_cfg: dict, master_seed: int):
    if task_cfg["kind"] == "arm":
        return armtask.ArmTask(armtask.ArmSpec(joints=task_cfg["dim"]))
    try:
        fid = benchfn.FunctionId(task_cfg["function"])
    except ValueError:
        raise ConfigError(f"task.function: unknown function {task_cfg['function']!r}")
    noise = benchfn.NoiseSpec(
        kind=task_cfg["noise"]["kind"], strength=task_cfg["noise"]["strength"]
    )
    seed = task_cfg["instance_seed"]
    if seed is None:
        seed = master_seed
    try:
        return benchfn.build_instance(fid, task_cfg["dim"], noise=noise, seed=seed)
    except ValueError as exc:
        raise ConfigError(f"task: {exc}") from exc


def _build_describer(desc_cfg: dict, task, master_seed: int):
    kind = desc_cfg["kind"]
    if kind == "projection":
        return descriptor.sample_projection(task.dim, desc_cfg["dim"], seed=master_seed)
    if kind == "random_noise":
        return descriptor.DescriptorSpec(kind="random_noise", dim=desc_cfg["dim"])
    if not hasattr(task, "describe_batch"):
        raise ConfigError("descriptor.kind: task_specific requires the arm task")
    return task


def _descriptor_dim(desc_cfg: dict, task) -> int:
    if desc_cfg["kind"] == "task_specific":
        return int(task.descriptor_dim)
    return desc_cfg["dim"]


def load_theta(path) -> lqdnet.LqdParams:
    """Read a parameter file written by meta-train; validates the layout."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read theta file {path}: {exc}") from exc
    if payload.get("format") != THETA_FORMAT:
        raise ConfigError(f"{path} is not a parameter file")
    if payload.get("layout_version") != lqdnet.LAYOUT_VERSION:
        raise ConfigError(
            f"{path}: layout {payload.get('layout_version')!r} does not match "
            f"{lqdnet.LAYOUT_VERSION!r}"
        )
    net = lqdnet.NetConfig(**payload["net"])
    return lqdnet.LqdParams(config=net, theta=np.array(payload["theta"], dtype=float))


def _build_competition(algo_cfg: dict, desc_cfg: dict, d_dim: int,
                       master_seed: int) -> competition.CompetitionFn:
    kind = algo_cfg["kind"]
    if kind == "map_elites":
        bounds = np.tile(
            [float(desc_cfg["bounds_low"]), float(desc_cfg["bounds_high"])], (d_dim, 1)
        )
        centroids = competition.build_centroids(
            d_dim, algo_cfg["cells"], bounds, seed=master_seed
        )
        return competition.CompetitionFn(kind=kind, k=algo_cfg["k"], centroids=centroids)
    if kind == "learned":
        if algo_cfg["theta_path"] is None:
            raise ConfigError("algorithm.theta_path: required for the learned kind")
        params = load_theta(algo_cfg["theta_path"])
        if params.config.descriptor_dim != d_dim:
            raise ConfigError(
                f"algorithm.theta_path: network expects descriptor dim "
                f"{params.config.descriptor_dim}, run uses {d_dim}"
            )
        return competition.CompetitionFn(kind=kind, k=algo_cfg["k"], params=params)
    return competition.CompetitionFn(kind=kind, k=algo_cfg["k"])


def _save_population(path: Path, pop: evoloop.Population) -> None:
    payload = {
        "format": POPULATION_FORMAT,
        "generation": int(pop.generation),
        "genotypes": [[float(v) for v in row] for row in pop.genotypes],
        "fitness": [float(v) for v in pop.fitness],
        "descriptors": [[float(v) for v in row] for row in pop.descriptors],
        "valid": [bool(v) for v in pop.valid],
    }
    path.write_text(json.dumps(payload))


def run_one_replication(resolved: dict, rep: int, cfg_hash: str) -> float:
    """Execute one replication and write its CSV + sidecar; returns wall time."""
    master = resolved["seed"]
    rep_seed = streams.derive_seed(master, streams.REPLICATION, rep)
    task = _build_task(resolved["task"], master)
    describer = _build_describer(resolved["descriptor"], task, master)
    d_dim = _descriptor_dim(resolved["descriptor"], task)
    fn = _build_competition(resolved["algorithm"], resolved["descriptor"], d_dim, master)
    loop = evoloop.LoopConfig(seed=rep_seed, **resolved["loop"])

    out_dir = Path(resolved["output_dir"])
    started = time.perf_counter()
    traj = evoloop.run(loop, task, describer, fn, metric_k=resolved["metric_k"])
    wall = time.perf_counter() - started

    stem = f"rep_{rep:03d}"
    _write_csv(
        out_dir / f"{stem}.csv",
        [f"config_hash={cfg_hash}", f"seed={rep_seed}"],
        metrics.CSV_FIELDS,
        [m.as_row() for m in traj.metrics],
    )
    (out_dir / f"{stem}.json").write_text(
        json.dumps(
            {
                "config_hash": cfg_hash,
                "replication": rep,
                "seed": rep_seed,
                "wall_time_seconds": wall,
            }
        )
    )
    if resolved["save_population"]:
        _save_population(out_dir / f"{stem}_population.json", traj.final)
    return wall


def _replication_job(args) -> float:
    return run_one_replication(*args)


def _execute_run(resolved: dict) -> str:
    """Shared by cmd_run and the ablation arms; returns the config hash."""
    cfg_hash = _config_hash(resolved)
    out_dir = Path(resolved["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.resolved.json").write_text(
        json.dumps({"config": resolved, "config_hash": cfg_hash}, sort_keys=True)
    )
    # fail on config problems before any replication starts
    task = _build_task(resolved["task"], resolved["seed"])
    d_dim = _descriptor_dim(resolved["descriptor"], task)
    _build_describer(resolved["descriptor"], task, resolved["seed"])
    _build_competition(resolved["algorithm"], resolved["descriptor"], d_dim, resolved["seed"])

    jobs = [(resolved, rep, cfg_hash) for rep in range(resolved["replications"])]
    workers = metaopt.worker_count()
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            list(pool.map(_replication_job, jobs))
    else:
        for job in jobs:
            _replication_job(job)
    return cfg_hash


def cmd_run(args) -> int:
    resolved = load_run_config(args.config)
    cfg_hash = _execute_run(resolved)
    print(f"run complete: {resolved['replications']} replication(s) in "
          f"{resolved['output_dir']} (config {cfg_hash[:12]})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# meta-train
# ---------------------------------------------------------------------------


def _meta_config_from_resolved(resolved: dict) -> metaopt.MetaConfig:
    tasks = dict(resolved["tasks"])
    tasks["noise_kinds"] = tuple(tasks["noise_kinds"])
    try:
        return metaopt.MetaConfig(
            objective=metaopt.MetaObjective(**resolved["objective"]),
            net=lqdnet.NetConfig(**resolved["net"]),
            tasks=metaopt.TaskDistribution(**tasks),
            meta_population=resolved["meta_population"],
            tasks_per_generation=resolved["tasks_per_generation"],
            meta_generations=resolved["meta_generations"],
            sigma0=resolved["sigma0"],
            seed=resolved["seed"],
            aggregation=resolved["aggregation"],
            normalization=resolved["normalization"],
            validation_tasks=resolved["validation_tasks"],
            validate_every=resolved["validate_every"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _write_theta(path: Path, theta: np.ndarray, net_cfg: dict, objective: str,
                 meta_gen: int, cfg_hash: str) -> None:
    payload = {
        "format": THETA_FORMAT,
        "layout_version": lqdnet.LAYOUT_VERSION,
        "objective": objective,
        "config_hash": cfg_hash,
        "meta_gen": int(meta_gen),
        "net": net_cfg,
        "theta": [float(v) for v in theta],
    }
    path.write_text(json.dumps(payload))


def cmd_meta_train(args) -> int:
    resolved = load_meta_config(args.config)
    cfg_hash = _config_hash(resolved)
    mc = _meta_config_from_resolved(resolved)
    out_dir = Path(resolved["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = out_dir / "checkpoint.json"
    resume_from = None
    if args.resume:
        if not checkpoint.exists():
            raise ConfigError(f"--resume given but {checkpoint} does not exist")
        try:
            payload = metaopt.load_checkpoint(checkpoint)
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise ConfigError(f"cannot resume from {checkpoint}: {exc}") from exc
        if payload.get("config_hash") not in (None, cfg_hash):
            raise ConfigError(
                f"cannot resume: {checkpoint} was written under config "
                f"{payload['config_hash'][:12]}, current config is {cfg_hash[:12]}"
            )
        resume_from = checkpoint

    result = metaopt.meta_train(
        mc,
        checkpoint_path=checkpoint,
        checkpoint_every=resolved["checkpoint_every"],
        resume_from=resume_from,
        config_hash=cfg_hash,
    )

    _write_csv(
        out_dir / "log.csv",
        [f"config_hash={cfg_hash}"],
        META_LOG_FIELDS,
        result.log_rows,
    )
    validation_rows = [
        (gen, task_index, float(score))
        for gen, row in zip(result.validation_meta_gens, result.validation_scores)
        for task_index, score in enumerate(row)
    ]
    _write_csv(
        out_dir / "validation.csv",
        [f"config_hash={cfg_hash}", f"objective={mc.objective.kind}"],
        ("meta_gen", "task_index", "score"),
        validation_rows,
    )
    objective = mc.objective.kind
    _write_theta(out_dir / "theta_best.json", result.best_theta, resolved["net"],
                 objective, result.best_meta_gen, cfg_hash)
    _write_theta(out_dir / "theta_init.json", result.init_theta, resolved["net"],
                 objective, 0, cfg_hash)
    print(f"meta-train complete: best theta from meta-generation "
          f"{result.best_meta_gen} of {mc.meta_generations} in {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _read_run_metric(run_dir: Path, metric: str, generation: int) -> np.ndarray:
    files = sorted(run_dir.glob("rep_*.csv"))
    if not files:
        raise ConfigError(f"{run_dir}: no rep_*.csv files")
    values = []
    for file in files:
        with open(file, newline="") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
        if not rows:
            raise ConfigError(f"{file}: empty metrics table")
        if generation < 0:
            row = rows[-1]
        else:
            matches = [r for r in rows if int(r["generation"]) == generation]
            if not matches:
                raise ConfigError(f"{file}: no row for generation {generation}")
            row = matches[0]
        if metric not in row:
            raise ConfigError(f"{file}: no column {metric!r}")
        values.append(float(row[metric]))
    return np.array(values)


def cmd_compare(args) -> int:
    if len(args.run_dirs) < 2:
        raise ConfigError("compare needs at least two run directories")
    dirs = [Path(d) for d in args.run_dirs]
    samples = [_read_run_metric(d, args.metric, args.generation) for d in dirs]
    counts = {s.size for s in samples}
    if len(counts) != 1:
        raise ConfigError(
            f"replication counts differ across run dirs: {[s.size for s in samples]}"
        )
    pairs = list(itertools.combinations(range(len(dirs)), 2))
    results = []
    for i, j in pairs:
        res = stats.mann_whitney_u(samples[i], samples[j])
        median_diff = float(np.median(samples[i]) - np.median(samples[j]))
        results.append((str(dirs[i]), str(dirs[j]), median_diff, res.u_statistic, res.p_value))
    adjusted = stats.holm_bonferroni([r[4] for r in results])

    header = ("dir_a", "dir_b", "median_diff", "u_statistic", "p_raw", "p_holm")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    out_rows = []
    for row, p_adj in zip(results, adjusted):
        formatted = list(row[:2]) + [_format_value(v) for v in row[2:]] + [_format_value(p_adj)]
        writer.writerow(formatted)
        out_rows.append(formatted)

    if args.output:
        input_hashes = [
            hashlib.sha256(f.read_bytes()).hexdigest()
            for d in dirs
            for f in sorted(d.glob("rep_*.csv"))
        ]
        cfg_hash = canonical_hash(
            {
                "command": "compare",
                "metric": args.metric,
                "generation": args.generation,
                "inputs": input_hashes,
            }
        )
        lines = [f"# config_hash={cfg_hash}", ",".join(header)]
        lines += [",".join(r) for r in out_rows]
        Path(args.output).write_text("\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# landscape
# ---------------------------------------------------------------------------


def _load_population_snapshot(path):
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read population snapshot {path}: {exc}") from exc
    if payload.get("format") != POPULATION_FORMAT:
        raise ConfigError(f"{path} is not a population snapshot")
    fitness = np.array(payload["fitness"], dtype=float)
    descriptors = np.array(payload["descriptors"], dtype=float)
    valid = np.array(payload["valid"], dtype=bool)
    return fitness[valid], descriptors[valid]


def landscape_grid(fn: competition.CompetitionFn, fitness: np.ndarray,
                   descriptors: np.ndarray, resolution: int):
    """Probe scores over the descriptor bounding box.

    Each grid point is scored by appending a probe with the population's
    median fitness and that descriptor to the full population (augmentation,
    not replacement) and reading the probe's competition fitness.
    """
    if descriptors.shape[1] != 2:
        raise ConfigError("landscape requires 2-D descriptors")
    if fitness.size == 0:
        raise ConfigError("population snapshot holds no valid rows")
    median_fitness = float(np.median(fitness))
    lo = descriptors.min(axis=0)
    hi = descriptors.max(axis=0)
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    valid = np.ones(fitness.size + 1, dtype=bool)
    rows = []
    for gy in ys:
        for gx in xs:
            f_aug = np.append(fitness, median_fitness)
            d_aug = np.vstack([descriptors, [gx, gy]])
            scores = competition.compete(fn, f_aug, d_aug, valid)
            rows.append((float(gx), float(gy), float(scores[-1])))
    return rows, median_fitness


def cmd_landscape(args) -> int:
    if args.resolution < 2:
        raise ConfigError("--resolution must be >= 2")
    fitness, descriptors = _load_population_snapshot(args.snapshot)
    if args.kind == "learned":
        if not args.theta:
            raise ConfigError("--theta is required for the learned kind")
        params = load_theta(args.theta)
        if params.config.descriptor_dim != 2:
            raise ConfigError("landscape requires a network with descriptor dim 2")
        fn = competition.CompetitionFn(kind="learned", k=args.k, params=params)
    elif args.kind == "map_elites":
        span = descriptors.max(axis=0) - descriptors.min(axis=0)
        bounds = np.stack([
            descriptors.min(axis=0) - 0.05 * span,
            descriptors.max(axis=0) + 0.05 * span,
        ], axis=1)
        centroids = competition.build_centroids(2, args.cells, bounds, seed=args.seed)
        fn = competition.CompetitionFn(kind="map_elites", k=args.k, centroids=centroids)
    else:
        fn = competition.CompetitionFn(kind=args.kind, k=args.k)

    rows, median_fitness = landscape_grid(fn, fitness, descriptors, args.resolution)
    cfg_hash = canonical_hash(
        {
            "command": "landscape",
            "kind": args.kind,
            "k": args.k,
            "cells": args.cells,
            "seed": args.seed,
            "resolution": args.resolution,
            "snapshot": hashlib.sha256(Path(args.snapshot).read_bytes()).hexdigest(),
            "theta": (
                hashlib.sha256(Path(args.theta).read_bytes()).hexdigest()
                if args.theta
                else None
            ),
        }
    )
    _write_csv(
        Path(args.output),
        [
            f"config_hash={cfg_hash}",
            "probe=augment",  # probe joins the population, never replaces a member
            f"median_fitness={_format_value(median_fitness)}",
        ],
        ("gx", "gy", "ftilde"),
        rows,
    )
    print(f"landscape written: {args.resolution}x{args.resolution} grid in {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ablation
# ---------------------------------------------------------------------------

ABLATION_ARMS = ("lqd_projection", "lqd_random_noise", "ga")


def cmd_ablation(args) -> int:
    resolved = load_ablation_config(args.config)
    load_theta(resolved["theta_path"])  # validate before any arm runs
    base_out = Path(resolved["output_dir"])
    arm_specs = {
        "lqd_projection": ("learned", "projection"),
        "lqd_random_noise": ("learned", "random_noise"),
        "ga": ("identity", "projection"),  # GA ignores descriptors; metrics stay comparable
    }
    for arm in ABLATION_ARMS:
        algo_kind, desc_kind = arm_specs[arm]
        arm_resolved = {
            "task": resolved["task"],
            "algorithm": {
                "kind": algo_kind,
                "k": resolved["metric_k"],
                "cells": 128,
                "theta_path": resolved["theta_path"] if algo_kind == "learned" else None,
            },
            "descriptor": {
                "kind": desc_kind,
                "dim": resolved["descriptor"]["dim"],
                "bounds_low": resolved["descriptor"]["bounds_low"],
                "bounds_high": resolved["descriptor"]["bounds_high"],
            },
            "loop": resolved["loop"],
            "metric_k": resolved["metric_k"],
            "replications": resolved["replications"],
            "seed": resolved["seed"],
            "save_population": False,
            "output_dir": str(base_out / arm),
        }
        _execute_run(arm_resolved)
    print(f"ablation complete: arms {', '.join(ABLATION_ARMS)} in {base_out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# list-functions
# ---------------------------------------------------------------------------


def cmd_list_functions(_args) -> int:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(("id", "set", "min_dim", "note"))
    for row in benchfn.list_functions():
        writer.writerow((row["id"], row["set"], row["min_dim"], row["note"]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdlearn",
        description="Quality-diversity experiments with learned competition functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured experiment")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.set_defaults(handler=cmd_run)

    p_meta = sub.add_parser("meta-train", help="meta-optimize competition parameters")
    p_meta.add_argument("--config", required=True, help="JSON meta-training config")
    p_meta.add_argument("--resume", action="store_true",
                        help="continue from the checkpoint in the output directory")
    p_meta.set_defaults(handler=cmd_meta_train)

    p_cmp = sub.add_parser("compare", help="rank-sum comparison of run directories")
    p_cmp.add_argument("run_dirs", nargs="+", help="two or more run output directories")
    p_cmp.add_argument("--metric", default="max_fitness", choices=metrics.CSV_FIELDS[1:])
    p_cmp.add_argument("--generation", type=int, default=-1,
                       help="generation to compare (-1 = final)")
    p_cmp.add_argument("--output", help="also write the table to this CSV file")
    p_cmp.set_defaults(handler=cmd_compare)

    p_land = sub.add_parser("landscape", help="competition-fitness grid over descriptor space")
    p_land.add_argument("--snapshot", required=True, help="population snapshot JSON")
    p_land.add_argument("--kind", default="learned", choices=LANDSCAPE_KINDS)
    p_land.add_argument("--theta", help="parameter file (learned kind)")
    p_land.add_argument("--k", type=int, default=3)
    p_land.add_argument("--cells", type=int, default=128, help="map_elites centroid count")
    p_land.add_argument("--seed", type=int, default=0, help="map_elites centroid seed")
    p_land.add_argument("--resolution", type=int, default=32)
    p_land.add_argument("--output", required=True, help="grid CSV path")
    p_land.set_defaults(handler=cmd_landscape)

    p_abl = sub.add_parser("ablation", help="learned vs random-descriptor vs GA arms")
    p_abl.add_argument("--config", required=True, help="JSON ablation config")
    p_abl.set_defaults(handler=cmd_ablation)

    p_list = sub.add_parser("list-functions", help="print the benchmark function table")
    p_list.set_defaults(handler=cmd_list_functions)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the CLI boundary maps everything to an exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
