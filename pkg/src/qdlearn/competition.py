"""Competition functions mapping (f, d) over a union population to f-tilde.

A competition function rescores the union of parents and offspring before
truncation. The identity keeps raw fitness (a plain GA); the others implement
archive-style cell competition, novelty, dominated novelty, random selection,
and the learned set-transformer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lqdnet, streams

KINDS = ("identity", "random", "map_elites", "novelty", "dominated_novelty", "learned")


@dataclass(frozen=True, eq=False)
class CentroidSet:
    """Fixed cell centroids in descriptor space, immutable for a whole run."""

    centroids: np.ndarray  # (C, D)
    seed: int

    @property
    def count(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True, eq=False)
class CompetitionFn:
    kind: str
    k: int = 3
    centroids: CentroidSet | None = None
    params: lqdnet.LqdParams | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown competition kind {self.kind!r}; expected one of {KINDS}")
        if self.k < 1:
            raise ValueError(f"neighbor count k must be >= 1, got {self.k}")
        if self.kind == "map_elites" and self.centroids is None:
            raise ValueError("map_elites competition needs a CentroidSet")
        if self.kind == "learned" and self.params is None:
            raise ValueError("learned competition needs LqdParams")


def identity_competition(f) -> np.ndarray:
    return np.asarray(f, dtype=float).copy()


def random_competition(size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform [0,1) scores carrying no information about the individuals."""
    return rng.random(size)


def build_centroids(dim: int, count: int, bounds, seed: int) -> CentroidSet:
    """Centroidal Voronoi tessellation of the descriptor bounding box.

    Samples 50*count uniform points and runs plain Lloyd k-means for a fixed
    100 iterations from a seeded initialization, so the result is a pure
    function of (dim, count, bounds, seed).
    """
    if count < 1:
        raise ValueError(f"centroid count must be >= 1, got {count}")
    bounds = np.asarray(bounds, dtype=float)
    if bounds.shape != (dim, 2):
        raise ValueError(f"expected bounds of shape ({dim}, 2), got {bounds.shape}")
    if np.any(bounds[:, 0] > bounds[:, 1]):
        raise ValueError("descriptor bounds must satisfy low <= high")

    rng = streams.stream(seed, streams.CENTROIDS)
    samples = rng.uniform(bounds[:, 0], bounds[:, 1], size=(50 * count, dim))
    centroids = samples[rng.choice(samples.shape[0], size=count, replace=False)].copy()
    for _ in range(100):
        assign = _nearest(samples, centroids)
        sums = np.zeros_like(centroids)
        np.add.at(sums, assign, samples)
        counts = np.bincount(assign, minlength=count)
        occupied = counts > 0
        centroids[occupied] = sums[occupied] / counts[occupied, np.newaxis]
    return CentroidSet(centroids=centroids, seed=int(seed))


def _nearest(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid per point, ties to the lower index."""
    out = np.empty(points.shape[0], dtype=np.intp)
    # chunked so the (points x centroids) distance block stays small
    step = max(1, 2_000_000 // max(1, centroids.shape[0]))
    for start in range(0, points.shape[0], step):
        block = points[start : start + step]
        d2 = np.sum((block[:, np.newaxis, :] - centroids[np.newaxis, :, :]) ** 2, axis=2)
        out[start : start + step] = np.argmin(d2, axis=1)
    return out


def map_elites_competition(f, d, centroids: CentroidSet) -> np.ndarray:
    """Best valid member of each cell keeps its fitness; the rest get -inf."""
    f = np.asarray(f, dtype=float)
    d = np.asarray(d, dtype=float)
    cell = _nearest(d, centroids.centroids)
    # per cell: highest fitness wins, fitness ties to the lower row index
    order = np.lexsort((np.arange(f.size), -f, cell))
    first = np.ones(f.size, dtype=bool)
    first[1:] = cell[order][1:] != cell[order][:-1]
    out = np.full(f.size, -np.inf)
    winners = order[first]
    out[winners] = f[winners]
    return out


def _pairwise_distances(d: np.ndarray) -> np.ndarray:
    diff = d[:, np.newaxis, :] - d[np.newaxis, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def novelty_competition(f, d, k: int) -> np.ndarray:
    """Mean distance to the k nearest neighbors; a lone individual is +inf."""
    d = np.atleast_2d(np.asarray(d, dtype=float))
    m = d.shape[0]
    if m == 1:
        return np.array([np.inf])
    dist = _pairwise_distances(d)
    np.fill_diagonal(dist, np.inf)
    dist.sort(axis=1)
    kk = min(k, m - 1)
    return np.mean(dist[:, :kk], axis=1)


def dominated_novelty_competition(f, d, k: int) -> np.ndarray:
    """Mean distance to the k nearest strictly-fitter neighbors.

    Individuals with no fitter neighbor (the global best and everything tied
    with it) get +inf, which guarantees their survival under truncation.
    """
    f = np.asarray(f, dtype=float)
    d = np.atleast_2d(np.asarray(d, dtype=float))
    m = f.size
    dist = _pairwise_distances(d)
    fitter = f[np.newaxis, :] > f[:, np.newaxis]
    masked = np.where(fitter, dist, np.inf)
    masked.sort(axis=1)
    counts = fitter.sum(axis=1)
    kk = np.minimum(k, counts)
    width = min(k, m)
    head = masked[:, :width]
    take = np.arange(width)[np.newaxis, :] < kk[:, np.newaxis]
    sums = np.sum(np.where(take, head, 0.0), axis=1)
    return np.where(counts > 0, sums / np.maximum(kk, 1), np.inf)


def compete(fn: CompetitionFn, f, d, valid, rng: np.random.Generator | None = None) -> np.ndarray:
    """Dispatch to fn.kind; invalid rows always come out at -inf.

    The distance-based kinds and the baselines see only the valid rows. The
    learned kind runs on the full union (featurization imputes the -inf
    fitness of invalid rows) and its outputs for invalid rows are overwritten.
    """
    f = np.asarray(f, dtype=float)
    d = np.atleast_2d(np.asarray(d, dtype=float))
    valid = np.asarray(valid, dtype=bool)
    if not (f.size == d.shape[0] == valid.size):
        raise ValueError("f, d and valid must agree in length")

    out = np.full(f.size, -np.inf)
    if fn.kind == "learned":
        scores = lqdnet.forward_competition(fn.params, f, d)
        out[valid] = scores[valid]
        return out

    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return out
    fv = f[idx]
    dv = d[idx]
    if fn.kind == "identity":
        out[idx] = identity_competition(fv)
    elif fn.kind == "random":
        if rng is None:
            raise ValueError("random competition needs a PRNG stream")
        out[idx] = random_competition(idx.size, rng)
    elif fn.kind == "map_elites":
        out[idx] = map_elites_competition(fv, dv, fn.centroids)
    elif fn.kind == "novelty":
        out[idx] = novelty_competition(fv, dv, fn.k)
    elif fn.kind == "dominated_novelty":
        out[idx] = dominated_novelty_competition(fv, dv, fn.k)
    else:  # unreachable: kinds are validated at construction
        raise ValueError(f"unknown competition kind {fn.kind!r}")
    return out
