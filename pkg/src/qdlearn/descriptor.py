"""Descriptor extraction for solutions.

Black-box tasks use a random Gaussian projection of the genotype; tasks with
native descriptors (the arm) pass their own through; an ablation mode draws
descriptors from a standard normal independent of the genotype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import streams

KINDS = ("projection", "task_specific", "random_noise")


@dataclass(frozen=True)
class DescriptorSpec:
    """How descriptors are produced for a run.

    kind "projection" uses a seeded random linear map of the genotype,
    "task_specific" defers to the task's own descriptor (arm end effector),
    and "random_noise" ignores the genotype entirely (ablation control).
    """

    kind: str = "projection"
    dim: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown descriptor kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1:
            raise ValueError(f"descriptor dim must be >= 1, got {self.dim}")


@dataclass(frozen=True, eq=False)
class ProjectionDescriptor:
    """Linear descriptor map d = P x with independent standard-normal entries.

    P is intentionally not normalized by 1/sqrt(n): downstream per-column
    standardization and distance-relative scores absorb the scale.
    """

    matrix: np.ndarray  # (D, n)
    seed: int

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def output_dim(self) -> int:
        return self.matrix.shape[0]


def sample_projection(n: int, d: int, seed: int) -> ProjectionDescriptor:
    """Deterministic D x n standard-normal projection matrix."""
    if n < 1 or d < 1:
        raise ValueError(f"projection dims must be >= 1, got n={n}, D={d}")
    rng = streams.stream(seed, streams.PROJECTION)
    return ProjectionDescriptor(matrix=rng.standard_normal((d, n)), seed=int(seed))


def describe(proj: ProjectionDescriptor, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (proj.input_dim,):
        raise ValueError(f"expected genotype of shape ({proj.input_dim},), got {x.shape}")
    return proj.matrix @ x


def describe_batch(proj: ProjectionDescriptor, genotypes) -> np.ndarray:
    X = np.asarray(genotypes, dtype=float)
    if X.ndim != 2 or X.shape[1] != proj.input_dim:
        raise ValueError(f"expected genotypes of shape (m, {proj.input_dim}), got {X.shape}")
    return X @ proj.matrix.T


def noise_descriptors(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Standard-normal descriptors that carry no information about genotypes."""
    return rng.standard_normal((count, dim))
