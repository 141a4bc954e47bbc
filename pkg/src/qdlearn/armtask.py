"""Planar redundant-arm reaching task.

Eight equal links of length 1/8 on the unit disk. The genotype lives in
[0, 1]^8 and maps to joint angles alpha_i = pi * (2 x_i - 1). Fitness is the
negated population standard deviation of the joint angles (0 is optimal, at
any constant genotype) and the descriptor is the end-effector position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArmSpec:
    joints: int = 8

    @property
    def link_length(self) -> float:
        return 1.0 / self.joints

    @property
    def descriptor_dim(self) -> int:
        return 2


DEFAULT_SPEC = ArmSpec()


def arm_evaluate(x, spec: ArmSpec = DEFAULT_SPEC) -> tuple[float, np.ndarray]:
    """Fitness and end-effector descriptor for one genotype in [0,1]^J."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.joints,):
        raise ValueError(f"expected genotype of shape ({spec.joints},), got {x.shape}")
    f, d = arm_evaluate_batch(x[np.newaxis, :], spec)
    return float(f[0]), d[0]


def arm_evaluate_batch(genotypes, spec: ArmSpec = DEFAULT_SPEC) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(genotypes, dtype=float)
    if X.ndim != 2 or X.shape[1] != spec.joints:
        raise ValueError(f"expected genotypes of shape (m, {spec.joints}), got {X.shape}")
    if np.any(X < 0.0) or np.any(X > 1.0) or not np.all(np.isfinite(X)):
        raise ValueError("arm genotypes must lie in [0, 1]")
    alpha = np.pi * (2.0 * X - 1.0)
    # std over each genotype's own joint angles, ddof=0
    fitness = -np.std(alpha, axis=1)
    theta = np.cumsum(alpha, axis=1)
    descriptor = np.stack(
        [
            spec.link_length * np.sum(np.cos(theta), axis=1),
            spec.link_length * np.sum(np.sin(theta), axis=1),
        ],
        axis=1,
    )
    return fitness, descriptor


class ArmTask:
    """Task adapter exposing the same evaluation surface as benchmark instances."""

    def __init__(self, spec: ArmSpec = DEFAULT_SPEC):
        self.spec = spec
        self.dim = spec.joints
        self.box = np.tile([0.0, 1.0], (spec.joints, 1)).astype(float)
        self.descriptor_dim = spec.descriptor_dim

    def evaluate_batch(self, genotypes, rngs=None):
        fitness, _ = arm_evaluate_batch(genotypes, self.spec)
        return fitness

    def describe_batch(self, genotypes):
        _, descriptors = arm_evaluate_batch(genotypes, self.spec)
        return descriptors
