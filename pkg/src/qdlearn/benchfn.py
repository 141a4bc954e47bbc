"""Black-box benchmark objectives on the [-5, 5]^n search box.

The training set is the 22 noiseless BBOB functions of Finck, Hansen, Ros &
Auger (2010) that remain after reserving the two Gallagher variants for
out-of-distribution evaluation. The out-of-distribution set adds those two
Gallagher functions plus Ackley, Dixon-Price, Salomon and Levy.

All functions are exposed in MAXIMIZATION convention:

    fitness(x) = -(f_raw(T(x)) - f_opt)

where f_raw is the published minimization form, T applies the instance's
shift/rotation, and f_opt is the raw offset at the optimum. The optimum of
every noise-free instance therefore has fitness exactly 0 and everything
else is <= 0 (up to the boundary penalty terms some functions add).

Instances are deterministic functions of (function, dim, noise, seed): the
rotations come from QR-orthonormalized seeded standard-normal matrices and
the shift is sampled uniformly from the inner 80% of the box, with the
handful of per-function corrections the BBOB definitions require (corner
optima for the linear slope, fixed-magnitude sign patterns for Schwefel and
the bi-Rastrigin, and so on).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import streams

BOX_LOW = -5.0
BOX_HIGH = 5.0

# Raw-offset magnitude used by the Schwefel function; the paired optimum
# location magnitude is 4.2096874633 / 2 per coordinate.
_SCHWEFEL_XOPT = 4.2096874633
_SCHWEFEL_FOPT = 4.189828872724339


class FunctionId(str, enum.Enum):
    """Identifiers for all supported benchmark objectives."""

    SPHERE = "sphere"
    ELLIPSOIDAL = "ellipsoidal"
    RASTRIGIN = "rastrigin"
    BUECHE_RASTRIGIN = "bueche_rastrigin"
    LINEAR_SLOPE = "linear_slope"
    ATTRACTIVE_SECTOR = "attractive_sector"
    STEP_ELLIPSOIDAL = "step_ellipsoidal"
    ROSENBROCK = "rosenbrock"
    ROSENBROCK_ROTATED = "rosenbrock_rotated"
    ELLIPSOIDAL_ROTATED = "ellipsoidal_rotated"
    DISCUS = "discus"
    BENT_CIGAR = "bent_cigar"
    SHARP_RIDGE = "sharp_ridge"
    DIFFERENT_POWERS = "different_powers"
    RASTRIGIN_ROTATED = "rastrigin_rotated"
    WEIERSTRASS = "weierstrass"
    SCHAFFERS_F7 = "schaffers_f7"
    SCHAFFERS_F7_ILL = "schaffers_f7_ill"
    GRIEWANK_ROSENBROCK = "griewank_rosenbrock"
    SCHWEFEL = "schwefel"
    KATSUURA = "katsuura"
    LUNACEK_BI_RASTRIGIN = "lunacek_bi_rastrigin"
    # Held out from the training distribution:
    GALLAGHER_101 = "gallagher_101"
    GALLAGHER_21 = "gallagher_21"
    ACKLEY = "ackley"
    DIXON_PRICE = "dixon_price"
    SALOMON = "salomon"
    LEVY = "levy"


@dataclass(frozen=True)
class NoiseSpec:
    """Perturbation applied to the raw (minimization-form) value.

    kind:
        "none"      no perturbation
        "uniform"   multiply by a factor uniform in [1 - strength, 1 + strength]
        "gaussian"  add strength * |raw| * N(0, 1)
        "cauchy"    add a heavy-tailed term with scale strength * (1 + |raw|),
                    clamped to +-10 * strength * (1 + |raw|)
    """

    kind: str = "none"
    strength: float = 0.0

    KINDS = ("none", "uniform", "gaussian", "cauchy")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {self.KINDS}")
        if not math.isfinite(self.strength) or self.strength < 0:
            raise ValueError(f"noise strength must be finite and >= 0, got {self.strength}")

    @property
    def active(self) -> bool:
        return self.kind != "none" and self.strength > 0.0


@dataclass(frozen=True, eq=False)
class ObjectiveInstance:
    """One concrete shifted/rotated realization of a benchmark function."""

    function: FunctionId
    dim: int
    rotation: np.ndarray
    rotation2: np.ndarray
    x_opt: np.ndarray
    f_opt: float
    noise: NoiseSpec
    box: np.ndarray  # (dim, 2) low/high per dimension
    seed: int
    extras: dict = field(default_factory=dict)


def apply_noise(raw: float, noise: NoiseSpec, rng: np.random.Generator) -> float:
    """Perturb a single raw objective value. Degenerates to identity at strength 0."""
    if not noise.active:
        return float(raw)
    s = noise.strength
    if noise.kind == "uniform":
        return float(raw) * (1.0 + s * (2.0 * rng.random() - 1.0))
    if noise.kind == "gaussian":
        return float(raw) + s * abs(raw) * rng.standard_normal()
    # cauchy
    scale = s * (1.0 + abs(raw))
    bound = 10.0 * scale
    perturbation = float(np.clip(scale * rng.standard_cauchy(), -bound, bound))
    return float(raw) + perturbation


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    """Orthonormalize a standard-normal matrix (QR with sign-fixed diagonal)."""
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diagonal(r))
    signs[signs == 0.0] = 1.0
    return q * signs[np.newaxis, :]


def build_instance(
    function: FunctionId | str,
    dim: int,
    noise: NoiseSpec | None = None,
    seed: int = 0,
) -> ObjectiveInstance:
    """Deterministically construct an instance from (function, dim, noise, seed)."""
    function = FunctionId(function)
    noise = noise if noise is not None else NoiseSpec()
    spec = _SPEC[function]
    if dim < spec.min_dim:
        raise ValueError(f"{function.value} requires dim >= {spec.min_dim}, got {dim}")

    rng = streams.stream(seed)
    rotation = random_rotation(rng, dim)
    rotation2 = random_rotation(rng, dim)
    width = BOX_HIGH - BOX_LOW
    # Inner 80% of the box keeps the optimum away from the boundary.
    shift = rng.uniform(BOX_LOW + 0.1 * width, BOX_HIGH - 0.1 * width, size=dim)
    f_opt = float(np.clip(np.round(100.0 * rng.standard_cauchy()) / 100.0, -1000.0, 1000.0))

    x_opt, extras = spec.place_optimum(shift, rotation, rng, dim)
    box = np.tile([BOX_LOW, BOX_HIGH], (dim, 1)).astype(float)
    return ObjectiveInstance(
        function=function,
        dim=dim,
        rotation=rotation,
        rotation2=rotation2,
        x_opt=x_opt,
        f_opt=f_opt,
        noise=noise,
        box=box,
        seed=int(seed),
        extras=extras,
    )


def evaluate(instance: ObjectiveInstance, x, rng: np.random.Generator | None = None) -> float:
    """Fitness of a single genotype; see the module docstring for the convention."""
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise ValueError(f"expected genotype of shape ({instance.dim},), got {x.shape}")
    rngs = None if rng is None else [rng]
    return float(evaluate_batch(instance, x[np.newaxis, :], rngs)[0])


def evaluate_batch(
    instance: ObjectiveInstance,
    genotypes,
    rngs: list[np.random.Generator] | None = None,
) -> np.ndarray:
    """Fitness of a batch of genotypes, one row each.

    When the instance carries active noise, ``rngs`` must hold one generator
    per row (the pre-split per-individual streams), which keeps parallel
    evaluation deterministic.
    """
    X = np.asarray(genotypes, dtype=float)
    if X.ndim != 2 or X.shape[1] != instance.dim:
        raise ValueError(f"expected genotypes of shape (m, {instance.dim}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("genotypes must be finite")
    raw = _SPEC[instance.function].evaluate(X, instance)
    if not instance.noise.active:
        return -raw
    if rngs is None:
        raise ValueError("noisy instances need one PRNG stream per genotype")
    if len(rngs) != X.shape[0]:
        raise ValueError(f"expected {X.shape[0]} PRNG streams, got {len(rngs)}")
    noisy = np.array([apply_noise(v, instance.noise, r) for v, r in zip(raw, rngs)])
    return -noisy


# ---------------------------------------------------------------------------
# BBOB auxiliary transforms
# ---------------------------------------------------------------------------


def t_osz(x) -> np.ndarray:
    """Oscillation transform; applied element-wise."""
    y = np.asarray(x, dtype=float)
    xhat = np.zeros_like(y)
    np.log(np.abs(y), out=xhat, where=(y != 0.0))
    c1 = np.where(y > 0.0, 10.0, 5.5)
    c2 = np.where(y > 0.0, 7.9, 3.1)
    return np.sign(y) * np.exp(xhat + 0.049 * (np.sin(c1 * xhat) + np.sin(c2 * xhat)))


def t_asy(x: np.ndarray, beta: float) -> np.ndarray:
    """Asymmetry transform on rows of a batch; identity for non-positive entries."""
    n = x.shape[-1]
    exponent = 1.0 + beta * _index_fraction(n) * np.sqrt(np.maximum(x, 0.0))
    return np.where(x > 0.0, np.power(np.maximum(x, 0.0), exponent), x)


def lambda_scales(n: int, alpha: float) -> np.ndarray:
    """Diagonal of the conditioning matrix: alpha^(0.5 * i/(n-1))."""
    return np.power(alpha, 0.5 * _index_fraction(n))


def boundary_penalty(X: np.ndarray) -> np.ndarray:
    """Sum of squared box violations, per row."""
    return np.sum(np.maximum(0.0, np.abs(X) - 5.0) ** 2, axis=1)


def _index_fraction(n: int) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    return np.arange(n) / (n - 1)


# ---------------------------------------------------------------------------
# Function definitions (raw minimization form, optimum value 0)
# ---------------------------------------------------------------------------


def _shifted(X, inst):
    return X - inst.x_opt[np.newaxis, :]


def _rotated(X, inst):
    return _shifted(X, inst) @ inst.rotation.T


def _f_sphere(X, inst):
    z = _shifted(X, inst)
    return np.sum(z * z, axis=1)


def _ellipsoid_weights(n):
    return np.power(10.0, 6.0 * _index_fraction(n))


def _f_ellipsoidal(X, inst):
    z = t_osz(_shifted(X, inst))
    return np.sum(_ellipsoid_weights(inst.dim) * z * z, axis=1)


def _f_ellipsoidal_rotated(X, inst):
    z = t_osz(_rotated(X, inst))
    return np.sum(_ellipsoid_weights(inst.dim) * z * z, axis=1)


def _rastrigin_core(z):
    n = z.shape[1]
    return 10.0 * (n - np.sum(np.cos(2.0 * np.pi * z), axis=1)) + np.sum(z * z, axis=1)


def _f_rastrigin(X, inst):
    z = t_asy(t_osz(_shifted(X, inst)), 0.2) * lambda_scales(inst.dim, 10.0)
    return _rastrigin_core(z)


def _f_bueche_rastrigin(X, inst):
    n = inst.dim
    t = t_osz(_shifted(X, inst))
    s = np.power(10.0, 0.5 * _index_fraction(n))
    odd = (np.arange(n) % 2) == 0  # odd coordinates in 1-based counting
    z = t * np.where((t > 0.0) & odd, 10.0 * s, s)
    return _rastrigin_core(z) + 100.0 * boundary_penalty(X)


def _f_linear_slope(X, inst):
    s = np.sign(inst.x_opt) * np.power(10.0, _index_fraction(inst.dim))
    z = np.where(inst.x_opt * X < 25.0, X, inst.x_opt)
    return np.sum(5.0 * np.abs(s) - s * z, axis=1)


def _f_attractive_sector(X, inst):
    z = (_rotated(X, inst) * lambda_scales(inst.dim, 10.0)) @ inst.rotation2.T
    s = np.where(z * inst.x_opt > 0.0, 100.0, 1.0)
    return np.power(t_osz(np.sum((s * z) ** 2, axis=1)), 0.9)


def _f_step_ellipsoidal(X, inst):
    n = inst.dim
    zhat = _rotated(X, inst) * lambda_scales(n, 10.0)
    ztilde = np.where(
        np.abs(zhat) > 0.5,
        np.floor(0.5 + zhat),
        np.floor(0.5 + 10.0 * zhat) / 10.0,
    )
    z = ztilde @ inst.rotation2.T
    weighted = np.sum(np.power(100.0, _index_fraction(n)) * z * z, axis=1)
    return 0.1 * np.maximum(np.abs(zhat[:, 0]) / 1.0e4, weighted) + boundary_penalty(X)


def _rosenbrock_core(z):
    a = z[:, :-1]
    b = z[:, 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=1)


def _f_rosenbrock(X, inst):
    scale = max(1.0, math.sqrt(inst.dim) / 8.0)
    z = scale * _shifted(X, inst) + 1.0
    return _rosenbrock_core(z)


def _f_rosenbrock_rotated(X, inst):
    scale = max(1.0, math.sqrt(inst.dim) / 8.0)
    z = scale * (X @ inst.rotation.T) + 0.5
    return _rosenbrock_core(z)


def _f_discus(X, inst):
    z = t_osz(_rotated(X, inst))
    return 1.0e6 * z[:, 0] ** 2 + np.sum(z[:, 1:] ** 2, axis=1)


def _f_bent_cigar(X, inst):
    z = t_asy(_rotated(X, inst), 0.5) @ inst.rotation.T
    return z[:, 0] ** 2 + 1.0e6 * np.sum(z[:, 1:] ** 2, axis=1)


def _f_sharp_ridge(X, inst):
    z = (_rotated(X, inst) * lambda_scales(inst.dim, 10.0)) @ inst.rotation2.T
    return z[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(z[:, 1:] ** 2, axis=1))


def _f_different_powers(X, inst):
    z = _rotated(X, inst)
    exponents = 2.0 + 4.0 * _index_fraction(inst.dim)
    return np.sqrt(np.sum(np.power(np.abs(z), exponents), axis=1))


def _f_rastrigin_rotated(X, inst):
    t = t_asy(t_osz(_rotated(X, inst)), 0.2)
    z = ((t @ inst.rotation2.T) * lambda_scales(inst.dim, 10.0)) @ inst.rotation.T
    return _rastrigin_core(z)


_WEIERSTRASS_K = np.arange(12)
_WEIERSTRASS_A = 0.5 ** _WEIERSTRASS_K
_WEIERSTRASS_B = 3.0 ** _WEIERSTRASS_K
_WEIERSTRASS_F0 = float(np.sum(_WEIERSTRASS_A * np.cos(np.pi * _WEIERSTRASS_B)))


def _f_weierstrass(X, inst):
    n = inst.dim
    t = t_osz(_rotated(X, inst))
    z = ((t @ inst.rotation2.T) * lambda_scales(n, 0.01)) @ inst.rotation.T
    phase = 2.0 * np.pi * _WEIERSTRASS_B * (z[..., np.newaxis] + 0.5)
    per_dim = np.cos(phase) @ _WEIERSTRASS_A
    core = 10.0 * np.power(np.sum(per_dim, axis=1) / n - _WEIERSTRASS_F0, 3.0)
    return core + (10.0 / n) * boundary_penalty(X)


def _schaffers(X, inst, conditioning):
    n = inst.dim
    t = t_asy(_rotated(X, inst), 0.5)
    z = (t @ inst.rotation2.T) * lambda_scales(n, conditioning)
    s = np.sqrt(z[:, :-1] ** 2 + z[:, 1:] ** 2)
    mean_term = np.mean(np.sqrt(s) * (1.0 + np.sin(50.0 * np.power(s, 0.2)) ** 2), axis=1)
    return mean_term**2 + 10.0 * boundary_penalty(X)


def _f_schaffers_f7(X, inst):
    return _schaffers(X, inst, 10.0)


def _f_schaffers_f7_ill(X, inst):
    return _schaffers(X, inst, 1000.0)


def _f_griewank_rosenbrock(X, inst):
    n = inst.dim
    scale = max(1.0, math.sqrt(n) / 8.0)
    z = scale * (X @ inst.rotation.T) + 0.5
    a = z[:, :-1]
    b = z[:, 1:]
    s = 100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2
    return (10.0 / (n - 1)) * np.sum(s / 4000.0 - np.cos(s), axis=1) + 10.0


def _f_schwefel(X, inst):
    n = inst.dim
    bern = np.sign(inst.x_opt)
    two_abs = 2.0 * np.abs(inst.x_opt)
    xhat = 2.0 * bern * X
    zhat = xhat.copy()
    zhat[:, 1:] += 0.25 * (xhat[:, :-1] - two_abs[np.newaxis, :-1])
    z = 100.0 * (lambda_scales(n, 10.0) * (zhat - two_abs) + two_abs)
    main = -np.sum(z * np.sin(np.sqrt(np.abs(z))), axis=1) / (100.0 * n)
    return main + _SCHWEFEL_FOPT + 100.0 * boundary_penalty(z / 100.0)


def _f_katsuura(X, inst):
    n = inst.dim
    z = (_rotated(X, inst) * lambda_scales(n, 100.0)) @ inst.rotation2.T
    powers = 2.0 ** np.arange(1, 33)
    scaled = powers * z[..., np.newaxis]
    inner = np.sum(np.abs(scaled - np.round(scaled)) / powers, axis=2)
    factors = 1.0 + np.arange(1, n + 1) * inner
    prod = np.prod(np.power(factors, 10.0 / n**1.2), axis=1)
    return (10.0 / n**2) * (prod - 1.0) + boundary_penalty(X)


def _f_lunacek_bi_rastrigin(X, inst):
    n = inst.dim
    mu0 = 2.5
    d = 1.0
    s = 1.0 - 1.0 / (2.0 * math.sqrt(n + 20.0) - 8.2)
    mu1 = -math.sqrt((mu0**2 - d) / s)
    xhat = 2.0 * np.sign(inst.x_opt) * X
    z = ((xhat - mu0) @ inst.rotation.T * lambda_scales(n, 100.0)) @ inst.rotation2.T
    sphere0 = np.sum((xhat - mu0) ** 2, axis=1)
    sphere1 = d * n + s * np.sum((xhat - mu1) ** 2, axis=1)
    cos_term = 10.0 * (n - np.sum(np.cos(2.0 * np.pi * z), axis=1))
    return np.minimum(sphere0, sphere1) + cos_term + 1.0e4 * boundary_penalty(X)


def _f_gallagher(X, inst):
    peaks = inst.extras["peaks"]  # (P, n)
    weights = inst.extras["weights"]  # (P,)
    quad = inst.extras["quad"]  # (P, n, n)
    n = inst.dim
    diff = X[:, np.newaxis, :] - peaks[np.newaxis, :, :]
    q = np.einsum("bpi,pij,bpj->bp", diff, quad, diff)
    best = np.max(weights * np.exp(-q / (2.0 * n)), axis=1)
    return t_osz(10.0 - best) ** 2 + boundary_penalty(X)


def _f_ackley(X, inst):
    z = _rotated(X, inst)
    n = inst.dim
    term1 = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(z * z, axis=1) / n))
    term2 = -np.exp(np.sum(np.cos(2.0 * np.pi * z), axis=1) / n)
    return term1 + term2 + 20.0 + math.e


def _dixon_price_optimum(n):
    i = np.arange(1, n + 1, dtype=float)
    return np.power(2.0, -(np.power(2.0, i) - 2.0) / np.power(2.0, i))


def _f_dixon_price(X, inst):
    z = _rotated(X, inst) + _dixon_price_optimum(inst.dim)
    i = np.arange(2, inst.dim + 1, dtype=float)
    return (z[:, 0] - 1.0) ** 2 + np.sum(i * (2.0 * z[:, 1:] ** 2 - z[:, :-1]) ** 2, axis=1)


def _f_salomon(X, inst):
    r = np.sqrt(np.sum(_rotated(X, inst) ** 2, axis=1))
    return 1.0 - np.cos(2.0 * np.pi * r) + 0.1 * r


def _f_levy(X, inst):
    z = _rotated(X, inst) + 1.0
    w = 1.0 + (z - 1.0) / 4.0
    head = np.sin(np.pi * w[:, 0]) ** 2
    middle = np.sum(
        (w[:, :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:, :-1] + 1.0) ** 2),
        axis=1,
    )
    tail = (w[:, -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[:, -1]) ** 2)
    return head + middle + tail


# ---------------------------------------------------------------------------
# Optimum placement hooks
# ---------------------------------------------------------------------------


def _place_default(shift, rotation, rng, dim):
    return shift, {}


def _place_corner(shift, rotation, rng, dim):
    signs = np.where(shift >= 0.0, 1.0, -1.0)
    return 5.0 * signs, {}


def _place_scaled(factor):
    def place(shift, rotation, rng, dim):
        return factor * shift, {}

    return place


def _place_sign_pattern(magnitude):
    def place(shift, rotation, rng, dim):
        signs = np.where(shift >= 0.0, 1.0, -1.0)
        return magnitude * signs, {}

    return place


def _place_rosenbrock_rotated(shift, rotation, rng, dim):
    scale = max(1.0, math.sqrt(dim) / 8.0)
    return rotation.T @ np.full(dim, 0.5 / scale), {}


def _gallagher_extras(rng, dim, rotation, x_opt, n_peaks, cond_base, peak_low, peak_high):
    alpha_pool = np.power(1000.0, 2.0 * np.arange(n_peaks - 1) / (n_peaks - 2))
    alphas = np.concatenate(([cond_base], rng.permutation(alpha_pool)[: n_peaks - 1]))
    weights = np.concatenate(([10.0], 1.1 + 8.0 * np.arange(n_peaks - 1) / (n_peaks - 2)))
    peaks = rng.uniform(peak_low, peak_high, size=(n_peaks, dim))
    peaks[0] = x_opt

    quad = np.empty((n_peaks, dim, dim))
    for p in range(n_peaks):
        diag = rng.permutation(lambda_scales(dim, alphas[p]) / alphas[p] ** 0.25)
        quad[p] = rotation.T @ (diag[:, np.newaxis] * rotation)
    return {"peaks": peaks, "weights": weights, "quad": quad}


def _place_gallagher(n_peaks, cond_base, peak_low, peak_high, opt_scale=1.0):
    def place(shift, rotation, rng, dim):
        x_opt = opt_scale * shift
        extras = _gallagher_extras(
            rng, dim, rotation, x_opt, n_peaks, cond_base, peak_low, peak_high
        )
        return x_opt, extras

    return place


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _FunctionSpec:
    evaluate: callable
    training: bool
    min_dim: int = 1
    note: str = ""
    place_optimum: callable = _place_default


_SPEC = {
    FunctionId.SPHERE: _FunctionSpec(_f_sphere, True, note="separable, unimodal"),
    FunctionId.ELLIPSOIDAL: _FunctionSpec(_f_ellipsoidal, True, note="separable, high conditioning"),
    FunctionId.RASTRIGIN: _FunctionSpec(_f_rastrigin, True, note="separable, multimodal"),
    FunctionId.BUECHE_RASTRIGIN: _FunctionSpec(_f_bueche_rastrigin, True, note="separable, asymmetric multimodal"),
    FunctionId.LINEAR_SLOPE: _FunctionSpec(
        _f_linear_slope, True, note="separable, linear; optimum on the boundary",
        place_optimum=_place_corner,
    ),
    FunctionId.ATTRACTIVE_SECTOR: _FunctionSpec(_f_attractive_sector, True, note="unimodal, highly asymmetric"),
    FunctionId.STEP_ELLIPSOIDAL: _FunctionSpec(_f_step_ellipsoidal, True, note="unimodal, plateaus"),
    FunctionId.ROSENBROCK: _FunctionSpec(
        _f_rosenbrock, True, min_dim=2, note="bent valley", place_optimum=_place_scaled(0.75)
    ),
    FunctionId.ROSENBROCK_ROTATED: _FunctionSpec(
        _f_rosenbrock_rotated, True, min_dim=2, note="rotated bent valley",
        place_optimum=_place_rosenbrock_rotated,
    ),
    FunctionId.ELLIPSOIDAL_ROTATED: _FunctionSpec(_f_ellipsoidal_rotated, True, note="unimodal, high conditioning"),
    FunctionId.DISCUS: _FunctionSpec(_f_discus, True, note="unimodal, one sensitive direction"),
    FunctionId.BENT_CIGAR: _FunctionSpec(_f_bent_cigar, True, note="unimodal, narrow ridge"),
    FunctionId.SHARP_RIDGE: _FunctionSpec(_f_sharp_ridge, True, note="unimodal, non-smooth ridge"),
    FunctionId.DIFFERENT_POWERS: _FunctionSpec(_f_different_powers, True, note="unimodal, varying sensitivity"),
    FunctionId.RASTRIGIN_ROTATED: _FunctionSpec(_f_rastrigin_rotated, True, note="rotated multimodal"),
    FunctionId.WEIERSTRASS: _FunctionSpec(_f_weierstrass, True, note="highly rugged, repetitive"),
    FunctionId.SCHAFFERS_F7: _FunctionSpec(_f_schaffers_f7, True, min_dim=2, note="highly multimodal"),
    FunctionId.SCHAFFERS_F7_ILL: _FunctionSpec(
        _f_schaffers_f7_ill, True, min_dim=2, note="highly multimodal, ill-conditioned"
    ),
    FunctionId.GRIEWANK_ROSENBROCK: _FunctionSpec(
        _f_griewank_rosenbrock, True, min_dim=2, note="composite valley",
        place_optimum=_place_rosenbrock_rotated,
    ),
    FunctionId.SCHWEFEL: _FunctionSpec(
        _f_schwefel, True, note="weakly structured multimodal",
        place_optimum=_place_sign_pattern(_SCHWEFEL_XOPT / 2.0),
    ),
    FunctionId.KATSUURA: _FunctionSpec(_f_katsuura, True, note="highly rugged, fractal"),
    FunctionId.LUNACEK_BI_RASTRIGIN: _FunctionSpec(
        _f_lunacek_bi_rastrigin, True, note="two-funnel multimodal",
        place_optimum=_place_sign_pattern(1.25),
    ),
    FunctionId.GALLAGHER_101: _FunctionSpec(
        _f_gallagher, False, note="101 random peaks",
        place_optimum=_place_gallagher(101, 1000.0, -5.0, 5.0),
    ),
    FunctionId.GALLAGHER_21: _FunctionSpec(
        _f_gallagher, False, note="21 random peaks",
        place_optimum=_place_gallagher(21, 1000.0**2, -4.9, 4.9, opt_scale=0.98),
    ),
    FunctionId.ACKLEY: _FunctionSpec(_f_ackley, False, note="exponential well"),
    FunctionId.DIXON_PRICE: _FunctionSpec(_f_dixon_price, False, min_dim=2, note="chained quadratic"),
    FunctionId.SALOMON: _FunctionSpec(_f_salomon, False, note="radial ripples"),
    FunctionId.LEVY: _FunctionSpec(_f_levy, False, note="sinusoidal multimodal"),
}

TRAINING_FUNCTIONS = tuple(fid for fid in FunctionId if _SPEC[fid].training)
OOD_FUNCTIONS = tuple(fid for fid in FunctionId if not _SPEC[fid].training)


def min_dim(function: FunctionId | str) -> int:
    return _SPEC[FunctionId(function)].min_dim


def function_note(function: FunctionId | str) -> str:
    return _SPEC[FunctionId(function)].note


def list_functions() -> list[dict]:
    """Metadata rows for every supported function."""
    rows = []
    for fid in FunctionId:
        spec = _SPEC[fid]
        rows.append(
            {
                "id": fid.value,
                "set": "training" if spec.training else "ood",
                "min_dim": spec.min_dim,
                "note": spec.note,
            }
        )
    return rows
