"""Synthetic benchmarks: K lines through the origin of one shared plane.

All clusters live in the row space of a random ``2 x ambient_dim`` basis, so
the pooled data has rank 2 while the per-cluster dimensions sum to K.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import seeding
from .errors import ConfigError, DegenerateAngle
from .model import Dataset


@dataclass(frozen=True)
class SynthSpec:
    K: int = 2
    n_per_cluster: int = 50
    ambient_dim: int = 50
    noise_fraction: float = 0.0
    noise_variance: float = 3.0
    seed: int = 0
    literal_angle: bool = False

    def __post_init__(self):
        if self.K < 1 or self.n_per_cluster < 2:
            raise ConfigError("need K >= 1 and n_per_cluster >= 2")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ConfigError("noise_fraction must lie in [0, 1]")
        if not self.noise_variance > 0 or self.ambient_dim < 2:
            raise ConfigError("invalid noise_variance or ambient_dim")

    def to_dict(self) -> dict:
        return asdict(self)


def line_angles(K: int, literal: bool = False) -> np.ndarray:
    """Slope angles ``16 k pi / (17 K)`` for ``k = 1..K``.

    ``literal=True`` drops the factor of pi (``16 k / (17 K)`` radians).
    """
    k = np.arange(1, K + 1)
    theta = 16.0 * k / (17.0 * K)
    return theta if literal else np.pi * theta


def gen_subspace_lines(spec: SynthSpec) -> Dataset:
    if spec.noise_fraction:
        raise ConfigError("use gen_noisy for noise_fraction > 0")
    rng = seeding.stream(spec.seed, "generator")
    B = rng.standard_normal((2, spec.ambient_dim))
    blocks, labels = [], []
    for k, theta in enumerate(line_angles(spec.K, spec.literal_angle)):
        if abs(np.cos(theta)) < 1e-9:
            raise DegenerateAngle(f"cluster {k + 1} has a vertical slope")
        y1 = rng.uniform(-1.0, 1.0, size=spec.n_per_cluster)
        Y = np.column_stack([y1, np.tan(theta) * y1])
        blocks.append(Y @ B)
        labels.append(np.full(spec.n_per_cluster, k))
    return Dataset(np.vstack(blocks).T, np.concatenate(labels))


def gen_noisy(spec: SynthSpec, return_indices: bool = False):
    """Clean lines plus isotropic Gaussian noise on a random subset of samples.

    ``floor(noise_fraction * N)`` columns, chosen without replacement, get
    i.i.d. noise of variance ``noise_variance`` in every coordinate.
    """
    clean = gen_subspace_lines(SynthSpec(**{**spec.to_dict(), "noise_fraction": 0.0}))
    N = clean.N
    n_noisy = int(np.floor(spec.noise_fraction * N + 1e-9))
    rng = seeding.stream(spec.seed, "noise")
    idx = np.sort(rng.choice(N, size=n_noisy, replace=False))
    X = clean.X.copy()
    X[:, idx] += np.sqrt(spec.noise_variance) * rng.standard_normal((clean.D, n_noisy))
    data = Dataset(X, clean.labels)
    return (data, idx) if return_indices else data


def generate(spec: SynthSpec, return_indices: bool = False):
    if spec.noise_fraction:
        return gen_noisy(spec, return_indices)
    data = gen_subspace_lines(spec)
    return (data, np.empty(0, dtype=np.int64)) if return_indices else data
