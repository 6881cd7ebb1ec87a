"""End-to-end fitting: initialization, chain, and the three final-labelling routes."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import seeding
from .affinity import AffinityMatrix, init_affinity, ncut_cluster, probabilistic_affinity
from .errors import ConfigError
from .evaluation import clustering_accuracy, pca_reduce
from .model import DP, FINITE, Dataset, Hyperparams
from .sampler import ChainConfig, map_ascent, run_chain

GCR_MAP = "gcr-map"
GCR_BAYES = "gcr-bayes"
GCR_DP_BAYES = "gcr-dp-bayes"
PIPELINES = (GCR_MAP, GCR_BAYES, GCR_DP_BAYES)


@dataclass(frozen=True)
class RunConfig:
    """Everything a fit depends on besides the data."""

    pipeline: str = GCR_MAP
    K: int = 2
    beta0: float = 1.0
    nu: float = 1.0
    lam: float = 1.0
    alphaH: float = 0.1
    alphaL: float = 1e-5
    epochs: int = 500
    retain: int = 100
    delta: Optional[float] = None
    kmeans_restarts: int = 20
    pca_dims: Optional[int] = None
    pca_energy: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        if self.K < 1:
            raise ConfigError("K must be positive")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("delta must be positive")
        if self.pca_dims is not None and self.pca_energy is not None:
            raise ConfigError("give at most one of pca_dims and pca_energy")
        self.hyperparams()
        self.chain()

    @property
    def mode(self) -> str:
        return DP if self.pipeline == GCR_DP_BAYES else FINITE

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(beta0=self.beta0, nu=self.nu, lam=self.lam, alphaH=self.alphaH,
                           alphaL=self.alphaL, mode=self.mode, K=self.K)

    def chain(self) -> ChainConfig:
        return ChainConfig(epochs=self.epochs, retain=self.retain, seed=self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known - {"mode"}
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in d.items() if k in known})
        if "mode" in d and d["mode"] != cfg.mode:
            raise ConfigError(f"pipeline {cfg.pipeline} runs in {cfg.mode} mode, not {d['mode']}")
        return cfg


@dataclass
class FitResult:
    labels: np.ndarray
    init_labels: np.ndarray
    affinity: Optional[AffinityMatrix] = None
    n_clusters_last: int = 0
    wall_time: float = 0.0
    accuracy: Optional[float] = None
    init_accuracy: Optional[float] = None
    extra: dict = field(default_factory=dict)


def initial_assignment(data: Dataset, K: int, seed: int, delta: Optional[float] = None,
                       restarts: int = 20) -> np.ndarray:
    """NCut on the sample-space precision magnitudes, self-affinities removed.

    The diagonal of ``|(X^T X + delta I)^{-1}|`` is of order ``1 / delta``
    and would otherwise swamp every degree, so it is zeroed before the cut.
    """
    G = init_affinity(data, delta).values.copy()
    np.fill_diagonal(G, 0.0)
    return ncut_cluster(G, K, seeding.subseed(seed, "kmeans", 0), restarts)


def prepare(data: Dataset, cfg: RunConfig) -> Dataset:
    if cfg.pca_dims is None and cfg.pca_energy is None:
        return data
    return pca_reduce(data, dims=cfg.pca_dims, energy=cfg.pca_energy)


def fit(data: Dataset, cfg: RunConfig, keep_affinity: bool = False) -> FitResult:
    """Run the configured pipeline on ``data`` and score it if labels exist."""
    start = time.perf_counter()
    data = prepare(data, cfg)
    if cfg.K > data.N:
        raise ConfigError("K exceeds the number of samples")
    hp = cfg.hyperparams()
    z0 = initial_assignment(data, cfg.K, cfg.seed, cfg.delta, cfg.kmeans_restarts)
    samples = run_chain(data, hp, cfg.chain(), z0)
    last = samples.samples[-1]
    G = None
    if cfg.pipeline == GCR_MAP:
        labels = map_ascent(data, hp, last)
        if keep_affinity:
            G = probabilistic_affinity(samples)
    else:
        G = probabilistic_affinity(samples)
        labels = ncut_cluster(G, cfg.K, seeding.subseed(cfg.seed, "kmeans", 1),
                              cfg.kmeans_restarts)
    res = FitResult(labels=np.asarray(labels, dtype=np.int64), init_labels=z0, affinity=G,
                    n_clusters_last=int(np.unique(last).size),
                    wall_time=time.perf_counter() - start)
    if data.labels is not None:
        res.accuracy = clustering_accuracy(res.labels, data.labels)
        res.init_accuracy = clustering_accuracy(z0, data.labels)
    return res
