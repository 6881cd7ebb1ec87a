"""Affinity matrices and normalized-cut spectral clustering."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg
from sklearn.cluster import KMeans

from .errors import ConfigError, EigenFailure
from .model import ChainSamples, Dataset
from .numerics import build_psd

CO_ASSIGNMENT = "coassignment"
PROBABILISTIC = "probabilistic"
INIT = "init"

DEGREE_FLOOR = 1e-12


@dataclass(frozen=True)
class AffinityMatrix:
    values: np.ndarray
    kind: str

    @property
    def N(self) -> int:
        return self.values.shape[0]


def _values(G: Union[AffinityMatrix, np.ndarray]) -> np.ndarray:
    return G.values if isinstance(G, AffinityMatrix) else np.asarray(G, dtype=float)


def coassignment_matrix(s) -> AffinityMatrix:
    s = np.asarray(s)
    return AffinityMatrix((s[:, None] == s[None, :]).astype(float), CO_ASSIGNMENT)


def probabilistic_affinity(samples: Union[ChainSamples, np.ndarray]) -> AffinityMatrix:
    """Entrywise mean of the co-assignment matrices of the retained samples.

    Entry ``(i, j)`` estimates the posterior probability that samples ``i``
    and ``j`` share a cluster.
    """
    S = samples.samples if isinstance(samples, ChainSamples) else np.asarray(samples)
    if S.ndim != 2 or S.shape[0] < 1:
        raise ConfigError("need at least one retained sample")
    M, N = S.shape
    counts = np.zeros((N, N))
    for s in S:
        counts += s[:, None] == s[None, :]
    return AffinityMatrix(counts / M, PROBABILISTIC)


def default_delta(data: Dataset) -> float:
    return 1e-3 * float(np.sum(data.X * data.X)) / data.N


def init_affinity(data: Dataset, delta: Optional[float] = None) -> AffinityMatrix:
    """``|(X^T X + delta I)^{-1}|``, the sample-space precision magnitudes."""
    if delta is None:
        delta = default_delta(data)
    P = build_psd(data.X.T @ data.X + delta * np.eye(data.N)).inverse
    A = np.abs(P)
    return AffinityMatrix(0.5 * (A + A.T), INIT)


def spectral_embed(G, K: int) -> np.ndarray:
    """Row-normalized top-``K`` eigenvectors of ``D^{-1/2} G D^{-1/2}``."""
    A = _values(G)
    N = A.shape[0]
    if not 1 <= K <= N:
        raise ConfigError(f"need 1 <= K <= N, got K={K}, N={N}")
    d = np.maximum(A.sum(axis=1), DEGREE_FLOOR)
    r = 1.0 / np.sqrt(d)
    L = A * r[:, None] * r[None, :]
    L = 0.5 * (L + L.T)
    try:
        _, V = scipy.linalg.eigh(L, subset_by_index=[N - K, N - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(str(exc)) from None
    norms = np.linalg.norm(V, axis=1)
    ok = norms > 1e-12
    V[ok] /= norms[ok, None]
    V[~ok] = 0.0
    return V


def kmeans(points, K: int, seed: int, restarts: int = 20) -> np.ndarray:
    """Best-of-``restarts`` Lloyd k-means from k-means++ seeding; 0-based labels."""
    points = np.asarray(points, dtype=float)
    if K > points.shape[0]:
        raise ConfigError("K exceeds the number of points")
    km = KMeans(n_clusters=K, init="k-means++", n_init=restarts, algorithm="lloyd",
                random_state=int(seed) % (2**32))
    return km.fit_predict(points).astype(np.int64)


def ncut_cluster(G, K: int, seed: int, restarts: int = 20) -> np.ndarray:
    return kmeans(spectral_embed(G, K), K, seed, restarts)


def save_affinity_csv(path, G) -> None:
    np.savetxt(path, _values(G), delimiter=",", fmt="%.17g")


def load_affinity_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)
