"""Domain types and the collapsed posterior over cluster indicators.

Indicators are 0-based internally (``0..K-1``); file formats shift them to
``1..K``. ``log_posterior_naive`` is the reference path that rebuilds every
matrix from scratch. ``init_state`` materializes the cached path the sampler
mutates with rank-1 updates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DowndateSingular, EmptyCluster
from .numerics import PsdState, build_psd, log_gamma, self_downdate_stats

FINITE = "finite"
DP = "dp"


@dataclass(frozen=True)
class Dataset:
    """Samples as columns of ``X`` (``D x N``) with optional ground truth."""

    X: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ConfigError("X must be a D x N matrix")
        D, N = X.shape
        if D < 1 or N < 2:
            raise ConfigError(f"need D >= 1 and N >= 2, got D={D}, N={N}")
        if not np.all(np.isfinite(X)):
            raise ConfigError("X contains non-finite entries")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64).copy()
            if labels.shape != (N,):
                raise ConfigError("labels must have length N")
            if labels.min() < 0:
                raise ConfigError("labels must be nonnegative")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        Xt = np.ascontiguousarray(X.T)
        Xt.setflags(write=False)
        object.__setattr__(self, "_Xt", Xt)

    @property
    def D(self) -> int:
        return self.X.shape[0]

    @property
    def N(self) -> int:
        return self.X.shape[1]

    @property
    def Xt(self) -> np.ndarray:
        """Samples as rows (``N x D``), C-contiguous."""
        return self._Xt


@dataclass(frozen=True)
class Hyperparams:
    """Model hyperparameters.

    Defaults follow ``lambda * alphaH = 0.1`` and ``alphaH / alphaL = 1e4``
    with ``alphaH = 0.1``.
    """

    beta0: float = 1.0
    nu: float = 1.0
    lam: float = 1.0
    alphaH: float = 0.1
    alphaL: float = 1e-5
    mode: str = FINITE
    K: int = 2

    def __post_init__(self):
        if self.mode not in (FINITE, DP):
            raise ConfigError(f"mode must be {FINITE!r} or {DP!r}, got {self.mode!r}")
        for name in ("beta0", "nu", "lam", "alphaH"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        # equality is the degenerate "no cluster structure" limit, kept for checks
        if not self.alphaH >= self.alphaL >= 0:
            raise ConfigError("need alphaH >= alphaL >= 0")
        if self.mode == FINITE and int(self.K) < 1:
            raise ConfigError("K must be >= 1 in finite mode")

    @property
    def finite(self) -> bool:
        return self.mode == FINITE

    def replace(self, **changes) -> "Hyperparams":
        fields = dict(self.__dict__)
        fields.update(changes)
        return Hyperparams(**fields)


@dataclass
class ClusterState:
    """Indicators plus cached per-cluster inverses and per-sample terms.

    Cluster slots ``0..n_clusters-1`` of ``Hinv`` / ``logdet`` / ``counts``
    are live; any further rows are spare capacity for DP cluster births.
    ``q[j]`` is ``x_j^T H_{z_j}^{-1} x_j`` and ``logf[j]`` the log
    reconstruction factor of sample ``j``. ``log_post`` is ``log q(z)`` up
    to a z-independent constant.
    """

    z: np.ndarray
    counts: np.ndarray
    Hinv: np.ndarray
    logdet: np.ndarray
    n_updates: np.ndarray
    q: np.ndarray
    logf: np.ndarray
    log_post: float
    n_clusters: int
    low: PsdState = field(repr=False)
    epoch: int = 0

    @property
    def K(self) -> int:
        return self.n_clusters

    @property
    def capacity(self) -> int:
        return self.Hinv.shape[0]

    @property
    def H_states(self) -> list[PsdState]:
        """Per-cluster :class:`PsdState` views into the stacked caches."""
        return [
            PsdState(self.Hinv.shape[1], self.Hinv[k], float(self.logdet[k]), int(self.n_updates[k]))
            for k in range(self.K)
        ]

    def live_counts(self) -> np.ndarray:
        return self.counts[: self.K]

    def grow(self, capacity: int) -> None:
        """Enlarge the spare cluster capacity to at least ``capacity`` slots."""
        extra = capacity - self.capacity
        if extra <= 0:
            return
        D = self.Hinv.shape[1]
        self.Hinv = np.concatenate([self.Hinv, np.zeros((extra, D, D))])
        self.logdet = np.concatenate([self.logdet, np.zeros(extra)])
        self.n_updates = np.concatenate([self.n_updates, np.zeros(extra, dtype=np.int64)])
        self.counts = np.concatenate([self.counts, np.zeros(extra, dtype=np.int64)])

    def copy(self) -> "ClusterState":
        return ClusterState(
            z=self.z.copy(),
            counts=self.counts.copy(),
            Hinv=self.Hinv.copy(),
            logdet=self.logdet.copy(),
            n_updates=self.n_updates.copy(),
            q=self.q.copy(),
            logf=self.logf.copy(),
            log_post=self.log_post,
            n_clusters=self.n_clusters,
            low=self.low,
            epoch=self.epoch,
        )


@dataclass
class ChainSamples:
    samples: np.ndarray  # (M, N), 0-based indicators
    epochs_total: int
    burn_in: int

    @property
    def M(self) -> int:
        return self.samples.shape[0]


def compact_labels(z) -> np.ndarray:
    """Relabel so the used labels become ``0..K_hat-1``, preserving order."""
    _, inv = np.unique(np.asarray(z), return_inverse=True)
    return inv.astype(np.int64)


def _check_z(z, data: Dataset, hp: Hyperparams) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (data.N,):
        raise ConfigError(f"indicator vector must have length {data.N}")
    if z.min() < 0:
        raise ConfigError("indicators must be nonnegative")
    if hp.finite and z.max() >= hp.K:
        raise ConfigError(f"indicator {z.max()} out of range for K={hp.K}")
    return z


def build_H_naive(data: Dataset, z, k: int, hp: Hyperparams) -> np.ndarray:
    """``H_k`` by direct summation over samples."""
    z = np.asarray(z)
    H = np.eye(data.D)
    for j in range(data.N):
        x = data.Xt[j]
        H += (hp.alphaH if z[j] == k else hp.alphaL) * np.outer(x, x)
    return H


def _log_f_from_stats(logdetC, quadC, D: int, hp: Hyperparams):
    return -0.5 * logdetC - 0.5 * (D + hp.nu) * np.log(quadC + hp.nu * hp.lam)


def log_f_i(data: Dataset, z, i: int, hp: Hyperparams, H_state: PsdState) -> float:
    """Log reconstruction factor of sample ``i`` given the state of ``H_{z_i}``.

    Raises :class:`DowndateSingular` when the closed-form downdate breaks
    down; the caller then evaluates ``C_i`` naively.
    """
    x = data.Xt[i]
    q = float(x @ H_state.inverse @ x)
    logdetC, quadC = self_downdate_stats(q, H_state.logdet, hp.alphaH)
    return float(_log_f_from_stats(logdetC, quadC, data.D, hp))


def _log_f_i_naive(data: Dataset, z, i: int, hp: Hyperparams,
                   H: Optional[np.ndarray] = None) -> float:
    x = data.Xt[i]
    if H is None:
        H = build_H_naive(data, z, z[i], hp)
    C = H - hp.alphaH * np.outer(x, x)
    st = build_psd(C)
    quadC = float(x @ np.linalg.solve(C, x))
    return float(_log_f_from_stats(st.logdet, quadC, data.D, hp))


def log_f0_finite(counts, beta0: float, K: int) -> float:
    counts = np.asarray(counts, dtype=float)
    return float(np.sum(log_gamma(beta0 / K + counts)))


def log_f0_dp(counts, beta0: float) -> float:
    counts = np.asarray(counts, dtype=float)
    if counts.size == 0 or np.any(counts <= 0):
        raise EmptyCluster("DP prior is defined over non-empty clusters only")
    return float((counts.size - 1) * np.log(beta0) + np.sum(log_gamma(counts)))


def log_f0(counts, hp: Hyperparams) -> float:
    if hp.finite:
        return log_f0_finite(counts, hp.beta0, hp.K)
    return log_f0_dp(counts, hp.beta0)


def log_posterior_naive(data: Dataset, z, hp: Hyperparams) -> float:
    """``log q(z)`` with every ``H_k`` and ``C_i`` rebuilt and factorized afresh."""
    z = _check_z(z, data, hp)
    if hp.finite:
        counts = np.bincount(z, minlength=hp.K)
    else:
        z = compact_labels(z)
        counts = np.bincount(z)
    total = log_f0(counts, hp)
    H = {int(k): build_H_naive(data, z, k, hp) for k in np.unique(z)}
    for i in range(data.N):
        total += _log_f_i_naive(data, z, i, hp, H[int(z[i])])
    return float(total)


def low_state(data: Dataset, hp: Hyperparams) -> PsdState:
    """State of ``alphaL * X X^T + I``, the H matrix of an empty cluster."""
    return build_psd(hp.alphaL * (data.X @ data.X.T) + np.eye(data.D))


def _cluster_H(data: Dataset, z: np.ndarray, k: int, hp: Hyperparams, gram: np.ndarray) -> np.ndarray:
    Xk = data.X[:, z == k]
    return hp.alphaL * gram + (hp.alphaH - hp.alphaL) * (Xk @ Xk.T) + np.eye(data.D)


def sample_log_f(data: Dataset, hp: Hyperparams, q, logdetH):
    """Vectorized log reconstruction factors from cached ``q`` and ``log det H``."""
    logdetC, quadC = self_downdate_stats(q, logdetH, hp.alphaH)
    return _log_f_from_stats(logdetC, quadC, data.D, hp)


DP_SPARE = 8


def init_state(data: Dataset, z, hp: Hyperparams, low: Optional[PsdState] = None) -> ClusterState:
    """Build the cached :class:`ClusterState` for assignment ``z``.

    In DP mode labels are compacted so that every stored cluster is
    non-empty, and a few spare cluster slots are allocated.
    """
    z = _check_z(z, data, hp)
    if hp.finite:
        K = hp.K
    else:
        z = compact_labels(z)
        K = int(z.max()) + 1
    z = z.copy()
    cap = K if hp.finite else K + DP_SPARE
    counts = np.zeros(cap, dtype=np.int64)
    counts[:K] = np.bincount(z, minlength=K)
    gram = data.X @ data.X.T
    D = data.D
    Hinv = np.zeros((cap, D, D))
    logdet = np.zeros(cap)
    for k in range(K):
        st = build_psd(_cluster_H(data, z, k, hp, gram))
        Hinv[k] = st.inverse
        logdet[k] = st.logdet
    Xt = data.Xt
    q = np.empty(data.N)
    for k in range(K):
        idx = z == k
        q[idx] = np.sum((Xt[idx] @ Hinv[k]) * Xt[idx], axis=1)
    try:
        logf = sample_log_f(data, hp, q, logdet[z])
    except DowndateSingular:
        logf = np.array([_log_f_i_naive(data, z, i, hp) for i in range(data.N)])
    if low is None:
        low = low_state(data, hp)
    log_post = log_f0(counts[:K], hp) + float(np.sum(logf))
    return ClusterState(
        z=z,
        counts=counts,
        Hinv=Hinv,
        logdet=logdet,
        n_updates=np.zeros(cap, dtype=np.int64),
        q=q,
        logf=np.asarray(logf, dtype=float),
        log_post=float(log_post),
        n_clusters=K,
        low=low,
    )
