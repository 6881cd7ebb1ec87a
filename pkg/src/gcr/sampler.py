"""Collapsed Gibbs sampling and MAP coordinate ascent over indicators.

One coordinate move is done in three steps:

1. detach sample ``i``: ``H_a -= c x_i x_i^T`` for its cluster ``a`` and the
   cached terms of ``a``'s members are refreshed (Sherman-Morrison);
2. score every candidate cluster ``k`` against the detached state. Adding
   ``i`` to ``k`` changes ``log det H_k``, every member's quadratic form
   through the cross term ``x_j^T H_k^{-1} x_i``, the count prior and the
   factor of ``i`` itself. All of these are O(D^2 + n_k D) per candidate;
3. attach ``i`` to the chosen cluster with one more rank-1 update.

Here ``c = alphaH - alphaL``. Candidate scores are exact differences of
``log q(z)``, so the Gibbs conditional matches the naive posterior.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels, seeding
from .errors import ConfigError, DowndateSingular, NonConvergence
from .model import (
    ChainSamples,
    ClusterState,
    Dataset,
    Hyperparams,
    compact_labels,
    init_state,
    log_posterior_naive,
)
from .numerics import log_sum_exp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainConfig:
    epochs: int = 500
    retain: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.retain < 1:
            raise ConfigError("epochs and retain must be positive")
        if self.retain > self.epochs:
            raise ConfigError("retain must not exceed epochs")


def _hp_vector(hp: Hyperparams) -> np.ndarray:
    return np.array([hp.beta0, hp.nu, hp.lam, hp.alphaH, hp.alphaL, hp.K if hp.finite else 0],
                    dtype=float)


class _Workspace:
    """Scratch buffers reused across the coordinate moves of one state."""

    def __init__(self, state: ClusterState, data: Dataset, hp: Hyperparams):
        self.hpv = _hp_vector(hp)
        self.c = hp.alphaH - hp.alphaL
        self.q_new = np.empty(data.N)
        self.logf_new = np.empty(data.N)
        self._size = 0
        self.fit(state, data.D)

    def fit(self, state: ClusterState, D: int) -> None:
        size = state.capacity + 1
        if size > self._size:
            self.U = np.empty((size, D))
            self.s = np.empty(size)
            self.qi = np.empty(size)
            self.logfi = np.empty(size)
            self.gains = np.empty(size)
            self._size = size


def _detach(state: ClusterState, data: Dataset, ws: _Workspace, i: int) -> float:
    """Remove sample ``i`` from its cluster; return ``log q`` of the rest.

    ``base + gain[k]`` is ``log q`` of the assignment with ``z_i = k``.
    """
    ok, K, base = _kernels.detach(
        data.Xt, state.z, state.counts, state.Hinv, state.logdet, state.n_updates,
        state.q, state.logf, state.n_clusters, ws.hpv, i, state.log_post)
    if not ok:
        raise DowndateSingular(f"detaching sample {i}")
    state.n_clusters = int(K)
    return float(base)


def _score(state: ClusterState, data: Dataset, ws: _Workspace, i: int) -> np.ndarray:
    """Gains of every candidate for the detached sample ``i`` (a view into ``ws``)."""
    if ws.hpv[5] == 0 and state.capacity <= state.K:
        state.grow(2 * state.capacity + 1)
    ws.fit(state, data.D)
    ok, n = _kernels.score(
        data.Xt, state.z, state.counts, state.Hinv, state.logdet, state.q, state.logf,
        state.n_clusters, ws.hpv, i, state.low.inverse, state.low.logdet,
        ws.U, ws.s, ws.qi, ws.logfi, ws.q_new, ws.logf_new, ws.gains)
    if not ok:
        raise DowndateSingular(f"scoring candidates for sample {i}")
    return ws.gains[:n]


def _attach(state: ClusterState, ws: _Workspace, i: int, k: int, base: float, gain: float) -> None:
    state.n_clusters = int(_kernels.attach(
        state.z, state.counts, state.Hinv, state.logdet, state.n_updates, state.q, state.logf,
        state.n_clusters, ws.c, i, k, state.low.inverse, state.low.logdet,
        ws.U, ws.s, ws.qi, ws.logfi, ws.q_new, ws.logf_new))
    state.log_post = float(base + gain)


def refresh(state: ClusterState, data: Dataset, hp: Hyperparams) -> ClusterState:
    """Rebuild every cache of ``state`` in place from its indicators."""
    fresh = init_state(data, state.z, hp, low=state.low)
    fresh.epoch = state.epoch
    state.__dict__.update(fresh.__dict__)
    return state


def _candidate_assignments(z: np.ndarray, i: int, hp: Hyperparams) -> list[np.ndarray]:
    """Full indicator vectors for each candidate, in logit order."""
    z = np.asarray(z)
    if hp.finite:
        labels = range(hp.K)
    else:
        rest = np.delete(z, i)
        labels = list(np.unique(rest)) + [int(z.max()) + 1]
    out = []
    for k in labels:
        zk = z.copy()
        zk[i] = k
        out.append(zk if hp.finite else compact_labels(zk))
    return out


def _naive_logits(data: Dataset, hp: Hyperparams, z: np.ndarray, i: int):
    cands = _candidate_assignments(z, i, hp)
    return np.array([log_posterior_naive(data, zk, hp) for zk in cands]), cands


def conditional_logits(state: ClusterState, data: Dataset, hp: Hyperparams, i: int,
                       return_candidates: bool = False, fallback: bool = True):
    """Unnormalized ``log p(z_i = k | z_-i, X)`` for every candidate ``k``.

    Finite mode returns ``K`` values indexed by cluster label. DP mode
    returns one value per non-empty cluster of ``z_-i`` (current label
    order, with ``i``'s own cluster dropped if ``i`` is a singleton) followed
    by one for a fresh singleton. Entries equal ``log q`` of the
    corresponding full assignment up to a shared constant; ``state`` is not
    modified. With ``fallback=False`` a failed rank-1 step raises instead of
    silently switching to the naive path.
    """
    z_before = state.z.copy()
    st = state.copy()
    try:
        ws = _Workspace(st, data, hp)
        base = _detach(st, data, ws, i)
        logits = base + _score(st, data, ws, i)
    except DowndateSingular:
        if not fallback:
            raise
        log.warning("cached conditional for sample %d fell back to naive evaluation", i)
        logits, _ = _naive_logits(data, hp, z_before, i)
    if return_candidates:
        return logits, _candidate_assignments(z_before, i, hp)
    return logits


def _categorical(logits: np.ndarray, rng: np.random.Generator) -> int:
    p = np.exp(logits - log_sum_exp(logits))
    cdf = np.cumsum(p)
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(k, len(logits) - 1)


def _move(state: ClusterState, data: Dataset, hp: Hyperparams, ws: _Workspace, i: int,
          choose: Callable[[np.ndarray, int], int]) -> None:
    """Detach ``i``, score candidates, attach to ``choose(gains, current)``."""
    z_before = state.z.copy()
    a = int(z_before[i])
    singleton = not hp.finite and state.counts[a] == 1
    try:
        base = _detach(state, data, ws, i)
        gains = _score(state, data, ws, i)
    except DowndateSingular:
        log.warning("rank-1 path failed at sample %d; rebuilding from scratch", i)
        logits, cands = _naive_logits(data, hp, z_before, i)
        here = next(j for j, zk in enumerate(cands)
                    if np.array_equal(compact_labels(zk), compact_labels(z_before)))
        k = choose(logits - logits[here], here)
        state.z = np.array(cands[k], dtype=np.int64)
        refresh(state, data, hp)
        ws.fit(state, data.D)
        return
    # a detached singleton's slot is gone; staying means "new cluster"
    current = state.K if singleton else a
    k = choose(gains, current)
    _attach(state, ws, i, k, base, gains[k])


def gibbs_sweep(state: ClusterState, data: Dataset, hp: Hyperparams,
                rng: np.random.Generator) -> ClusterState:
    """One systematic-scan epoch over ``i = 0..N-1``; mutates ``state``."""
    ws = _Workspace(state, data, hp)
    for i in range(data.N):
        _move(state, data, hp, ws, i, lambda gains, current: _categorical(gains, rng))
    state.epoch += 1
    return state


def gibbs_sweep_naive(z, data: Dataset, hp: Hyperparams, rng: np.random.Generator) -> np.ndarray:
    """Reference epoch that rescores every candidate with the naive posterior.

    Consumes the random stream exactly like :func:`gibbs_sweep`, so from the
    same state and generator both produce the same indicators.
    """
    z = np.array(z, dtype=np.int64)
    for i in range(data.N):
        logits, cands = _naive_logits(data, hp, z, i)
        z = np.array(cands[_categorical(logits, rng)], dtype=np.int64)
    return z


def run_chain(data: Dataset, hp: Hyperparams, cfg: ChainConfig, init_z,
              callback: Optional[Callable[[int, ClusterState], None]] = None) -> ChainSamples:
    """Run ``cfg.epochs`` sweeps from ``init_z`` and keep the last ``cfg.retain``.

    Caches are rebuilt from the indicators before every sweep after the
    first, which bounds floating-point drift of the rank-1 updates.
    """
    rng = seeding.stream(cfg.seed, "chain")
    state = init_state(data, init_z, hp)
    burn_in = cfg.epochs - cfg.retain
    samples = np.empty((cfg.retain, data.N), dtype=np.int64)
    for epoch in range(cfg.epochs):
        if epoch:
            refresh(state, data, hp)
        gibbs_sweep(state, data, hp, rng)
        if epoch >= burn_in:
            samples[epoch - burn_in] = state.z
        if callback is not None:
            callback(epoch, state)
    return ChainSamples(samples=samples, epochs_total=cfg.epochs, burn_in=burn_in)


def map_ascent(data: Dataset, hp: Hyperparams, start_z, max_sweeps: int = 1000,
               rtol: float = 1e-9, trace: Optional[list] = None) -> np.ndarray:
    """Coordinate ascent on ``log q(z)`` from ``start_z`` to a local maximum.

    A coordinate moves only when its best candidate beats the current
    cluster by more than ``rtol * max(1, |gain|)``; among equal maxima the
    smallest label wins. With ``trace`` given, the tracked ``log q`` after
    every coordinate update is appended to it.
    """
    if not hp.finite:
        raise ConfigError("MAP ascent is defined for finite mode only")
    state = init_state(data, start_z, hp)
    changed = False

    def choose(gains, current):
        nonlocal changed
        best = int(np.argmax(gains))
        if gains[best] > gains[current] + rtol * max(1.0, abs(gains[current])):
            changed = True
            return best
        return current

    ws = _Workspace(state, data, hp)
    for _ in range(max_sweeps):
        changed = False
        for i in range(data.N):
            _move(state, data, hp, ws, i, choose)
            if trace is not None:
                trace.append(state.log_post)
        if not changed:
            return state.z.copy()
        refresh(state, data, hp)
    raise NonConvergence(f"no fixed point after {max_sweeps} sweeps")
