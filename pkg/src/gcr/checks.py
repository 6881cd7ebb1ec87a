"""Randomized oracle checks and the epoch benchmark.

Each check returns a small report dict holding the worst observed deviation,
the tolerance it is judged against, and a ``passed`` flag. The CLI and
the acceptance tests share these routines.
"""
from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from . import seeding
from .affinity import probabilistic_affinity
from .evaluation import dim_stats, enumerate_posterior, quadrature_marginal_check
from .model import DP, FINITE, Dataset, Hyperparams, compact_labels, init_state, log_posterior_naive
from .numerics import build_psd, rank1_update
from .sampler import (
    ChainConfig,
    _candidate_assignments,
    conditional_logits,
    gibbs_sweep,
    gibbs_sweep_naive,
    map_ascent,
    run_chain,
)
from .synthdata import SynthSpec, generate

LOGIT_TOL = 1e-8
COASSIGN_TOL = 0.03
QUAD_TOL = 1e-4
LOGDET_RTOL = 1e-8
INVERSE_ATOL = 1e-6


def _report(name: str, value: float, tol: float, **extra) -> dict:
    return {"check": name, "max_deviation": float(value), "tolerance": tol,
            "passed": bool(value <= tol), **extra}


def random_hyperparams(rng: np.random.Generator, mode: str, K: int) -> Hyperparams:
    alphaH = float(np.exp(rng.uniform(np.log(0.05), np.log(2.0))))
    return Hyperparams(
        beta0=float(np.exp(rng.uniform(np.log(0.2), np.log(5.0)))),
        nu=float(rng.uniform(0.5, 6.0)),
        lam=float(np.exp(rng.uniform(np.log(0.05), np.log(2.0)))),
        alphaH=alphaH,
        alphaL=alphaH * float(np.exp(rng.uniform(np.log(1e-4), np.log(0.5)))),
        mode=mode,
        K=K,
    )


def _logit_deviation(state, data, hp, i) -> float:
    cached = conditional_logits(state, data, hp, i, fallback=False)
    naive = np.array([log_posterior_naive(data, zk, hp)
                      for zk in _candidate_assignments(state.z, i, hp)])
    if cached.shape != naive.shape:
        return np.inf
    return float(np.max(np.abs((cached - cached[0]) - (naive - naive[0]))))


def logit_exactness(n_instances: int = 200, seed: int = 0, max_N: int = 8, max_D: int = 4,
                    max_K: int = 3, sweeps: int = 2) -> dict:
    """Cached Gibbs conditionals versus naive posterior differences.

    Every conditional of every sample is compared on the initial state and
    again after each of ``sweeps`` rank-1-updated epochs; instances
    alternate between finite and DP mode.
    """
    rng = seeding.stream(seed, "bench", 1)
    worst = 0.0
    for t in range(n_instances):
        N = int(rng.integers(2, max_N + 1))
        D = int(rng.integers(1, max_D + 1))
        K = int(rng.integers(1, max_K + 1))
        mode = FINITE if t % 2 == 0 else DP
        hp = random_hyperparams(rng, mode, K)
        data = Dataset(rng.standard_normal((D, N)) * rng.uniform(0.3, 3.0))
        z = rng.integers(0, K, N)
        if mode == DP:
            z = compact_labels(z)
        state = init_state(data, z, hp)
        for sweep in range(sweeps + 1):
            for i in range(N):
                worst = max(worst, _logit_deviation(state, data, hp, i))
            if sweep < sweeps:
                gibbs_sweep(state, data, hp, rng)
    return _report("logit_exactness", worst, LOGIT_TOL, instances=n_instances)


def enumeration_instance(seed: int = 0):
    """A 7-sample planar problem with a genuinely uncertain posterior."""
    rng = seeding.stream(seed, "bench", 2)
    angles = np.array([0.1, 0.25, 0.3, 1.3, 1.45, 1.6, 0.8])
    r = rng.uniform(0.5, 1.5, angles.size) * rng.choice([-1.0, 1.0], angles.size)
    X = np.vstack([r * np.cos(angles), r * np.sin(angles)]) + 0.15 * rng.standard_normal((2, 7))
    hp = Hyperparams(beta0=1.0, nu=2.0, lam=0.5, alphaH=0.5, alphaL=0.05, K=2)
    return Dataset(X), hp


def chain_vs_enumeration(seed: int = 0, burn_in: int = 2000, retain: int = 20000) -> dict:
    data, hp = enumeration_instance(seed)
    exact = enumerate_posterior(data, hp).coassignment
    cfg = ChainConfig(epochs=burn_in + retain, retain=retain, seed=seed)
    G = probabilistic_affinity(run_chain(data, hp, cfg, np.zeros(data.N, dtype=np.int64))).values
    off = ~np.eye(data.N, dtype=bool)
    return _report("chain_vs_enumeration", float(np.max(np.abs(G - exact))), COASSIGN_TOL,
                   min_exact_offdiag=float(exact[off].min()),
                   max_exact_offdiag=float(exact[off].max()))


def quadrature_draws(n_draws: int = 20, seed: int = 0) -> dict:
    rng = seeding.stream(seed, "bench", 3)
    worst = 0.0
    for _ in range(n_draws):
        x = rng.uniform(-2.0, 2.0, 2)
        hp = random_hyperparams(rng, FINITE, 2)
        r_eq, r_quad = quadrature_marginal_check(x, hp)
        worst = max(worst, abs(r_eq - r_quad) / abs(r_eq))
    return _report("quadrature", worst, QUAD_TOL, draws=n_draws)


def rank1_trials(n_trials: int = 1000, seed: int = 0, steps: int = 3) -> dict:
    """Chains of rank-1 updates/downdates against fresh factorizations."""
    rng = seeding.stream(seed, "bench", 4)
    worst_logdet = worst_inv = 0.0
    for _ in range(n_trials):
        D = int(rng.integers(1, 9))
        B = rng.standard_normal((D, D + 2))
        A = B @ B.T + 0.5 * np.eye(D)
        S = build_psd(A)
        for _ in range(steps):
            v = rng.standard_normal(D)
            c = float(rng.uniform(0.05, 2.0))
            if rng.random() < 0.5:
                # downdate, kept inside the positive-definite cone: 1 + c v^T A^{-1} v > 0.1
                c = -float(rng.uniform(0.05, 0.9)) / float(v @ S.inverse @ v)
            A = A + c * np.outer(v, v)
            S = rank1_update(S, v, c)
            fresh = build_psd(A)
            worst_logdet = max(worst_logdet,
                               abs(S.logdet - fresh.logdet) / max(1.0, abs(fresh.logdet)))
            worst_inv = max(worst_inv, float(np.max(np.abs(S.inverse - fresh.inverse))))
    rep = _report("rank1", worst_logdet, LOGDET_RTOL, trials=n_trials,
                  max_inverse_abs_error=worst_inv, inverse_tolerance=INVERSE_ATOL)
    rep["passed"] = bool(worst_logdet <= LOGDET_RTOL and worst_inv <= INVERSE_ATOL)
    return rep


def independence_diagnostic(Ks: Sequence[int] = range(2, 9), seed: int = 0,
                            energy: float = 1 - 1e-9) -> dict:
    rows = []
    for K in Ks:
        st = dim_stats(generate(SynthSpec(K=K, seed=seed)), energy)
        rows.append({"K": int(K), "lhs": st.lhs, "rhs": st.rhs})
    ok = all(r["lhs"] == 2 and r["rhs"] == r["K"] for r in rows)
    return {"check": "independence_diagnostic", "rows": rows, "passed": ok}


def map_ascent_property(n_instances: int = 100, seed: int = 0, tol: float = 1e-8) -> dict:
    """Monotone tracked ``log q`` and a naive-verified coordinate-wise maximum."""
    rng = seeding.stream(seed, "bench", 5)
    worst_drop = 0.0
    worst_gap = -np.inf
    for _ in range(n_instances):
        N = int(rng.integers(3, 13))
        D = int(rng.integers(1, 6))
        K = int(rng.integers(2, 5))
        hp = random_hyperparams(rng, FINITE, K)
        data = Dataset(rng.standard_normal((D, N)))
        trace = []
        z = map_ascent(data, hp, rng.integers(0, K, N), trace=trace)
        drops = -np.diff(np.asarray(trace))
        scale = max(1.0, float(np.max(np.abs(trace))))
        worst_drop = max(worst_drop, float(drops.max(initial=0.0)) / scale)
        here = log_posterior_naive(data, z, hp)
        for i in range(N):
            for k in range(K):
                zk = z.copy()
                zk[i] = k
                gap = (log_posterior_naive(data, zk, hp) - here) / max(1.0, abs(here))
                worst_gap = max(worst_gap, gap)
    rep = _report("map_ascent", max(worst_drop, worst_gap, 0.0), tol, instances=n_instances,
                  max_relative_drop=worst_drop, max_relative_improvement_left=float(worst_gap))
    return rep


def bench_epochs(N_values: Sequence[int], D: int = 50, K: int = 4, seed: int = 0,
                 naive_max_N: int = 200, repeats: int = 1) -> list[dict]:
    """Wall time of one cached and (up to ``naive_max_N``) one naive epoch per N."""
    hp = Hyperparams(K=K)
    # load the compiled kernels before anything is timed
    warm = generate(SynthSpec(K=2, n_per_cluster=3, ambient_dim=D, seed=seed))
    gibbs_sweep(init_state(warm, warm.labels, hp.replace(K=2)), warm, hp.replace(K=2),
                seeding.stream(seed, "bench", 7))
    rows = []
    for N in sorted(set(int(n) for n in N_values)):
        n_per = max(2, -(-N // K))
        data = generate(SynthSpec(K=K, n_per_cluster=n_per, ambient_dim=D, seed=seed))
        data = Dataset(data.X[:, :N], data.labels[:N])
        z = data.labels.copy()
        cached = []
        for r in range(repeats):
            state = init_state(data, z, hp)
            rng = seeding.stream(seed, "bench", 6, N, r)
            t0 = time.perf_counter()
            gibbs_sweep(state, data, hp, rng)
            cached.append(time.perf_counter() - t0)
        naive = None
        if N <= naive_max_N:
            rng = seeding.stream(seed, "bench", 6, N, 0)
            t0 = time.perf_counter()
            gibbs_sweep_naive(z, data, hp, rng)
            naive = time.perf_counter() - t0
        rows.append({"N": N, "D": D, "K": K, "cached_s": min(cached), "naive_s": naive})
    return rows
