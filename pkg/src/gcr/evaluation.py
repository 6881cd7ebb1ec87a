"""Accuracy, subspace-dimension diagnostics, PCA and the exact oracles.

The two oracles are deliberately independent of the cached sampler path:
``enumerate_posterior`` scores every assignment with the naive posterior,
and ``quadrature_marginal_check`` integrates the unmarginalized model
numerically for a two-sample, one-dimensional problem.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, LengthMismatch, QuadratureFailure, TooLarge
from .model import Dataset, Hyperparams, log_f0, log_posterior_naive
from .numerics import log_sum_exp

ENUMERATION_LIMIT = 2_000_000


def clustering_accuracy(pred, truth) -> float:
    """Fraction of samples matched under the best one-to-one label mapping.

    Label sets of different sizes are handled by zero-padding the
    contingency table, so unmatched predicted clusters count as errors.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{pred.shape} vs {truth.shape}")
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    n = max(p.max(), t.max()) + 1
    table = np.zeros((n, n), dtype=np.int64)
    np.add.at(table, (p, t), 1)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum()) / pred.size


@dataclass(frozen=True)
class DimStats:
    lhs: int
    rhs: int
    energy: float
    per_cluster: tuple = ()


def energy_rank(M, energy: float) -> int:
    """Smallest r whose top-r squared singular values reach ``energy`` of the total."""
    sv2 = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False) ** 2
    total = sv2.sum()
    if total == 0:
        return 0
    cum = np.cumsum(sv2)
    return int(np.searchsorted(cum, energy * total - 1e-15 * total, side="left")) + 1


def dim_stats(data: Dataset, energy: float = 0.95) -> DimStats:
    """Dimension of the pooled data versus the sum of per-cluster dimensions."""
    if data.labels is None:
        raise ConfigError("dim_stats needs ground-truth labels")
    if not 0 < energy <= 1:
        raise ConfigError("energy must lie in (0, 1]")
    per = tuple(energy_rank(data.X[:, data.labels == k], energy) for k in np.unique(data.labels))
    return DimStats(energy_rank(data.X, energy), int(sum(per)), energy, per)


def pca_reduce(data: Dataset, dims: Optional[int] = None, energy: Optional[float] = None) -> Dataset:
    """Center the samples and project onto the leading principal directions.

    Exactly one of ``dims`` or ``energy`` selects the output dimension.
    """
    if (dims is None) == (energy is None):
        raise ConfigError("give exactly one of dims or energy")
    Xc = data.X - data.X.mean(axis=1, keepdims=True)
    U, sv, _ = np.linalg.svd(Xc, full_matrices=False)
    if dims is None:
        r = energy_rank(Xc, energy)
    else:
        r = int(dims)
        if not 1 <= r <= data.D:
            raise ConfigError(f"dims must lie in 1..{data.D}")
    return Dataset(U[:, :r].T @ Xc, data.labels)


@dataclass
class PosteriorTable:
    assignments: np.ndarray  # (K**N, N)
    log_prob: np.ndarray  # normalized
    coassignment: np.ndarray  # (N, N)
    map_z: np.ndarray


def enumerate_posterior(data: Dataset, hp: Hyperparams) -> PosteriorTable:
    """Exact posterior over all ``K**N`` labelled assignments (finite mode)."""
    if not hp.finite:
        raise ConfigError("enumeration is implemented for finite mode")
    if hp.K ** data.N > ENUMERATION_LIMIT:
        raise TooLarge(f"K**N = {hp.K ** data.N} exceeds {ENUMERATION_LIMIT}")
    Z = np.array(list(itertools.product(range(hp.K), repeat=data.N)), dtype=np.int64)
    logq = np.array([log_posterior_naive(data, z, hp) for z in Z])
    logp = logq - log_sum_exp(logq)
    p = np.exp(logp)
    co = np.zeros((data.N, data.N))
    for z, w in zip(Z, p):
        co += w * (z[:, None] == z[None, :])
    return PosteriorTable(Z, logp, co, Z[int(np.argmax(logq))].copy())


def _sample_marginal(xi: float, xj: float, alpha: float, nu: float, lam: float,
                     epsrel: float) -> float:
    """Integral over (w, sigma^2) of the reconstruction factor of one sample.

    Outer variable is ``log sigma^2``; the inner ``w`` range spans both the
    prior (+-12 sd) and the conditional posterior (+-12 sd) of ``w``.
    """
    shape, scale = nu / 2.0, nu * lam / 2.0
    log_ig_norm = shape * math.log(scale) - math.lgamma(shape)
    log_2pi = math.log(2.0 * math.pi)
    prec = 1.0 / alpha + xj * xj
    mean_post = xi * xj / prec

    def inner(v):
        s2 = math.exp(v)
        sd_prior = math.sqrt(s2 * alpha)
        sd_post = math.sqrt(s2 / prec)
        lo = min(-12 * sd_prior, mean_post - 12 * sd_post)
        hi = max(12 * sd_prior, mean_post + 12 * sd_post)
        # normalizers of N(xi; w xj, s2) and N(w; 0, alpha s2), plus the
        # inverse-gamma density in s2 times the Jacobian ds2/dv = s2
        const = -log_2pi - 0.5 * math.log(alpha) - v + log_ig_norm - shape * v - scale / s2

        def f(w):
            r = xi - w * xj
            return math.exp(const - 0.5 * (r * r + w * w / alpha) / s2)

        val, _ = integrate.quad(f, lo, hi, points=[mean_post], epsabs=0.0,
                                epsrel=epsrel * 1e-2, limit=200)
        return val

    mode = math.log(scale / (shape + 1.0))
    edges = mode + np.array([-60.0, -20.0, -8.0, -2.0, 2.0, 8.0, 20.0, 60.0])
    total, _ = integrate.quad(inner, edges[0], edges[-1], points=edges[1:-1], epsabs=0.0,
                              epsrel=epsrel * 1e-2, limit=500)
    return total


def quadrature_marginal_check(x, hp: Hyperparams, epsrel: float = 1e-6):
    """Posterior ratio ``q([1,1]) / q([1,2])`` two ways for ``D = 1``, ``N = 2``.

    Returns ``(ratio_closed_form, ratio_quadrature)``. The quadrature path
    integrates the Gaussian likelihood, the slab/spike weight prior and the
    inverse-Gamma noise prior numerically and shares only the count factor
    with the closed form.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != 2 or not hp.finite or hp.K != 2:
        raise ConfigError("quadrature check needs two scalar samples and finite K=2")
    data = Dataset(x.reshape(1, 2))
    same, split = np.array([0, 0]), np.array([0, 1])
    ratio_eq = math.exp(log_posterior_naive(data, same, hp) - log_posterior_naive(data, split, hp))

    prior_ratio = math.exp(log_f0(np.bincount(same, minlength=2), hp)
                           - log_f0(np.bincount(split, minlength=2), hp))
    like = 1.0
    for i, j in ((0, 1), (1, 0)):
        num = _sample_marginal(x[i], x[j], hp.alphaH, hp.nu, hp.lam, epsrel)
        den = _sample_marginal(x[i], x[j], hp.alphaL, hp.nu, hp.lam, epsrel)
        if not (num > 0 and den > 0 and np.isfinite(num) and np.isfinite(den)):
            raise QuadratureFailure(f"degenerate marginal for sample {i}: {num}, {den}")
        like *= num / den
    return ratio_eq, prior_ratio * like
