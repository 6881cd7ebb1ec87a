"""Dense SPD kernels and log-domain helpers.

Everything the collapsed posterior needs reduces to the inverse and
log-determinant of small symmetric positive-definite matrices, kept current
under rank-1 modifications (Sherman-Morrison plus the matrix determinant
lemma).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .errors import DomainError, DowndateSingular, EmptyInput, NotPositiveDefinite

PIVOT_TOL = 1e-12
RESYMMETRIZE_EVERY = 64


@dataclass
class PsdState:
    """Inverse and log-determinant of an SPD matrix ``A``.

    ``n_updates`` counts rank-1 updates applied since the last
    re-symmetrization of ``inverse``.
    """

    dim: int
    inverse: np.ndarray
    logdet: float
    n_updates: int = 0

    def copy(self) -> "PsdState":
        return PsdState(self.dim, self.inverse.copy(), self.logdet, self.n_updates)


def build_psd(A) -> PsdState:
    """Factor ``A`` by Cholesky and return its :class:`PsdState`.

    Raises
    ------
    NotPositiveDefinite
        If ``A`` is not square or a squared Cholesky pivot is ``<= 1e-12``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotPositiveDefinite(f"expected a square matrix, got shape {A.shape}")
    dim = A.shape[0]
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(L) ** 2
    if not np.all(pivots > PIVOT_TOL):
        raise NotPositiveDefinite(f"smallest pivot {pivots.min():.3g} <= {PIVOT_TOL}")
    inverse = scipy.linalg.cho_solve((L, True), np.eye(dim))
    inverse = 0.5 * (inverse + inverse.T)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return PsdState(dim, inverse, logdet)


def rank1_update(S: PsdState, v, c: float, inplace: bool = False) -> PsdState:
    """State of ``A + c v v^T`` given the state of ``A``.

    Costs O(dim^2). With ``inplace=True`` the caller-owned ``S`` is modified
    and returned.
    """
    v = np.asarray(v, dtype=float)
    u = S.inverse @ v
    t = 1.0 + c * float(v @ u)
    if not t > PIVOT_TOL:
        raise DowndateSingular(f"rank-1 denominator {t:.3g} <= {PIVOT_TOL}")
    out = S if inplace else S.copy()
    out.inverse -= (c / t) * np.outer(u, u)
    out.logdet = S.logdet + float(np.log(t))
    out.n_updates += 1
    if out.n_updates >= RESYMMETRIZE_EVERY:
        out.inverse[...] = 0.5 * (out.inverse + out.inverse.T)
        out.n_updates = 0
    return out


def quad_form(S: PsdState, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ S.inverse @ x)


def self_downdate_stats(q, logdetH, alphaH):
    """Log-determinant and quadratic form of ``C = H - alphaH x x^T``.

    Parameters
    ----------
    q : float or ndarray
        ``x^T H^{-1} x``.
    logdetH : float or ndarray
        ``log det H``.
    alphaH : float
        Weight of the removed outer product.

    Returns
    -------
    logdetC, quadC
        ``log det C`` and ``x^T C^{-1} x``. Array inputs broadcast.
    """
    t = 1.0 - alphaH * np.asarray(q, dtype=float)
    if not np.all(t > PIVOT_TOL):
        raise DowndateSingular(f"self-downdate denominator {np.min(t):.3g} <= {PIVOT_TOL}")
    logdetC = logdetH + np.log(t)
    quadC = q / t
    if np.ndim(logdetC) == 0:
        return float(logdetC), float(quadC)
    return logdetC, quadC


def log_sum_exp(values) -> float:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInput("log_sum_exp of an empty sequence")
    m = np.max(values)
    if not np.isfinite(m):
        # all -inf (or any +inf): the shift is meaningless
        return float(m)
    if values.size == 1:
        return float(values[0])
    return float(m + np.log(np.sum(np.exp(values - m))))


def log_gamma(x):
    """``ln Gamma(x)`` for positive ``x`` (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise DomainError("log_gamma requires x > 0")
    out = gammaln(arr)
    return float(out) if out.ndim == 0 else out
