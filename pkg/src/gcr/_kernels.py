"""Compiled inner loops of one Gibbs / MAP coordinate move.

The arrays are the caches of :class:`gcr.model.ClusterState`; cluster slots
``0..K-1`` are live and the rest is spare capacity. ``hpv`` packs
``(beta0, nu, lam, alphaH, alphaL, K_finite)``; ``K_finite == 0`` means DP.
Kernels return a status flag instead of raising: ``False`` means a
downdate denominator fell below the pivot tolerance before anything was
mutated (detach) or after detach (score), and the caller falls back to the
naive path.
"""
import numpy as np
from numba import njit

TOL = 1e-12
RESYM = 64


@njit(cache=True)
def _log_f(q, logdetH, D, alphaH, nu, lam):
    t = 1.0 - alphaH * q
    if t <= TOL:
        return np.nan
    return -0.5 * (logdetH + np.log(t)) - 0.5 * (D + nu) * np.log(q / t + nu * lam)


@njit(cache=True)
def _dot(a, b):
    acc = 0.0
    for d in range(a.shape[0]):
        acc += a[d] * b[d]
    return acc


@njit(cache=True)
def _matvec(M, x, out):
    D = x.shape[0]
    for r in range(D):
        acc = 0.0
        for c in range(D):
            acc += M[r, c] * x[c]
        out[r] = acc


@njit(cache=True)
def _rank1(Hk, u, coef):
    D = u.shape[0]
    for r in range(D):
        ur = coef * u[r]
        for c in range(D):
            Hk[r, c] -= ur * u[c]


@njit(cache=True)
def _touch(Hinv, nupd, k):
    nupd[k] += 1
    if nupd[k] >= RESYM:
        D = Hinv.shape[1]
        for r in range(D):
            for c in range(r + 1, D):
                m = 0.5 * (Hinv[k, r, c] + Hinv[k, c, r])
                Hinv[k, r, c] = m
                Hinv[k, c, r] = m
        nupd[k] = 0


@njit(cache=True)
def detach(Xt, z, counts, Hinv, logdet, nupd, q, logf, K, hpv, i, log_post):
    """Take sample ``i`` out of its cluster.

    Returns ``(ok, K, base)`` where ``base + gain[k]`` is ``log q`` of the
    assignment with ``z_i = k``.
    """
    beta0, nu, lam, alphaH, alphaL, Kfin = hpv[0], hpv[1], hpv[2], hpv[3], hpv[4], hpv[5]
    N, D = Xt.shape
    c = alphaH - alphaL
    a = z[i]
    x = Xt[i]
    logf_i = logf[i]

    if Kfin == 0 and counts[a] == 1:
        for k in range(a, K - 1):
            Hinv[k] = Hinv[k + 1]
            logdet[k] = logdet[k + 1]
            nupd[k] = nupd[k + 1]
            counts[k] = counts[k + 1]
        K -= 1
        for j in range(N):
            if z[j] > a:
                z[j] -= 1
        z[i] = -1
        return True, K, log_post - np.log(beta0) - logf_i

    u = np.empty(D)
    _matvec(Hinv[a], x, u)
    t = 1.0 - c * _dot(x, u)
    if t <= TOL:
        return False, K, 0.0
    logdet_a = logdet[a] + np.log(t)
    # validate every member before mutating
    member_delta = 0.0
    for j in range(N):
        if j != i and z[j] == a:
            b = _dot(Xt[j], u)
            qj = q[j] + c * b * b / t
            lf = _log_f(qj, logdet_a, D, alphaH, nu, lam)
            if np.isnan(lf):
                return False, K, 0.0
    for j in range(N):
        if j != i and z[j] == a:
            b = _dot(Xt[j], u)
            q[j] = q[j] + c * b * b / t
            lf = _log_f(q[j], logdet_a, D, alphaH, nu, lam)
            member_delta += lf - logf[j]
            logf[j] = lf
    _rank1(Hinv[a], u, -c / t)
    logdet[a] = logdet_a
    _touch(Hinv, nupd, a)
    counts[a] -= 1
    if Kfin > 0:
        prior_gain = np.log(beta0 / Kfin + counts[a])
    else:
        prior_gain = np.log(counts[a] * 1.0)
    z[i] = -1
    return True, K, log_post - prior_gain + member_delta - logf_i


@njit(cache=True)
def score(Xt, z, counts, Hinv, logdet, q, logf, K, hpv, i, lowinv, lowlogdet,
          U, s, qi, logfi, q_new, logf_new, gains):
    """Gain of attaching detached sample ``i`` to each candidate.

    Fills ``gains[:n]`` and the per-candidate scratch arrays and returns
    ``(ok, n)``; in DP mode slot ``K`` is the fresh singleton.
    """
    beta0, nu, lam, alphaH, alphaL, Kfin = hpv[0], hpv[1], hpv[2], hpv[3], hpv[4], hpv[5]
    N, D = Xt.shape
    c = alphaH - alphaL
    x = Xt[i]
    logdet_new = np.empty(K)
    for k in range(K):
        _matvec(Hinv[k], x, U[k])
        qi[k] = _dot(U[k], x)
        s[k] = 1.0 + c * qi[k]
        logdet_new[k] = logdet[k] + np.log(s[k])
        t = 1.0 - alphaL * qi[k]
        if t <= TOL:
            return False, 0
        logfi[k] = -0.5 * (logdet[k] + np.log(t)) - 0.5 * (D + nu) * np.log(qi[k] / t + nu * lam)
        if Kfin > 0:
            gains[k] = np.log(beta0 / Kfin + counts[k]) + logfi[k]
        else:
            gains[k] = np.log(counts[k] * 1.0) + logfi[k]
    for j in range(N):
        if j == i:
            continue
        k = z[j]
        b = _dot(Xt[j], U[k])
        qn = q[j] - c * b * b / s[k]
        lf = _log_f(qn, logdet_new[k], D, alphaH, nu, lam)
        if np.isnan(lf):
            return False, 0
        q_new[j] = qn
        logf_new[j] = lf
        gains[k] += lf - logf[j]
    n = K
    if Kfin == 0:
        _matvec(lowinv, x, U[K])
        qi[K] = _dot(U[K], x)
        s[K] = 1.0 + c * qi[K]
        t = 1.0 - alphaL * qi[K]
        if t <= TOL:
            return False, 0
        logfi[K] = -0.5 * (lowlogdet + np.log(t)) - 0.5 * (D + nu) * np.log(qi[K] / t + nu * lam)
        gains[K] = np.log(beta0) + logfi[K]
        n = K + 1
    return True, n


@njit(cache=True)
def attach(z, counts, Hinv, logdet, nupd, q, logf, K, c, i, k, lowinv, lowlogdet,
           U, s, qi, logfi, q_new, logf_new):
    """Put detached sample ``i`` into slot ``k``; returns the new ``K``."""
    N = z.shape[0]
    if k == K:
        Hinv[k] = lowinv
        logdet[k] = lowlogdet
        nupd[k] = 0
        counts[k] = 0
        K += 1
    else:
        for j in range(N):
            if z[j] == k:
                q[j] = q_new[j]
                logf[j] = logf_new[j]
    _rank1(Hinv[k], U[k], c / s[k])
    logdet[k] += np.log(s[k])
    _touch(Hinv, nupd, k)
    q[i] = qi[k] / s[k]
    logf[i] = logfi[k]
    counts[k] += 1
    z[i] = k
    return K
