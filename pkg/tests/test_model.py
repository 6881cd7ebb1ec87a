import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gcr.errors import ConfigError, EmptyCluster
from gcr.model import (
    DP,
    FINITE,
    Dataset,
    Hyperparams,
    _log_f_i_naive,
    build_H_naive,
    compact_labels,
    init_state,
    log_f0_dp,
    log_f0_finite,
    log_f_i,
    log_posterior_naive,
)
from gcr.numerics import build_psd, log_gamma

# four fixed samples in the plane, columns of X
X4 = np.array([[0.3, -1.2, 0.7, 2.0], [1.1, 0.4, -0.5, 0.25]])


class TestDataset:
    def test_shapes(self):
        d = Dataset(X4, [0, 0, 1, 1])
        assert (d.D, d.N) == (2, 4)
        np.testing.assert_array_equal(d.Xt, X4.T)

    def test_immutable(self):
        d = Dataset(X4)
        with pytest.raises(ValueError):
            d.X[0, 0] = 1.0

    @pytest.mark.parametrize("X", [np.ones((2, 1)), np.ones((0, 3)), np.ones(3),
                                   np.array([[1.0, np.nan]])])
    def test_invalid(self, X):
        with pytest.raises(ConfigError):
            Dataset(X)

    def test_bad_labels(self):
        with pytest.raises(ConfigError):
            Dataset(X4, [0, 1])
        with pytest.raises(ConfigError):
            Dataset(X4, [0, -1, 0, 0])


class TestHyperparams:
    def test_defaults(self):
        hp = Hyperparams()
        assert hp.beta0 == 1.0
        assert hp.lam * hp.alphaH == pytest.approx(0.1)
        assert hp.alphaH / hp.alphaL == pytest.approx(1e4)
        assert hp.finite

    @pytest.mark.parametrize("kw", [dict(alphaL=0.2), dict(alphaL=-1e-3), dict(nu=0.0),
                                    dict(beta0=-1.0), dict(K=0), dict(mode="other")])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            Hyperparams(**kw)

    def test_equal_alphas_allowed(self):
        assert Hyperparams(alphaH=0.1, alphaL=0.1).alphaL == 0.1

    def test_replace(self):
        assert Hyperparams().replace(mode=DP).mode == DP


class TestBuildH:
    def test_single_term(self, rng):
        # one sample plus a zero column: only the first sample contributes
        x = rng.standard_normal(3)
        d = Dataset(np.column_stack([x, np.zeros(3)]))
        hp = Hyperparams(alphaH=0.7, alphaL=0.01)
        np.testing.assert_allclose(build_H_naive(d, [0, 1], 0, hp),
                                   0.7 * np.outer(x, x) + np.eye(3), atol=1e-15)

    def test_alpha_collapse(self, rng):
        d = Dataset(rng.standard_normal((3, 5)))
        hp = Hyperparams(alphaH=0.5, alphaL=0.5)
        for k in range(2):
            np.testing.assert_allclose(build_H_naive(d, [0, 1, 0, 1, 1], k, hp),
                                       0.5 * d.X @ d.X.T + np.eye(3), rtol=1e-12)

    def test_two_form_decomposition(self, rng):
        d = Dataset(rng.standard_normal((2, 3)))
        hp = Hyperparams(alphaH=0.9, alphaL=0.05, K=2)
        z = np.array([0, 1, 0])
        for k in range(2):
            Xk = d.X[:, z == k]
            expected = hp.alphaL * d.X @ d.X.T + (hp.alphaH - hp.alphaL) * Xk @ Xk.T + np.eye(2)
            assert np.max(np.abs(build_H_naive(d, z, k, hp) - expected)) < 1e-12


class TestLogF:
    def test_one_dimensional_closed_form(self):
        a, nu, lam = 1.7, 2.0, 0.3
        d = Dataset(np.array([[a, 0.0]]))
        hp = Hyperparams(nu=nu, lam=lam, alphaH=0.4, alphaL=0.0)
        z = [0, 1]
        H = build_psd(build_H_naive(d, z, 0, hp))
        expected = -0.5 * (1 + nu) * math.log(a * a + nu * lam)
        assert log_f_i(d, z, 0, hp, H) == pytest.approx(expected, rel=1e-12)

    def test_zero_sample(self, rng):
        X = rng.standard_normal((3, 4))
        X[:, 2] = 0.0
        d = Dataset(X)
        hp = Hyperparams(nu=1.5, lam=0.2, alphaH=0.6, alphaL=0.01, K=2)
        z = [0, 1, 0, 0]
        H = build_psd(build_H_naive(d, z, 0, hp))
        expected = -0.5 * H.logdet - 0.5 * (3 + 1.5) * math.log(1.5 * 0.2)
        assert log_f_i(d, z, 2, hp, H) == pytest.approx(expected, rel=1e-12)

    def test_matches_naive(self, rng):
        for _ in range(30):
            D, N, K = int(rng.integers(1, 5)), int(rng.integers(2, 8)), int(rng.integers(1, 4))
            d = Dataset(rng.standard_normal((D, N)))
            hp = Hyperparams(nu=float(rng.uniform(0.5, 5)), lam=float(rng.uniform(0.1, 2)),
                             alphaH=float(rng.uniform(0.1, 2)), alphaL=0.01, K=K)
            z = rng.integers(0, K, N)
            for i in range(N):
                H = build_psd(build_H_naive(d, z, z[i], hp))
                assert log_f_i(d, z, i, hp, H) == pytest.approx(_log_f_i_naive(d, z, i, hp),
                                                                abs=1e-9)

    def test_is_student_t_up_to_a_constant(self, rng):
        """Integrating out the weights and the noise scale gives a multivariate t.

        ``x_i`` given the other samples is t with ``nu`` degrees of freedom and
        shape ``lam * C_i``; ``log f_i`` must differ from that log density by a
        constant that does not depend on the assignment or the sample.
        """
        D, N, K = 3, 6, 3
        d = Dataset(rng.standard_normal((D, N)))
        hp = Hyperparams(nu=2.5, lam=0.4, alphaH=0.8, alphaL=0.02, K=K)
        offsets = []
        for _ in range(10):
            z = rng.integers(0, K, N)
            for i in range(N):
                x = d.Xt[i]
                C = build_H_naive(d, z, z[i], hp) - hp.alphaH * np.outer(x, x)
                ref = stats.multivariate_t(loc=np.zeros(D), shape=hp.lam * C, df=hp.nu).logpdf(x)
                offsets.append(_log_f_i_naive(d, z, i, hp) - ref)
        assert np.ptp(offsets) < 1e-9


class TestPriorTerms:
    def test_finite_empty(self):
        assert log_f0_finite([0, 0], 2.0, 2) == pytest.approx(0.0, abs=1e-15)

    def test_finite_single_cluster(self):
        assert log_f0_finite([7], 1.3, 1) == pytest.approx(log_gamma(1.3 + 7))

    def test_finite_reference(self):
        # 2 * lgamma(1.5), mpmath at 50 digits
        assert log_f0_finite([1, 1], 1.0, 2) == pytest.approx(-0.24156447527049044469, abs=1e-14)

    def test_dp_one_cluster(self):
        assert log_f0_dp([9], 0.3) == pytest.approx(log_gamma(9))

    def test_dp_singletons(self):
        assert log_f0_dp([1] * 6, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_dp_reference(self):
        # ln 0.5 + lgamma(2) + lgamma(3) = ln 0.5 + ln 2
        assert log_f0_dp([2, 3], 0.5) == pytest.approx(0.0, abs=1e-14)

    def test_dp_rejects_empty(self):
        with pytest.raises(EmptyCluster):
            log_f0_dp([2, 0], 1.0)


class TestPosterior:
    # log q at 50 digits from an independent mpmath evaluation of the formula
    @pytest.mark.parametrize("z,hp,ref", [
        ([0, 0, 1, 1], Hyperparams(), -5.569025297165804299),
        ([0, 1, 0, 1], Hyperparams(), -5.3264872300105608021),
        ([0, 0, 1, 2], Hyperparams(beta0=1.5, nu=2, lam=0.5, alphaH=0.8, alphaL=0.01, K=3),
         -8.6185398333569306964),
        ([0, 0, 1, 2], Hyperparams(beta0=1.5, nu=2, lam=0.5, alphaH=0.8, alphaL=0.01, mode=DP),
         -7.8507280123430306474),
    ])
    def test_frozen_reference(self, z, hp, ref):
        d = Dataset(X4)
        assert log_posterior_naive(d, z, hp) == pytest.approx(ref, abs=1e-11)
        assert init_state(d, z, hp).log_post == pytest.approx(ref, abs=1e-11)

    def test_alpha_collapse(self, rng):
        d = Dataset(rng.standard_normal((3, 6)))
        a = 0.4
        hp = Hyperparams(alphaH=a, alphaL=a, K=3)
        base = None
        for _ in range(10):
            z = rng.integers(0, 3, 6)
            diff = log_posterior_naive(d, z, hp) - log_f0_finite(np.bincount(z, minlength=3),
                                                                 hp.beta0, 3)
            base = diff if base is None else base
            assert diff == pytest.approx(base, abs=1e-9)

    @given(seed=st.integers(0, 2**32 - 1))
    def test_label_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        K = 3
        d = Dataset(rng.standard_normal((2, 6)))
        hp = Hyperparams(nu=2.0, lam=0.5, alphaH=1.0, alphaL=0.01, K=K)
        z = rng.integers(0, K, 6)
        perm = rng.permutation(K)
        assert log_posterior_naive(d, perm[z], hp) == pytest.approx(
            log_posterior_naive(d, z, hp), abs=1e-10)

    def test_dp_ignores_label_values(self, rng):
        d = Dataset(rng.standard_normal((2, 5)))
        hp = Hyperparams(mode=DP)
        assert log_posterior_naive(d, [4, 4, 9, 0, 9], hp) == pytest.approx(
            log_posterior_naive(d, [0, 0, 1, 2, 1], hp), abs=1e-12)

    def test_scaling_smoke(self, rng):
        d = Dataset(rng.standard_normal((3, 5)))
        z = [0, 1, 0, 1, 1]
        v1 = log_posterior_naive(d, z, Hyperparams())
        v2 = log_posterior_naive(Dataset(3.0 * d.X), z, Hyperparams())
        assert np.isfinite(v1) and np.isfinite(v2) and v1 != v2

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            log_posterior_naive(Dataset(X4), [0, 1, 2, 0], Hyperparams(K=2))


class TestInitState:
    @pytest.mark.parametrize("mode", [FINITE, DP])
    def test_matches_naive(self, rng, mode):
        for _ in range(20):
            D, N, K = int(rng.integers(1, 5)), int(rng.integers(2, 9)), int(rng.integers(1, 4))
            d = Dataset(rng.standard_normal((D, N)))
            hp = Hyperparams(nu=2.0, lam=0.3, alphaH=0.9, alphaL=0.05, mode=mode, K=K)
            z = rng.integers(0, K, N)
            st_ = init_state(d, z, hp)
            assert st_.log_post == pytest.approx(log_posterior_naive(d, z, hp), abs=1e-6)
            zc = st_.z
            for k, H in enumerate(st_.H_states):
                ref = build_psd(build_H_naive(d, zc, k, hp))
                assert np.max(np.abs(H.inverse - ref.inverse)) < 1e-6
                assert H.logdet == pytest.approx(ref.logdet, abs=1e-6)

    def test_one_cluster(self, rng):
        d = Dataset(rng.standard_normal((2, 5)))
        st_ = init_state(d, np.zeros(5, dtype=int), Hyperparams(K=1))
        np.testing.assert_array_equal(st_.live_counts(), [5])

    def test_dp_compaction(self, rng):
        d = Dataset(rng.standard_normal((2, 5)))
        st_ = init_state(d, [3, 3, 7, 0, 7], Hyperparams(mode=DP))
        np.testing.assert_array_equal(st_.z, [1, 1, 2, 0, 2])
        np.testing.assert_array_equal(st_.live_counts(), [1, 2, 2])
        assert st_.K == 3 and st_.capacity > 3

    def test_compact_labels(self):
        np.testing.assert_array_equal(compact_labels([5, 2, 5, 9]), [1, 0, 1, 2])

    def test_copy_is_deep(self, rng):
        d = Dataset(rng.standard_normal((2, 4)))
        a = init_state(d, [0, 1, 0, 1], Hyperparams())
        b = a.copy()
        b.Hinv[0, 0, 0] += 1.0
        b.z[0] = 1
        assert a.Hinv[0, 0, 0] != b.Hinv[0, 0, 0] and a.z[0] == 0


def test_exhaustive_small_posterior_is_finite():
    d = Dataset(X4)
    hp = Hyperparams(K=2)
    vals = [log_posterior_naive(d, np.array(z), hp) for z in itertools.product(range(2), repeat=4)]
    assert np.all(np.isfinite(vals))
