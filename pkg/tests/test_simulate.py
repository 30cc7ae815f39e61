import numpy as np
import pytest

from conftest import random_correlation
from kronprec.covariance import SymMatrix, time_sample_cov, word_sample_cov
from kronprec.data import residualize
from kronprec.errors import DimTooLarge, NotPositiveDefinite, ValidationError
from kronprec.glasso import glasso
from kronprec.simulate import (
    FactorSpec,
    make_factor,
    oracle_glasso,
    oracle_lasso,
    precision_support,
    sample_matrix_normal,
    support_f1,
)


class TestFactors:
    def test_identity(self):
        np.testing.assert_array_equal(make_factor(FactorSpec("identity", 5)).entries, np.eye(5))

    def test_ar1_entries(self):
        m = make_factor(FactorSpec("ar1", 3, rho=0.5)).entries
        assert m[0, 1] == 0.5 and m[0, 2] == 0.25

    def test_ar1_inverse_tridiagonal(self):
        m = make_factor(FactorSpec("ar1", 6, rho=0.6))
        inv = np.linalg.inv(m.entries)
        band = np.abs(np.subtract.outer(range(6), range(6))) > 1
        assert np.max(np.abs(inv[band])) < 1e-12
        assert precision_support(m).sum() == 2 * 5

    def test_ar1_needs_stationarity(self):
        with pytest.raises(NotPositiveDefinite):
            make_factor(FactorSpec("ar1", 3, rho=1.0))

    def test_banded_zero_beyond_bandwidth(self):
        m = make_factor(FactorSpec("banded", 6, bandwidth=2, decay=0.3)).entries
        assert m[0, 2] == pytest.approx(0.09) and m[0, 3] == 0.0

    def test_banded_not_pd(self):
        with pytest.raises(NotPositiveDefinite):
            make_factor(FactorSpec("banded", 10, bandwidth=1, decay=0.9))

    def test_block(self):
        m = make_factor(FactorSpec("block", 5, sizes=(2, 3), within_corr=0.4)).entries
        assert m[0, 1] == 0.4 and m[2, 4] == 0.4 and m[1, 2] == 0.0

    def test_block_sizes_checked(self):
        with pytest.raises(ValidationError):
            FactorSpec("block", 5, sizes=(2, 2))

    def test_sparse_inverse_support(self):
        m = make_factor(FactorSpec("banded", 8, bandwidth=1, decay=0.3, sparse_inverse=True))
        np.testing.assert_allclose(np.diag(m.entries), 1.0, atol=1e-15)
        truth = np.abs(np.subtract.outer(range(8), range(8))) == 1
        np.testing.assert_array_equal(precision_support(m), truth)


class TestSampling:
    def test_deterministic(self):
        A = make_factor(FactorSpec("ar1", 4, rho=0.3))
        B = make_factor(FactorSpec("identity", 3))
        a = sample_matrix_normal(A, B, 3, 2, seed=11)
        b = sample_matrix_normal(A, B, 3, 2, seed=11)
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, sample_matrix_normal(A, B, 3, 2, seed=12).values)

    def test_streams_independent_of_shape(self):
        # slice (i, r) depends only on (seed, i, r)
        A = make_factor(FactorSpec("ar1", 4, rho=0.3))
        B = make_factor(FactorSpec("identity", 3))
        small = sample_matrix_normal(A, B, 2, 2, seed=5)
        big = sample_matrix_normal(A, B, 4, 3, seed=5)
        np.testing.assert_array_equal(small.values, big.values[:2, :, :2, :])

    def test_unit_variance(self):
        A = make_factor(FactorSpec("identity", 2))
        B = make_factor(FactorSpec("identity", 2))
        t = sample_matrix_normal(A, B, 100, 100, seed=3)
        assert np.var(t.values) == pytest.approx(1.0, rel=0.05)

    def test_kronecker_covariance(self):
        A = make_factor(FactorSpec("ar1", 3, rho=0.5))
        B = make_factor(FactorSpec("block", 2, sizes=(2,), within_corr=0.6))
        t = sample_matrix_normal(A, B, 400, 10, seed=8)
        vec = t.values.transpose(0, 2, 3, 1).reshape(-1, 6)  # words fastest, then time
        emp = vec.T @ vec / vec.shape[0]
        np.testing.assert_allclose(emp, np.kron(A.entries, B.entries), atol=0.05)

    def test_word_gram_scaling(self):
        A = make_factor(FactorSpec("ar1", 5, rho=0.4))
        B = make_factor(FactorSpec("banded", 4, bandwidth=1, decay=0.4))
        r = residualize(sample_matrix_normal(A, B, 200, 20, seed=1))
        # residualization shrinks the variance by (n_r - 1) / n_r
        expect = B.entries * np.trace(A.entries) / A.dim * (19 / 20)
        np.testing.assert_allclose(word_sample_cov(r).entries, expect, atol=0.03)
        expect_t = A.entries * np.trace(B.entries) / B.dim * (19 / 20)
        np.testing.assert_allclose(time_sample_cov(r).entries, expect_t, atol=0.03)

    def test_speaker_means_removed_exactly(self):
        A = make_factor(FactorSpec("ar1", 3, rho=0.2))
        B = make_factor(FactorSpec("identity", 2))
        plain = residualize(sample_matrix_normal(A, B, 3, 4, seed=2))
        shifted = residualize(sample_matrix_normal(A, B, 3, 4, seed=2, mean_scale=50.0))
        np.testing.assert_allclose(shifted.values, plain.values, atol=1e-12)

    def test_rejects_singular_factor(self):
        A = SymMatrix(np.ones((2, 2)), "covariance", "ab")
        with pytest.raises(NotPositiveDefinite):
            sample_matrix_normal(A, make_factor(FactorSpec("identity", 2)), 1, 1, seed=0)


class TestOracles:
    def test_glasso_oracle_dim_limit(self, rng):
        with pytest.raises(DimTooLarge):
            oracle_glasso(random_correlation(rng, 5), 0.1)

    def test_lasso_oracle_dim_limit(self):
        with pytest.raises(DimTooLarge):
            oracle_lasso(np.eye(9), np.zeros(9), 0.1)

    def test_glasso_oracle_two_by_two(self):
        g = SymMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]), "correlation", "ab")
        np.testing.assert_allclose(oracle_glasso(g, 0.1).entries, np.array([[1.0, -0.4], [-0.4, 1.0]]) / 0.84, atol=1e-10)

    def test_glasso_oracle_four_dim(self, rng):
        g = random_correlation(rng, 4)
        np.testing.assert_allclose(glasso(g, 0.1).theta.entries, oracle_glasso(g, 0.1).entries, atol=1e-6)

    def test_lasso_oracle_unpenalized(self, rng):
        G = random_correlation(rng, 5).entries
        c = rng.normal(size=5) * 0.3
        np.testing.assert_allclose(oracle_lasso(G, c, 0.0), np.linalg.solve(G, c), atol=1e-12)


def test_support_f1():
    truth = np.zeros((4, 4), bool)
    truth[0, 1] = truth[1, 0] = truth[2, 3] = truth[3, 2] = True
    est = np.zeros((4, 4), bool)
    est[0, 1] = est[1, 0] = est[0, 2] = est[2, 0] = True
    assert support_f1(est, truth) == 0.5
    assert support_f1(truth, truth) == 1.0
    assert support_f1(np.zeros((3, 3), bool), np.zeros((3, 3), bool)) == 1.0


def test_word_graph_recovery_with_word_axis_penalty():
    # the word axis takes the penalty built from the effective time count
    from kronprec.covariance import theoretical_penalties, to_correlation
    from kronprec.nodewise import mb_edges, nodewise
    from kronprec.simulate import default_labels

    words, times = default_labels(93, 19)
    A = make_factor(FactorSpec("ar1", 19, rho=0.5, labels=times))
    B = make_factor(FactorSpec("banded", 93, bandwidth=1, decay=0.3, sparse_inverse=True, labels=words))
    gamma = to_correlation(word_sample_cov(residualize(sample_matrix_normal(A, B, 20, 4, seed=0))))
    lam = theoretical_penalties(93, 20, 4, 4).for_axis("word")
    truth = precision_support(B)
    f1 = support_f1(glasso(gamma, lam).support(), truth)
    idx = {w: k for k, w in enumerate(words)}
    nw = np.zeros_like(truth)
    for a, b in mb_edges(nodewise(gamma, lam), "or"):
        nw[idx[a], idx[b]] = nw[idx[b], idx[a]] = True
    assert f1 >= 0.8
    assert abs(support_f1(nw, truth) - f1) <= 0.1
