"""Tests for the Gaussian location model, sign flips, and order-stat CDF."""

import math

import mpmath
import numpy as np
import pytest
from scipy import stats as sps

from posthoc.models import (
    DataModel,
    NullJointSampler,
    flip_statistics,
    normal_upper_tail,
    orderstat_cdf_independent,
    pvalues,
    read_matrix_csv,
    sample_dataset,
    sign_flip,
    sign_flip_transforms,
    toeplitz_covariance,
    write_matrix_csv,
)
from posthoc.models import test_statistics as compute_stats


# ---------------------------------------------------------------------------
# normal tail and p-values
# ---------------------------------------------------------------------------

def test_normal_upper_tail_against_high_precision():
    mpmath.mp.dps = 50
    xs = [-30.0, -8.0, -3.0, -1.959964, 0.0, 0.5, 1.959964, 5.0, 10.0, 30.0]
    got = normal_upper_tail(np.array(xs))
    for x, g in zip(xs, got):
        exact = float(mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)) / 2)
        assert abs(g - exact) <= 1e-13
        if exact > 0:
            assert abs(g - exact) / exact <= 1e-12


def test_normal_upper_tail_quantile():
    assert abs(normal_upper_tail(np.array([1.959964]))[0] - 0.025) <= 1e-6


def test_pvalues_at_zero():
    assert pvalues(np.array([0.0]), "two")[0] == 1.0
    assert pvalues(np.array([0.0]), "one")[0] == 0.5


def test_pvalues_symmetry_and_range():
    rng = np.random.default_rng(1)
    t = rng.normal(size=100) * 3
    two = pvalues(t, "two")
    assert np.array_equal(two, pvalues(-t, "two"))
    assert np.all((two >= 0) & (two <= 1))
    one = pvalues(t, "one")
    assert np.all(np.diff(one[np.argsort(t)]) <= 0)  # decreasing in t


def test_pvalues_rejects_unknown_sidedness():
    with pytest.raises(ValueError):
        pvalues(np.array([0.0]), "both")


# ---------------------------------------------------------------------------
# statistics and sampling
# ---------------------------------------------------------------------------

def test_statistics_basics():
    assert np.array_equal(compute_stats(np.zeros((3, 5))), np.zeros(3))
    col = np.array([[1.0], [2.0], [-0.5]])
    assert np.array_equal(compute_stats(col), col[:, 0])
    x = np.arange(6.0).reshape(2, 3)
    np.testing.assert_allclose(compute_stats(x),
                               x.sum(axis=1) / math.sqrt(3))


def test_planted_signal_statistic_mean():
    model = DataModel(m=40, n=25, pi0=0.5, mubar=2.0)
    rng = np.random.default_rng(7)
    reps = 400
    acc = np.zeros(model.m)
    for _ in range(reps):
        acc += compute_stats(sample_dataset(model, rng))
    avg = acc / reps
    se = 1.0 / math.sqrt(reps)
    assert np.all(np.abs(avg[model.h1] - 2.0) < 4 * se)
    assert np.all(np.abs(avg[model.h0]) < 4 * se)


def test_sample_dataset_deterministic_and_shift_identity():
    base = DataModel(m=12, n=8, pi0=0.75, mubar=0.0, rho=0.3, seed=42)
    planted = DataModel(m=12, n=8, pi0=0.75, mubar=3.0, rho=0.3, seed=42)
    x0 = sample_dataset(base)
    x0_again = sample_dataset(base)
    x1 = sample_dataset(planted)
    assert np.array_equal(x0, x0_again)
    shift = planted.mean_vector()[:, np.newaxis]
    assert np.array_equal(x1, x0 + shift)
    # true-null rows are bitwise identical with and without signal
    assert np.array_equal(x1[base.h0], x0[base.h0])


def test_equicorrelated_moments():
    model = DataModel(m=50, n=1000, rho=0.4, seed=3)
    x = sample_dataset(model)
    cov = np.cov(x)
    off = cov[~np.eye(50, dtype=bool)]
    assert abs(off.mean() - 0.4) < 0.05
    assert abs(np.diag(cov).mean() - 1.0) < 0.05


def test_equicorrelated_eigenstructure():
    m, rho = 6, 0.35
    sigma = rho * np.ones((m, m)) + (1 - rho) * np.eye(m)
    eig = np.sort(np.linalg.eigvalsh(sigma))
    np.testing.assert_allclose(eig[:-1], np.full(m - 1, 1 - rho), atol=1e-12)
    np.testing.assert_allclose(eig[-1], 1 + (m - 1) * rho, atol=1e-12)


def test_toeplitz_covariance_matches_samples():
    m, theta = 5, -1.0
    sigma = toeplitz_covariance(m, theta)
    assert np.allclose(np.diag(sigma), 1.0)
    assert sigma[0, 1] == pytest.approx(0.5)
    assert sigma[0, 2] == pytest.approx(1.0 / 3.0)
    model = DataModel(m=m, n=20000, theta=theta, seed=11)
    emp = np.cov(sample_dataset(model))
    assert np.max(np.abs(emp - sigma)) < 0.05


def test_toeplitz_covariance_is_positive_definite_at_scale():
    sigma = toeplitz_covariance(300, -0.5)
    np.linalg.cholesky(sigma)  # raises if not PD


def test_full_null_pvalues_uniform():
    model = DataModel(m=400, n=30, rho=0.0, seed=9)
    p = pvalues(compute_stats(sample_dataset(model)), "two")
    assert sps.kstest(p, "uniform").pvalue > 1e-3


def test_model_validation():
    with pytest.raises(ValueError):
        DataModel(m=0, n=5)
    with pytest.raises(ValueError):
        DataModel(m=5, n=5, rho=1.0)
    with pytest.raises(ValueError):
        DataModel(m=5, n=5, rho=-0.1)
    with pytest.raises(ValueError):
        DataModel(m=5, n=5, theta=0.5)
    with pytest.raises(ValueError):
        DataModel(m=5, n=5, rho=0.2, theta=-1.0)
    with pytest.raises(ValueError):
        DataModel(m=5, n=5, pi0=1.5)
    with pytest.raises(ValueError):
        DataModel(m=5, n=5, mubar=-1.0)


def test_h1_layout():
    model = DataModel(m=10, n=5, pi0=0.8)
    assert model.m1 == 2 and model.m0 == 8
    assert np.array_equal(model.h1, [0, 1])
    assert np.array_equal(model.h0, np.arange(2, 10))


# ---------------------------------------------------------------------------
# sign flips
# ---------------------------------------------------------------------------

def test_sign_flip_identity_and_negation():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(6, 9))
    assert np.array_equal(sign_flip(x, np.ones(9)), x)
    flipped = sign_flip(x, -np.ones(9))
    assert np.array_equal(compute_stats(flipped), -compute_stats(x))
    assert np.array_equal(pvalues(compute_stats(flipped), "two"),
                          pvalues(compute_stats(x), "two"))


def test_sign_flip_validation():
    x = np.zeros((2, 3))
    with pytest.raises(ValueError):
        sign_flip(x, np.ones(2))
    with pytest.raises(ValueError):
        sign_flip(x, np.array([1.0, 0.0, 1.0]))


def test_sign_flip_transforms_layout():
    rng = np.random.default_rng(8)
    signs = sign_flip_transforms(7, 5, rng)
    assert signs.shape == (5, 7)
    assert np.array_equal(signs[0], np.ones(7))
    assert np.all(np.abs(signs) == 1)
    with pytest.raises(ValueError):
        sign_flip_transforms(7, 1, rng)


def test_flip_statistics_matches_per_flip_route():
    rng = np.random.default_rng(13)
    x = rng.normal(size=(10, 6))
    signs = sign_flip_transforms(6, 8, rng)
    fast = flip_statistics(x, signs)
    slow = np.stack([compute_stats(sign_flip(x, s)) for s in signs])
    np.testing.assert_allclose(fast, slow, rtol=1e-12)


def test_flipped_null_pvalues_equal_in_law():
    # under the full null, each flip's p-value vector has the same law:
    # compare the pooled empirical distributions of two fixed flips
    rng = np.random.default_rng(17)
    pooled = [[], []]
    signs = sign_flip_transforms(16, 3, rng)[1:]
    for _ in range(60):
        x = sample_dataset(DataModel(m=25, n=16, rho=0.2), rng)
        for j, s in enumerate(signs):
            pooled[j].append(pvalues(compute_stats(sign_flip(x, s)), "two"))
    a = np.concatenate(pooled[0])
    b = np.concatenate(pooled[1])
    assert sps.ks_2samp(a, b).pvalue > 1e-4


# ---------------------------------------------------------------------------
# least-favorable null sampler
# ---------------------------------------------------------------------------

def test_null_sampler_shapes_and_determinism():
    sampler = NullJointSampler(20, rho=0.3)
    a = sampler.draw(np.random.default_rng(1), 50)
    b = sampler.draw(np.random.default_rng(1), 50)
    assert a.shape == (50, 20)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a <= 1))


def test_null_sampler_marginals_uniform():
    sampler = NullJointSampler(5, rho=0.4, sided="one")
    p = sampler.draw(np.random.default_rng(2), 4000)
    assert sps.kstest(p[:, 0], "uniform").pvalue > 1e-3
    two = NullJointSampler(5, rho=0.4, sided="two")
    q = two.draw(np.random.default_rng(2), 4000)
    assert sps.kstest(q[:, 2], "uniform").pvalue > 1e-3


def test_null_sampler_validation():
    with pytest.raises(ValueError):
        NullJointSampler(5, rho=0.2, theta=-1.0)
    with pytest.raises(ValueError):
        NullJointSampler(5, sided="neither")


def test_null_sampler_matches_model_nulls_bitwise():
    # the sampler and the data route produce identical null p-values from the
    # same noise stream: nulls in this model ARE the least-favorable draws
    model = DataModel(m=30, n=12, pi0=0.5, mubar=4.0, rho=0.25)
    rng1 = np.random.default_rng(100)
    rng2 = np.random.default_rng(100)
    x = sample_dataset(model, rng1)
    p = pvalues(compute_stats(x), "one")
    base = DataModel(m=30, n=12, pi0=0.5, mubar=0.0, rho=0.25)
    q = pvalues(compute_stats(sample_dataset(base, rng2)), "one")
    assert np.array_equal(p[model.h0], q[model.h0])
    assert np.all(p[model.h1] <= q[model.h1])  # positive shift, one-sided


# ---------------------------------------------------------------------------
# order-statistic CDF
# ---------------------------------------------------------------------------

def test_orderstat_cdf_closed_forms():
    # k=1: P(min < x) = 1 - (1-x)^m; k=m: x^m
    for m, x in [(3, 0.2), (10, 0.01), (1000, 5e-5)]:
        assert orderstat_cdf_independent(1, m, x) == pytest.approx(
            1 - (1 - x) ** m, rel=1e-12)
    assert orderstat_cdf_independent(4, 4, 0.3) == pytest.approx(0.3 ** 4,
                                                                 rel=1e-12)


def test_orderstat_cdf_against_high_precision_beta():
    mpmath.mp.dps = 60
    cases = [(1, 1000, 5e-5), (2, 1000, 1e-4), (5, 1000, 2.5e-4),
             (10, 1000, 5e-4), (100, 1000, 5e-3), (3, 7, 0.4),
             (50, 50, 0.99), (2, 10, 1e-8)]
    for k, m, x in cases:
        exact = float(mpmath.betainc(k, m + 1 - k, 0, x, regularized=True))
        got = orderstat_cdf_independent(k, m, x)
        assert abs(got - exact) / exact <= 1e-9, (k, m, x)


def test_orderstat_cdf_monte_carlo():
    rng = np.random.default_rng(23)
    m, x = 20, 0.1
    draws = rng.uniform(size=(20000, m))
    part = np.partition(draws, 1, axis=1)
    for k in (1, 2):
        emp = np.mean(part[:, k - 1] < x)
        exact = orderstat_cdf_independent(k, m, x)
        se = math.sqrt(exact * (1 - exact) / draws.shape[0])
        assert abs(emp - exact) <= 3 * se


def test_orderstat_cdf_edges_and_validation():
    assert orderstat_cdf_independent(3, 8, 0.0) == 0.0
    assert orderstat_cdf_independent(3, 8, 1.0) == 1.0
    with pytest.raises(ValueError):
        orderstat_cdf_independent(0, 8, 0.5)
    with pytest.raises(ValueError):
        orderstat_cdf_independent(9, 8, 0.5)
    with pytest.raises(ValueError):
        orderstat_cdf_independent(2, 8, 1.5)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def test_matrix_csv_roundtrip(tmp_path):
    x = np.random.default_rng(0).normal(size=(4, 3))
    path = tmp_path / "x.csv"
    write_matrix_csv(path, x)
    np.testing.assert_allclose(read_matrix_csv(path), x, rtol=1e-15)
    with open(path) as fh:
        body = fh.read()
    with open(path, "w") as fh:
        fh.write("c1,c2,c3\n" + body)
    np.testing.assert_allclose(read_matrix_csv(path, header=True), x,
                               rtol=1e-15)
