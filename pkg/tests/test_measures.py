"""Tests for the univariate laws and joint distributions."""

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from idlab import (
    Exponential1D,
    ExpFamily,
    GaussianDistribution,
    GaussianMixture1D,
    Laplace1D,
    Logistic1D,
    Normal1D,
    ProductDistribution,
    distribution_from_spec,
    distribution_to_spec,
    expfam_density_ratio_log,
    interdecile_box,
    stream,
)

GRID = np.linspace(-6.0, 6.0, 301)
PROBS = np.linspace(0.001, 0.999, 97)


@pytest.mark.parametrize(
    "law",
    [
        Normal1D(0.0, 1.0),
        Normal1D(-2.0, 0.4),
        Laplace1D(0.3, 1.3),
        Logistic1D(-0.2, 0.8),
        Exponential1D(0.7),
        GaussianMixture1D([0.4, 0.6], [-1.0, 2.0], [0.5, 1.5]),
    ],
)
def test_quantile_inverts_cdf(law):
    x = law.ppf(PROBS)
    assert_allclose(law.cdf(x), PROBS, atol=1e-9)


@pytest.mark.parametrize(
    "law",
    [Normal1D(1.0, 2.0), Laplace1D(0.0, 1.0), Logistic1D(0.4, 1.1), Exponential1D(1.5)],
)
def test_cdf_matches_scipy(law):
    if law.kind == "exponential":
        ref = scipy.stats.expon(scale=1.0 / law.rate)
    else:
        name = {"normal": "norm", "laplace": "laplace", "logistic": "logistic"}[law.kind]
        ref = getattr(scipy.stats, name)(loc=law.loc, scale=law.scale)
    inside = GRID[(law.cdf(GRID) > 0) & (law.cdf(GRID) < 1)]
    assert_allclose(law.cdf(inside), ref.cdf(inside), atol=1e-12)
    assert_allclose(np.exp(law.log_pdf(inside)), ref.pdf(inside), rtol=1e-10)


def test_laplace_quantile_closed_form():
    # F(log 2) = 1 - exp(-log 2)/2 = 3/4 for the standard law
    assert Laplace1D(0.0, 1.0).ppf(np.array([0.75]))[0] == pytest.approx(np.log(2.0), abs=1e-12)


def test_mixture_cdf_is_weighted_sum():
    mix = GaussianMixture1D([0.4, 0.6], [-1.0, 2.0], [0.5, 1.5])
    got = mix.cdf(np.array([0.0]))[0]
    want = 0.4 * scipy.stats.norm.cdf(2.0) + 0.6 * scipy.stats.norm.cdf(-2.0 / 1.5)
    assert got == pytest.approx(want, abs=1e-13)


def test_sampling_agrees_with_cdf():
    rng = stream(11, 0)
    for law in [Normal1D(0.5, 1.2), Laplace1D(-0.3, 0.9), GaussianMixture1D([0.3, 0.7], [-2.0, 1.0], [0.6, 1.1])]:
        x = law.sample(rng, 4000)
        stat = scipy.stats.kstest(x, law.cdf).statistic
        assert stat < 0.03


@settings(max_examples=60, deadline=None)
@given(
    p=st.floats(min_value=0.01, max_value=0.99),
    loc=st.floats(min_value=-5.0, max_value=5.0),
    scale=st.floats(min_value=0.1, max_value=4.0),
)
def test_quantile_roundtrip_property(p, loc, scale):
    for law in (Normal1D(loc, scale), Laplace1D(loc, scale), Logistic1D(loc, scale)):
        q = law.ppf(np.array([p]))[0]
        assert law.cdf(np.array([q]))[0] == pytest.approx(p, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(min_value=-4.0, max_value=4.0),
    b=st.floats(min_value=-4.0, max_value=4.0),
)
def test_cdf_monotone_property(a, b):
    lo, hi = min(a, b), max(a, b)
    mix = GaussianMixture1D([0.5, 0.5], [-1.5, 1.2], [0.7, 1.1])
    assert mix.cdf(np.array([lo]))[0] <= mix.cdf(np.array([hi]))[0] + 1e-15


class TestGaussianDistribution:
    def test_log_density_matches_scipy(self, gauss2, rng):
        x = gauss2.sample(rng, 64)
        ref = scipy.stats.multivariate_normal(gauss2.mean, gauss2.cov)
        assert_allclose(gauss2.log_density(x), ref.logpdf(x), rtol=1e-10)

    def test_sample_moments(self, gauss2):
        x = gauss2.sample(stream(5, 1), 200_000)
        assert_allclose(x.mean(axis=0), gauss2.mean, atol=0.02)
        assert_allclose(np.cov(x.T), gauss2.cov, atol=0.03)

    def test_conditional_cdf_quantile_roundtrip(self, gauss2, rng):
        x = gauss2.sample(rng, 50)
        for j in range(2):
            u = gauss2.conditional_cdf(j, x[:, :j], x[:, j])
            back = gauss2.conditional_quantile(j, x[:, :j], u)
            assert_allclose(back, x[:, j], atol=1e-8)

    def test_conditional_cdf_is_uniform(self, gauss2):
        # first coordinate: marginal; second: conditional given the first
        x = gauss2.sample(stream(5, 2), 5000)
        for j in range(2):
            u = gauss2.conditional_cdf(j, x[:, :j], x[:, j])
            assert scipy.stats.kstest(u, "uniform").pvalue > 1e-4

    def test_rejects_non_psd(self):
        with pytest.raises(Exception):
            GaussianDistribution([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])


class TestProductDistribution:
    def test_log_density_is_sum_of_marginals(self, laplace_product, rng):
        x = laplace_product.sample(rng, 40)
        want = laplace_product.marginals[0].log_pdf(x[:, 0]) + laplace_product.marginals[1].log_pdf(x[:, 1])
        assert_allclose(laplace_product.log_density(x), want, rtol=1e-12)

    def test_conditionals_reduce_to_marginals(self, laplace_product, rng):
        x = laplace_product.sample(rng, 40)
        u = laplace_product.conditional_cdf(1, x[:, :1], x[:, 1])
        assert_allclose(u, laplace_product.marginals[1].cdf(x[:, 1]), atol=1e-12)


def test_interdecile_box_standard_normal():
    box = interdecile_box(GaussianDistribution([0.0], [[1.0]]))
    q = scipy.stats.norm.ppf(0.9)
    assert_allclose(box, [[-q, q]], atol=1e-9)


def test_expfam_gaussian_mean_family_density():
    # unit-covariance Gaussian with natural parameter equal to its mean
    eta = np.array([0.7, -0.2])
    fam = ExpFamily(
        dim=2,
        stat_dim=2,
        log_base=lambda z: -0.5 * np.sum(z**2, axis=-1) - np.log(2 * np.pi),
        suff_stat=lambda z: z,
        log_partition=lambda e: 0.5 * float(e @ e),
        eta=eta,
    )
    ref = GaussianDistribution(eta, np.eye(2))
    z = ref.sample(stream(7, 0), 32)
    assert_allclose(fam.log_density(z), ref.log_density(z), atol=1e-10)


def test_expfam_density_ratio_log():
    fam_kwargs = dict(
        dim=1,
        stat_dim=1,
        log_base=lambda z: -0.5 * np.sum(z**2, axis=-1) - 0.5 * np.log(2 * np.pi),
        suff_stat=lambda z: z,
        log_partition=lambda e: 0.5 * float(e @ e),
    )
    fam_a = ExpFamily(eta=np.array([0.0]), **fam_kwargs)
    fam_b = ExpFamily(eta=np.array([1.5]), **fam_kwargs)
    z = np.linspace(-2, 2, 9)[:, None]
    got = expfam_density_ratio_log(fam_b, fam_a, z)
    assert_allclose(got, fam_b.log_density(z) - fam_a.log_density(z), atol=1e-12)


def test_spec_roundtrip():
    for dist in [
        GaussianDistribution([0.5, -1.0], [[2.0, 0.6], [0.6, 1.0]]),
        ProductDistribution([Laplace1D(0.0, 1.0), Logistic1D(0.4, 1.1)]),
    ]:
        again = distribution_from_spec(distribution_to_spec(dist))
        x = dist.sample(stream(3, 3), 16)
        assert_allclose(again.log_density(x), dist.log_density(x), atol=1e-12)
