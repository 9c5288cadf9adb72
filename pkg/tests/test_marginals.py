"""Marginal densities, cdfs, quantiles, means, and exact MLEs.

Densities and cdfs are cross-checked against scipy's canonical
parameterizations; quantile/cdf round-trips are held to 1e-9.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from mvreserve.marginals import (
    GAMMA,
    LOGNORMAL,
    build_design,
    fit_gamma,
    fit_lognormal,
    fit_marginal,
    marginal_cdf,
    marginal_density,
    marginal_logpdf,
    marginal_mean,
    marginal_quantile,
)

ETA_VALUES = st.floats(min_value=-4.0, max_value=2.0)
SHAPES = st.floats(min_value=0.05, max_value=8.0)
OPEN_UNIT = st.floats(min_value=1e-9, max_value=1.0 - 1e-9, exclude_min=False)


class TestDensities:
    def test_lognormal_matches_scipy(self):
        y = np.array([0.01, 0.2, 1.0, 4.0])
        eta, sigma = -0.7, 0.9
        ours = marginal_logpdf(LOGNORMAL, y, eta, sigma)
        ref = stats.lognorm.logpdf(y, s=sigma, scale=np.exp(eta))
        assert ours == pytest.approx(ref, rel=1e-12)

    def test_gamma_matches_scipy(self):
        """Shape phi, mean exp(eta) => scipy gamma(a=phi, scale=exp(eta)/phi)."""
        y = np.array([0.01, 0.2, 1.0, 4.0])
        eta, phi = -0.3, 2.5
        ours = marginal_logpdf(GAMMA, y, eta, phi)
        ref = stats.gamma.logpdf(y, a=phi, scale=np.exp(eta) / phi)
        assert ours == pytest.approx(ref, rel=1e-12)

    @pytest.mark.parametrize("family", [LOGNORMAL, GAMMA])
    def test_density_integrates_to_one(self, family):
        eta, shape = -0.5, 1.4
        total, err = integrate.quad(
            lambda y: float(marginal_density(family, y, eta, shape)),
            1e-12,
            np.inf,
            limit=200,
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("family", [LOGNORMAL, GAMMA])
    def test_mean_matches_quadrature(self, family):
        eta, shape = -0.8, 1.7
        mean, err = integrate.quad(
            lambda y: y * float(marginal_density(family, y, eta, shape)),
            1e-12,
            np.inf,
            limit=200,
        )
        assert float(marginal_mean(family, eta, shape)) == pytest.approx(mean, rel=1e-7)

    def test_rejects_nonpositive_values(self):
        with pytest.raises(ValueError):
            marginal_logpdf(LOGNORMAL, np.array([0.0]), 0.0, 1.0)
        with pytest.raises(ValueError):
            marginal_cdf(GAMMA, np.array([-1.0]), 0.0, 1.0)

    def test_rejects_unknown_family(self):
        with pytest.raises(ValueError, match="family"):
            marginal_logpdf("weibull", np.array([1.0]), 0.0, 1.0)


class TestQuantileRoundTrips:
    @pytest.mark.parametrize("family", [LOGNORMAL, GAMMA])
    @given(u=OPEN_UNIT, eta=ETA_VALUES, shape=SHAPES)
    @settings(max_examples=200, deadline=None)
    def test_cdf_of_quantile(self, family, u, eta, shape):
        y = marginal_quantile(family, u, eta, shape)
        back = marginal_cdf(family, y, eta, shape)
        assert abs(float(back) - u) <= 1e-9

    @pytest.mark.parametrize("family", [LOGNORMAL, GAMMA])
    @given(
        y=st.floats(min_value=1e-4, max_value=50.0),
        eta=ETA_VALUES,
        shape=st.floats(min_value=0.3, max_value=5.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_quantile_of_cdf(self, family, y, eta, shape):
        u = float(marginal_cdf(family, y, eta, shape))
        if not 1e-12 < u < 1.0 - 1e-12:
            return  # outside invertible double range
        back = float(marginal_quantile(family, u, eta, shape))
        assert back == pytest.approx(y, rel=1e-6)

    def test_quantile_rejects_boundary(self):
        for u in (0.0, 1.0):
            with pytest.raises(ValueError):
                marginal_quantile(LOGNORMAL, u, 0.0, 1.0)


class TestDesignMatrix:
    def test_shape_and_reference_levels(self):
        idx = [(1, 1), (2, 1), (1, 2), (3, 4)]
        x = build_design(4, idx)
        assert x.shape == (4, 1 + 3 + 3)
        assert x[0].tolist() == [1, 0, 0, 0, 0, 0, 0]  # (1,1): reference levels
        assert x[1].tolist() == [1, 1, 0, 0, 0, 0, 0]  # alpha_2
        assert x[2].tolist() == [1, 0, 0, 0, 1, 0, 0]  # beta_2
        assert x[3].tolist() == [1, 0, 1, 0, 0, 0, 1]  # alpha_3 + beta_4

    def test_company_columns(self):
        idx = [(1, 1), (1, 1), (1, 1)]
        x = build_design(3, idx, company_indices=np.array([0, 1, 2]), company_count=3)
        assert x.shape == (3, 1 + 2 + 2 + 2)
        assert x[0, 5:].tolist() == [0, 0]
        assert x[1, 5:].tolist() == [1, 0]
        assert x[2, 5:].tolist() == [0, 1]

    def test_company_indices_required(self):
        with pytest.raises(ValueError, match="company_indices"):
            build_design(3, [(1, 1)], company_count=2)


class TestExactMle:
    def test_lognormal_closed_form(self):
        """MLE equals OLS of log y; sigma^2 is the mean squared residual."""
        rng = np.random.default_rng(0)
        idx = [(i, j) for i in range(1, 5) for j in range(1, 6 - i)]
        x = build_design(4, idx)
        beta_true = rng.normal(size=x.shape[1]) * 0.3
        y = np.exp(x @ beta_true + rng.normal(size=len(idx)) * 0.2)
        fit = fit_lognormal(y, x)
        coef_ols, *_ = np.linalg.lstsq(x, np.log(y), rcond=None)
        assert fit.coef == pytest.approx(coef_ols, abs=1e-8)
        resid = np.log(y) - x @ coef_ols
        assert fit.shape == pytest.approx(np.sqrt(np.mean(resid**2)), rel=1e-8)
        # loglik agrees with the density evaluated at the MLE
        direct = float(marginal_logpdf(LOGNORMAL, y, fit.eta, fit.shape).sum())
        assert fit.loglik == pytest.approx(direct, rel=1e-10)

    def test_gamma_score_is_zero_at_mle(self):
        """Gradient of the gamma log likelihood vanishes at the fit."""
        rng = np.random.default_rng(1)
        idx = [(i, j) for i in range(1, 5) for j in range(1, 6 - i)]
        x = build_design(4, idx)
        beta_true = rng.normal(size=x.shape[1]) * 0.3
        mu = np.exp(x @ beta_true)
        y = rng.gamma(shape=3.0, scale=mu / 3.0)
        fit = fit_gamma(y, x)

        def negll(coef, phi):
            eta = x @ coef
            return -float(marginal_logpdf(GAMMA, y, eta, phi).sum())

        base = negll(fit.coef, fit.shape)
        h = 1e-6
        for k in range(x.shape[1]):
            step = np.zeros_like(fit.coef)
            step[k] = h
            deriv = (negll(fit.coef + step, fit.shape) - negll(fit.coef - step, fit.shape)) / (2 * h)
            assert abs(deriv) < 1e-4 * max(1.0, abs(base))
        dphi = (negll(fit.coef, fit.shape + h) - negll(fit.coef, fit.shape - h)) / (2 * h)
        assert abs(dphi) < 1e-4 * max(1.0, abs(base))

    def test_gamma_recovers_parameters_at_scale(self):
        rng = np.random.default_rng(2)
        n = 20000
        x = np.column_stack([np.ones(n), rng.normal(size=n) * 0.5])
        beta_true = np.array([-0.4, 0.7])
        phi_true = 2.5
        mu = np.exp(x @ beta_true)
        y = rng.gamma(shape=phi_true, scale=mu / phi_true)
        fit = fit_gamma(y, x)
        assert fit.coef == pytest.approx(beta_true, abs=0.03)
        assert fit.shape == pytest.approx(phi_true, rel=0.05)

    def test_fit_marginal_dispatch(self):
        rng = np.random.default_rng(3)
        x = np.ones((50, 1))
        y = np.exp(rng.normal(size=50) * 0.1)
        assert fit_marginal(LOGNORMAL, y, x).family == LOGNORMAL
        assert fit_marginal(GAMMA, y, x).family == GAMMA
        with pytest.raises(ValueError):
            fit_marginal("weibull", y, x)
