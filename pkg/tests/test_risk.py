"""Risk measures: hand-valued quantiles plus TVaR coherence properties.

TVaR under the fixed ceil(n*k) order-statistic convention must satisfy,
exactly on finite samples: translation equivariance, positive
homogeneity, monotonicity in the level, dominance over VaR, and
subadditivity across jointly sampled components.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mvreserve import risk


def tie_free(*arrays_):
    """The exact-coherence contract holds on tie-free samples only:
    a value tied with the VaR pulls every copy into the tail set, so
    float collapses (x + c rounding two values together) change the
    tail. Discard such draws instead of weakening the assertion."""
    return all(np.unique(a).size == a.size for a in arrays_)

ELEMENTS = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, width=64)
SAMPLES = arrays(
    np.float64, st.integers(min_value=2, max_value=120), elements=ELEMENTS, unique=True
)
# unique=True over the whole (n, 2) matrix keeps each column tie-free too
JOINT_SAMPLES = arrays(
    np.float64,
    st.tuples(st.integers(min_value=4, max_value=80), st.just(2)),
    elements=ELEMENTS,
    unique=True,
)
LEVELS = st.floats(min_value=0.01, max_value=0.99)
HIGH_LEVELS = st.floats(min_value=0.60, max_value=0.99)


class TestVarConvention:
    def test_hand_values(self):
        sample = np.array([10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0])
        assert risk.var(sample, 0.60) == 60.0  # ceil(10 * .6) = 6th order stat
        assert risk.var(sample, 0.61) == 70.0  # ceil(6.1) = 7
        assert risk.var(sample, 0.95) == 100.0  # ceil(9.5) = 10
        assert risk.var(sample, 0.05) == 10.0

    def test_tvar_hand_value(self):
        sample = np.array([1.0, 2.0, 3.0, 4.0])
        # VaR_.6 = 3rd order stat = 3; tail {3, 4} -> mean 3.5
        assert risk.tvar(sample, 0.6) == pytest.approx(3.5)
        assert risk.risk_capital(sample, 0.99) == pytest.approx(4.0 - 3.5)

    def test_quantile_is_var_alias(self):
        sample = np.arange(1.0, 21.0)
        for k in (0.1, 0.5, 0.9):
            assert risk.quantile(sample, k) == risk.var(sample, k)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            risk.var(np.array([]), 0.5)
        with pytest.raises(ValueError):
            risk.var(np.ones(3), 0.0)
        with pytest.raises(ValueError):
            risk.var(np.ones(3), 1.0)
        with pytest.raises(ValueError):
            risk.risk_capital(np.ones(3), 0.5)  # below the base level
        with pytest.raises(ValueError):
            risk.gain(0.0, 1.0)


class TestTvarCoherence:
    @given(sample=SAMPLES, k=LEVELS, c=st.floats(min_value=-1e5, max_value=1e5))
    @settings(max_examples=200, deadline=None)
    def test_translation(self, sample, k, c):
        assume(tie_free(sample, sample + c))
        shifted = risk.tvar(sample + c, k)
        assert shifted == pytest.approx(risk.tvar(sample, k) + c, rel=1e-9, abs=1e-6)

    @given(sample=SAMPLES, k=LEVELS, lam=st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=200, deadline=None)
    def test_positive_homogeneity(self, sample, k, lam):
        assume(tie_free(sample, lam * sample))
        scaled = risk.tvar(lam * sample, k)
        assert scaled == pytest.approx(lam * risk.tvar(sample, k), rel=1e-9, abs=1e-6)

    @given(sample=SAMPLES, k1=LEVELS, k2=LEVELS)
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_level(self, sample, k1, k2):
        lo, hi = min(k1, k2), max(k1, k2)
        assert risk.tvar(sample, hi) >= risk.tvar(sample, lo) - 1e-9

    @given(sample=SAMPLES, k=LEVELS)
    @settings(max_examples=200, deadline=None)
    def test_dominates_var(self, sample, k):
        threshold = risk.var(sample, k)
        assert risk.tvar(sample, k) >= threshold - 1e-9 * max(1.0, abs(threshold))

    @given(joint=JOINT_SAMPLES, k=LEVELS)
    @settings(max_examples=300, deadline=None)
    def test_subadditive_on_joint_samples(self, joint, k):
        """TVaR(X+Y) <= TVaR(X) + TVaR(Y) when drawn as joint scenarios."""
        x, y = joint[:, 0], joint[:, 1]
        assume(tie_free(x + y))
        lhs = risk.tvar(x + y, k)
        rhs = risk.tvar(x, k) + risk.tvar(y, k)
        assert lhs <= rhs + 1e-6 * max(1.0, abs(rhs))

    @given(sample=SAMPLES, k=HIGH_LEVELS)
    @settings(max_examples=200, deadline=None)
    def test_risk_capital_nonnegative(self, sample, k):
        assert risk.risk_capital(sample, k) >= -1e-9

    @given(joint=JOINT_SAMPLES, k=HIGH_LEVELS)
    @settings(max_examples=200, deadline=None)
    def test_silo_definition(self, joint, k):
        x, y = joint[:, 0], joint[:, 1]
        assert risk.silo(x, y, k) == pytest.approx(
            risk.risk_capital(x, k) + risk.risk_capital(y, k)
        )


class TestGain:
    def test_definition(self):
        assert risk.gain(100.0, 75.0) == pytest.approx(0.25)
        assert risk.gain(100.0, 100.0) == 0.0
        assert risk.gain(100.0, 120.0) == pytest.approx(-0.2)

    def test_diversification_on_negatively_dependent_lines(self):
        """Anticorrelated lines give the joint model a positive gain."""
        rng = np.random.default_rng(0)
        z = rng.standard_normal(4000)
        x = 100.0 + 10.0 * z
        y = 100.0 - 8.0 * z + rng.standard_normal(4000)
        joint_rc = risk.risk_capital(x + y, 0.99)
        silo_rc = risk.silo(x, y, 0.99)
        assert joint_rc < silo_rc
        assert risk.gain(silo_rc, joint_rc) > 0.4


class TestSummarize:
    def test_report_fields(self):
        rng = np.random.default_rng(1)
        sample = rng.normal(1000.0, 50.0, size=5000)
        report = risk.summarize(sample, point_reserve=990.0, metadata={"tag": "x"})
        assert report.n == 5000
        assert report.mean == pytest.approx(sample.mean())
        assert report.std == pytest.approx(sample.std(ddof=1))
        assert report.cv == pytest.approx(report.std / report.mean)
        assert report.bias_pct == pytest.approx(100 * (report.mean - 990.0) / 990.0)
        assert report.ci_lower == risk.quantile(sample, 0.025)
        assert report.ci_upper == risk.quantile(sample, 0.975)
        assert set(report.tvar_by_level) == set(risk.TVAR_LEVELS)
        assert report.risk_capital_by_level[0.60] == pytest.approx(0.0)
        assert report.metadata == {"tag": "x"}

    def test_to_dict_keys_are_formatted_levels(self):
        sample = np.arange(1.0, 101.0)
        d = risk.summarize(sample, 50.0).to_dict()
        assert "0.99" in d["tvar"] and "0.60" in d["risk_capital"]

    def test_rejects_tiny_sample(self):
        with pytest.raises(ValueError):
            risk.summarize(np.array([1.0]), 1.0)

    def test_normal_tail_matches_theory(self):
        """TVaR of a large normal sample approaches mu + sigma phi(z)/(1-k)."""
        from scipy import stats

        rng = np.random.default_rng(2)
        mu, sigma, k = 0.0, 1.0, 0.95
        sample = rng.normal(mu, sigma, size=400_000)
        theory = mu + sigma * stats.norm.pdf(stats.norm.ppf(k)) / (1 - k)
        assert risk.tvar(sample, k) == pytest.approx(theory, abs=0.02)
