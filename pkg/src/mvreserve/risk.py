"""Risk measures and capital analytics over reserve distributions.

The quantile convention is fixed throughout: VaR_k is the 1-based
ceil(n*k) order statistic of the sorted sample, with no interpolation,
and TVaR_k is the mean of all observations whose value is >= VaR_k.
This makes the tail set unambiguous, TVaR monotone in k, and the
coherence properties exactly testable on tie-free samples.

Risk capital at level k >= 0.6 is TVaR_k - TVaR_60%; the silo variant
sums per-LOB capitals computed on the marginal distributions, and the
diversification gain is (silo - joint) / silo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TVAR_LEVELS = (0.60, 0.80, 0.85, 0.90, 0.95, 0.99)
BASE_LEVEL = 0.60


def var(sample: np.ndarray, k: float) -> float:
    """Value at risk: the ceil(n*k) order statistic (1-based)."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.size == 0:
        raise ValueError("var of an empty sample")
    if not 0.0 < k < 1.0:
        raise ValueError(f"k must be in (0, 1), got {k}")
    ordered = np.sort(sample)
    rank = math.ceil(sample.size * k)
    return float(ordered[rank - 1])


def tvar(sample: np.ndarray, k: float) -> float:
    """Tail value at risk: mean of observations >= VaR_k."""
    sample = np.asarray(sample, dtype=np.float64)
    threshold = var(sample, k)
    tail = sample[sample >= threshold]
    return float(tail.mean())


def risk_capital(sample: np.ndarray, k: float) -> float:
    """TVaR_k - TVaR_60%, the buffer above the base liability value."""
    if k < BASE_LEVEL:
        raise ValueError(f"risk capital requires k >= {BASE_LEVEL}, got {k}")
    return tvar(sample, k) - tvar(sample, BASE_LEVEL)


def silo(sample1: np.ndarray, sample2: np.ndarray, k: float) -> float:
    """Sum of per-LOB risk capitals on the marginal distributions."""
    return risk_capital(sample1, k) + risk_capital(sample2, k)


def gain(rc_silo: float, rc_model: float) -> float:
    """Diversification gain (rc_silo - rc_model) / rc_silo."""
    if not rc_silo > 0:
        raise ValueError(f"gain requires positive silo capital, got {rc_silo}")
    return (rc_silo - rc_model) / rc_silo


def quantile(sample: np.ndarray, k: float) -> float:
    """Alias of var: percentile under the fixed order-statistic convention."""
    return var(sample, k)


@dataclass(frozen=True)
class RiskReport:
    """Summary of one reserve distribution against its point estimate."""

    n: int
    mean: float
    std: float
    cv: float
    bias_pct: float
    ci_lower: float
    ci_upper: float
    var_by_level: dict[float, float]
    tvar_by_level: dict[float, float]
    risk_capital_by_level: dict[float, float]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "std": self.std,
            "cv": self.cv,
            "bias_pct": self.bias_pct,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "var": {f"{k:.2f}": v for k, v in self.var_by_level.items()},
            "tvar": {f"{k:.2f}": v for k, v in self.tvar_by_level.items()},
            "risk_capital": {f"{k:.2f}": v for k, v in self.risk_capital_by_level.items()},
            "metadata": self.metadata,
        }


def summarize(
    sample: np.ndarray,
    point_reserve: float,
    levels: tuple[float, ...] = TVAR_LEVELS,
    metadata: dict | None = None,
) -> RiskReport:
    """Bias/std/CV, percentile CI, and the VaR/TVaR/risk-capital ladder."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.size < 2:
        raise ValueError("summarize requires at least two draws")
    mean = float(sample.mean())
    std = float(sample.std(ddof=1))
    cv = std / mean if mean != 0 else math.inf
    bias_pct = 100.0 * (mean - point_reserve) / point_reserve if point_reserve != 0 else math.nan
    var_ladder = {k: var(sample, k) for k in levels}
    tvar_ladder = {k: tvar(sample, k) for k in levels}
    rc_ladder = {k: risk_capital(sample, k) for k in levels if k >= BASE_LEVEL}
    return RiskReport(
        n=int(sample.size),
        mean=mean,
        std=std,
        cv=cv,
        bias_pct=bias_pct,
        ci_lower=quantile(sample, 0.025),
        ci_upper=quantile(sample, 0.975),
        var_by_level=var_ladder,
        tvar_by_level=tvar_ladder,
        risk_capital_by_level=rc_ladder,
        metadata=metadata or {},
    )
