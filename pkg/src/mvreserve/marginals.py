"""Marginal loss models: lognormal and gamma with regression effects.

Both families share the linear systematic component
eta_ij = xi + alpha_i + beta_j (+ b_c for pooled multi-company fits),
with alpha_1 = beta_1 = b_1 = 0 for identification.

Lognormal: ln Y ~ Normal(mu = eta, sigma); cell mean exp(eta + sigma^2/2).
Gamma: density (y/mu)^phi e^(-y/mu) / (Gamma(phi) y), i.e. shape phi and
scale mu with eta = log(mu * phi), so the cell mean is exp(eta). Both
maximum-likelihood fits have fast exact solutions: ordinary least
squares on ln y for the lognormal, and a unit-weight scoring iteration
plus a one-dimensional shape root for the gamma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

LOGNORMAL = "lognormal"
GAMMA = "gamma"
FAMILIES = (LOGNORMAL, GAMMA)


def _check_family(family: str) -> None:
    if family not in FAMILIES:
        raise ValueError(f"unknown marginal family {family!r}, expected one of {FAMILIES}")


def marginal_logpdf(family: str, y, eta, shape) -> np.ndarray:
    """Log density at y given the systematic component and shape."""
    _check_family(family)
    y = np.asarray(y, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("marginal densities are defined for y > 0 only")
    if not shape > 0:
        raise ValueError(f"shape must be positive, got {shape}")
    if family == LOGNORMAL:
        z = (np.log(y) - eta) / shape
        return -np.log(y * shape) - 0.5 * np.log(2.0 * np.pi) - 0.5 * z * z
    phi = shape
    mu = np.exp(eta) / phi
    return phi * (np.log(y) - np.log(mu)) - y / mu - special.gammaln(phi) - np.log(y)


def marginal_density(family: str, y, eta, shape) -> np.ndarray:
    return np.exp(marginal_logpdf(family, y, eta, shape))


def marginal_cdf(family: str, y, eta, shape) -> np.ndarray:
    _check_family(family)
    y = np.asarray(y, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("marginal cdfs are defined for y > 0 only")
    if family == LOGNORMAL:
        return stats.norm.cdf((np.log(y) - eta) / shape)
    phi = shape
    mu = np.exp(eta) / phi
    return stats.gamma.cdf(y, a=phi, scale=mu)


def marginal_quantile(family: str, u, eta, shape) -> np.ndarray:
    """Exact inverse of marginal_cdf for u in (0, 1)."""
    _check_family(family)
    u = np.asarray(u, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("quantile requires u in the open interval (0, 1)")
    if family == LOGNORMAL:
        return np.exp(eta + shape * stats.norm.ppf(u))
    phi = shape
    mu = np.exp(eta) / phi
    return stats.gamma.ppf(u, a=phi, scale=mu)


def marginal_mean(family: str, eta, shape) -> np.ndarray:
    """Cell expectation: exp(eta + shape^2/2) lognormal, exp(eta) gamma."""
    _check_family(family)
    eta = np.asarray(eta, dtype=np.float64)
    if family == LOGNORMAL:
        return np.exp(eta + 0.5 * shape * shape)
    return np.exp(eta)


def build_design(
    origin_count: int,
    index_list: list[tuple[int, int]],
    company_indices: np.ndarray | None = None,
    company_count: int = 1,
) -> np.ndarray:
    """Design matrix for eta = xi + alpha_i + beta_j (+ b_c).

    Columns: intercept, alpha_2..alpha_I, beta_2..beta_I, then
    b_2..b_C when company_count > 1. company_indices gives the 0-based
    company of each row.
    """
    i_max = origin_count
    n = len(index_list)
    cols = 1 + 2 * (i_max - 1) + (company_count - 1 if company_count > 1 else 0)
    x = np.zeros((n, cols), dtype=np.float64)
    x[:, 0] = 1.0
    for row, (i, j) in enumerate(index_list):
        if i >= 2:
            x[row, 1 + (i - 2)] = 1.0
        if j >= 2:
            x[row, i_max + (j - 2)] = 1.0
    if company_count > 1:
        if company_indices is None:
            raise ValueError("company_indices required when company_count > 1")
        base = 1 + 2 * (i_max - 1)
        for row, c in enumerate(np.asarray(company_indices)):
            if c >= 1:
                x[row, base + (c - 1)] = 1.0
    return x


@dataclass(frozen=True)
class MarginalFit:
    """Exact MLE of one marginal regression."""

    family: str
    coef: np.ndarray  # design-matrix coefficients, intercept first
    shape: float
    loglik: float
    eta: np.ndarray  # fitted systematic component per row


def fit_lognormal(y: np.ndarray, design: np.ndarray) -> MarginalFit:
    """Exact lognormal MLE: OLS on ln y, sigma^2 = RSS / n."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("lognormal fit requires positive responses")
    log_y = np.log(y)
    coef, *_ = np.linalg.lstsq(design, log_y, rcond=None)
    eta = design @ coef
    resid = log_y - eta
    n = y.size
    sigma2 = float(resid @ resid) / n
    sigma = np.sqrt(sigma2)
    loglik = float(np.sum(marginal_logpdf(LOGNORMAL, y, eta, sigma)))
    return MarginalFit(LOGNORMAL, coef, sigma, loglik, eta)


def fit_gamma(
    y: np.ndarray, design: np.ndarray, tol: float = 1e-12, max_iter: int = 200
) -> MarginalFit:
    """Exact gamma MLE under the log link.

    The scoring equations for the mean coefficients,
    sum_n (y_n / m_n - 1) x_n = 0 with m = exp(X theta), have unit
    working weights for this family/link, so each iteration is a plain
    least-squares projection of the working response z = eta + (y-m)/m.
    Given the fitted means, phi solves
    n (ln phi - psi(phi)) = sum(y/m - ln(y/m) - 1), a strictly
    decreasing one-dimensional equation with a unique positive root.
    """
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("gamma fit requires positive responses")
    project = np.linalg.pinv(design)  # maps a response vector to coefficients

    eta = np.full(y.shape, np.log(y.mean()), dtype=np.float64)
    coef = project @ eta
    eta = design @ coef
    for _ in range(max_iter):
        m = np.exp(eta)
        z = eta + (y - m) / m
        coef_new = project @ z
        eta_new = design @ coef_new
        step = float(np.max(np.abs(eta_new - eta)))
        coef, eta = coef_new, eta_new
        if step < tol:
            break
    m = np.exp(eta)
    ratio = y / m
    rhs = float(np.mean(ratio - np.log(ratio) - 1.0))

    if rhs <= 0:  # y == m everywhere: likelihood increases without bound in phi
        raise FloatingPointError("degenerate gamma fit: zero deviance")

    def score(log_phi: float) -> float:
        phi = np.exp(log_phi)
        return (np.log(phi) - special.digamma(phi)) - rhs

    lo, hi = -20.0, 20.0
    while score(hi) > 0 and hi < 60:
        hi += 10.0
    while score(lo) < 0 and lo > -60:
        lo -= 10.0
    log_phi = optimize.brentq(score, lo, hi, xtol=1e-13)
    phi = float(np.exp(log_phi))
    # eta here is log(mean); the model's systematic component is the same
    loglik = float(np.sum(marginal_logpdf(GAMMA, y, eta, phi)))
    return MarginalFit(GAMMA, coef, phi, loglik, eta)


def fit_marginal(family: str, y: np.ndarray, design: np.ndarray) -> MarginalFit:
    _check_family(family)
    if family == LOGNORMAL:
        return fit_lognormal(y, design)
    return fit_gamma(y, design)
