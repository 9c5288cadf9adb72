"""Bivariate copula families: product, Gaussian, Frank, Student's t.

Each family provides the copula density on the open unit square, a
sampler, and the closed-form Kendall's tau. Densities are implemented
in log form for use inside likelihoods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

PRODUCT = "product"
GAUSSIAN = "gaussian"
FRANK = "frank"
STUDENT_T = "student_t"
COPULA_FAMILIES = (PRODUCT, GAUSSIAN, FRANK, STUDENT_T)

FRANK_INDEPENDENCE_GUARD = 1e-6
MIN_T_DF = 2.05


@dataclass(frozen=True)
class CopulaSpec:
    """A copula family with its dependence parameter(s)."""

    family: str
    theta: float = 0.0
    df: float | None = None  # student_t only

    def __post_init__(self) -> None:
        if self.family not in COPULA_FAMILIES:
            raise ValueError(
                f"unknown copula family {self.family!r}, expected one of {COPULA_FAMILIES}"
            )
        if self.family in (GAUSSIAN, STUDENT_T) and not -1.0 < self.theta < 1.0:
            raise ValueError(f"{self.family} copula requires theta in (-1, 1), got {self.theta}")
        if self.family == STUDENT_T:
            if self.df is None or not self.df > 2.0:
                raise ValueError(f"student_t copula requires df > 2, got {self.df}")

    @property
    def n_params(self) -> int:
        return {PRODUCT: 0, GAUSSIAN: 1, FRANK: 1, STUDENT_T: 2}[self.family]


def _check_unit_square(u1: np.ndarray, u2: np.ndarray) -> None:
    if np.any((u1 <= 0) | (u1 >= 1) | (u2 <= 0) | (u2 >= 1)):
        raise ValueError("copula density requires (u1, u2) in the open unit square")


def copula_logdensity(spec: CopulaSpec, u1, u2) -> np.ndarray:
    """log c(u1, u2; theta) elementwise on the open unit square."""
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    _check_unit_square(u1, u2)
    if spec.family == PRODUCT:
        return np.zeros(np.broadcast(u1, u2).shape)
    if spec.family == GAUSSIAN:
        theta = spec.theta
        x = stats.norm.ppf(u1)
        y = stats.norm.ppf(u2)
        omt2 = 1.0 - theta * theta
        quad = theta * theta * (x * x + y * y) - 2.0 * theta * x * y
        return -0.5 * np.log(omt2) - quad / (2.0 * omt2)
    if spec.family == FRANK:
        theta = spec.theta
        if abs(theta) < FRANK_INDEPENDENCE_GUARD:
            return np.zeros(np.broadcast(u1, u2).shape)
        # c = theta (1 - e^-theta) e^{-theta(u+v)} / D^2,
        # D = (1 - e^-theta) - (1 - e^-theta u)(1 - e^-theta v)
        em = -np.expm1(-theta)  # 1 - e^-theta
        emu = -np.expm1(-theta * u1)
        emv = -np.expm1(-theta * u2)
        d = em - emu * emv
        # theta and (1 - e^-theta) always share sign, so their product is positive
        return (
            np.log(np.abs(theta) * np.abs(em))
            - theta * (u1 + u2)
            - 2.0 * np.log(np.abs(d))
        )
    # student_t: c = f2(x, y) / (f(x) f(y)) at x = Tinv(u1), y = Tinv(u2)
    theta, nu = spec.theta, float(spec.df)
    x = special.stdtrit(nu, u1)
    y = special.stdtrit(nu, u2)
    omt2 = 1.0 - theta * theta
    quad = (x * x - 2.0 * theta * x * y + y * y) / omt2
    log_f2 = (
        special.gammaln((nu + 2.0) / 2.0)
        - special.gammaln(nu / 2.0)
        - np.log(nu * np.pi)
        - 0.5 * np.log(omt2)
        - (nu + 2.0) / 2.0 * np.log1p(quad / nu)
    )
    log_f1 = stats.t.logpdf(x, df=nu) + stats.t.logpdf(y, df=nu)
    return log_f2 - log_f1


def copula_density(spec: CopulaSpec, u1, u2) -> np.ndarray:
    return np.exp(copula_logdensity(spec, u1, u2))


def copula_sample(spec: CopulaSpec, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draw (u1, u2) pairs; returns an array of shape (size, 2)."""
    if spec.family == PRODUCT:
        return rng.uniform(size=(size, 2))
    if spec.family == GAUSSIAN:
        theta = spec.theta
        z1 = rng.standard_normal(size)
        z2 = theta * z1 + np.sqrt(1.0 - theta * theta) * rng.standard_normal(size)
        return np.column_stack([stats.norm.cdf(z1), stats.norm.cdf(z2)])
    if spec.family == FRANK:
        theta = spec.theta
        u = rng.uniform(size=size)
        w = rng.uniform(size=size)
        if abs(theta) < FRANK_INDEPENDENCE_GUARD:
            return np.column_stack([u, w])
        # conditional inverse: solve w = C(v | u) for v, which gives
        # v = -(1/theta) ln(1 + w (1 - e^-theta) / (w (e^-theta*u - 1) - e^-theta*u));
        # the denominator equals -(e^-theta*u (1-w) + w) < 0, so the log1p
        # argument stays above -1 for every theta.
        ethu = np.exp(-theta * u)
        v = -np.log1p(-w * np.expm1(-theta) / (w * (ethu - 1.0) - ethu)) / theta
        return np.column_stack([u, v])
    theta, nu = spec.theta, float(spec.df)
    z1 = rng.standard_normal(size)
    z2 = theta * z1 + np.sqrt(1.0 - theta * theta) * rng.standard_normal(size)
    s = rng.chisquare(nu, size)
    scale_factor = np.sqrt(nu / s)
    x = z1 * scale_factor
    y = z2 * scale_factor
    return np.column_stack([special.stdtr(nu, x), special.stdtr(nu, y)])


def debye1(x: float) -> float:
    """First Debye function D1(x) = (1/x) * integral_0^x t/(e^t - 1) dt."""
    if x == 0.0:
        return 1.0
    if x < 0.0:
        return debye1(-x) - x / 2.0  # D1(-x) = D1(x) + x/2
    value, _ = integrate.quad(lambda t: t / np.expm1(t), 0.0, x, limit=200)
    return value / x


def kendall_tau(spec: CopulaSpec) -> float:
    """Closed-form population Kendall's tau of the family."""
    if spec.family == PRODUCT:
        return 0.0
    if spec.family in (GAUSSIAN, STUDENT_T):
        return float(2.0 * np.arcsin(spec.theta) / np.pi)
    theta = spec.theta
    if abs(theta) < FRANK_INDEPENDENCE_GUARD:
        return 0.0
    return float(1.0 - 4.0 / theta * (1.0 - debye1(theta)))
