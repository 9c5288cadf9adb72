"""Copula regression over paired loss triangles.

The two standardized triangles of each company are modeled with a
lognormal marginal (LOB1) and a gamma marginal (LOB2), each with
systematic component eta_ij = xi + alpha_i + beta_j (+ b_c on pooled
multi-company data), coupled cellwise by a parametric copula. The
joint log-likelihood over observed cells (i, j) is

    l = sum log c(F1(y1_ij), F2(y2_ij); theta)
      + sum log f1(y1_ij) + sum log f2(y2_ij)

maximized over all marginal coefficients, both shapes, and the copula
parameter(s) on an unconstrained reparameterization (shapes via exp,
gaussian/t theta via tanh, t degrees of freedom via softplus above
2.05, frank theta unconstrained). The warm start fits each marginal
exactly (inference-functions-for-margins), which also *is* the full
MLE for the product copula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .copulas import (
    FRANK,
    GAUSSIAN,
    MIN_T_DF,
    PRODUCT,
    STUDENT_T,
    CopulaSpec,
    copula_logdensity,
)
from .marginals import (
    GAMMA,
    LOGNORMAL,
    build_design,
    fit_marginal,
    marginal_logpdf,
    marginal_mean,
)
from .triangles import (
    PortfolioDataset,
    TrianglePair,
    lower_index_set,
    standardize,
    upper_index_set,
)

_U_CLIP = 1e-10


class FitError(RuntimeError):
    """Raised when a copula regression cannot be fitted."""


@dataclass(frozen=True)
class MarginalSpec:
    """Fitted marginal regression: family, effects, and shape.

    alpha and beta have one entry per year with alpha[0] = beta[0] = 0;
    company_effects (when present) has one entry per company with
    company_effects[0] = 0.
    """

    family: str
    xi: float
    alpha: np.ndarray
    beta: np.ndarray
    shape: float
    company_effects: np.ndarray | None = None

    def eta(self, i: int, j: int, company_index: int = 0) -> float:
        value = self.xi + self.alpha[i - 1] + self.beta[j - 1]
        if self.company_effects is not None:
            value += self.company_effects[company_index]
        return float(value)

    def eta_grid(self, indices: list[tuple[int, int]], company_index: int = 0) -> np.ndarray:
        return np.array([self.eta(i, j, company_index) for i, j in indices])


@dataclass(frozen=True)
class CopulaRegressionFit:
    """Joint MLE result with fit statistics and convergence report."""

    marginal1: MarginalSpec
    marginal2: MarginalSpec
    copula: CopulaSpec
    loglik: float
    aic: float
    bic: float
    n_obs: int
    n_params: int
    converged: bool
    n_iter: int
    grad_norm: float
    origin_count: int
    company_ids: tuple[str, ...]
    psi: np.ndarray  # optimum on the unconstrained scale
    psi_names: tuple[str, ...]


@dataclass(frozen=True)
class _CellData:
    """Flattened observed cells of a dataset, ready for likelihoods."""

    origin_count: int
    company_ids: tuple[str, ...]
    indices: list[tuple[int, int]]  # per row: (i, j)
    company_indices: np.ndarray  # per row: 0-based company
    y1: np.ndarray
    y2: np.ndarray
    design: np.ndarray


def _collect_cells(data: PortfolioDataset | TrianglePair) -> _CellData:
    if isinstance(data, TrianglePair):
        data = PortfolioDataset(companies=(data,))
    i_max = data.origin_count
    upper = sorted(upper_index_set(i_max))
    indices: list[tuple[int, int]] = []
    company_indices: list[int] = []
    y1: list[float] = []
    y2: list[float] = []
    for c, pair in enumerate(data.companies):
        s1, s2 = standardize(pair.lob1), standardize(pair.lob2)
        for (i, j) in upper:
            indices.append((i, j))
            company_indices.append(c)
            y1.append(s1.cell(i, j))
            y2.append(s2.cell(i, j))
    company_count = len(data.companies)
    design = build_design(
        i_max,
        indices,
        company_indices=np.array(company_indices),
        company_count=company_count,
    )
    return _CellData(
        origin_count=i_max,
        company_ids=data.company_ids,
        indices=indices,
        company_indices=np.array(company_indices),
        y1=np.array(y1),
        y2=np.array(y2),
        design=design,
    )


def _coef_to_spec(family: str, coef: np.ndarray, shape: float, i_max: int, company_count: int) -> MarginalSpec:
    alpha = np.zeros(i_max)
    beta = np.zeros(i_max)
    alpha[1:] = coef[1:i_max]
    beta[1:] = coef[i_max : 2 * i_max - 1]
    effects = None
    if company_count > 1:
        effects = np.zeros(company_count)
        effects[1:] = coef[2 * i_max - 1 :]
    return MarginalSpec(
        family=family,
        xi=float(coef[0]),
        alpha=alpha,
        beta=beta,
        shape=float(shape),
        company_effects=effects,
    )


def _spec_to_coef(spec: MarginalSpec, i_max: int, company_count: int) -> np.ndarray:
    parts = [np.array([spec.xi]), spec.alpha[1:], spec.beta[1:]]
    if company_count > 1:
        effects = spec.company_effects
        if effects is None:
            effects = np.zeros(company_count)
        parts.append(effects[1:])
    return np.concatenate(parts)


def _psi_names(p: int, family: str) -> tuple[str, ...]:
    names = [f"m1.c{k}" for k in range(p)] + ["m1.log_shape"]
    names += [f"m2.c{k}" for k in range(p)] + ["m2.log_shape"]
    if family in (GAUSSIAN, STUDENT_T):
        names.append("copula.atanh_theta")
    elif family == FRANK:
        names.append("copula.theta")
    if family == STUDENT_T:
        names.append("copula.df_raw")
    return tuple(names)


def _unpack(psi: np.ndarray, p: int, family: str) -> tuple[np.ndarray, float, np.ndarray, float, CopulaSpec]:
    coef1 = psi[:p]
    shape1 = math.exp(psi[p])
    coef2 = psi[p + 1 : 2 * p + 1]
    shape2 = math.exp(psi[2 * p + 1])
    rest = psi[2 * p + 2 :]
    if family == PRODUCT:
        spec = CopulaSpec(PRODUCT)
    elif family == GAUSSIAN:
        spec = CopulaSpec(GAUSSIAN, theta=math.tanh(rest[0]))
    elif family == FRANK:
        spec = CopulaSpec(FRANK, theta=float(rest[0]))
    else:
        nu = MIN_T_DF + math.log1p(math.exp(-abs(rest[1]))) + max(rest[1], 0.0)  # softplus
        spec = CopulaSpec(STUDENT_T, theta=math.tanh(rest[0]), df=nu)
    return coef1, shape1, coef2, shape2, spec


def _loglik(psi: np.ndarray, cells: _CellData, family: str) -> float:
    p = cells.design.shape[1]
    try:
        coef1, shape1, coef2, shape2, spec = _unpack(psi, p, family)
    except (OverflowError, ValueError):
        return -np.inf
    eta1 = cells.design @ coef1
    eta2 = cells.design @ coef2
    with np.errstate(all="ignore"):
        lp1 = marginal_logpdf(LOGNORMAL, cells.y1, eta1, shape1)
        lp2 = marginal_logpdf(GAMMA, cells.y2, eta2, shape2)
        total = lp1.sum() + lp2.sum()
        if spec.family != PRODUCT:
            u1 = stats.norm.cdf((np.log(cells.y1) - eta1) / shape1)
            u2 = stats.gamma.cdf(cells.y2, a=shape2, scale=np.exp(eta2) / shape2)
            u1 = np.clip(u1, _U_CLIP, 1.0 - _U_CLIP)
            u2 = np.clip(u2, _U_CLIP, 1.0 - _U_CLIP)
            total += copula_logdensity(spec, u1, u2).sum()
    if not np.isfinite(total):
        return -np.inf
    return float(total)


def _warm_start(cells: _CellData, family: str) -> np.ndarray:
    fit1 = fit_marginal(LOGNORMAL, cells.y1, cells.design)
    fit2 = fit_marginal(GAMMA, cells.y2, cells.design)
    psi = np.concatenate(
        [
            fit1.coef,
            [math.log(fit1.shape)],
            fit2.coef,
            [math.log(fit2.shape)],
        ]
    )
    if family == PRODUCT:
        return psi
    eps1 = (np.log(cells.y1) - fit1.eta) / fit1.shape
    eps2 = cells.y2 / np.exp(fit2.eta)
    tau_hat = float(stats.kendalltau(eps1, eps2).statistic)
    tau_hat = float(np.clip(tau_hat, -0.95, 0.95))
    if family in (GAUSSIAN, STUDENT_T):
        theta0 = math.sin(math.pi * tau_hat / 2.0)
        extra = [math.atanh(np.clip(theta0, -0.99, 0.99))]
        if family == STUDENT_T:
            extra.append(math.log(math.expm1(8.0 - MIN_T_DF)))  # start at df = 8
        return np.concatenate([psi, extra])
    theta0 = 9.0 * tau_hat if tau_hat != 0 else 0.5  # small-theta expansion of frank tau
    if abs(theta0) < 0.1:
        theta0 = math.copysign(0.1, theta0 if theta0 != 0 else 1.0)
    return np.concatenate([psi, [theta0]])


def fit(
    data: PortfolioDataset | TrianglePair,
    copula_family: str = PRODUCT,
    include_company_effects: bool = False,
    grad_tol: float = 1e-6,
    max_iter: int = 5000,
) -> CopulaRegressionFit:
    """Joint MLE of both marginals and the copula parameter(s).

    The product copula is solved exactly by the marginal fits; other
    families refine an inference-functions-for-margins warm start with
    a quasi-Newton search on the unconstrained scale. A fit that ends
    with gradient norm above grad_tol at the iteration cap is returned
    with converged=False rather than raised, so callers can decide.
    """
    if isinstance(data, TrianglePair):
        data = PortfolioDataset(companies=(data,))
    if len(data.companies) > 1 and not include_company_effects:
        raise FitError(
            "multi-company data requires include_company_effects=True "
            "(one shared surface would be misspecified)"
        )
    cells = _collect_cells(data)
    return fit_cells(cells, copula_family, grad_tol=grad_tol, max_iter=max_iter)


def fit_cells(
    cells: _CellData,
    copula_family: str,
    grad_tol: float = 1e-6,
    max_iter: int = 5000,
    psi0: np.ndarray | None = None,
) -> CopulaRegressionFit:
    """MLE over pre-collected cells; psi0 optionally warm-starts the search."""
    p = cells.design.shape[1]
    family = copula_family
    if family not in (PRODUCT, GAUSSIAN, FRANK, STUDENT_T):
        raise FitError(f"unknown copula family {family!r}")

    if psi0 is None:
        psi0 = _warm_start(cells, family)
    if family == PRODUCT:
        psi_opt = psi0
        converged, n_iter, grad_norm = True, 0, 0.0
        ll = _loglik(psi_opt, cells, family)
    else:
        objective = lambda psi: -_loglik(psi, cells, family)
        options = {"maxiter": max_iter, "gtol": grad_tol, "ftol": 1e-13, "maxcor": 40}
        result = optimize.minimize(
            objective, psi0, method="L-BFGS-B", jac="3-point", options=options
        )
        if not result.success:  # one restart clears most line-search stalls
            retry = optimize.minimize(
                objective, result.x, method="L-BFGS-B", jac="3-point", options=options
            )
            if retry.fun <= result.fun:
                result = retry
        psi_opt = result.x
        ll = -float(result.fun)
        grad = np.atleast_1d(result.jac) if result.jac is not None else np.array([np.inf])
        grad_norm = float(np.max(np.abs(grad)))
        n_iter = int(result.nit)
        converged = bool(result.success) or grad_norm <= grad_tol
        ll0 = _loglik(psi0, cells, family)
        if ll < ll0:  # optimizer moved downhill: keep the warm start
            psi_opt, ll = psi0, ll0
            converged = False

    coef1, shape1, coef2, shape2, spec = _unpack(psi_opt, p, family)
    company_count = len(cells.company_ids)
    marginal1 = _coef_to_spec(LOGNORMAL, coef1, shape1, cells.origin_count, company_count)
    marginal2 = _coef_to_spec(GAMMA, coef2, shape2, cells.origin_count, company_count)
    n_obs = 2 * len(cells.y1)
    k = 2 * (p + 1) + spec.n_params
    return CopulaRegressionFit(
        marginal1=marginal1,
        marginal2=marginal2,
        copula=spec,
        loglik=ll,
        aic=2.0 * k - 2.0 * ll,
        bic=k * math.log(n_obs) - 2.0 * ll,
        n_obs=n_obs,
        n_params=k,
        converged=converged,
        n_iter=n_iter,
        grad_norm=grad_norm,
        origin_count=cells.origin_count,
        company_ids=cells.company_ids,
        psi=psi_opt,
        psi_names=_psi_names(p, family),
    )


def reserves(
    fit_result: CopulaRegressionFit,
    premiums1: tuple[float, ...] | np.ndarray,
    premiums2: tuple[float, ...] | np.ndarray,
    company_index: int = 0,
) -> tuple[float, float, float]:
    """Point reserves: sum of lower-triangle cell expectations times exposure."""
    i_max = fit_result.origin_count
    lower = sorted(lower_index_set(i_max))
    w1 = np.asarray(premiums1, dtype=np.float64)
    w2 = np.asarray(premiums2, dtype=np.float64)
    r1 = 0.0
    r2 = 0.0
    for (i, j) in lower:
        eta1 = fit_result.marginal1.eta(i, j, company_index)
        eta2 = fit_result.marginal2.eta(i, j, company_index)
        r1 += w1[i - 1] * float(marginal_mean(LOGNORMAL, eta1, fit_result.marginal1.shape))
        r2 += w2[i - 1] * float(marginal_mean(GAMMA, eta2, fit_result.marginal2.shape))
    return r1, r2, r1 + r2


def reserves_for_pair(fit_result: CopulaRegressionFit, pair: TrianglePair) -> tuple[float, float, float]:
    company_index = fit_result.company_ids.index(pair.company_id)
    return reserves(fit_result, pair.lob1.premiums, pair.lob2.premiums, company_index)


def residual_kendall_tau(fit_result: CopulaRegressionFit, data: PortfolioDataset | TrianglePair) -> float:
    """Kendall's tau between cellwise marginal residuals.

    Residuals are (ln y - eta) / sigma for the lognormal LOB and
    y / scale (scale = exp(eta) / phi) for the gamma LOB.
    """
    cells = _collect_cells(data)
    eta1 = np.array(
        [fit_result.marginal1.eta(i, j, c) for (i, j), c in zip(cells.indices, cells.company_indices)]
    )
    eta2 = np.array(
        [fit_result.marginal2.eta(i, j, c) for (i, j), c in zip(cells.indices, cells.company_indices)]
    )
    eps1 = (np.log(cells.y1) - eta1) / fit_result.marginal1.shape
    eps2 = cells.y2 / (np.exp(eta2) / fit_result.marginal2.shape)
    return float(stats.kendalltau(eps1, eps2).statistic)


def _numerical_hessian(func, x0: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    n = x0.size
    h = rel_step * (1.0 + np.abs(x0))
    hess = np.zeros((n, n))
    f0 = func(x0)
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = h[a]
        fpp = func(x0 + ea)
        fmm = func(x0 - ea)
        hess[a, a] = (fpp - 2.0 * f0 + fmm) / (h[a] * h[a])
        for b in range(a + 1, n):
            eb = np.zeros(n)
            eb[b] = h[b]
            fab = func(x0 + ea + eb)
            fa_b = func(x0 + ea - eb)
            f_ab = func(x0 - ea + eb)
            f_a_b = func(x0 - ea - eb)
            hess[a, b] = hess[b, a] = (fab - fa_b - f_ab + f_a_b) / (4.0 * h[a] * h[b])
    return hess


@dataclass(frozen=True)
class ParameterInterval:
    name: str
    estimate: float
    lower: float
    upper: float
    available: bool = True


def parameter_ci(
    fit_result: CopulaRegressionFit,
    data: PortfolioDataset | TrianglePair,
    level: float = 0.95,
) -> list[ParameterInterval]:
    """Wald intervals from the numerical Hessian, mapped to natural scale.

    Intervals are computed on the unconstrained scale and pushed through
    the monotone reparameterizations (exp for shapes, tanh for
    gaussian/t theta, the shifted softplus for t degrees of freedom).
    A singular Hessian marks every interval unavailable.
    """
    if isinstance(data, TrianglePair):
        data = PortfolioDataset(companies=(data,))
    cells = _collect_cells(data)
    family = fit_result.copula.family
    nll = lambda psi: -_loglik(psi, cells, family)
    hess = _numerical_hessian(nll, fit_result.psi)
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov = None
    z = stats.norm.ppf(0.5 + level / 2.0)
    out = []
    for idx, name in enumerate(fit_result.psi_names):
        est_u = fit_result.psi[idx]
        if cov is None or cov[idx, idx] <= 0:
            out.append(ParameterInterval(name, _to_natural(name, est_u), np.nan, np.nan, False))
            continue
        se = math.sqrt(cov[idx, idx])
        lo_u, hi_u = est_u - z * se, est_u + z * se
        lo, hi = _to_natural(name, lo_u), _to_natural(name, hi_u)
        if lo > hi:
            lo, hi = hi, lo
        out.append(ParameterInterval(name, _to_natural(name, est_u), lo, hi))
    return out


def _to_natural(name: str, value: float) -> float:
    if name.endswith("log_shape"):
        return math.exp(value)
    if name == "copula.atanh_theta":
        return math.tanh(value)
    if name == "copula.df_raw":
        return MIN_T_DF + math.log1p(math.exp(-abs(value))) + max(value, 0.0)
    return value


def copula_theta_ci(intervals: list[ParameterInterval]) -> ParameterInterval | None:
    """The dependence-parameter interval, if the family has one."""
    for interval in intervals:
        if interval.name in ("copula.atanh_theta", "copula.theta"):
            return interval
    return None
