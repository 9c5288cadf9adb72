"""Predictive distributions of outstanding-claim reserves.

Four generators produce draws of the reserve vector (R1, R2, R):

* :func:`mc_simulate` — plug-in Monte Carlo from a fitted dependent
  regression: simulate unobserved cells with the parameters held fixed.
* :func:`parametric_bootstrap` — simulate a full upper triangle from the
  fit, re-estimate on it, then simulate the unobserved cells from the
  re-estimated parameters, so the draws carry estimation error as well
  as process error.
* :func:`block_bootstrap` — resample whole training sequences (anchor
  rows shared across companies) to retrain a sequence model per draw.
* :func:`copula_synthesize` — generate synthetic loss squares whose
  per-development-year marginals and cross-line dependence match a
  completed corpus, via a Gaussian rank transform.

:func:`edt_predictive_distribution` drives the two corpus-level
generators through repeated retraining of a sequence model and collects
the resulting reserve draws.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Generator, Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .copula_reg import CopulaRegressionFit, FitError, _collect_cells, fit_cells
from .copulas import PRODUCT, copula_sample
from .deep_triangle.model import DtModel
from .deep_triangle.predict import predict_reserves
from .deep_triangle.samples import (
    SequenceSample,
    build_training_samples,
    split_train_validation,
    stack_samples,
)
from .deep_triangle.training import TrainConfig, TrainingDivergence, train, train_on_batches
from .marginals import GAMMA, LOGNORMAL, marginal_quantile
from .triangles import LossTriangle, PortfolioDataset, TrianglePair, lower_index_set

BLOCK_BOOTSTRAP = "block_bootstrap"
COPULA_SYNTH = "copula_synth"
EDT_GENERATORS = (BLOCK_BOOTSTRAP, COPULA_SYNTH)

_U_EDGE = 1e-12  # open-interval guard when inverting fitted cdfs


class ResampleError(RuntimeError):
    """A generator could not produce the requested distribution."""


@dataclass(frozen=True)
class ReserveDistribution:
    """Draws of (R1, R2, R) produced by one generator.

    draws has one row per successful replication and columns
    (line 1 reserve, line 2 reserve, total). failures counts
    replications that were dropped (for example a re-estimation that
    did not converge); seed and generator make the object
    self-describing for reports.
    """

    generator: str
    seed: int
    requested: int
    draws: np.ndarray
    failures: int = 0
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        draws = np.asarray(self.draws, dtype=np.float64)
        if draws.ndim != 2 or draws.shape[1] != 3:
            raise ValueError("draws must be an (n, 3) array of (R1, R2, R)")
        object.__setattr__(self, "draws", draws)

    @property
    def n_draws(self) -> int:
        return int(self.draws.shape[0])

    @property
    def r1(self) -> np.ndarray:
        return self.draws[:, 0]

    @property
    def r2(self) -> np.ndarray:
        return self.draws[:, 1]

    @property
    def total(self) -> np.ndarray:
        return self.draws[:, 2]


def _lower_cell_inputs(
    fit_result: CopulaRegressionFit,
    premiums1,
    premiums2,
    company_index: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per lower-triangle cell: linear predictors and exposures."""
    i_max = fit_result.origin_count
    lower = sorted(lower_index_set(i_max))
    w1 = np.asarray(premiums1, dtype=np.float64)
    w2 = np.asarray(premiums2, dtype=np.float64)
    eta1 = np.array([fit_result.marginal1.eta(i, j, company_index) for (i, j) in lower])
    eta2 = np.array([fit_result.marginal2.eta(i, j, company_index) for (i, j) in lower])
    omega1 = np.array([w1[i - 1] for (i, j) in lower])
    omega2 = np.array([w2[i - 1] for (i, j) in lower])
    return eta1, eta2, omega1, omega2


def _simulate_cells(
    fit_result: CopulaRegressionFit,
    eta1: np.ndarray,
    eta2: np.ndarray,
    rng: np.random.Generator,
    n_rows: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw standardized losses for n_rows copies of a cell vector."""
    n_cells = eta1.size
    u = copula_sample(fit_result.copula, rng, n_rows * n_cells)
    u1 = u[:, 0].reshape(n_rows, n_cells)
    u2 = u[:, 1].reshape(n_rows, n_cells)
    y1 = marginal_quantile(LOGNORMAL, u1, eta1[None, :], fit_result.marginal1.shape)
    y2 = marginal_quantile(GAMMA, u2, eta2[None, :], fit_result.marginal2.shape)
    return y1, y2


def mc_simulate(
    fit_result: CopulaRegressionFit,
    premiums1,
    premiums2,
    n_draws: int,
    seed: int,
    company_index: int = 0,
) -> ReserveDistribution:
    """Simulate reserves with the fitted parameters held fixed.

    Every unobserved cell is drawn from the fitted cell distribution
    (dependence included) and aggregated with the exposures, so the
    spread reflects process variation only.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    eta1, eta2, omega1, omega2 = _lower_cell_inputs(
        fit_result, premiums1, premiums2, company_index
    )
    y1, y2 = _simulate_cells(fit_result, eta1, eta2, rng, n_draws)
    r1 = y1 @ omega1
    r2 = y2 @ omega2
    draws = np.column_stack([r1, r2, r1 + r2])
    return ReserveDistribution(
        generator="mc",
        seed=seed,
        requested=n_draws,
        draws=draws,
        metadata={"copula": fit_result.copula.family},
    )


def parametric_bootstrap(
    fit_result: CopulaRegressionFit,
    data: PortfolioDataset | TrianglePair,
    n_draws: int,
    seed: int,
    refit_max_iter: int = 2000,
) -> ReserveDistribution:
    """Reserve draws that include estimation error.

    Each replication simulates a complete pseudo upper triangle from
    the fitted model, re-estimates the same model on it, and then
    simulates the unobserved cells from the re-estimated parameters.
    Replications whose re-estimation fails or does not converge are
    dropped and counted in ``failures``.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be at least 1")
    if isinstance(data, TrianglePair):
        data = PortfolioDataset(companies=(data,))
    if len(data.companies) != 1 or fit_result.company_ids != data.company_ids:
        raise FitError("the bootstrap re-estimates one company at a time")
    pair = data.companies[0]
    cells = _collect_cells(data)
    eta1_up = np.array([fit_result.marginal1.eta(i, j, 0) for (i, j) in cells.indices])
    eta2_up = np.array([fit_result.marginal2.eta(i, j, 0) for (i, j) in cells.indices])

    family = fit_result.copula.family
    warm = None if family == PRODUCT else fit_result.psi
    rows = []
    failures = 0
    messages: list[str] = []
    for b in range(n_draws):
        # independent stream per replication: reruns with a larger B
        # extend the draw sequence instead of reshuffling it
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0xB007, b)))
        y1_up, y2_up = _simulate_cells(fit_result, eta1_up, eta2_up, rng, 1)
        pseudo = dataclasses.replace(cells, y1=y1_up[0], y2=y2_up[0])
        try:
            refit = fit_cells(pseudo, family, max_iter=refit_max_iter, psi0=warm)
        except (FitError, FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
            failures += 1
            if len(messages) < 5:
                messages.append(str(exc))
            continue
        if not refit.converged:
            failures += 1
            if len(messages) < 5:
                messages.append("re-estimation did not converge")
            continue
        eta1_lo, eta2_lo, omega1, omega2 = _lower_cell_inputs(
            refit, pair.lob1.premiums, pair.lob2.premiums, 0
        )
        y1_lo, y2_lo = _simulate_cells(refit, eta1_lo, eta2_lo, rng, 1)
        r1 = float(y1_lo[0] @ omega1)
        r2 = float(y2_lo[0] @ omega2)
        rows.append((r1, r2, r1 + r2))
    if not rows:
        raise ResampleError(
            f"all {n_draws} re-estimations failed; first errors: {messages}"
        )
    return ReserveDistribution(
        generator="parametric_bootstrap",
        seed=seed,
        requested=n_draws,
        draws=np.array(rows),
        failures=failures,
        metadata={"copula": family, "refit_errors": tuple(messages)},
    )


def _anchor_groups(
    samples: list[SequenceSample],
) -> tuple[list[tuple[int, int]], dict[tuple[int, int], list[SequenceSample]]]:
    groups: dict[tuple[int, int], list[SequenceSample]] = {}
    for sample in samples:
        groups.setdefault(sample.anchor, []).append(sample)
    return sorted(groups), groups


def block_bootstrap(
    train_samples: list[SequenceSample],
    valid_samples: list[SequenceSample],
    n_draws: int,
    seed: int,
) -> Generator[tuple[list[SequenceSample], list[SequenceSample]], None, None]:
    """Stream of resampled training corpora.

    The block is an anchor cell: each replication draws anchors with
    replacement (independently for the training and validation pools)
    and keeps every company's sequence at a drawn anchor, preserving
    the cross-company structure of the corpus.
    """
    train_idx, valid_idx = _block_indices(
        len({s.anchor for s in train_samples}),
        len({s.anchor for s in valid_samples}),
        n_draws,
        seed,
    )
    train_anchors, train_groups = _anchor_groups(train_samples)
    valid_anchors, valid_groups = _anchor_groups(valid_samples)
    for b in range(n_draws):
        resampled_train = [
            s for k in train_idx[b] for s in train_groups[train_anchors[k]]
        ]
        resampled_valid = [
            s for k in valid_idx[b] for s in valid_groups[valid_anchors[k]]
        ]
        yield resampled_train, resampled_valid


def _block_indices(
    n_train_anchors: int,
    n_valid_anchors: int,
    n_draws: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """All anchor draws up front, so replications parallelise deterministically."""
    if n_train_anchors < 1 or n_valid_anchors < 1:
        raise ValueError("both anchor pools must be non-empty")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xB10C)))
    train_idx = rng.integers(0, n_train_anchors, size=(n_draws, n_train_anchors))
    valid_idx = rng.integers(0, n_valid_anchors, size=(n_draws, n_valid_anchors))
    return train_idx, valid_idx


# ---------------------------------------------------------------------------
# Gaussian rank synthesizer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalCdf:
    """Interpolated empirical cdf with exponential tails.

    Sample values get plotting positions k / (n + 1); between them the
    cdf is linear, and beyond the extremes it decays exponentially with
    the rate matched to the interior density at the boundary, so both
    cdf and inverse are continuous and strictly monotone.
    """

    xs: np.ndarray  # unique sorted sample values
    ps: np.ndarray  # cdf level at each value
    lower_rate: float
    upper_rate: float

    @classmethod
    def fit(cls, values: np.ndarray) -> "EmpiricalCdf":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("need at least two observations")
        if not np.all(np.isfinite(values)):
            raise ValueError("observations must be finite")
        order = np.sort(values)
        n = order.size
        ranks = np.arange(1, n + 1) / (n + 1.0)
        xs, first = np.unique(order, return_index=True)
        if xs.size < 2:
            raise ValueError("observations are all identical")
        # tie block -> the cdf level of its highest rank
        counts = np.diff(np.append(first, n))
        ps = ranks[np.cumsum(counts) - 1]
        lower_slope = (ps[1] - ps[0]) / (xs[1] - xs[0])
        upper_slope = (ps[-1] - ps[-2]) / (xs[-1] - xs[-2])
        lower_rate = lower_slope / ps[0]
        upper_rate = upper_slope / (1.0 - ps[-1])
        return cls(xs=xs, ps=ps, lower_rate=lower_rate, upper_rate=upper_rate)

    def cdf(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        out = np.interp(y, self.xs, self.ps)
        low = y < self.xs[0]
        high = y > self.xs[-1]
        # exponents clipped at 0 so the branch not selected cannot overflow
        low_exp = np.minimum(self.lower_rate * (y - self.xs[0]), 0.0)
        high_exp = np.minimum(self.upper_rate * (self.xs[-1] - y), 0.0)
        out = np.where(low, self.ps[0] * np.exp(low_exp), out)
        out = np.where(high, 1.0 - (1.0 - self.ps[-1]) * np.exp(high_exp), out)
        return np.clip(out, _U_EDGE, 1.0 - _U_EDGE)

    def ppf(self, u) -> np.ndarray:
        u = np.clip(np.asarray(u, dtype=np.float64), _U_EDGE, 1.0 - _U_EDGE)
        out = np.interp(u, self.ps, self.xs)
        low = u < self.ps[0]
        high = u > self.ps[-1]
        out = np.where(
            low, self.xs[0] + np.log(u / self.ps[0]) / self.lower_rate, out
        )
        out = np.where(
            high,
            self.xs[-1] - np.log((1.0 - u) / (1.0 - self.ps[-1])) / self.upper_rate,
            out,
        )
        return out


@dataclass(frozen=True)
class DevYearTable:
    """Pooled standardized losses of one development year.

    rows holds one (line 1, line 2) pair per company and accident
    year, pooled over the whole corpus; company_ids labels each row's
    source company in parallel.
    """

    dev_year: int
    rows: np.ndarray
    company_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != 2:
            raise ValueError("rows must be an (n, 2) array")
        if not np.all(np.isfinite(rows)):
            raise ValueError("table rows must be finite")
        if self.company_ids and len(self.company_ids) != rows.shape[0]:
            raise ValueError("company_ids must label every row")
        object.__setattr__(self, "rows", rows)


@dataclass(frozen=True)
class _FittedDevYear:
    dev_year: int
    cdfs: tuple[EmpiricalCdf | None, EmpiricalCdf | None]
    constants: tuple[float | None, float | None]
    correlation: float


def build_dev_year_tables(squares: tuple[TrianglePair, ...] | list[TrianglePair]) -> list[DevYearTable]:
    """Pool completed squares into one standardized table per development year."""
    if not squares:
        raise ValueError("need at least one completed square")
    i_max = squares[0].origin_count
    tables = []
    for j in range(1, i_max + 1):
        rows = []
        labels = []
        for pair in squares:
            if not (pair.lob1.is_full_square and pair.lob2.is_full_square):
                raise ValueError("synthesizer tables require completed squares")
            for i in range(1, i_max + 1):
                y1 = pair.lob1.cell(i, j) / pair.lob1.premiums[i - 1]
                y2 = pair.lob2.cell(i, j) / pair.lob2.premiums[i - 1]
                rows.append((y1, y2))
                labels.append(pair.company_id)
        tables.append(
            DevYearTable(dev_year=j, rows=np.array(rows), company_ids=tuple(labels))
        )
    return tables


def _fit_dev_year(table: DevYearTable) -> _FittedDevYear:
    cdfs: list[EmpiricalCdf | None] = [None, None]
    constants: list[float | None] = [None, None]
    z_cols = []
    for col in range(2):
        values = table.rows[:, col]
        if np.ptp(values) == 0.0:
            constants[col] = float(values[0])
            continue
        cdf = EmpiricalCdf.fit(values)
        cdfs[col] = cdf
        z_cols.append(stats.norm.ppf(cdf.cdf(values)))
    if len(z_cols) == 2:
        z = np.column_stack(z_cols)
        # correlation of the latent pair under a zero-mean gaussian model
        second = z.T @ z / z.shape[0]
        denom = np.sqrt(second[0, 0] * second[1, 1])
        rho = 0.0 if denom == 0.0 else float(second[0, 1] / denom)
        rho = float(np.clip(rho, -0.999, 0.999))
    else:
        rho = 0.0
    return _FittedDevYear(
        dev_year=table.dev_year,
        cdfs=(cdfs[0], cdfs[1]),
        constants=(constants[0], constants[1]),
        correlation=rho,
    )


def copula_synthesize(
    tables: list[DevYearTable],
    template: PortfolioDataset,
    n_companies: int | None = None,
    seed: int = 0,
) -> PortfolioDataset:
    """Synthetic upper triangles with the dependence of a completed corpus.

    For each development year the pooled pairs are mapped to latent
    gaussian scores through their interpolated empirical cdfs, the
    latent correlation is estimated, and fresh pairs are drawn and
    mapped back. Each synthetic company inherits premiums and year
    labels from a template company (cycled when more companies are
    requested than the template has).
    """
    i_max = template.origin_count
    if len(tables) != i_max:
        raise ValueError("need one table per development year")
    if n_companies is None:
        n_companies = len(template.companies)
    if n_companies < 1:
        raise ValueError("n_companies must be at least 1")
    fitted = [_fit_dev_year(table) for table in sorted(tables, key=lambda t: t.dev_year)]

    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5E17)))
    origin = np.arange(1, i_max + 1)
    companies = []
    n_template = len(template.companies)
    for k in range(n_companies):
        source = template.companies[k % n_template]
        if n_companies == n_template:
            company_id = source.company_id
        else:
            company_id = f"S{k + 1:03d}"
        cells1: dict[tuple[int, int], float] = {}
        cells2: dict[tuple[int, int], float] = {}
        for fit_j in fitted:
            j = fit_j.dev_year
            keep = origin[origin + j <= i_max + 1]  # upper-triangle rows
            cov = np.array([[1.0, fit_j.correlation], [fit_j.correlation, 1.0]])
            chol = np.linalg.cholesky(cov)
            z = rng.standard_normal((i_max, 2)) @ chol.T
            u = stats.norm.cdf(z)
            for col, cells, tri in ((0, cells1, source.lob1), (1, cells2, source.lob2)):
                if fit_j.constants[col] is not None:
                    y = np.full(i_max, fit_j.constants[col])
                else:
                    y = fit_j.cdfs[col].ppf(u[:, col])
                for i in keep:
                    cells[(int(i), j)] = float(y[i - 1] * tri.premiums[i - 1])
        companies.append(
            TrianglePair(
                company_id=company_id,
                lob1=LossTriangle(
                    company_id, source.lob1.lob, i_max, cells1,
                    source.lob1.premiums, source.lob1.year_labels,
                ),
                lob2=LossTriangle(
                    company_id, source.lob2.lob, i_max, cells2,
                    source.lob2.premiums, source.lob2.year_labels,
                ),
            )
        )
    return PortfolioDataset(companies=tuple(companies))


# ---------------------------------------------------------------------------
# Predictive distribution of a retrained sequence model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdtDistribution:
    """Reserve draws from repeated retraining, per company and in total."""

    per_company: Mapping[str, ReserveDistribution]
    total: ReserveDistribution

    @property
    def company_ids(self) -> tuple[str, ...]:
        return tuple(self.per_company)


def _replication_seed(seed: int, replication: int) -> int:
    state = np.random.SeedSequence((seed, 0xED7, replication)).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))  # keep it inside a signed 64-bit range


def _block_replication(
    model: DtModel | None,
    data: PortfolioDataset,
    config: TrainConfig,
    train_samples: list[SequenceSample],
    valid_samples: list[SequenceSample],
    train_idx: np.ndarray,
    valid_idx: np.ndarray,
    replication_seed: int,
) -> np.ndarray:
    train_anchors, train_groups = _anchor_groups(train_samples)
    valid_anchors, valid_groups = _anchor_groups(valid_samples)
    corpus_train = [s for k in train_idx for s in train_groups[train_anchors[k]]]
    corpus_valid = [s for k in valid_idx for s in valid_groups[valid_anchors[k]]]
    repl_config = dataclasses.replace(config, seed=replication_seed)
    result = train_on_batches(
        stack_samples(corpus_train),
        stack_samples(corpus_valid),
        repl_config,
        company_ids=data.company_ids,
        origin_count=data.origin_count,
        init=model,
    )
    prediction = predict_reserves(result.model, data)
    return np.array([(e.r1, e.r2, e.total) for e in prediction.estimates])


def _synth_replication(
    model: DtModel | None,
    data: PortfolioDataset,
    config: TrainConfig,
    tables: list[DevYearTable],
    max_history: int | None,
    replication_seed: int,
) -> np.ndarray:
    synth_data = copula_synthesize(tables, data, seed=replication_seed)
    repl_config = dataclasses.replace(config, seed=replication_seed)
    result = train(synth_data, repl_config, init=model, max_history=max_history)
    prediction = predict_reserves(result.model, synth_data)
    return np.array([(e.r1, e.r2, e.total) for e in prediction.estimates])


def _run_replication(payload: tuple) -> tuple[int, np.ndarray | None, str]:
    """One retraining replication; top level so process pools can run it."""
    kind, replication, args = payload
    try:
        if kind == BLOCK_BOOTSTRAP:
            rows = _block_replication(*args)
        else:
            rows = _synth_replication(*args)
    except (TrainingDivergence, FloatingPointError, np.linalg.LinAlgError) as exc:
        return replication, None, f"{type(exc).__name__}: {exc}"
    return replication, rows, ""


def edt_predictive_distribution(
    model: DtModel,
    data: PortfolioDataset,
    generator: str,
    n_draws: int,
    seed: int,
    config: TrainConfig,
    warm_start: bool = True,
    max_history: int | None = None,
    workers: int = 1,
) -> EdtDistribution:
    """Predictive reserve distribution of a trained sequence model.

    Each replication builds a perturbed corpus with the chosen
    generator, retrains (from the given weights when warm_start is
    true, from fresh random weights otherwise), and records reserve
    predictions: on the original triangles for resampled corpora, on
    the synthetic triangles for synthesized ones. Draws are reproducible
    for a given seed regardless of the worker count.
    """
    if generator not in EDT_GENERATORS:
        raise ValueError(f"generator must be one of {EDT_GENERATORS}")
    if n_draws < 1:
        raise ValueError("n_draws must be at least 1")
    if model.company_ids != data.company_ids:
        raise ValueError("model and dataset cover different companies")
    init = model if warm_start else None

    payloads = []
    if generator == BLOCK_BOOTSTRAP:
        samples = build_training_samples(data, max_history=max_history)
        split_rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0xA11C)))
        train_samples, valid_samples = split_train_validation(
            samples, config.split_fraction, split_rng
        )
        train_idx, valid_idx = _block_indices(
            len({s.anchor for s in train_samples}),
            len({s.anchor for s in valid_samples}),
            n_draws,
            seed,
        )
        for b in range(n_draws):
            args = (
                init, data, config, train_samples, valid_samples,
                train_idx[b], valid_idx[b], _replication_seed(seed, b),
            )
            payloads.append((BLOCK_BOOTSTRAP, b, args))
    else:
        tables = build_dev_year_tables(predict_reserves(model, data).squares)
        for b in range(n_draws):
            args = (init, data, config, tables, max_history, _replication_seed(seed, b))
            payloads.append((COPULA_SYNTH, b, args))

    results: list[tuple[int, np.ndarray | None, str]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replication, payloads))
    else:
        results = [_run_replication(p) for p in payloads]
    results.sort(key=lambda item: item[0])

    rows_by_company: list[np.ndarray] = []
    failures = 0
    messages: list[str] = []
    for _, rows, message in results:
        if rows is None:
            failures += 1
            if len(messages) < 5:
                messages.append(message)
            continue
        rows_by_company.append(rows)
    if not rows_by_company:
        raise ResampleError(
            f"all {n_draws} retraining replications failed; first errors: {messages}"
        )
    stacked = np.stack(rows_by_company)  # (B_eff, C, 3)
    metadata = {
        "warm_start": warm_start,
        "retrain_errors": tuple(messages),
    }
    per_company = {}
    for c, company_id in enumerate(data.company_ids):
        per_company[company_id] = ReserveDistribution(
            generator=generator,
            seed=seed,
            requested=n_draws,
            draws=stacked[:, c, :],
            failures=failures,
            metadata=dict(metadata, company_id=company_id),
        )
    total = ReserveDistribution(
        generator=generator,
        seed=seed,
        requested=n_draws,
        draws=stacked.sum(axis=1),
        failures=failures,
        metadata=metadata,
    )
    return EdtDistribution(per_company=per_company, total=total)
