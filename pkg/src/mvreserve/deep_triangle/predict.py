"""Lower-triangle prediction, reserve point estimates, checkpoints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numgrad import ParameterStore, load_checkpoint, save_checkpoint
from ..triangles import (
    LossTriangle,
    PortfolioDataset,
    TrianglePair,
    lower_index_set,
)
from .model import DtModel, forward_values, parameter_shapes
from .samples import build_test_samples, stack_samples


@dataclass(frozen=True)
class ReserveEstimate:
    company_id: str
    r1: float
    r2: float
    total: float


@dataclass(frozen=True)
class PredictionResult:
    """Per-company reserves plus the completed squares."""

    estimates: tuple[ReserveEstimate, ...]
    squares: tuple[TrianglePair, ...]

    def for_company(self, company_id: str) -> ReserveEstimate:
        for est in self.estimates:
            if est.company_id == company_id:
                return est
        raise KeyError(company_id)

    @property
    def totals(self) -> tuple[float, float, float]:
        r1 = sum(e.r1 for e in self.estimates)
        r2 = sum(e.r2 for e in self.estimates)
        return r1, r2, r1 + r2


def predict_reserves(model: DtModel, data: PortfolioDataset) -> PredictionResult:
    """Fill every company's lower triangle from the diagonal anchors.

    The test sample anchored at (i, I+2-i) consumes row i's full
    observed history; decoder steps 1..i-1 supply the predictions for
    development years I-i+2..I. Reserves destandardize by the accident
    year's premium and sum over the lower index set.
    """
    i_max = data.origin_count
    batch = stack_samples(build_test_samples(data))
    company_index = np.array(
        [model.company_index(cid) for cid in batch.company_ids], dtype=np.intp
    )
    values = forward_values(model, batch.x, batch.x_mask, company_index)

    predicted: dict[str, dict[tuple[int, int], tuple[float, float]]] = {
        pair.company_id: {} for pair in data.companies
    }
    for row, (i, j) in enumerate(batch.anchors):
        cid = batch.company_ids[row]
        for step in range(i - 1):  # decoder steps that land in row i's lower cells
            jj = j + step
            predicted[cid][(i, jj)] = (
                float(values[row, step, 0]),
                float(values[row, step, 1]),
            )

    estimates = []
    squares = []
    lower = sorted(lower_index_set(i_max))
    for pair in data.companies:
        cells = predicted[pair.company_id]
        w1 = pair.lob1.premiums
        w2 = pair.lob2.premiums
        filled1 = dict(pair.lob1.cells)
        filled2 = dict(pair.lob2.cells)
        r1 = 0.0
        r2 = 0.0
        for (i, j) in lower:
            y1, y2 = cells[(i, j)]
            x1 = y1 * w1[i - 1]
            x2 = y2 * w2[i - 1]
            filled1[(i, j)] = x1
            filled2[(i, j)] = x2
            r1 += x1
            r2 += x2
        estimates.append(ReserveEstimate(pair.company_id, r1, r2, r1 + r2))
        squares.append(
            TrianglePair(
                company_id=pair.company_id,
                lob1=LossTriangle(
                    pair.company_id, pair.lob1.lob, i_max, filled1,
                    pair.lob1.premiums, pair.lob1.year_labels,
                ),
                lob2=LossTriangle(
                    pair.company_id, pair.lob2.lob, i_max, filled2,
                    pair.lob2.premiums, pair.lob2.year_labels,
                ),
            )
        )
    return PredictionResult(estimates=tuple(estimates), squares=tuple(squares))


def save_model(model: DtModel, path: str) -> None:
    meta = {
        "company_ids": list(model.company_ids),
        "origin_count": model.origin_count,
        "hidden": model.hidden,
        **{k: v for k, v in model.meta.items()},
    }
    save_checkpoint(path, model.store.params, meta)


def load_model(path: str) -> DtModel:
    params, meta = load_checkpoint(path)
    company_ids = tuple(meta["company_ids"])
    hidden = int(meta["hidden"])
    origin_count = int(meta["origin_count"])
    expected = parameter_shapes(len(company_ids), hidden)
    if set(expected) != set(params) or any(
        params[name].shape != shape for name, shape in expected.items()
    ):
        raise ValueError(
            f"{path}: checkpoint parameters do not match architecture "
            f"(companies={len(company_ids)}, hidden={hidden})"
        )
    store = ParameterStore(params=params)
    extra = {
        k: v
        for k, v in meta.items()
        if k not in ("company_ids", "origin_count", "hidden")
    }
    return DtModel(
        company_ids=company_ids,
        origin_count=origin_count,
        hidden=hidden,
        store=store,
        meta=extra,
    )
