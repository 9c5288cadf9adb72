"""Masked sequence samples for the reserve predictor.

Each (accident year i, development year j) anchor of a company yields
one sample over the paired standardized losses (Y1, Y2):

  input:  the history (Y_{i,1}, ..., Y_{i,j-1}), right-aligned in a
          length I-1 window, earlier positions masked off;
  target: the future (Y_{i,j}, ..., Y_{i,I+1-i}), left-aligned in a
          length I-1 window, later positions masked off.

Training anchors are 1 <= i <= I-1, 2 <= j <= I+1-i (the last accident
year's single cell is never used for training). Test anchors sit on the
first unobserved diagonal i + j = I + 2 for 2 <= i <= I, with the full
observed row as input and an empty target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..triangles import PortfolioDataset, TriangleError, standardize


@dataclass(frozen=True)
class SequenceSample:
    """One anchored input/target window pair for one company."""

    company_id: str
    company_index: int
    anchor: tuple[int, int]
    x: np.ndarray  # (I-1, 2) input values, masked positions zero
    x_mask: np.ndarray  # (I-1,) boolean validity
    y: np.ndarray  # (I-1, 2) target values, masked positions zero
    y_mask: np.ndarray  # (I-1,) boolean validity


def training_anchors(origin_count: int) -> list[tuple[int, int]]:
    """All training anchors (i, j): 1 <= i <= I-1, 2 <= j <= I+1-i."""
    i_max = origin_count
    return [
        (i, j)
        for i in range(1, i_max)
        for j in range(2, i_max - i + 2)
    ]


def test_anchors(origin_count: int) -> list[tuple[int, int]]:
    """Diagonal anchors (i, I+2-i) for 2 <= i <= I."""
    i_max = origin_count
    return [(i, i_max + 2 - i) for i in range(2, i_max + 1)]


def _make_sample(
    std1, std2, company_index: int, anchor: tuple[int, int],
    origin_count: int, max_history: int | None,
) -> SequenceSample:
    i_max = origin_count
    window = i_max - 1
    i, j = anchor
    x = np.zeros((window, 2))
    x_mask = np.zeros(window, dtype=bool)
    history = [(std1.cell(i, jj), std2.cell(i, jj)) for jj in range(1, j)]
    if max_history is not None:
        history = history[-max_history:]
    for step, pair_values in enumerate(history):
        pos = window - len(history) + step  # right-aligned
        x[pos] = pair_values
        x_mask[pos] = True
    y = np.zeros((window, 2))
    y_mask = np.zeros(window, dtype=bool)
    future_end = i_max + 1 - i  # last observed dev year of row i
    targets = list(range(j, future_end + 1))
    if max_history is not None:
        targets = targets[:max_history]
    for step, jj in enumerate(targets):  # left-aligned
        y[step] = (std1.cell(i, jj), std2.cell(i, jj))
        y_mask[step] = True
    return SequenceSample(
        company_id=std1.company_id,
        company_index=company_index,
        anchor=anchor,
        x=x,
        x_mask=x_mask,
        y=y,
        y_mask=y_mask,
    )


def build_training_samples(
    data: PortfolioDataset, max_history: int | None = None
) -> list[SequenceSample]:
    """One sample per company per training anchor, company-major order.

    max_history caps the sequence length on both sides of the anchor:
    only the most recent max_history input steps stay valid, and only
    the first max_history future steps are kept as scored targets.
    Used by the sequence-length sweep; None keeps everything.
    """
    i_max = data.origin_count
    if i_max < 3:
        raise TriangleError(f"no trainable anchors for origin_count={i_max}")
    anchors = training_anchors(i_max)
    samples = []
    for c, pair in enumerate(data.companies):
        std1, std2 = standardize(pair.lob1), standardize(pair.lob2)
        for anchor in anchors:
            samples.append(_make_sample(std1, std2, c, anchor, i_max, max_history))
    return samples


def build_test_samples(
    data: PortfolioDataset, max_history: int | None = None
) -> list[SequenceSample]:
    """Diagonal-anchor samples with full observed history, empty target."""
    i_max = data.origin_count
    samples = []
    for c, pair in enumerate(data.companies):
        std1, std2 = standardize(pair.lob1), standardize(pair.lob2)
        for anchor in test_anchors(i_max):
            samples.append(_make_sample(std1, std2, c, anchor, i_max, max_history))
    return samples


def split_train_validation(
    samples: list[SequenceSample], fraction: float, rng: np.random.Generator
) -> tuple[list[SequenceSample], list[SequenceSample]]:
    """Partition the anchor set once and apply it to every company.

    Samples sharing an (i, j) anchor land on the same side for all
    companies, so paired sequences stay aligned across the corpus.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    anchors = sorted({s.anchor for s in samples})
    n_train = int(round(fraction * len(anchors)))
    if n_train == 0 or n_train == len(anchors):
        raise ValueError(
            f"split leaves an empty side: {len(anchors)} anchors at fraction {fraction}"
        )
    order = rng.permutation(len(anchors))
    train_set = {anchors[k] for k in order[:n_train]}
    train = [s for s in samples if s.anchor in train_set]
    valid = [s for s in samples if s.anchor not in train_set]
    return train, valid


@dataclass(frozen=True)
class SampleBatch:
    """Samples stacked into arrays for the batched forward pass."""

    x: np.ndarray  # (N, T, 2)
    x_mask: np.ndarray  # (N, T)
    y: np.ndarray  # (N, T, 2)
    y_mask: np.ndarray  # (N, T)
    company_index: np.ndarray  # (N,)
    anchors: list[tuple[int, int]]
    company_ids: list[str]

    @property
    def size(self) -> int:
        return self.x.shape[0]

    def select(self, indices: np.ndarray) -> "SampleBatch":
        idx = np.asarray(indices)
        return SampleBatch(
            x=self.x[idx],
            x_mask=self.x_mask[idx],
            y=self.y[idx],
            y_mask=self.y_mask[idx],
            company_index=self.company_index[idx],
            anchors=[self.anchors[k] for k in idx],
            company_ids=[self.company_ids[k] for k in idx],
        )


def stack_samples(samples: list[SequenceSample]) -> SampleBatch:
    if not samples:
        raise ValueError("cannot stack an empty sample list")
    return SampleBatch(
        x=np.stack([s.x for s in samples]),
        x_mask=np.stack([s.x_mask for s in samples]),
        y=np.stack([s.y for s in samples]),
        y_mask=np.stack([s.y_mask for s in samples]),
        company_index=np.array([s.company_index for s in samples], dtype=np.intp),
        anchors=[s.anchor for s in samples],
        company_ids=[s.company_id for s in samples],
    )
