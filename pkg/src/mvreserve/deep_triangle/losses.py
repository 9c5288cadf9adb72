"""Training losses over masked prediction/target windows.

Both losses average, per sample, over that sample's valid target steps
and then average over the batch. The symmetric form weighs the two
LOBs' squared errors equally:

    per step: (e1^2 + e2^2) / 2.

The asymmetric form divides each LOB's squared error by twice the
population variance of that sample's own valid target steps,

    per step: e1^2 / (2 s1^2) + e2^2 / (2 s2^2),

with each variance floored at EPS_VAR so length-one target windows
(zero sample variance) stay finite. The variances are data constants:
no gradient flows through them.
"""

from __future__ import annotations

import numpy as np

from .. import numgrad as ng
from ..numgrad import Tape, Tensor

SYMMETRIC = "symmetric"
ASYMMETRIC = "asymmetric"
LOSS_KINDS = (SYMMETRIC, ASYMMETRIC)
EPS_VAR = 1e-6


def column_weights(kind: str, y: np.ndarray, y_mask: np.ndarray) -> np.ndarray:
    """Per-sample, per-LOB error weights of shape (batch, 2)."""
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}, expected one of {LOSS_KINDS}")
    batch = y.shape[0]
    if kind == SYMMETRIC:
        return np.full((batch, 2), 0.5)
    weights = np.empty((batch, 2))
    for s in range(batch):
        valid = y_mask[s]
        if not valid.any():
            raise ValueError(f"sample {s} has no valid target steps")
        for lob in range(2):
            variance = float(np.var(y[s, valid, lob]))  # population variance
            weights[s, lob] = 1.0 / (2.0 * max(variance, EPS_VAR))
    return weights


def masked_loss(
    pred_steps: list[Tensor],
    y: np.ndarray,
    y_mask: np.ndarray,
    kind: str,
    tape: Tape,
) -> Tensor:
    """Scalar batch loss; masked target positions contribute exactly zero."""
    batch, window, _ = y.shape
    if len(pred_steps) != window:
        raise ValueError(f"expected {window} prediction steps, got {len(pred_steps)}")
    valid_counts = y_mask.sum(axis=1)
    if np.any(valid_counts == 0):
        raise ValueError("every sample needs at least one valid target step")
    col_w = column_weights(kind, y, y_mask)
    # combined weight of squared error (s, v, lob):
    # mask / (valid steps of s * batch) * column weight
    base = y_mask / (valid_counts[:, None] * batch)
    loss: Tensor | None = None
    for v in range(window):
        step_weights = base[:, v : v + 1] * col_w  # (batch, 2)
        if not step_weights.any():
            continue
        err = ng.sub(pred_steps[v], tape.constant(y[:, v, :]))
        weighted = ng.mul(ng.square(err), tape.constant(step_weights))
        term = ng.total_sum(weighted)
        loss = term if loss is None else ng.add(loss, term)
    assert loss is not None  # guaranteed by the valid-count check
    return loss


def evaluate_loss(
    pred_values: np.ndarray, y: np.ndarray, y_mask: np.ndarray, kind: str
) -> float:
    """Plain-array twin of masked_loss for monitoring passes."""
    valid_counts = y_mask.sum(axis=1)
    if np.any(valid_counts == 0):
        raise ValueError("every sample needs at least one valid target step")
    batch = y.shape[0]
    col_w = column_weights(kind, y, y_mask)
    weights = (y_mask / (valid_counts[:, None] * batch))[:, :, None] * col_w[:, None, :]
    err = pred_values - y
    return float((weights * err * err).sum())
