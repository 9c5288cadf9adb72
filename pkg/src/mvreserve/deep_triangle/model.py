"""The reserve predictor: company embedding, GRU encoder-decoder, two heads.

The gated recurrent cell follows the update rule

    r = sigmoid(W_r [h_prev, q] + b_r)
    z = sigmoid(W_z [h_prev, q] + b_z)
    h_tilde = tanh(W_h [r * h_prev, q] + b_h)
    h = z * h_tilde + (1 - z) * h_prev

with z gating the candidate state (so z -> 1 discards the previous
state, z -> 0 keeps it). The encoder consumes the masked input history
with the company embedding concatenated to every step; its final hidden
state seeds the decoder, whose input at each step is its own previous
hidden state. Each decoder step feeds two small heads (one hidden layer
of 64 ReLU units, then a linear unit) producing the per-LOB predictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import numgrad as ng
from ..numgrad import ParameterStore, Tape, Tensor

HEAD_HIDDEN = 64


@dataclass
class DtModel:
    """All learned weights plus the metadata needed to rebuild them."""

    company_ids: tuple[str, ...]
    origin_count: int
    hidden: int
    store: ParameterStore
    meta: dict = field(default_factory=dict)

    @property
    def company_count(self) -> int:
        return len(self.company_ids)

    @property
    def embedding_dim(self) -> int:
        return self.company_count - 1

    def company_index(self, company_id: str) -> int:
        try:
            return self.company_ids.index(company_id)
        except ValueError:
            raise KeyError(f"unknown company id {company_id!r}") from None

    def copy(self) -> "DtModel":
        store = ParameterStore(params=self.store.copy_values())
        return DtModel(
            company_ids=self.company_ids,
            origin_count=self.origin_count,
            hidden=self.hidden,
            store=store,
            meta=dict(self.meta),
        )


def parameter_shapes(company_count: int, hidden: int) -> dict[str, tuple[int, ...]]:
    emb_dim = company_count - 1
    enc_in = 2 + emb_dim
    shapes: dict[str, tuple[int, ...]] = {}
    if emb_dim > 0:
        shapes["embedding"] = (company_count, emb_dim)
    for prefix, in_dim in (("enc", enc_in), ("dec", hidden)):
        for gate in ("r", "z", "h"):
            shapes[f"{prefix}.W_{gate}"] = (hidden + in_dim, hidden)
            shapes[f"{prefix}.b_{gate}"] = (hidden,)
    for head in ("head1", "head2"):
        shapes[f"{head}.W"] = (hidden, HEAD_HIDDEN)
        shapes[f"{head}.b"] = (HEAD_HIDDEN,)
        shapes[f"{head}.V"] = (HEAD_HIDDEN, 1)
        shapes[f"{head}.c"] = (1,)
    return shapes


def init_model(
    company_ids: Sequence[str],
    origin_count: int,
    hidden: int,
    rng: np.random.Generator,
    meta: dict | None = None,
) -> DtModel:
    """He-initialized weights; biases start at zero."""
    company_ids = tuple(company_ids)
    store = ParameterStore()
    for name, shape in parameter_shapes(len(company_ids), hidden).items():
        if name.endswith(('.b_r', '.b_z', '.b_h', '.b', '.c')):
            store.add(name, np.zeros(shape))
        else:
            store.add(name, ng.he_init(shape, rng))
    return DtModel(
        company_ids=company_ids,
        origin_count=origin_count,
        hidden=hidden,
        store=store,
        meta=meta or {},
    )


def gru_cell(
    q: Tensor,
    h_prev: Tensor,
    weights: dict[str, Tensor],
    prefix: str,
) -> Tensor:
    """One gated recurrent step on the tape; see the module docstring."""
    hq = ng.concat([h_prev, q], axis=1)
    r = ng.sigmoid(ng.add(ng.matmul(hq, weights[f"{prefix}.W_r"]), weights[f"{prefix}.b_r"]))
    z = ng.sigmoid(ng.add(ng.matmul(hq, weights[f"{prefix}.W_z"]), weights[f"{prefix}.b_z"]))
    rh_q = ng.concat([ng.mul(r, h_prev), q], axis=1)
    h_tilde = ng.tanh(ng.add(ng.matmul(rh_q, weights[f"{prefix}.W_h"]), weights[f"{prefix}.b_h"]))
    return ng.add(ng.mul(z, h_tilde), ng.mul(ng.shift(ng.scale(z, -1.0), 1.0), h_prev))


def _head(h: Tensor, weights: dict[str, Tensor], name: str) -> Tensor:
    hidden = ng.relu(ng.add(ng.matmul(h, weights[f"{name}.W"]), weights[f"{name}.b"]))
    return ng.add(ng.matmul(hidden, weights[f"{name}.V"]), weights[f"{name}.c"])


def forward(
    model: DtModel,
    x: np.ndarray,
    x_mask: np.ndarray,
    company_index: np.ndarray,
    tape: Tape,
) -> list[Tensor]:
    """Runs the network on a stacked batch.

    Returns one (batch, 2) tensor per decoder step; step v predicts the
    pair at target position v. Masked input steps carry the hidden
    state through unchanged, so padding never leaks into the state.
    """
    batch, window, _ = x.shape
    if window != model.origin_count - 1:
        raise ValueError(
            f"expected window {model.origin_count - 1}, got {window}"
        )
    if np.any(company_index >= model.company_count):
        raise KeyError("company index out of range for this model")
    weights = {name: tape.parameter(name, value) for name, value in model.store.params.items()}

    if model.embedding_dim > 0:
        emb = ng.take_rows(weights["embedding"], company_index)
    else:
        emb = None
    h = tape.constant(np.zeros((batch, model.hidden)))
    for t in range(window):
        x_t = tape.constant(x[:, t, :])
        q = ng.concat([x_t, emb], axis=1) if emb is not None else x_t
        h_new = gru_cell(q, h, weights, "enc")
        h = ng.masked_carry(h_new, h, x_mask[:, t])

    outputs: list[Tensor] = []
    for _ in range(window):
        h = gru_cell(h, h, weights, "dec")
        out1 = _head(h, weights, "head1")
        out2 = _head(h, weights, "head2")
        outputs.append(ng.concat([out1, out2], axis=1))
    return outputs


def forward_values(
    model: DtModel,
    x: np.ndarray,
    x_mask: np.ndarray,
    company_index: np.ndarray,
) -> np.ndarray:
    """Plain-array predictions of shape (batch, I-1, 2)."""
    tape = Tape()
    steps = forward(model, x, x_mask, company_index, tape)
    return np.stack([s.value for s in steps], axis=1)
