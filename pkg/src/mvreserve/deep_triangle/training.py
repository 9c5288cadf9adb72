"""Training loop: minibatch AMSGRAD with early stopping on validation loss.

The validation loss is evaluated once before any update (epoch 0), so
the returned weights can never be worse than the starting point; this
is what makes warm-started fine-tuning safe. Training stops when the
validation loss has not improved for `patience` consecutive epochs and
returns the weights from the epoch with the lowest validation loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from ..numgrad import Tape, amsgrad_step
from ..triangles import PortfolioDataset
from .losses import LOSS_KINDS, SYMMETRIC, evaluate_loss, masked_loss
from .model import DtModel, forward, forward_values, init_model
from .samples import (
    SampleBatch,
    build_training_samples,
    split_train_validation,
    stack_samples,
)


class TrainingDivergence(FloatingPointError):
    """Raised when a loss becomes non-finite; carries the epoch index."""

    def __init__(self, epoch: int, message: str) -> None:
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training job."""

    max_epochs: int = 1000
    patience: int = 100
    split_fraction: float = 0.8
    loss_kind: str = SYMMETRIC
    learning_rate: float = 5e-4
    batch_size: int = 32
    seed: int = 0
    hidden: int = 128

    def __post_init__(self) -> None:
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError(f"split_fraction must be in (0, 1), got {self.split_fraction}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.patience > self.max_epochs:
            raise ValueError("patience cannot exceed max_epochs")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")
        if self.hidden < 1 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("hidden, batch_size, and max_epochs must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    valid_loss: float


@dataclass
class TrainResult:
    model: DtModel
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_valid_loss: float = math.inf
    stopped_epoch: int = 0


def _epoch_loss(model: DtModel, batch: SampleBatch, kind: str) -> float:
    values = forward_values(model, batch.x, batch.x_mask, batch.company_index)
    loss = evaluate_loss(values, batch.y, batch.y_mask, kind)
    if not math.isfinite(loss):
        raise FloatingPointError("non-finite evaluation loss")
    return loss


def train_on_batches(
    train_batch: SampleBatch,
    valid_batch: SampleBatch,
    config: TrainConfig,
    company_ids: tuple[str, ...],
    origin_count: int,
    init: DtModel | None = None,
) -> TrainResult:
    """Core loop over pre-stacked corpora; `init` warm-starts the weights."""
    seed_seq = np.random.SeedSequence(config.seed)
    init_seed, shuffle_seed = seed_seq.spawn(2)
    if init is None:
        model = init_model(
            company_ids,
            origin_count,
            config.hidden,
            np.random.default_rng(init_seed),
            meta={"config": config.to_dict()},
        )
    else:
        if init.origin_count != origin_count or init.company_ids != tuple(company_ids):
            raise ValueError("warm-start model does not match the corpus")
        if init.hidden != config.hidden:
            raise ValueError(
                f"warm-start hidden width {init.hidden} differs from config {config.hidden}"
            )
        model = init.copy()
        model.meta["config"] = config.to_dict()
    model.store.reset_optimizer_state()

    shuffle_rng = np.random.default_rng(shuffle_seed)
    result = TrainResult(model=model)

    try:
        valid_loss = _epoch_loss(model, valid_batch, config.loss_kind)
        train_loss = _epoch_loss(model, train_batch, config.loss_kind)
    except FloatingPointError as exc:
        raise TrainingDivergence(0, str(exc)) from None
    result.history.append(EpochRecord(0, train_loss, valid_loss))
    best_valid = valid_loss
    best_weights = model.store.copy_values()
    best_epoch = 0
    bad_epochs = 0

    n = train_batch.size
    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            minibatch = train_batch.select(order[start : start + config.batch_size])
            tape = Tape()
            steps = forward(model, minibatch.x, minibatch.x_mask, minibatch.company_index, tape)
            loss = masked_loss(steps, minibatch.y, minibatch.y_mask, config.loss_kind, tape)
            if not math.isfinite(float(loss.value)):
                raise TrainingDivergence(epoch, "non-finite training loss")
            grads = tape.backward(loss)
            amsgrad_step(model.store, grads, lr=config.learning_rate)
            epoch_losses.append(float(loss.value))
        try:
            valid_loss = _epoch_loss(model, valid_batch, config.loss_kind)
        except FloatingPointError as exc:
            raise TrainingDivergence(epoch, str(exc)) from None
        result.history.append(EpochRecord(epoch, float(np.mean(epoch_losses)), valid_loss))
        if valid_loss < best_valid:
            best_valid = valid_loss
            best_weights = model.store.copy_values()
            best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
        if bad_epochs >= config.patience:
            break

    model.store.load_values(best_weights)
    model.store.reset_optimizer_state()
    model.meta.update(
        best_epoch=best_epoch,
        best_valid_loss=best_valid,
        stopped_epoch=result.history[-1].epoch,
    )
    result.best_epoch = best_epoch
    result.best_valid_loss = best_valid
    result.stopped_epoch = result.history[-1].epoch
    return result


def train(
    data: PortfolioDataset,
    config: TrainConfig,
    init: DtModel | None = None,
    max_history: int | None = None,
) -> TrainResult:
    """Build samples from a dataset, split by anchor, and train."""
    samples = build_training_samples(data, max_history=max_history)
    split_rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0xA11C)))
    train_samples, valid_samples = split_train_validation(
        samples, config.split_fraction, split_rng
    )
    return train_on_batches(
        stack_samples(train_samples),
        stack_samples(valid_samples),
        config,
        company_ids=data.company_ids,
        origin_count=data.origin_count,
        init=init,
    )


def fine_tune(
    model: DtModel,
    new_data: PortfolioDataset,
    config: TrainConfig,
    max_history: int | None = None,
) -> TrainResult:
    """Resume training from saved weights with a fresh optimizer."""
    return train(new_data, config, init=model, max_history=max_history)
