"""GRU sequence-to-sequence reserve predictor over paired loss triangles."""

from .losses import ASYMMETRIC, EPS_VAR, LOSS_KINDS, SYMMETRIC, evaluate_loss, masked_loss
from .model import DtModel, forward, forward_values, gru_cell, init_model
from .predict import (
    PredictionResult,
    ReserveEstimate,
    load_model,
    predict_reserves,
    save_model,
)
from .samples import (
    SampleBatch,
    SequenceSample,
    build_test_samples,
    build_training_samples,
    split_train_validation,
    stack_samples,
    test_anchors,
    training_anchors,
)
from .training import (
    EpochRecord,
    TrainConfig,
    TrainingDivergence,
    TrainResult,
    fine_tune,
    train,
    train_on_batches,
)

__all__ = [
    "ASYMMETRIC",
    "EPS_VAR",
    "LOSS_KINDS",
    "SYMMETRIC",
    "DtModel",
    "EpochRecord",
    "PredictionResult",
    "ReserveEstimate",
    "SampleBatch",
    "SequenceSample",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergence",
    "build_test_samples",
    "build_training_samples",
    "evaluate_loss",
    "fine_tune",
    "forward",
    "forward_values",
    "gru_cell",
    "init_model",
    "load_model",
    "masked_loss",
    "predict_reserves",
    "save_model",
    "split_train_validation",
    "stack_samples",
    "test_anchors",
    "train",
    "train_on_batches",
    "training_anchors",
]
