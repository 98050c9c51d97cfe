"""Mini-batch Adam training of masked models."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, SplitData
from .diff import _loss_from_logits, loss_and_gradient
from .errors import ConfigError, ContractError, NumericError
from .losses import bce_with_logits_loss, cross_entropy_loss  # noqa: F401  (re-exported)
from .models import ModelSpec, logits, predict
from .pruning import apply_mask

log = logging.getLogger(__name__)

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    weight_decay: float = 0.0
    epochs: int = 100
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ConfigError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class TrainHistory:
    train_accuracy: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)

    @property
    def best_val_accuracy(self) -> float:
        return max(self.val_accuracy) if self.val_accuracy else float("nan")

    def to_dict(self) -> dict:
        return {
            "train_accuracy": list(self.train_accuracy),
            "val_accuracy": list(self.val_accuracy),
            "train_loss": list(self.train_loss),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainHistory":
        return cls(list(data["train_accuracy"]), list(data["val_accuracy"]), list(data["train_loss"]))


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grads, state: AdamState, lr: float, weight_decay: float, t: int, mask=None):
    """One bias-corrected Adam update with L2 (coupled) weight decay.

    Returns ``(new_params, new_state)``; inputs are not modified.
    """
    if t < 1:
        raise ContractError("Adam step index starts at 1")
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise ContractError("params, grads and Adam state must align")
    if not np.all(np.isfinite(grads)):
        raise NumericError(f"non-finite gradient at Adam step {t}")
    g = grads + weight_decay * params if weight_decay else grads
    m = BETA1 * state.m + (1 - BETA1) * g
    v = BETA2 * state.v + (1 - BETA2) * g * g
    bias1 = 1 - BETA1**t
    bias2 = 1 - BETA2**t
    denom = np.sqrt(v) / math.sqrt(bias2) + EPS
    new = params - (lr / bias1) * m / denom
    if mask is not None:
        new = apply_mask(new, mask)
    return new, AdamState(m, v, t)


def evaluate(spec: ModelSpec, params: np.ndarray, dataset: Dataset) -> float:
    """Fraction of correctly classified rows."""
    if len(dataset) == 0:
        raise ContractError("cannot evaluate on an empty split")
    return float(np.mean(predict(spec, params, dataset.features) == dataset.labels))


def _accuracy_and_loss(spec, params, dataset):
    z = logits(spec, params, dataset.features)
    pred = (z > 0).astype(np.int64) if spec.family == "bvqc" else np.argmax(z, axis=1)
    return float(np.mean(pred == dataset.labels)), _loss_from_logits(spec, z, dataset.labels)


def train(spec: ModelSpec, params: np.ndarray, mask, data: SplitData, config: TrainConfig):
    """Train for ``config.epochs`` epochs; return ``(params, history)``.

    Batches are drawn from a per-epoch shuffle seeded by ``config.seed``.
    The mask is re-applied after every step, so pruned weights stay 0.
    History is recorded at the end of each epoch.
    """
    mask = np.asarray(mask, dtype=bool) if mask is not None else None
    params = np.array(params, dtype=np.float64)
    if mask is not None:
        params = apply_mask(params, mask)
    history = TrainHistory()
    X, y = data.train.features, data.train.labels
    rng = np.random.default_rng(config.seed)
    state = AdamState.zeros(params.size)
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), config.batch_size):
            idx = order[start : start + config.batch_size]
            step += 1
            try:
                _, grad = loss_and_gradient(spec, params, (X[idx], y[idx]), mask)
                params, state = adam_step(
                    params, grad, state, config.learning_rate, config.weight_decay, step, mask
                )
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}, step {step}: {exc}") from exc
        train_acc, train_loss = _accuracy_and_loss(spec, params, data.train)
        history.train_accuracy.append(train_acc)
        history.train_loss.append(train_loss)
        history.val_accuracy.append(evaluate(spec, params, data.validation))
        log.debug("epoch %d loss %.4f train %.3f val %.3f", epoch, train_loss, train_acc, history.val_accuracy[-1])
    return params, history
