"""Probability transforms and the two training losses."""

from __future__ import annotations

import numpy as np

from .errors import ContractError

PROB_FLOOR = 1e-12


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def cross_entropy_loss(probs: np.ndarray, label: int) -> float:
    """``-log(probs[label])`` with a probability floor of 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[-1]:
        raise ContractError(f"label {label} out of range for {probs.shape[-1]} classes")
    return float(-np.log(max(probs[label], PROB_FLOOR)))


def bce_with_logits_loss(logit: float, label: int) -> float:
    """Binary cross-entropy on a raw logit, stable for large ``|logit|``."""
    return float(bce_with_logits(np.asarray(logit, dtype=np.float64), np.asarray(label)))


def bce_with_logits(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Elementwise ``softplus(l) - y * l`` without overflow."""
    return np.maximum(logits, 0.0) - logits * labels + np.log1p(np.exp(-np.abs(logits)))


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-row floored cross-entropy for a (B, C) probability matrix."""
    picked = probs[np.arange(len(labels)), labels]
    return -np.log(np.maximum(picked, PROB_FLOOR))
