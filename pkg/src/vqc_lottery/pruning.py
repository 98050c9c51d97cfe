"""Masks over the prunable prefix of a parameter vector.

Only rotation angles (VQC) and weight matrices (SNN) are prunable; the VQC
output head and SNN biases are never masked. Masks are boolean numpy
arrays, ``True`` meaning the weight survives.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import ContractError
from .models import ModelSpec

# absorbs float noise such as 0.29 * 100 == 28.999999999999996
_FLOOR_EPS = 1e-9


class RemainingWeights(NamedTuple):
    count: int
    percent: float


def initial_mask(spec: ModelSpec) -> np.ndarray:
    return np.ones(spec.n_prunable, dtype=bool)


def prune_count(surviving: int, fraction: float, rounding: str = "floor") -> int:
    """Number of survivors to remove when pruning ``fraction`` of them.

    ``floor`` is the default; ``round`` (half to even) is what
    ``torch.nn.utils.prune`` does with a float amount.
    """
    exact = fraction * surviving
    if rounding == "floor":
        return min(int(math.floor(exact + _FLOOR_EPS)), surviving)
    if rounding == "round":
        return min(int(round(exact)), surviving)
    raise ContractError(f"unknown rounding mode {rounding!r}")


def magnitude_prune(params: np.ndarray, mask: np.ndarray, fraction: float, rounding: str = "floor") -> np.ndarray:
    """Global unstructured magnitude pruning of the surviving weights.

    The smallest ``|value|`` survivors lose their bit; equal magnitudes are
    pruned lower index first. Already-pruned bits stay pruned.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ContractError("fraction must be in [0, 1]")
    mask = np.asarray(mask, dtype=bool)
    params = np.asarray(params, dtype=np.float64)
    if mask.ndim != 1 or mask.size > params.size:
        raise ContractError("mask must be 1-D and no longer than params")
    survivors = np.flatnonzero(mask)
    k = prune_count(survivors.size, fraction, rounding)
    out = mask.copy()
    if k:
        order = np.argsort(np.abs(params[survivors]), kind="stable")
        out[survivors[order[:k]]] = False
    return out


def apply_mask(params: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Copy of ``params`` with pruned prefix positions set to exactly 0."""
    params = np.array(params, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 1 or mask.size > params.size:
        raise ContractError(f"mask of shape {mask.shape} does not fit {params.size} parameters")
    params[: mask.size][~mask] = 0.0
    return params


def remaining_weights(mask: np.ndarray) -> RemainingWeights:
    mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    percent = 100.0 * count / mask.size if mask.size else 0.0
    return RemainingWeights(count, percent)


def mask_to_bits(mask: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in np.asarray(mask, dtype=bool))


def bits_to_mask(bits: str) -> np.ndarray:
    if set(bits) - {"0", "1"}:
        raise ContractError("mask bit-string may only contain 0 and 1")
    return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) == ord("1")
