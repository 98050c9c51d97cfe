"""Exact loss gradients for all three model families.

VQC rotation angles are differentiated with the adjoint method in
``_engine.backward``; the affine head and the SNN use the chain rule
through softmax/sigmoid directly.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, NumericError
from .losses import PROB_FLOOR, bce_with_logits, cross_entropy, sigmoid, softmax
from .models import (
    ModelSpec,
    _check_features,
    _check_params,
    count_parameters,
    expectation_vjp,
    logits,
    split_snn_params,
    split_vqc_params,
)


def _check_batch(spec, params, batch):
    X, y = batch
    params = _check_params(spec, params)
    X = _check_features(spec, X)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0 or y.shape != (len(X),):
        raise ContractError("batch must be nonempty with one label per row")
    if y.min() < 0 or y.max() >= spec.n_classes:
        raise ContractError("labels out of range")
    return params, X, y


def batch_loss(spec: ModelSpec, params: np.ndarray, batch) -> float:
    """Mean loss over ``batch = (features, labels)``."""
    params, X, y = _check_batch(spec, params, batch)
    return _loss_from_logits(spec, logits(spec, params, X), y)


def _loss_from_logits(spec, z, y) -> float:
    if spec.family == "bvqc":
        return float(bce_with_logits(z, y).mean())
    return float(cross_entropy(softmax(z), y).mean())


def _dlogits(spec, z, y):
    """d(mean loss)/d(logits) matching ``_loss_from_logits``."""
    b = len(y)
    if spec.family == "bvqc":
        return (sigmoid(z) - y) / b
    p = softmax(z)
    d = p.copy()
    rows = np.arange(b)
    d[rows, y] -= 1.0
    # the floored region of -log(max(p, floor)) is flat
    d[p[rows, y] < PROB_FLOOR] = 0.0
    return d / b


def loss_and_gradient(spec: ModelSpec, params: np.ndarray, batch, mask=None):
    """Mean batch loss and its gradient w.r.t. every parameter.

    With ``mask`` (boolean over the prunable prefix) the gradient entries of
    pruned weights are reported as exactly zero.
    """
    params, X, y = _check_batch(spec, params, batch)
    grad = np.zeros(count_parameters(spec))

    if spec.is_vqc:
        _, scale, bias = split_vqc_params(spec, params)
        saved = {}

        def upstream(expectations):
            z = expectations * scale + bias
            if spec.family == "bvqc":
                z = z[:, 0]
            dz = _dlogits(spec, z, y)
            if spec.family == "bvqc":
                dz = dz[:, None]
            saved["z"], saved["dz"] = z, dz
            return dz * scale

        expectations, angle_grad = expectation_vjp(spec, params, X, upstream)
        z, dz = saved["z"], saved["dz"]
        k, m = spec.n_prunable, spec.n_outputs
        grad[:k] = angle_grad
        grad[k : k + m] = (dz * expectations).sum(axis=0)
        grad[k + m :] = dz.sum(axis=0)
    else:
        w1, w2, b1, b2 = split_snn_params(spec, params)
        pre = X @ w1.T + b1
        hidden = np.maximum(pre, 0.0)
        z = hidden @ w2.T + b2
        dz = _dlogits(spec, z, y)
        dpre = (dz @ w2) * (pre > 0)
        gw1, gw2, gb1, gb2 = split_snn_params(spec, grad)
        gw1[...] = dpre.T @ X
        gw2[...] = dz.T @ hidden
        gb1[...] = dpre.sum(axis=0)
        gb2[...] = dz.sum(axis=0)

    loss = _loss_from_logits(spec, z, y)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss {loss}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        grad[: mask.size][~mask] = 0.0
    return loss, grad


def loss_gradient(spec: ModelSpec, params: np.ndarray, batch, mask=None) -> np.ndarray:
    return loss_and_gradient(spec, params, batch, mask)[1]


def finite_difference_oracle(spec: ModelSpec, params: np.ndarray, batch, step: float = 1e-4) -> np.ndarray:
    """Central differences of the mean batch loss, one parameter at a time."""
    if step <= 0:
        raise ContractError("step must be positive")
    params = np.array(params, dtype=np.float64)
    grad = np.empty_like(params)
    for i in range(params.size):
        orig = params[i]
        params[i] = orig + step
        up = batch_loss(spec, params, batch)
        params[i] = orig - step
        down = batch_loss(spec, params, batch)
        params[i] = orig
        grad[i] = (up - down) / (2 * step)
    return grad
