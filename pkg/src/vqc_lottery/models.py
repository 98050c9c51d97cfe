"""The three classifiers: multi-class VQC, binary VQC and a small MLP.

Parameter layout (flat float64 vector):

* VQC: Rot angles as ``(n_layers, n_qubits, 3)`` row-major (layer-major,
  qubit-minor, ``(a, b, c)`` innermost), then the output head:
  ``n_outputs`` scales followed by ``n_outputs`` biases.
* SNN: ``W1`` (hidden x features), ``W2`` (classes x hidden), both
  row-major, then ``b1`` and ``b2``.

In both cases the prunable weights form a prefix of the vector.

The VQC head maps each measured wire to a logit ``scale * <Z> + bias``.
Two parameters per measured wire is what makes the published per-model
parameter counts add up; the head itself is a reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import _engine
from .errors import ConfigError, ContractError
from .losses import sigmoid, softmax
from .statevector import MAX_QUBITS, ring_permutation, rot_derivatives, rot_matrices

FAMILIES = ("mvqc", "bvqc", "snn")
VQC_FAMILIES = ("mvqc", "bvqc")


@dataclass(frozen=True)
class ModelSpec:
    family: str
    n_features: int
    n_classes: int
    n_layers: int = 1
    data_reuploading: bool = False
    init_uniform_range: float = math.pi
    hidden_width: int = 24
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        if self.n_features < 1 or self.n_classes < 2:
            raise ConfigError("need at least one feature and two classes")
        if self.family == "bvqc" and self.n_classes != 2:
            raise ConfigError("BVQC requires exactly 2 classes")
        if self.is_vqc:
            if self.n_features > MAX_QUBITS:
                raise ConfigError(f"at most {MAX_QUBITS} qubits supported")
            if self.n_layers < 1:
                raise ConfigError("n_layers must be positive")
            if self.init_uniform_range < 0 or not math.isfinite(self.init_uniform_range):
                raise ConfigError("init_uniform_range must be a finite value >= 0")
            if self.family == "mvqc" and self.n_classes > self.n_features:
                raise ConfigError("MVQC measures one wire per class; need n_classes <= n_features")
        elif self.hidden_width < 1:
            raise ConfigError("hidden_width must be positive")

    @property
    def is_vqc(self) -> bool:
        return self.family in VQC_FAMILIES

    @property
    def n_qubits(self) -> int:
        return self.n_features

    @property
    def n_outputs(self) -> int:
        """Measured wires (VQC) or output units (SNN)."""
        return 1 if self.family == "bvqc" else self.n_classes

    @property
    def n_prunable(self) -> int:
        if self.is_vqc:
            return self.n_layers * self.n_qubits * 3
        return self.hidden_width * (self.n_features + self.n_classes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        return cls(**data)


def count_parameters(spec: ModelSpec) -> int:
    if spec.is_vqc:
        return spec.n_prunable + 2 * spec.n_outputs
    h = spec.hidden_width
    return (spec.n_features * h + h) + (h * spec.n_classes + spec.n_classes)


def init_params(spec: ModelSpec) -> np.ndarray:
    """Seeded initial parameters; same spec always gives the same vector."""
    rng = np.random.default_rng(spec.seed)
    if spec.is_vqc:
        r = spec.init_uniform_range
        angles = rng.uniform(-r, r, size=spec.n_prunable) if r > 0 else np.zeros(spec.n_prunable)
        head = np.concatenate([np.ones(spec.n_outputs), np.zeros(spec.n_outputs)])
        return np.concatenate([angles, head])
    d, h, c = spec.n_features, spec.hidden_width, spec.n_classes
    b1, b2 = 1 / math.sqrt(d), 1 / math.sqrt(h)
    w1 = rng.uniform(-b1, b1, size=h * d)
    w2 = rng.uniform(-b2, b2, size=c * h)
    bias1 = rng.uniform(-b1, b1, size=h)
    bias2 = rng.uniform(-b2, b2, size=c)
    return np.concatenate([w1, w2, bias1, bias2])


def _check_params(spec: ModelSpec, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    expected = count_parameters(spec)
    if params.shape != (expected,):
        raise ContractError(f"expected {expected} parameters, got shape {params.shape}")
    return params


def _check_features(spec: ModelSpec, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.n_features:
        raise ContractError(f"expected features of shape (B, {spec.n_features}), got {X.shape}")
    return X


def split_vqc_params(spec: ModelSpec, params: np.ndarray):
    """Return ``(angles (L, n, 3), scale, bias)`` views into ``params``."""
    k = spec.n_prunable
    m = spec.n_outputs
    angles = params[:k].reshape(spec.n_layers, spec.n_qubits, 3)
    return angles, params[k : k + m], params[k + m : k + 2 * m]


def split_snn_params(spec: ModelSpec, params: np.ndarray):
    """Return ``(W1, W2, b1, b2)`` views into ``params``."""
    d, h, c = spec.n_features, spec.hidden_width, spec.n_classes
    o = 0
    w1 = params[o : o + h * d].reshape(h, d)
    o += h * d
    w2 = params[o : o + c * h].reshape(c, h)
    o += c * h
    b1 = params[o : o + h]
    o += h
    return w1, w2, b1, params[o : o + c]


@lru_cache(maxsize=None)
def ring_gathers(n_qubits: int):
    """(forward, inverse) gather indices for the CNOT ring permutation."""
    f = ring_permutation(n_qubits)
    finv = np.empty_like(f)
    finv[f] = np.arange(f.size)
    return finv.astype(np.int64), f.astype(np.int64)


def _half_angles(X: np.ndarray):
    half = 0.5 * X
    return np.ascontiguousarray(np.cos(half)), np.ascontiguousarray(np.sin(half))


def final_states(spec: ModelSpec, params: np.ndarray, X: np.ndarray):
    """Batched final statevectors as ``(re, im)`` arrays of shape (2**n, B)."""
    angles, _, _ = split_vqc_params(spec, params)
    cos_h, sin_h = _half_angles(X)
    gather, _ = ring_gathers(spec.n_qubits)
    return _engine.forward_state(
        cos_h, sin_h, rot_matrices(angles), gather, spec.n_qubits, spec.data_reuploading
    )


def circuit_expectations(spec: ModelSpec, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    """<Z_k> of the measured wires, shape (B, n_outputs)."""
    params = _check_params(spec, params)
    X = _check_features(spec, X)
    re, im = final_states(spec, params, X)
    return _engine.expect_z(re, im, spec.n_qubits, spec.n_outputs)


def expectation_vjp(spec: ModelSpec, params: np.ndarray, X: np.ndarray, upstream):
    """Expectations and a vector-Jacobian product through the circuit.

    ``upstream`` maps the (B, n_outputs) expectations to the weights ``w``
    of the scalar ``sum(w * <Z>)`` to differentiate; it is a callable
    because a loss needs the forward values before its own gradient exists.

    Returns ``(expectations, angle_grads)`` with ``angle_grads`` flat.
    """
    angles, _, _ = split_vqc_params(spec, params)
    cos_h, sin_h = _half_angles(X)
    gather, scatter = ring_gathers(spec.n_qubits)
    mats = rot_matrices(angles)
    re, im = _engine.forward_state(cos_h, sin_h, mats, gather, spec.n_qubits, spec.data_reuploading)
    expectations = _engine.expect_z(re, im, spec.n_qubits, spec.n_outputs)
    weights = upstream(expectations)
    grads = _engine.backward(
        re,
        im,
        np.ascontiguousarray(weights, dtype=np.float64),
        cos_h,
        sin_h,
        mats,
        rot_derivatives(angles),
        scatter,
        spec.n_qubits,
        spec.data_reuploading,
    )
    return expectations, grads.reshape(-1)


def logits(spec: ModelSpec, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Pre-activation outputs: (B, n_classes) for MVQC/SNN, (B,) for BVQC."""
    params = _check_params(spec, params)
    X = _check_features(spec, X)
    if spec.is_vqc:
        _, scale, bias = split_vqc_params(spec, params)
        re, im = final_states(spec, params, X)
        z = _engine.expect_z(re, im, spec.n_qubits, spec.n_outputs) * scale + bias
        return z[:, 0] if spec.family == "bvqc" else z
    w1, w2, b1, b2 = split_snn_params(spec, params)
    hidden = np.maximum(X @ w1.T + b1, 0.0)
    return hidden @ w2.T + b2


def predict(spec: ModelSpec, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Class labels. Ties go to the lowest class; logit 0 maps to class 0."""
    z = logits(spec, params, X)
    if spec.family == "bvqc":
        return (z > 0).astype(np.int64)
    return np.argmax(z, axis=1)


def _single(spec, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.n_features,):
        raise ContractError(f"expected {spec.n_features} features, got shape {x.shape}")
    return x[None, :]


def mvqc_forward(spec: ModelSpec, params: np.ndarray, x: np.ndarray) -> np.ndarray:
    if spec.family != "mvqc":
        raise ContractError("mvqc_forward needs an MVQC spec")
    return softmax(logits(spec, params, _single(spec, x)))[0]


def bvqc_forward(spec: ModelSpec, params: np.ndarray, x: np.ndarray) -> float:
    if spec.family != "bvqc":
        raise ContractError("bvqc_forward needs a BVQC spec")
    return float(logits(spec, params, _single(spec, x))[0])


def snn_forward(spec: ModelSpec, params: np.ndarray, x: np.ndarray) -> np.ndarray:
    if spec.family != "snn":
        raise ContractError("snn_forward needs an SNN spec")
    return softmax(logits(spec, params, _single(spec, x)))[0]


def bvqc_probability(logit: float) -> float:
    return float(sigmoid(logit))
