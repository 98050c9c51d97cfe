"""Dense statevector simulation for small qubit registers.

Amplitudes are stored as a flat complex vector indexed by the computational
basis integer, with qubit 0 as the most significant bit: for ``n`` qubits the
bit of qubit ``q`` in basis index ``i`` is ``(i >> (n - 1 - q)) & 1``.

Gate functions mutate the state in place and return it so calls can be
chained. The general rotation follows the Euler convention

    Rot(a, b, c) = RZ(c) @ RY(b) @ RZ(a)

which is the ordering used by PennyLane's ``qml.Rot(phi, theta, omega)``.
"""

from __future__ import annotations

import numpy as np

from .errors import ResourceError

MAX_QUBITS = 20


class State:
    """Pure state of ``n_qubits`` qubits."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes: np.ndarray):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << n_qubits,):
            raise ValueError(
                f"expected {1 << n_qubits} amplitudes for {n_qubits} qubits, "
                f"got shape {amplitudes.shape}"
            )
        self.n_qubits = n_qubits
        self.amplitudes = amplitudes

    def copy(self) -> "State":
        return State(self.n_qubits, self.amplitudes.copy())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"State(n_qubits={self.n_qubits})"


def rx_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def ry_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(angle: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=np.complex128
    )


def rot_matrix(a: float, b: float, c: float) -> np.ndarray:
    return rz_matrix(c) @ ry_matrix(b) @ rz_matrix(a)


def rot_matrices(angles: np.ndarray) -> np.ndarray:
    """Vectorised ``rot_matrix`` over a trailing axis of size 3."""
    a, b, c = angles[..., 0], angles[..., 1], angles[..., 2]
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    plus = np.exp(-0.5j * (a + c))
    minus = np.exp(0.5j * (a - c))
    out = np.empty(angles.shape[:-1] + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = plus * cb
    out[..., 0, 1] = -minus * sb
    out[..., 1, 0] = np.conj(minus) * sb
    out[..., 1, 1] = np.conj(plus) * cb
    return out


def rot_derivatives(angles: np.ndarray) -> np.ndarray:
    """Partial derivatives of ``rot_matrices`` w.r.t. (a, b, c).

    Returns an array of shape ``angles.shape[:-1] + (3, 2, 2)``.
    """
    a, b, c = angles[..., 0], angles[..., 1], angles[..., 2]
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    plus = np.exp(-0.5j * (a + c))
    minus = np.exp(0.5j * (a - c))
    m = rot_matrices(angles)
    out = np.empty(angles.shape[:-1] + (3, 2, 2), dtype=np.complex128)
    # d/da = M @ (-i Z / 2)
    out[..., 0, :, 0] = -0.5j * m[..., :, 0]
    out[..., 0, :, 1] = 0.5j * m[..., :, 1]
    # d/db differentiates the RY factor only
    out[..., 1, 0, 0] = -0.5 * plus * sb
    out[..., 1, 0, 1] = -0.5 * minus * cb
    out[..., 1, 1, 0] = 0.5 * np.conj(minus) * cb
    out[..., 1, 1, 1] = -0.5 * np.conj(plus) * sb
    # d/dc = (-i Z / 2) @ M
    out[..., 2, 0, :] = -0.5j * m[..., 0, :]
    out[..., 2, 1, :] = 0.5j * m[..., 1, :]
    return out


def _check_qubit(state: State, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits} qubits")


def init_state(n_qubits: int) -> State:
    """All-zeros computational basis state."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ResourceError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
    amplitudes[0] = 1.0
    return State(n_qubits, amplitudes)


def apply_matrix(state: State, qubit: int, matrix: np.ndarray) -> State:
    """Apply an arbitrary 2x2 matrix to one wire."""
    _check_qubit(state, qubit)
    view = state.amplitudes.reshape(1 << qubit, 2, -1)
    view[...] = np.einsum("ij,ljr->lir", matrix, view)
    return state


def apply_rx(state: State, qubit: int, angle: float) -> State:
    return apply_matrix(state, qubit, rx_matrix(angle))


def apply_rot(state: State, qubit: int, a: float, b: float, c: float) -> State:
    return apply_matrix(state, qubit, rot_matrix(a, b, c))


def apply_cnot(state: State, control: int, target: int) -> State:
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise IndexError("control and target must differ")
    n = state.n_qubits
    idx = np.arange(1 << n)
    cmask = 1 << (n - 1 - control)
    tmask = 1 << (n - 1 - target)
    lo = idx[(idx & cmask != 0) & (idx & tmask == 0)]
    hi = lo | tmask
    amps = state.amplitudes
    amps[lo], amps[hi] = amps[hi].copy(), amps[lo].copy()
    return state


def expectation_z(state: State, qubit: int) -> float:
    """Exact Pauli-Z expectation of one wire."""
    _check_qubit(state, qubit)
    probs = state.probabilities().reshape(1 << qubit, 2, -1)
    return float(probs[:, 0, :].sum() - probs[:, 1, :].sum())


def ring_permutation(n_qubits: int) -> np.ndarray:
    """Basis-index map of the CNOT ring ``q -> (q + 1) % n`` applied in order.

    Returns ``f`` such that basis state ``|i>`` is sent to ``|f[i]>``.
    A single qubit has no ring and maps to the identity.
    """
    idx = np.arange(1 << n_qubits)
    if n_qubits < 2:
        return idx
    out = idx.copy()
    for control in range(n_qubits):
        target = (control + 1) % n_qubits
        cbit = (out >> (n_qubits - 1 - control)) & 1
        out = out ^ (cbit << (n_qubits - 1 - target))
    return out


def apply_cnot_ring(state: State) -> State:
    n = state.n_qubits
    for control in range(n if n > 1 else 0):
        apply_cnot(state, control, (control + 1) % n)
    return state
