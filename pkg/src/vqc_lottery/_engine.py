"""Batched circuit kernels for the layered VQC ansatz.

States are held as two float64 arrays ``(re, im)`` of shape ``(2**n, B)``:
basis index major, batch minor. Keeping the batch contiguous lets the inner
loops vectorise, which matters for the 13-qubit Wine circuits.

The ansatz per sample is::

    Rx(x_q) on every wire                  (embedding)
    repeat L times:
        [Rx(x_q) on every wire]            (only with data re-uploading)
        Rot(a, b, c) on every wire
        CNOT ring q -> (q + 1) % n

Gradients use adjoint differentiation: the final state and the adjoint
vector are walked backwards together, one fused pass per gate.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _gate(re, im, n, q, m00, m01, m10, m11):
    dim, batch = re.shape
    stride = 1 << (n - 1 - q)
    ar, ai = m00.real, m00.imag
    br, bi = m01.real, m01.imag
    cr, ci = m10.real, m10.imag
    dr, di = m11.real, m11.imag
    for hi in range(0, dim, 2 * stride):
        for lo in range(stride):
            i0 = hi + lo
            i1 = i0 + stride
            for b in range(batch):
                r0 = re[i0, b]
                s0 = im[i0, b]
                r1 = re[i1, b]
                s1 = im[i1, b]
                re[i0, b] = ar * r0 - ai * s0 + br * r1 - bi * s1
                im[i0, b] = ar * s0 + ai * r0 + br * s1 + bi * r1
                re[i1, b] = cr * r0 - ci * s0 + dr * r1 - di * s1
                im[i1, b] = cr * s0 + ci * r0 + dr * s1 + di * r1


@njit(cache=True, fastmath=True)
def _rx_batch(re, im, n, q, cos_h, sin_h):
    # per-sample Rx: [[c, -i s], [-i s, c]]
    dim, batch = re.shape
    stride = 1 << (n - 1 - q)
    for hi in range(0, dim, 2 * stride):
        for lo in range(stride):
            i0 = hi + lo
            i1 = i0 + stride
            for b in range(batch):
                c = cos_h[b]
                s = sin_h[b]
                r0 = re[i0, b]
                s0 = im[i0, b]
                r1 = re[i1, b]
                s1 = im[i1, b]
                re[i0, b] = c * r0 + s * s1
                im[i0, b] = c * s0 - s * r1
                re[i1, b] = s * s0 + c * r1
                im[i1, b] = c * s1 - s * r0


@njit(cache=True)
def _permute(src_re, src_im, dst_re, dst_im, gather):
    dim, batch = src_re.shape
    for i in range(dim):
        j = gather[i]
        for b in range(batch):
            dst_re[i, b] = src_re[j, b]
            dst_im[i, b] = src_im[j, b]


@njit(cache=True, fastmath=True)
def _adjoint_gate(pre, pim, lre, lim, n, q, m00, m01, m10, m11, corr):
    """Un-apply one gate from psi and lambda, accumulating <lambda_i|psi_j>.

    ``corr`` receives C[i, j] = sum over pairs and batch of
    conj(lambda_after[i]) * psi_before[j] as a (2, 2, 2) real/imag array.
    """
    dim, batch = pre.shape
    stride = 1 << (n - 1 - q)
    # inverse is the conjugate transpose
    ar, ai = m00.real, -m00.imag
    br, bi = m10.real, -m10.imag
    cr, ci = m01.real, -m01.imag
    dr, di = m11.real, -m11.imag
    c00r = 0.0
    c00i = 0.0
    c01r = 0.0
    c01i = 0.0
    c10r = 0.0
    c10i = 0.0
    c11r = 0.0
    c11i = 0.0
    for hi in range(0, dim, 2 * stride):
        for lo in range(stride):
            i0 = hi + lo
            i1 = i0 + stride
            for b in range(batch):
                r0 = pre[i0, b]
                s0 = pim[i0, b]
                r1 = pre[i1, b]
                s1 = pim[i1, b]
                p0r = ar * r0 - ai * s0 + br * r1 - bi * s1
                p0i = ar * s0 + ai * r0 + br * s1 + bi * r1
                p1r = cr * r0 - ci * s0 + dr * r1 - di * s1
                p1i = cr * s0 + ci * r0 + dr * s1 + di * r1
                pre[i0, b] = p0r
                pim[i0, b] = p0i
                pre[i1, b] = p1r
                pim[i1, b] = p1i
                l0r = lre[i0, b]
                l0i = lim[i0, b]
                l1r = lre[i1, b]
                l1i = lim[i1, b]
                c00r += l0r * p0r + l0i * p0i
                c00i += l0r * p0i - l0i * p0r
                c01r += l0r * p1r + l0i * p1i
                c01i += l0r * p1i - l0i * p1r
                c10r += l1r * p0r + l1i * p0i
                c10i += l1r * p0i - l1i * p0r
                c11r += l1r * p1r + l1i * p1i
                c11i += l1r * p1i - l1i * p1r
                lre[i0, b] = ar * l0r - ai * l0i + br * l1r - bi * l1i
                lim[i0, b] = ar * l0i + ai * l0r + br * l1i + bi * l1r
                lre[i1, b] = cr * l0r - ci * l0i + dr * l1r - di * l1i
                lim[i1, b] = cr * l0i + ci * l0r + dr * l1i + di * l1r
    corr[0, 0, 0] = c00r
    corr[0, 0, 1] = c00i
    corr[0, 1, 0] = c01r
    corr[0, 1, 1] = c01i
    corr[1, 0, 0] = c10r
    corr[1, 0, 1] = c10i
    corr[1, 1, 0] = c11r
    corr[1, 1, 1] = c11i


@njit(cache=True)
def _embed(re, im, n, cos_h, sin_h, sign):
    for q in range(n):
        _rx_batch(re, im, n, q, cos_h[:, q], sign * sin_h[:, q])


@njit(cache=True)
def forward_state(cos_h, sin_h, mats, gather, n, reupload):
    """Final (re, im) states, shape ``(2**n, B)``.

    ``cos_h``/``sin_h`` hold cos(x/2), sin(x/2) with shape ``(B, n)``;
    ``mats`` holds the Rot matrices with shape ``(L, n, 2, 2)``.
    """
    batch = cos_h.shape[0]
    dim = 1 << n
    re = np.zeros((dim, batch))
    im = np.zeros((dim, batch))
    re[0, :] = 1.0
    buf_re = np.empty((dim, batch))
    buf_im = np.empty((dim, batch))
    if not reupload:
        _embed(re, im, n, cos_h, sin_h, 1.0)
    for layer in range(mats.shape[0]):
        if reupload:
            _embed(re, im, n, cos_h, sin_h, 1.0)
        for q in range(n):
            m = mats[layer, q]
            _gate(re, im, n, q, m[0, 0], m[0, 1], m[1, 0], m[1, 1])
        if n > 1:
            _permute(re, im, buf_re, buf_im, gather)
            re, buf_re = buf_re, re
            im, buf_im = buf_im, im
    return re, im


@njit(cache=True)
def expect_z(re, im, n, n_meas):
    """<Z_k> for k < n_meas, shape ``(B, n_meas)``."""
    dim, batch = re.shape
    out = np.zeros((batch, n_meas))
    for i in range(dim):
        for k in range(n_meas):
            sign = 1.0 - 2.0 * ((i >> (n - 1 - k)) & 1)
            for b in range(batch):
                out[b, k] += sign * (re[i, b] * re[i, b] + im[i, b] * im[i, b])
    return out


@njit(cache=True)
def backward(re, im, weights, cos_h, sin_h, mats, dmats, scatter, n, reupload):
    """Gradient of sum_b sum_k weights[b, k] <Z_k>_b w.r.t. all Rot angles.

    ``re``/``im`` must be the final states from ``forward_state``; they are
    consumed (overwritten). ``dmats`` has shape ``(L, n, 3, 2, 2)``.
    Returns an ``(L, n, 3)`` array.
    """
    dim, batch = re.shape
    n_meas = weights.shape[1]
    n_layers = mats.shape[0]
    lre = np.empty((dim, batch))
    lim = np.empty((dim, batch))
    for i in range(dim):
        for b in range(batch):
            w = 0.0
            for k in range(n_meas):
                sign = 1.0 - 2.0 * ((i >> (n - 1 - k)) & 1)
                w += sign * weights[b, k]
            lre[i, b] = w * re[i, b]
            lim[i, b] = w * im[i, b]
    buf_re = np.empty((dim, batch))
    buf_im = np.empty((dim, batch))
    corr = np.empty((2, 2, 2))
    grads = np.zeros((n_layers, n, 3))
    for layer in range(n_layers - 1, -1, -1):
        if n > 1:
            _permute(re, im, buf_re, buf_im, scatter)
            re, buf_re = buf_re, re
            im, buf_im = buf_im, im
            _permute(lre, lim, buf_re, buf_im, scatter)
            lre, buf_re = buf_re, lre
            lim, buf_im = buf_im, lim
        for q in range(n - 1, -1, -1):
            m = mats[layer, q]
            _adjoint_gate(re, im, lre, lim, n, q, m[0, 0], m[0, 1], m[1, 0], m[1, 1], corr)
            for p in range(3):
                d = dmats[layer, q, p]
                acc = 0.0
                for r in range(2):
                    for c in range(2):
                        # Re(d * C)
                        acc += d[r, c].real * corr[r, c, 0] - d[r, c].imag * corr[r, c, 1]
                grads[layer, q, p] = 2.0 * acc
        if reupload:
            _embed(re, im, n, cos_h, sin_h, -1.0)
            _embed(lre, lim, n, cos_h, sin_h, -1.0)
    return grads
