"""Numba kernels for batches of statevectors.

Batches are (R, dim, M) complex128 arrays: R parameter settings (rollouts),
each evolving M input states stored as columns.  A qubit q is addressed by
its stride 1 << (n - 1 - q) along the dim axis.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def ry_batch(A, stride, c, s):
    """RY on one qubit; c[r], s[r] are cos/sin of rollout r's angle.

    RY is a real matrix, so A may be the float64 view (R, dim, 2M) of the
    complex batch, which lets the inner loop vectorize.
    """
    R, dim, M = A.shape
    for r in range(R):
        cr = c[r]
        sr = s[r]
        for base in range(0, dim, 2 * stride):
            for i in range(base, base + stride):
                j = i + stride
                for k in range(M):
                    a0 = A[r, i, k]
                    a1 = A[r, j, k]
                    A[r, i, k] = cr * a0 - sr * a1
                    A[r, j, k] = sr * a0 + cr * a1


@njit(cache=True)
def phase_batch(A, phase):
    """Multiply by a per-rollout diagonal, phase has shape (R, dim)."""
    R, dim, M = A.shape
    for r in range(R):
        for i in range(dim):
            ph = phase[r, i]
            for k in range(M):
                A[r, i, k] *= ph


@njit(cache=True)
def pauli_batch(A, stride, codes):
    """Apply a Pauli per (rollout, column): code 0 none, 1 X, 2 Y, 3 Z."""
    R, dim, M = A.shape
    for r in range(R):
        for k in range(M):
            code = codes[r, k]
            if code == 0:
                continue
            for base in range(0, dim, 2 * stride):
                for i in range(base, base + stride):
                    j = i + stride
                    a0 = A[r, i, k]
                    a1 = A[r, j, k]
                    if code == 1:
                        A[r, i, k] = a1
                        A[r, j, k] = a0
                    elif code == 2:
                        A[r, i, k] = -1j * a1
                        A[r, j, k] = 1j * a0
                    else:
                        A[r, j, k] = -a1


@njit(cache=True)
def overlap_prob_batch(K, A):
    """|<K[:, k] | A[r, :, k]>|^2 for every rollout r and column k."""
    R, dim, M = A.shape
    out = np.empty((R, M))
    acc = np.empty(M, dtype=np.complex128)
    for r in range(R):
        acc[:] = 0
        for i in range(dim):
            for k in range(M):
                acc[k] += K[i, k].conjugate() * A[r, i, k]
        for k in range(M):
            v = acc[k].real * acc[k].real + acc[k].imag * acc[k].imag
            out[r, k] = min(v, 1.0)
    return out
