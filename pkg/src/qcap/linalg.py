"""Shared dense linear-algebra helpers.

All entropies in the package are base-2.  Eigenvalues below
``ENTROPY_CUTOFF`` are treated as zero when computing entropies, and small
negative eigenvalues produced by roundoff are clamped before use.
"""
from __future__ import annotations

import numpy as np

ENTROPY_CUTOFF = 1e-12
SUPPORT_CUTOFF = 1e-12


def hermitize(m: np.ndarray) -> np.ndarray:
    """Average a matrix (or batch of matrices) with its conjugate transpose."""
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def entropy_from_probs(p: np.ndarray, cutoff: float = ENTROPY_CUTOFF) -> float:
    """Shannon entropy in bits of a nonnegative vector summing to ~1."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    total = p.sum()
    if total > 0:
        p = p / total
    q = p[p > cutoff]
    if q.size == 0:
        return 0.0
    return float(-(q * np.log2(q)).sum()) + 0.0


def entropy_of_matrix(m: np.ndarray) -> float:
    """Von Neumann entropy in bits of a single density matrix."""
    w = np.linalg.eigvalsh(hermitize(np.asarray(m)))
    return entropy_from_probs(w)


def batched_entropy(mats: np.ndarray, cutoff: float = ENTROPY_CUTOFF) -> np.ndarray:
    """Von Neumann entropies of a batch of matrices, shape (..., d, d) -> (...)."""
    w = np.linalg.eigvalsh(hermitize(np.asarray(mats)))
    w = np.clip(w, 0.0, None)
    w = w / np.clip(w.sum(axis=-1, keepdims=True), cutoff, None)
    safe = np.where(w > cutoff, w, 1.0)
    return -(safe * np.log2(safe)).sum(axis=-1) + 0.0


def binary_entropy(p: float) -> float:
    return entropy_from_probs(np.array([p, 1.0 - p]))


def sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix."""
    w, v = np.linalg.eigh(hermitize(np.asarray(m)))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def orthonormal_operator_basis(ops: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Orthonormalize a stack of operators in the Hilbert-Schmidt inner product.

    ``ops`` has shape (k, d, d).  Returns (r, d, d) with r the numerical rank
    of the span; rows are orthonormal under ``<a, b> = Tr[a^dag b]``.
    """
    ops = np.asarray(ops)
    if ops.size == 0:
        return ops.reshape(0, *ops.shape[1:])
    flat = ops.reshape(len(ops), -1)
    _, s, vh = np.linalg.svd(flat, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        return ops[:0]
    keep = s > rtol * s[0]
    return vh[keep].reshape(-1, *ops.shape[1:])


def phase_fixed_qr(a: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the columns of ``a`` (batched).

    The reduced QR factor is rescaled so the R diagonal is real positive,
    which makes the map a -> Q smooth and reproduces ``a`` exactly whenever
    its columns are already orthonormal.
    """
    q, r = np.linalg.qr(np.asarray(a))
    d = np.diagonal(r, axis1=-2, axis2=-1).copy()
    mag = np.abs(d)
    phase = np.where(mag > 1e-300, d / np.where(mag > 1e-300, mag, 1.0), 1.0)
    return q * phase[..., None, :]
