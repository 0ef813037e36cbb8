"""Density matrices and pure states on labeled tensor spaces.

Matrices are stored in the row-major Kronecker convention matching the
subsystem order of their :class:`~qcap.spaces.TensorSpace`.  Construction
validates hermiticity, unit trace, and positivity; roundoff-scale negative
eigenvalues down to -1e-10 are tolerated and clamped inside entropy and
fidelity computations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .linalg import (
    SUPPORT_CUTOFF,
    binary_entropy,  # noqa: F401  (re-exported convenience)
    entropy_from_probs,
    hermitize,
    sqrt_psd,
)
from .spaces import TensorSpace, _as_label_set

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix on a labeled tensor space."""

    space: TensorSpace
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.complex128)
        d = self.space.dim
        if m.shape != (d, d):
            raise DimensionMismatchError(
                f"matrix shape {m.shape} does not match space dimension {d}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValidationError("matrix is not Hermitian within 1e-10")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValidationError("matrix trace differs from 1 by more than 1e-10")
        low = float(np.min(np.linalg.eigvalsh(hermitize(m))))
        if low < EIGENVALUE_FLOOR:
            raise ValidationError(f"matrix has negative eigenvalue {low:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.space.dim

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues, clamped to [0, 1] and renormalized."""
        w = np.clip(np.linalg.eigvalsh(hermitize(self.matrix)), 0.0, None)
        return w / w.sum()

    def rank(self, cutoff: float = SUPPORT_CUTOFF) -> int:
        return int(np.sum(self.eigenvalues() > cutoff))


@dataclass(frozen=True, eq=False)
class PureState:
    """A unit vector on a labeled tensor space."""

    space: TensorSpace
    vector: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vector, dtype=np.complex128).reshape(-1)
        if v.shape != (self.space.dim,):
            raise DimensionMismatchError(
                f"vector length {v.shape[0]} does not match space dimension {self.space.dim}")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError(f"vector norm {norm:.6f} differs from 1")
        object.__setattr__(self, "vector", v / norm)

    def density(self) -> DensityMatrix:
        v = self.vector
        return DensityMatrix(self.space, np.outer(v, v.conj()))


def basis_state(space: TensorSpace, index: int) -> PureState:
    """Computational basis vector ``index`` of the full space."""
    if not 0 <= index < space.dim:
        raise ValidationError(f"basis index {index} out of range for dimension {space.dim}")
    v = np.zeros(space.dim, dtype=np.complex128)
    v[index] = 1.0
    return PureState(space, v)


def maximally_mixed(space: TensorSpace) -> DensityMatrix:
    d = space.dim
    return DensityMatrix(space, np.eye(d, dtype=np.complex128) / d)


def maximally_entangled(space: TensorSpace) -> PureState:
    """Maximally entangled vector across a two-subsystem space of equal dims."""
    dims = space.dims
    if len(dims) != 2 or dims[0] != dims[1]:
        raise DimensionMismatchError("maximally entangled state needs two equal subsystems")
    d = dims[0]
    v = np.zeros(d * d, dtype=np.complex128)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return PureState(space, v)


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Kronecker product of two states; label sets must be disjoint."""
    return DensityMatrix(a.space.tensor(b.space), np.kron(a.matrix, b.matrix))


def _as_tensor(rho: DensityMatrix) -> np.ndarray:
    dims = rho.space.dims
    return rho.matrix.reshape(dims + dims)


def partial_trace(rho: DensityMatrix, keep: str | Iterable[str]) -> DensityMatrix:
    """Trace out every subsystem not named in ``keep``.

    The result keeps the retained subsystems in their original order.
    """
    keep_set = set(_as_label_set(keep))
    rho.space.positions(keep_set)  # validates labels
    sub = rho.space.restrict(keep_set)
    n = len(rho.space.subsystems)
    keep_pos = [i for i, (label, _) in enumerate(rho.space.subsystems) if label in keep_set]
    t = _as_tensor(rho)
    # einsum: traced subsystems share one letter on ket and bra axes
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    ket = letters[:n]
    bra = [ket[i] if i not in keep_pos else letters[n + i] for i in range(n)]
    out = "".join(ket[i] for i in keep_pos) + "".join(bra[i] for i in keep_pos)
    m = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    d = sub.dim
    return DensityMatrix(sub, m.reshape(d, d))


def permute_subsystems(rho: DensityMatrix, order: Iterable[str]) -> DensityMatrix:
    """Relabel-preserving reorder of subsystems to the given label order."""
    new_space = rho.space.reorder(order)
    perm = list(rho.space.positions(new_space.labels))
    n = len(perm)
    t = _as_tensor(rho).transpose(perm + [n + p for p in perm])
    d = rho.space.dim
    return DensityMatrix(new_space, t.reshape(d, d))


def purify(rho: DensityMatrix, ref_label: str = "R") -> PureState:
    """A purification of ``rho`` with reference dimension equal to its rank."""
    if ref_label in rho.space.labels:
        raise ValidationError(f"reference label {ref_label!r} already used in the space")
    w, v = np.linalg.eigh(hermitize(rho.matrix))
    keep = w > SUPPORT_CUTOFF
    w = w[keep]
    v = v[:, keep]
    r = int(w.size)
    if r == 0:
        raise ValidationError("cannot purify a zero matrix")
    vec = (v * np.sqrt(np.clip(w, 0.0, None))).reshape(-1)  # index (a, i) row-major
    space = rho.space.tensor(TensorSpace.single(ref_label, r))
    vec = vec / np.linalg.norm(vec)
    return PureState(space, vec)


def entropy(rho: DensityMatrix) -> float:
    """Von Neumann entropy in bits."""
    return entropy_from_probs(rho.eigenvalues())


def conditional_entropy(rho: DensityMatrix, a: str | Iterable[str],
                        b: str | Iterable[str]) -> float:
    """S(A|B) = S(AB) - S(B) for disjoint label sets A and B of ``rho``."""
    a_set, b_set = set(_as_label_set(a)), set(_as_label_set(b))
    if a_set & b_set:
        raise ValidationError(f"label sets overlap: {sorted(a_set & b_set)!r}")
    s_ab = entropy(partial_trace(rho, a_set | b_set))
    s_b = entropy(partial_trace(rho, b_set))
    return s_ab - s_b


def mutual_information(rho: DensityMatrix, a: str | Iterable[str],
                       b: str | Iterable[str],
                       c: str | Iterable[str] | None = None) -> float:
    """I(A:B) or, with ``c`` given, the conditional I(A:B|C)."""
    a_set, b_set = set(_as_label_set(a)), set(_as_label_set(b))
    c_set = set(_as_label_set(c)) if c is not None else set()
    for x, y in ((a_set, b_set), (a_set, c_set), (b_set, c_set)):
        if x & y:
            raise ValidationError(f"label sets overlap: {sorted(x & y)!r}")
    if c_set:
        return (conditional_entropy(rho, a_set, c_set)
                - conditional_entropy(rho, a_set, b_set | c_set))
    s_a = entropy(partial_trace(rho, a_set))
    s_b = entropy(partial_trace(rho, b_set))
    s_ab = entropy(partial_trace(rho, a_set | b_set))
    return s_a + s_b - s_ab


def _check_same_dim(rho: DensityMatrix, xi: DensityMatrix) -> None:
    if rho.space.dims != xi.space.dims:
        raise DimensionMismatchError(
            f"state dimensions differ: {rho.space.dims} vs {xi.space.dims}")


def fidelity(rho: DensityMatrix, xi: DensityMatrix) -> float:
    """Uhlmann fidelity F = Tr sqrt(sqrt(rho) xi sqrt(rho)), in [0, 1]."""
    _check_same_dim(rho, xi)
    s = sqrt_psd(rho.matrix)
    w = np.linalg.eigvalsh(hermitize(s @ xi.matrix @ s))
    f = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    return min(f, 1.0)


def trace_distance(rho: DensityMatrix, xi: DensityMatrix) -> float:
    """Half the trace norm of the difference, in [0, 1]."""
    _check_same_dim(rho, xi)
    w = np.linalg.eigvalsh(hermitize(rho.matrix - xi.matrix))
    return float(0.5 * np.abs(w).sum())
