"""Coherent, Holevo, and generalized information of channels and ensembles.

A :class:`CQEnsemble` holds classically indexed pure states on an input
system A together with a reference R.  For a channel N acting on A, the
generalized information of the ensemble splits as

    i_g = r_c + r_q,
    r_c = S(avg_x N(rho_x))       - sum_x p_x S(N(rho_x)),
    r_q = sum_x p_x [ S(N(rho_x)) - S((N tensor id_R)(psi_x)) ],

where rho_x is the A-marginal of the branch psi_x.  With a trivial reference
this reduces to the Holevo quantity of the induced classical-quantum ensemble,
and a single-entry ensemble reduces to coherent information of its branch.
All branch entropies are computed directly; the classical index never enters
as an explicit tensor factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channels import QuantumChannel, apply_channel
from .errors import DimensionMismatchError, ValidationError
from .linalg import batched_entropy, entropy_of_matrix
from .spaces import TensorSpace
from .states import DensityMatrix, PureState, purify

PROB_TOL = 1e-9
MAX_ENSEMBLE_ENTRIES = 4096


@dataclass(frozen=True, eq=False)
class CQEnsemble:
    """Pure-state ensemble {p_x, |psi_x> on A tensor R} with classical index x."""

    dim_a: int
    dim_r: int
    probs: np.ndarray
    vectors: np.ndarray  # shape (n, dim_a * dim_r)

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        v = np.asarray(self.vectors, dtype=np.complex128)
        if self.dim_a < 1 or self.dim_r < 1:
            raise ValidationError("ensemble dimensions must be positive")
        if v.ndim != 2 or v.shape != (p.size, self.dim_a * self.dim_r):
            raise DimensionMismatchError(
                f"vectors shape {v.shape} does not match "
                f"({p.size}, {self.dim_a * self.dim_r})")
        if p.size == 0:
            raise ValidationError("ensemble needs at least one entry")
        if p.size > MAX_ENSEMBLE_ENTRIES:
            raise ValidationError(f"ensemble has {p.size} entries, limit {MAX_ENSEMBLE_ENTRIES}")
        if np.any(p < -PROB_TOL):
            raise ValidationError("ensemble probabilities must be nonnegative")
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if abs(total - 1.0) > 1e-8:
            raise ValidationError(f"ensemble probabilities sum to {total:.8f}, expected 1")
        p = p / total
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-8):
            raise ValidationError("every ensemble vector must have unit norm")
        v = v / norms[:, None]
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "vectors", v)

    @property
    def size(self) -> int:
        return int(self.probs.size)

    def branch(self, x: int) -> PureState:
        space = TensorSpace.of(("A", self.dim_a), ("R", self.dim_r))
        return PureState(space, self.vectors[x])

    def average_input(self) -> DensityMatrix:
        """The A-marginal sum_x p_x Tr_R |psi_x><psi_x|."""
        psi = self.vectors.reshape(self.size, self.dim_a, self.dim_r)
        m = np.einsum("x,xar,xbr->ab", self.probs, psi, psi.conj())
        return DensityMatrix(TensorSpace.single("A", self.dim_a), m)

    @staticmethod
    def from_states(entries: Sequence[tuple[float, PureState]]) -> "CQEnsemble":
        if not entries:
            raise ValidationError("ensemble needs at least one entry")
        dims = entries[0][1].space.dims
        if len(dims) != 2:
            raise ValidationError("ensemble branches must live on a two-subsystem space")
        for _, state in entries:
            if state.space.dims != dims:
                raise DimensionMismatchError("all branches must share one space")
        return CQEnsemble(dims[0], dims[1],
                          np.array([p for p, _ in entries], dtype=float),
                          np.stack([s.vector for _, s in entries]))


class GeneralizedInfo(NamedTuple):
    i_g: float
    r_c: float
    r_q: float


def _branch_outputs(ensemble: CQEnsemble, channel: QuantumChannel):
    """Per-branch channel outputs sigma_x^{BR}, sigma_x^B, and their average."""
    if channel.dim_in != ensemble.dim_a:
        raise DimensionMismatchError(
            f"channel input dimension {channel.dim_in} differs from "
            f"ensemble A dimension {ensemble.dim_a}")
    kraus = np.stack(channel.kraus)  # (K, dB, dA)
    psi = ensemble.vectors.reshape(ensemble.size, ensemble.dim_a, ensemble.dim_r)
    phi = np.einsum("kba,xar->xkbr", kraus, psi)
    sigma_br = np.einsum("xkbr,xkcs->xbrcs", phi, phi.conj())
    d_br = channel.dim_out * ensemble.dim_r
    sigma_br = sigma_br.reshape(ensemble.size, d_br, d_br)
    sigma_b = np.einsum("xkbr,xkcr->xbc", phi, phi.conj())
    avg_b = np.einsum("x,xbc->bc", ensemble.probs, sigma_b)
    return sigma_br, sigma_b, avg_b


def generalized_information(ensemble: CQEnsemble, channel: QuantumChannel) -> GeneralizedInfo:
    """Classical and quantum information components of an ensemble over a channel.

    ``r_q`` is returned with its sign; callers interested in achievable rate
    regions should clamp it at zero.
    """
    sigma_br, sigma_b, avg_b = _branch_outputs(ensemble, channel)
    p = ensemble.probs
    s_br = batched_entropy(sigma_br)
    s_b = batched_entropy(sigma_b)
    s_avg = entropy_of_matrix(avg_b)
    r_c = float(s_avg - np.dot(p, s_b))
    r_q = float(np.dot(p, s_b - s_br))
    return GeneralizedInfo(r_c + r_q, r_c, r_q)


def holevo_information(ensemble, channel: QuantumChannel) -> float:
    """Holevo quantity of the output ensemble {p_x, N(rho_x)}.

    ``ensemble`` may be a :class:`CQEnsemble` (branch A-marginals are used)
    or a sequence of ``(prob, DensityMatrix)`` pairs on the channel input.
    """
    if isinstance(ensemble, CQEnsemble):
        result = generalized_information(ensemble, channel)
        # with branch R-marginals traced out, only the classical part remains
        return result.r_c
    probs = np.array([p for p, _ in ensemble], dtype=float)
    if np.any(probs < -PROB_TOL) or abs(probs.sum() - 1.0) > 1e-8:
        raise ValidationError("ensemble probabilities must be nonnegative and sum to 1")
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    outputs = []
    for _, rho in ensemble:
        if not isinstance(rho, DensityMatrix):
            raise ValidationError("ensemble entries must be (prob, DensityMatrix) pairs")
        if rho.dim != channel.dim_in:
            raise DimensionMismatchError(
                f"ensemble state dimension {rho.dim} differs from channel input "
                f"{channel.dim_in}")
        outputs.append(apply_channel(channel, rho).matrix)
    stack = np.stack(outputs)
    avg = np.einsum("x,xab->ab", probs, stack)
    return float(entropy_of_matrix(avg) - np.dot(probs, batched_entropy(stack)))


def coherent_information(state: DensityMatrix | PureState, channel: QuantumChannel,
                         target: str | None = None) -> float:
    """Coherent information S(B) - S(BR) of a channel on a given input.

    A :class:`DensityMatrix` input is purified first (the whole state is the
    channel input).  A :class:`PureState` input must live on an input-plus-
    reference space; the channel acts on ``target`` (default: the first
    subsystem) and everything else is the reference.
    """
    if isinstance(state, DensityMatrix):
        if state.dim != channel.dim_in:
            raise DimensionMismatchError(
                f"state dimension {state.dim} differs from channel input {channel.dim_in}")
        ref = "R"
        while ref in state.space.labels:
            ref = ref + "'"
        pure = purify(state, ref_label=ref)
        keep_labels = (ref,)
        in_labels = state.space.labels
    else:
        pure = state
        if len(pure.space.labels) < 2:
            raise ValidationError("pure input must include a reference subsystem")
        label = target if target is not None else pure.space.labels[0]
        in_labels = (label,)
        keep_labels = tuple(x for x in pure.space.labels if x != label)
        (pos,) = pure.space.positions(label)
        if pure.space.dims[pos] != channel.dim_in:
            raise DimensionMismatchError(
                f"subsystem {label!r} has dimension {pure.space.dims[pos]}, "
                f"channel expects {channel.dim_in}")

    # evaluate through the ensemble machinery with a single branch
    ordered = pure
    order = tuple(in_labels) + tuple(keep_labels)
    if pure.space.labels != order:
        perm = list(pure.space.positions(order))
        vec = pure.vector.reshape(pure.space.dims).transpose(perm).reshape(-1)
        ordered = PureState(pure.space.reorder(order), vec)
    dim_a = ordered.space.dim_of(in_labels)
    dim_r = ordered.space.dim // dim_a
    ens = CQEnsemble(dim_a, dim_r, np.array([1.0]), ordered.vector[None, :])
    return generalized_information(ens, channel).r_q


def data_processing_gap(ensemble: CQEnsemble, channel: QuantumChannel,
                        post: QuantumChannel) -> float:
    """i_g(channel) - i_g(post . channel); nonnegative up to roundoff."""
    before = generalized_information(ensemble, channel).i_g
    from .channels import compose

    after = generalized_information(ensemble, compose(post, channel)).i_g
    return before - after
