"""Koashi-Imoto decomposition of bipartite mixed states.

For a state rho on A tensor R, the decomposition finds a unitary u on A and
a direct sum structure  A ~ (+)_c Q_c tensor N_c  (plus a possible slack
subspace outside the support of rho_A) such that

    (u tensor 1) rho (u^dag tensor 1) = (+)_c p_c omega_c^{Q_c R} tensor mu_c^{N_c}.

The Q_c parts carry all correlation with R; the N_c parts are redundancy
that a channel on A can regenerate.  The implementation works with the
operators steered on A by a Hermitian operator basis on R,

    E_k = Tr_R[(1 tensor X_k) rho],

normalized on the support of rho_A.  The smallest *-algebra containing the
normalized operators is not always the right object: the decomposition must
be invariant under conjugation by rho_A's modular flow, so before taking
product closure the generators are split into their spectral components along
classes of equal eigenvalue ratios of rho_A.  Each component is a sum of
corner maps  a -> P_i a P_j  over pairs with a fixed ratio lambda_i/lambda_j,
which keeps it inside every admissible algebra while making the span flow
invariant.  Without this step, states whose steering span is skew to the
modular flow decompose into spurious blocks and fail reconstruction.

Block extraction follows the standard finite-dimensional *-algebra route:
commutant-free center via a linear solve, central projectors from a generic
center element, and per-block factorization  M_{d_c} tensor 1_{m_c}  via
eigenspaces of a generic Hermitian element aligned by polar decompositions.
Every stage verifies its residual and raises NumericalFailureError instead of
returning a silently wrong decomposition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .channels import QuantumChannel
from .errors import NumericalFailureError, ValidationError
from .linalg import SUPPORT_CUTOFF, entropy_from_probs, hermitize
from .sampling import seed_rng
from .spaces import TensorSpace, _as_label_set
from .states import DensityMatrix, partial_trace, permute_subsystems

FACTOR_RESIDUAL_TOL = 1e-8
RECONSTRUCTION_TOL = 1e-8
EIGEN_GAP = 1e-7
MAX_REDRAWS = 16


def hermitian_basis(dim: int) -> np.ndarray:
    """A basis of Hermitian matrices: diagonal units plus sym/antisym pairs."""
    ops = []
    for i in range(dim):
        m = np.zeros((dim, dim), dtype=np.complex128)
        m[i, i] = 1.0
        ops.append(m)
    for i in range(dim):
        for j in range(i + 1, dim):
            m = np.zeros((dim, dim), dtype=np.complex128)
            m[i, j] = m[j, i] = 1.0
            ops.append(m)
            m = np.zeros((dim, dim), dtype=np.complex128)
            m[i, j] = -1j
            m[j, i] = 1j
            ops.append(m)
    return np.stack(ops)


def _split_labels(space: TensorSpace, system) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """System labels (in space order) and the remaining reference labels.

    The reference may be empty, in which case the steering basis is trivial
    and the whole state is treated as redundancy.
    """
    if system is None:
        sys_labels = (space.labels[0],)
    else:
        sys_labels = _as_label_set(system)
        space.positions(sys_labels)
    sys_set = set(sys_labels)
    ref = tuple(x for x in space.labels if x not in sys_set)
    sys_ordered = tuple(x for x in space.labels if x in sys_set)
    return sys_ordered, ref


def steered_operators(rho: DensityMatrix, system: str | Iterable[str] | None = None) -> np.ndarray:
    """Hermitian operators Tr_R[(1 tensor X_k) rho] for a basis {X_k} on R.

    ``system`` names the A part (default: the first subsystem); the rest of
    the space is the reference R.  With an empty reference the single steered
    operator is the state itself.  Returns an array of shape (dim_R^2, dA, dA).
    """
    sys_labels, ref_labels = _split_labels(rho.space, system)
    ordered = sys_labels + ref_labels
    if rho.space.labels != ordered:
        rho = permute_subsystems(rho, ordered)
    d_a = rho.space.dim_of(sys_labels)
    d_r = rho.space.dim // d_a
    t = rho.matrix.reshape(d_a, d_r, d_a, d_r)
    basis = hermitian_basis(d_r)
    return np.einsum("asbr,xrs->xab", t, basis)


@dataclass(frozen=True, eq=False)
class AlgebraBasis:
    """Orthonormal basis of a *-algebra on the support of a marginal state."""

    basis: np.ndarray          # (k, s, s), support eigencoordinates
    support: np.ndarray        # (d, s) isometry into the original space
    support_eigs: np.ndarray   # (s,) eigenvalues of the marginal on its support

    @property
    def dim(self) -> int:
        return int(len(self.basis))


def _ratio_classes(eigs: np.ndarray, tol: float = 1e-9) -> list[np.ndarray]:
    """Boolean masks over index pairs grouped by equal eigenvalue ratio."""
    logs = np.log(eigs)
    diff = logs[:, None] - logs[None, :]
    flat = np.sort(diff.reshape(-1))
    reps: list[float] = []
    for value in flat:
        if not reps or value - reps[-1] > tol:
            reps.append(float(value))
    masks = []
    for r in reps:
        masks.append(np.abs(diff - r) <= tol)
    return masks


def _orthonormalize(ops: np.ndarray, rtol: float) -> np.ndarray:
    flat = ops.reshape(len(ops), -1)
    _, s, vh = np.linalg.svd(flat, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        return ops[:0]
    keep = s > rtol * s[0]
    return vh[keep].reshape(-1, *ops.shape[1:])


def generate_algebra(ops, rho_a, tol: float = 1e-9) -> AlgebraBasis:
    """Closure of support-normalized steered operators into a *-algebra.

    ``ops`` is an iterable of operators on A; ``rho_a`` the marginal state
    there.  Operators are compressed onto the support of ``rho_a``, normalized
    by rho_a^{-1/2} on both sides, split into modular spectral components
    (see the module docstring), and closed under products and adjoints.
    """
    mat = rho_a.matrix if isinstance(rho_a, DensityMatrix) else np.asarray(rho_a, dtype=complex)
    d = mat.shape[0]
    stack = np.stack([np.asarray(o, dtype=complex) for o in ops])
    if stack.shape[1:] != (d, d):
        raise ValidationError(
            f"operators of shape {stack.shape[1:]} do not act on dimension {d}")
    w, v = np.linalg.eigh(hermitize(mat))
    keep = w > SUPPORT_CUTOFF
    eigs = w[keep]
    support = v[:, keep]
    s = int(eigs.size)
    if s == 0:
        raise ValidationError("marginal state has empty support")

    compressed = np.einsum("ia,xij,jb->xab", support.conj(), stack, support)
    scale = 1.0 / np.sqrt(eigs)
    normalized = compressed * scale[None, :, None] * scale[None, None, :]

    generators = [np.eye(s, dtype=complex)]
    generators.extend(normalized)
    masks = _ratio_classes(eigs)
    components = []
    for g in generators:
        for mask in masks:
            part = np.where(mask, g, 0.0)
            if np.max(np.abs(part)) > tol:
                components.append(part)
    basis = _orthonormalize(np.stack(generators + components), tol)

    for _ in range(s * s + 1):
        products = np.einsum("aij,bjk->abik", basis, basis).reshape(-1, s, s)
        adjoints = basis.conj().swapaxes(-1, -2)
        candidates = np.concatenate([basis, adjoints, products])
        refreshed = _orthonormalize(candidates, tol)
        if len(refreshed) == len(basis):
            basis = refreshed
            break
        basis = refreshed
    else:
        raise NumericalFailureError("algebra closure did not stabilize")
    return AlgebraBasis(basis=basis, support=support, support_eigs=eigs)


def _hermitian_embedding(ops: np.ndarray) -> np.ndarray:
    """Isometric real coordinates for Hermitian matrices (batched)."""
    d = ops.shape[-1]
    iu = np.triu_indices(d, k=1)
    diag = np.real(ops[..., np.arange(d), np.arange(d)])
    upper = ops[..., iu[0], iu[1]]
    return np.concatenate([diag, np.sqrt(2) * upper.real, np.sqrt(2) * upper.imag], axis=-1)


def _hermitian_from_embedding(vec: np.ndarray, d: int) -> np.ndarray:
    iu = np.triu_indices(d, k=1)
    n_off = iu[0].size
    m = np.zeros((d, d), dtype=complex)
    m[np.arange(d), np.arange(d)] = vec[:d]
    upper = (vec[d:d + n_off] + 1j * vec[d + n_off:]) / np.sqrt(2)
    m[iu] = upper
    m[iu[1], iu[0]] = upper.conj()
    return m


def _hermitian_spanning_set(basis: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Hermitian orthonormal matrices with the same complex span as ``basis``."""
    herm = np.concatenate([hermitize(basis), hermitize(-1j * basis)])
    emb = _hermitian_embedding(herm)
    _, s, vh = np.linalg.svd(emb, full_matrices=False)
    keep = s > rtol * s[0]
    d = basis.shape[-1]
    return np.stack([_hermitian_from_embedding(row, d) for row in vh[keep]])


def _center_elements(herm: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Hermitian basis of the center, via the commutator nullspace.

    Row j of the constraint matrix is the flattened stack of commutators
    [G_j, G_i] over all i; coefficient vectors c with c . rows = 0 give the
    central elements sum_j c_j G_j.
    """
    k = len(herm)
    comms = np.einsum("jab,ibc->jiac", herm, herm) - np.einsum("iab,jbc->jiac", herm, herm)
    rows = np.concatenate([comms.real.reshape(k, -1), comms.imag.reshape(k, -1)], axis=1)
    u, s, _ = np.linalg.svd(rows, full_matrices=False)
    # commutators of orthonormal operators are O(1) when genuine; anything at
    # roundoff scale is noise even when it is the largest value present
    cutoff = max(rtol * (s[0] if s.size else 0.0), 1e-10)
    rank = int(np.sum(s > cutoff))
    null = u[:, rank:].T  # left-nullspace coefficient vectors, orthonormal
    return np.einsum("mi,iab->mab", null, herm)


def _group_by_gaps(values: np.ndarray, gap: float) -> list[np.ndarray]:
    order = np.argsort(values)
    groups: list[list[int]] = [[int(order[0])]]
    for idx in order[1:]:
        if values[idx] - values[groups[-1][-1]] > gap:
            groups.append([int(idx)])
        else:
            groups[-1].append(int(idx))
    return [np.array(g, dtype=int) for g in groups]


def _polar_unitary(m: np.ndarray) -> tuple[np.ndarray, float]:
    u, s, vh = np.linalg.svd(m)
    return u @ vh, float(s.min()) if s.size else 0.0


@dataclass(frozen=True, eq=False)
class AlgebraFactor:
    """One direct summand of a *-algebra: M_{dim_q} tensor 1_{dim_n}."""

    subspace: np.ndarray   # (s, dim_q * dim_n) orthonormal columns
    factor: np.ndarray     # (D, D) unitary from Q-major product coords to subspace coords
    dim_q: int
    dim_n: int


def decompose_algebra(basis: np.ndarray | AlgebraBasis, seed: int = 0) -> list[AlgebraFactor]:
    """Split a *-algebra into matrix-factor blocks M_{d_c} tensor 1_{m_c}.

    ``basis`` is a stack of orthonormal operators spanning the algebra (an
    :class:`AlgebraBasis` is also accepted).  Generic elements are drawn from
    a seeded generator; eigenvalue clusters separated by less than 1e-7
    trigger a redraw, and persistent failures raise NumericalFailureError.
    """
    if isinstance(basis, AlgebraBasis):
        basis = basis.basis
    basis = np.asarray(basis, dtype=complex)
    s = basis.shape[-1]
    rng = seed_rng(seed, "algebra-split")
    herm = _hermitian_spanning_set(basis)
    centers = _center_elements(herm)
    n_blocks = len(centers)
    if n_blocks == 0:
        raise NumericalFailureError("algebra center came out empty")

    subspaces: list[np.ndarray] | None = None
    for _ in range(MAX_REDRAWS):
        z = np.einsum("m,mab->ab", rng.normal(size=n_blocks), centers)
        w, v = np.linalg.eigh(hermitize(z))
        groups = _group_by_gaps(w, EIGEN_GAP)
        if len(groups) == n_blocks:
            subspaces = [v[:, g] for g in groups]
            break
    if subspaces is None:
        raise NumericalFailureError("could not separate central projectors")

    blocks: list[AlgebraFactor] = []
    for sub in subspaces:
        cap = sub.shape[1]
        comp_h = np.einsum("ia,xij,jb->xab", sub.conj(), herm, sub)
        comp_c = np.einsum("ia,xij,jb->xab", sub.conj(), basis, sub)
        split = None
        for _ in range(MAX_REDRAWS):
            a = np.einsum("x,xab->ab", rng.normal(size=len(comp_h)), comp_h)
            w, v = np.linalg.eigh(hermitize(a))
            clusters = _group_by_gaps(w, EIGEN_GAP)
            sizes = {len(c) for c in clusters}
            if len(sizes) == 1 and cap % len(clusters) == 0:
                split = clusters, v
                break
        if split is None:
            raise NumericalFailureError("could not factorize an algebra block")
        clusters, v = split
        dim_q = len(clusters)
        dim_n = cap // dim_q

        if dim_q == 1:
            factor = np.eye(cap, dtype=complex)
        else:
            eigvecs = [v[:, c] for c in clusters]  # each (cap, dim_n)
            aligned = None
            for _ in range(MAX_REDRAWS):
                coeff = rng.normal(size=len(comp_c)) + 1j * rng.normal(size=len(comp_c))
                g = np.einsum("x,xab->ab", coeff, comp_c)
                units = [np.eye(dim_n, dtype=complex)]
                ok = True
                for k in range(1, dim_q):
                    u, smin = _polar_unitary(eigvecs[k].conj().T @ g @ eigvecs[0])
                    if smin < 1e-10:
                        ok = False
                        break
                    units.append(u)
                if ok:
                    aligned = units
                    break
            if aligned is None:
                raise NumericalFailureError("could not align block multiplicity bases")
            factor = np.hstack([eigvecs[k] @ aligned[k] for k in range(dim_q)])

        # verify the factorization: every basis element must compress to q tensor 1
        worst = 0.0
        for m in comp_c:
            t = (factor.conj().T @ m @ factor).reshape(dim_q, dim_n, dim_q, dim_n)
            qpart = np.einsum("injn->ij", t) / dim_n
            model = np.einsum("ij,nm->injm", qpart, np.eye(dim_n))
            worst = max(worst, float(np.max(np.abs(t - model))))
        if worst > FACTOR_RESIDUAL_TOL:
            raise NumericalFailureError(
                f"block factorization residual {worst:.2e} exceeds {FACTOR_RESIDUAL_TOL}")
        blocks.append(AlgebraFactor(subspace=sub, factor=factor, dim_q=dim_q, dim_n=dim_n))
    return blocks


@dataclass(frozen=True, eq=False)
class KIBlock:
    """One Koashi-Imoto summand: weight, correlated part, redundant part."""

    prob: float
    dim_q: int
    dim_n: int
    omega: DensityMatrix   # on ("Q", dim_q) tensor ("R", dim_r)
    mu: DensityMatrix      # on ("N", dim_n)


@dataclass(frozen=True, eq=False)
class KIDecomposition:
    """Koashi-Imoto normal form of a bipartite state."""

    space: TensorSpace
    system_labels: tuple[str, ...]
    ref_labels: tuple[str, ...]
    dim_a: int
    dim_r: int
    u_ki: np.ndarray                 # (dim_a, dim_a) unitary; block rows first, slack last
    blocks: tuple[KIBlock, ...]
    offsets: tuple[int, ...]         # row offset of each block in KI coordinates
    dead_dim: int                    # dimension outside the support of rho_A
    s_c: float
    s_q_given_c: float
    s_cq: float
    reconstruction_error: float

    @property
    def probs(self) -> np.ndarray:
        return np.array([b.prob for b in self.blocks])


def _block_state_tensor(block: KIBlock, dim_r: int) -> np.ndarray:
    """The summand omega tensor mu as a (Q, N, R) x (Q, N, R) tensor."""
    dq, dn = block.dim_q, block.dim_n
    omega4 = block.omega.matrix.reshape(dq, dim_r, dq, dim_r)
    return np.einsum("qrps,nm->qnrpms", omega4, block.mu.matrix)


def ki_decompose(rho: DensityMatrix, system: str | Iterable[str] | None = None,
                 seed: int = 0, tol: float = 1e-9) -> KIDecomposition:
    """Compute the Koashi-Imoto decomposition of ``rho`` across A | R.

    ``system`` selects the A subsystems (default: the first label); all other
    subsystems form the reference.  The returned unitary, blocks, and weights
    satisfy the reconstruction identity to 1e-8 in trace distance, enforced
    here; S_C + S_{Q|C} matches an independently computed S_CQ to 1e-9.
    """
    sys_labels, ref_labels = _split_labels(rho.space, system)
    ordered = sys_labels + ref_labels
    work = rho if rho.space.labels == ordered else permute_subsystems(rho, ordered)
    d_a = work.space.dim_of(sys_labels)
    d_r = work.space.dim // d_a

    if ref_labels:
        rho_a = partial_trace(work, sys_labels)
    else:
        rho_a = work
    ops = steered_operators(work, system=sys_labels)
    alg = generate_algebra(ops, rho_a, tol)
    factors = decompose_algebra(alg, seed=seed)

    support = alg.support
    dead_dim = d_a - support.shape[1]

    # raw block data, then canonical ordering, then the final unitary
    t4 = work.matrix.reshape(d_a, d_r, d_a, d_r)
    raw = []
    for fac in factors:
        iso = support @ fac.subspace @ fac.factor      # (d_a, D) columns
        dq, dn = fac.dim_q, fac.dim_n
        blk = np.einsum("ia,irjs,jb->arbs", iso.conj(), t4, iso)
        t6 = blk.reshape(dq, dn, d_r, dq, dn, d_r)
        p = float(np.einsum("qnrqnr->", t6).real)
        if p <= 0:
            raise NumericalFailureError("block received nonpositive weight")
        omega = np.einsum("qnrpns->qrps", t6).reshape(dq * d_r, dq * d_r) / p
        mu = np.einsum("qnrqmr->nm", t6) / p
        raw.append((p, dq, dn, hermitize(omega), hermitize(mu), iso))

    def sort_key(item):
        p, dq, dn, omega, mu, _ = item
        return (-round(p, 10), -dq, -dn,
                np.round(omega, 8).tobytes(), np.round(mu, 8).tobytes())

    raw.sort(key=sort_key)

    rows = [item[5].conj().T for item in raw]
    if dead_dim:
        w, v = np.linalg.eigh(hermitize(rho_a.matrix))
        rows.append(v[:, w <= SUPPORT_CUTOFF].conj().T)
    u_ki = np.vstack(rows)
    if np.max(np.abs(u_ki @ u_ki.conj().T - np.eye(d_a))) > 1e-9:
        raise NumericalFailureError("assembled change of basis is not unitary")

    blocks = []
    offsets = []
    offset = 0
    for p, dq, dn, omega, mu, _ in raw:
        omega_dm = DensityMatrix(TensorSpace.of(("Q", dq), ("R", d_r)), omega)
        mu_dm = DensityMatrix(TensorSpace.single("N", dn), mu)
        blocks.append(KIBlock(prob=p, dim_q=dq, dim_n=dn, omega=omega_dm, mu=mu_dm))
        offsets.append(offset)
        offset += dq * dn

    # reconstruction residual in the original frame
    recon = np.zeros((d_a, d_r, d_a, d_r), dtype=complex)
    rho_ki = np.einsum("pa,arbs,qb->prqs", u_ki, t4, u_ki.conj())
    for block, off in zip(blocks, offsets):
        d_block = block.dim_q * block.dim_n
        part = block.prob * _block_state_tensor(block, d_r)
        recon[off:off + d_block, :, off:off + d_block, :] = part.reshape(
            d_block, d_r, d_block, d_r)
    diff = (rho_ki - recon).reshape(d_a * d_r, d_a * d_r)
    resid = float(0.5 * np.abs(np.linalg.eigvalsh(hermitize(diff))).sum())
    if resid > RECONSTRUCTION_TOL:
        raise NumericalFailureError(
            f"reconstruction residual {resid:.2e} exceeds {RECONSTRUCTION_TOL}; "
            "the steered algebra does not match the state")

    probs = np.array([b.prob for b in blocks])
    s_c = entropy_from_probs(probs)
    q_eigs = []
    s_q_given_c = 0.0
    for block in blocks:
        omega_q = partial_trace(block.omega, "Q")
        eigs = omega_q.eigenvalues()
        s_q_given_c += block.prob * entropy_from_probs(eigs)
        q_eigs.append(block.prob * eigs)
    s_cq = entropy_from_probs(np.concatenate(q_eigs))
    if abs(s_cq - (s_c + s_q_given_c)) > 1e-9:
        raise NumericalFailureError("entropy decomposition is inconsistent")

    return KIDecomposition(
        space=rho.space, system_labels=sys_labels, ref_labels=ref_labels,
        dim_a=d_a, dim_r=d_r, u_ki=u_ki, blocks=tuple(blocks),
        offsets=tuple(offsets), dead_dim=dead_dim,
        s_c=s_c, s_q_given_c=s_q_given_c, s_cq=s_cq,
        reconstruction_error=resid)


def reverse_ki_channel(kid: KIDecomposition) -> QuantumChannel:
    """A channel on A that regenerates every redundant factor of the state.

    In KI coordinates the channel keeps each Q_c part untouched and replaces
    the N_c part with mu_c; slack directions are mapped to a fixed state.
    Applying it to the A side of the decomposed state returns the state
    exactly, which is the defining fixed-point property.
    """
    d_a = kid.dim_a
    u = kid.u_ki
    kraus = []
    for block, off in zip(kid.blocks, kid.offsets):
        dq, dn = block.dim_q, block.dim_n
        w, v = np.linalg.eigh(hermitize(block.mu.matrix))
        for n in range(dn):
            for k in range(dn):
                if w[k] <= 0:
                    continue
                replace = np.sqrt(w[k]) * np.outer(v[:, k], np.eye(dn)[n])
                z = np.zeros((d_a, d_a), dtype=complex)
                z[off:off + dq * dn, off:off + dq * dn] = np.kron(np.eye(dq), replace)
                kraus.append(u.conj().T @ z @ u)
    if kid.dead_dim:
        anchor = np.zeros(d_a, dtype=complex)
        anchor[0] = 1.0
        base = d_a - kid.dead_dim
        for j in range(kid.dead_dim):
            z = np.outer(anchor, np.eye(d_a)[base + j])
            kraus.append(u.conj().T @ z @ u)
    return QuantumChannel(d_a, d_a, tuple(kraus))


def ki_state(kid: KIDecomposition) -> DensityMatrix:
    """The decomposed state assembled in KI coordinates, label order (A, R)."""
    d_a, d_r = kid.dim_a, kid.dim_r
    out = np.zeros((d_a, d_r, d_a, d_r), dtype=complex)
    for block, off in zip(kid.blocks, kid.offsets):
        d_block = block.dim_q * block.dim_n
        part = block.prob * _block_state_tensor(block, d_r)
        out[off:off + d_block, :, off:off + d_block, :] = part.reshape(
            d_block, d_r, d_block, d_r)
    space = TensorSpace.of(("A", d_a), ("R", d_r))
    return DensityMatrix(space, out.reshape(d_a * d_r, d_a * d_r))
