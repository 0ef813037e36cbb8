"""Strong typicality: sets, counts, masses, projectors, and source projection.

A length-n sequence over a finite alphabet is typical for a distribution p
when every symbol count N(x) satisfies |N(x) - n p(x)| <= n delta.  The rule
is applied literally: a zero-probability symbol may appear as long as its
count stays within n delta.  Conditional typicality constrains joint counts
against p(y|x) N(x) with the same slack.

Counts and masses are computed exactly by enumerating admissible count
vectors and summing multinomial weights, so they stay cheap even at block
lengths where listing sequences is impossible.  Projector construction and
sequence enumeration carry explicit resource guardrails.

The dimension bound  count <= 2^(n [H(p) + c delta])  holds exactly for
full-support p with the constant c = sum_x |log2 p(x)|; the conditional
variant uses S(Y|X) and c = sum_x [H(Y|X=x) + sum_y |log2 p(y|x)|] and
requires the conditioning sequence itself to be typical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .linalg import entropy_from_probs, hermitize
from .sampling import seed_rng
from .spaces import TensorSpace
from .states import DensityMatrix, permute_subsystems

PROB_TOL = 1e-12
ENUMERATION_LIMIT = 20
PROJECTOR_LOG2_LIMIT = 12.0
COUNT_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class TypicalSpec:
    """A distribution, block length, and slack defining one typical set."""

    probs: np.ndarray
    n: int
    delta: float

    def __init__(self, probs, n: int, delta: float):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("probability vector must be 1-dimensional and non-empty")
        if np.any(p < -PROB_TOL) or abs(p.sum() - 1.0) > PROB_TOL:
            raise ValidationError("not a probability vector within 1e-12")
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValidationError(f"block length must be a positive integer, got {n!r}")
        if not delta > 0:
            raise ValidationError(f"slack must be positive, got {delta!r}")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "delta", float(delta))

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    def count_windows(self) -> tuple[np.ndarray, np.ndarray]:
        """Admissible integer count range [lo, hi] per symbol."""
        return _windows(self.probs, self.n, self.n * self.delta)


def _windows(probs: np.ndarray, n: int, slack: float) -> tuple[np.ndarray, np.ndarray]:
    centers = n * probs
    lo = np.ceil(centers - slack - COUNT_EPS).astype(int)
    hi = np.floor(centers + slack + COUNT_EPS).astype(int)
    return np.clip(lo, 0, n), np.clip(hi, 0, n)


def is_typical(sequence: Sequence[int], spec: TypicalSpec) -> bool:
    """Exact membership test for one sequence of symbol indices."""
    seq = np.asarray(sequence, dtype=int)
    if seq.ndim != 1 or seq.size != spec.n:
        raise ValidationError(f"sequence length {seq.size} differs from n = {spec.n}")
    k = spec.alphabet_size
    if seq.size and (seq.min() < 0 or seq.max() >= k):
        raise ValidationError("sequence contains symbols outside the alphabet")
    counts = np.bincount(seq, minlength=k)
    lo, hi = spec.count_windows()
    return bool(np.all(counts >= lo) and np.all(counts <= hi))


def _count_vectors(lo: np.ndarray, hi: np.ndarray, total: int) -> Iterator[tuple[int, ...]]:
    """All integer vectors with lo <= v <= hi and sum(v) == total."""
    k = lo.size
    suffix_lo = np.concatenate([np.cumsum(lo[::-1])[::-1], [0]])
    suffix_hi = np.concatenate([np.cumsum(hi[::-1])[::-1], [0]])

    def rec(i: int, remaining: int, prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if i == k:
            if remaining == 0:
                yield prefix
            return
        low = max(lo[i], remaining - suffix_hi[i + 1])
        high = min(hi[i], remaining - suffix_lo[i + 1])
        for v in range(int(low), int(high) + 1):
            yield from rec(i + 1, remaining - v, prefix + (v,))

    yield from rec(0, total, ())


def _multinomial(n: int, counts: Sequence[int]) -> int:
    out = 1
    rest = n
    for c in counts:
        out *= math.comb(rest, c)
        rest -= c
    return out


def typical_count(spec: TypicalSpec) -> int:
    """Exact number of typical sequences."""
    lo, hi = spec.count_windows()
    return sum(_multinomial(spec.n, v) for v in _count_vectors(lo, hi, spec.n))


def _mass_of_counts(probs: np.ndarray, n: int, vectors) -> float:
    use_logs = n > 60
    total = 0.0
    logs = np.where(probs > 0, np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    for v in vectors:
        arr = np.asarray(v)
        if np.any((probs == 0) & (arr > 0)):
            continue
        if use_logs:
            log_term = math.lgamma(n + 1) - sum(math.lgamma(c + 1) for c in v)
            log_term += float(np.dot(arr, logs))
            total += math.exp(log_term)
        else:
            total += _multinomial(n, v) * float(np.prod(np.where(arr > 0, probs ** arr, 1.0)))
    return min(total, 1.0)


def typical_mass(spec: TypicalSpec) -> float:
    """Exact probability that an i.i.d. draw lands in the typical set."""
    lo, hi = spec.count_windows()
    return _mass_of_counts(spec.probs, spec.n, _count_vectors(lo, hi, spec.n))


def enumerate_typical(spec: TypicalSpec) -> Iterator[tuple[int, ...]]:
    """Lexicographic iterator over typical sequences.  Guarded at n <= 20."""
    if spec.n > ENUMERATION_LIMIT:
        raise ResourceLimitError(
            f"enumeration limited to n <= {ENUMERATION_LIMIT}, got {spec.n}")
    lo, hi = spec.count_windows()
    k = spec.alphabet_size

    def rec(pos: int, counts: tuple[int, ...], prefix: tuple[int, ...]):
        if pos == spec.n:
            yield prefix
            return
        remaining = spec.n - pos - 1
        for x in range(k):
            c = counts[x] + 1
            if c > hi[x]:
                continue
            new_counts = counts[:x] + (c,) + counts[x + 1:]
            deficit = int(np.sum(np.clip(lo - np.asarray(new_counts), 0, None)))
            if deficit > remaining:
                continue
            yield from rec(pos + 1, new_counts, prefix + (x,))

    yield from rec(0, (0,) * k, ())


def dimension_constant(probs) -> float:
    """c = sum over the support of |log2 p(x)|."""
    p = np.asarray(probs, dtype=float)
    supp = p[p > 0]
    return float(np.sum(np.abs(np.log2(supp))))


def typical_dimension_bound(spec: TypicalSpec) -> float:
    """log2 of the exact cardinality bound 2^(n [H + c delta])."""
    h = entropy_from_probs(spec.probs)
    return spec.n * (h + dimension_constant(spec.probs) * spec.delta)


def _validate_conditional(cond) -> np.ndarray:
    m = np.asarray(cond, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValidationError("conditional distribution must be a 2-d array p(y|x)")
    if np.any(m < -PROB_TOL) or np.any(np.abs(m.sum(axis=1) - 1.0) > PROB_TOL):
        raise ValidationError("rows of p(y|x) must be probability vectors within 1e-12")
    return np.clip(m, 0.0, None)


def is_conditionally_typical(yn: Sequence[int], xn: Sequence[int], cond,
                             delta: float) -> bool:
    """Joint-count test |N(x,y) - p(y|x) N(x)| <= n delta for all pairs."""
    m = _validate_conditional(cond)
    xs = np.asarray(xn, dtype=int)
    ys = np.asarray(yn, dtype=int)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
        raise ValidationError("sequences must be 1-dimensional with equal length")
    kx, ky = m.shape
    if xs.min() < 0 or xs.max() >= kx or ys.min() < 0 or ys.max() >= ky:
        raise ValidationError("sequence contains symbols outside the alphabet")
    n = xs.size
    slack = n * float(delta)
    joint = np.zeros((kx, ky), dtype=int)
    np.add.at(joint, (xs, ys), 1)
    targets = m * joint.sum(axis=1, keepdims=True)
    return bool(np.all(np.abs(joint - targets) <= slack + COUNT_EPS))


def _per_symbol_windows(cond: np.ndarray, xn: np.ndarray,
                        delta: float) -> list[tuple[int, int, np.ndarray, np.ndarray]]:
    """(symbol, occurrences, lo, hi) per distinct symbol of the base sequence."""
    n = xn.size
    out = []
    for x in sorted(set(int(v) for v in xn)):
        n_x = int(np.sum(xn == x))
        lo, hi = _windows(cond[x], n_x, n * delta)
        out.append((x, n_x, lo, hi))
    return out


def conditional_typical_count(cond, xn: Sequence[int], delta: float) -> int:
    """Exact size of the conditional typical set for a fixed base sequence."""
    m = _validate_conditional(cond)
    xs = np.asarray(xn, dtype=int)
    total = 1
    for _, n_x, lo, hi in _per_symbol_windows(m, xs, float(delta)):
        total *= sum(_multinomial(n_x, v) for v in _count_vectors(lo, hi, n_x))
    return total


def conditional_typical_mass(cond, xn: Sequence[int], delta: float) -> float:
    """Exact conditional probability of the conditional typical set."""
    m = _validate_conditional(cond)
    xs = np.asarray(xn, dtype=int)
    total = 1.0
    for x, n_x, lo, hi in _per_symbol_windows(m, xs, float(delta)):
        total *= _mass_of_counts(m[x], n_x, _count_vectors(lo, hi, n_x))
    return total


def conditional_dimension_constant(cond) -> float:
    """c = sum_x [H(Y|X=x) + sum over the row support of |log2 p(y|x)|]."""
    m = _validate_conditional(cond)
    total = 0.0
    for row in m:
        total += entropy_from_probs(row) + dimension_constant(row)
    return float(total)


def conditional_dimension_bound(probs, cond, n: int, delta: float) -> float:
    """log2 of the bound 2^(n [S(Y|X) + c delta]); needs a typical base sequence."""
    p = np.asarray(probs, dtype=float)
    m = _validate_conditional(cond)
    if p.size != m.shape[0]:
        raise ValidationError("marginal and conditional alphabet sizes differ")
    s_cond = float(np.sum([p[x] * entropy_from_probs(m[x]) for x in range(p.size)]))
    return n * (s_cond + conditional_dimension_constant(m) * float(delta))


def enumerate_conditionally_typical(cond, xn: Sequence[int],
                                    delta: float) -> Iterator[tuple[int, ...]]:
    """Lexicographic iterator over conditionally typical sequences."""
    m = _validate_conditional(cond)
    xs = np.asarray(xn, dtype=int)
    n = xs.size
    if n > ENUMERATION_LIMIT:
        raise ResourceLimitError(
            f"enumeration limited to n <= {ENUMERATION_LIMIT}, got {n}")
    windows = {x: (lo, hi) for x, _, lo, hi in _per_symbol_windows(m, xs, float(delta))}
    ky = m.shape[1]
    remaining_by_symbol = {x: int(np.sum(xs == x)) for x in windows}

    def rec(pos: int, counts: dict, prefix: tuple[int, ...]):
        if pos == n:
            yield prefix
            return
        x = int(xs[pos])
        lo, hi = windows[x]
        left = counts[x]["left"] - 1
        for y in range(ky):
            c = counts[x]["joint"][y] + 1
            if c > hi[y]:
                continue
            joint = counts[x]["joint"].copy()
            joint[y] = c
            deficit = int(np.sum(np.clip(lo - joint, 0, None)))
            if deficit > left:
                continue
            new_counts = dict(counts)
            new_counts[x] = {"joint": joint, "left": left}
            yield from rec(pos + 1, new_counts, prefix + (y,))

    init = {x: {"joint": np.zeros(ky, dtype=int), "left": remaining_by_symbol[x]}
            for x in windows}
    yield from rec(0, init, ())


def _descending_eigensystem(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(hermitize(matrix))
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    return w / w.sum(), v[:, order]


def _basis_projector_sum(sequences, bases: list[np.ndarray], dim: int,
                         n: int) -> np.ndarray:
    """Sum over sequences of the product-basis rank-1 projector chain.

    bases[t] holds the eigenvector matrix used at position t.  The sum is
    contracted leg by leg, never materializing a Kronecker power of bases.
    """
    mask = np.zeros((dim,) * n, dtype=float)
    for seq in sequences:
        mask[seq] = 1.0
    cur = mask
    for t in range(n):
        a = bases[t]
        b = np.einsum("is,js->sij", a, a.conj())
        # contract the leading symbol leg; its (i, j) pair appends at the end
        cur = np.tensordot(cur, b, axes=([0], [0]))
    perm = [2 * t for t in range(n)] + [2 * t + 1 for t in range(n)]
    full = cur.reshape((dim,) * (2 * n)).transpose(perm)
    d_tot = dim ** n
    return full.reshape(d_tot, d_tot)


def typical_projector(rho, n: int, delta: float) -> np.ndarray:
    """Projector onto the span of typical eigenbasis sequences of rho^(x n)."""
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    dim = mat.shape[0]
    if n * math.log2(dim) > PROJECTOR_LOG2_LIMIT:
        raise ResourceLimitError(
            f"projector needs n * log2(dim) <= {PROJECTOR_LOG2_LIMIT}, "
            f"got {n * math.log2(dim):.1f}")
    w, v = _descending_eigensystem(mat)
    spec = TypicalSpec(w, n, delta)
    return _basis_projector_sum(enumerate_typical(spec), [v] * n, dim, n)


def conditional_typical_projector(branch_states: Sequence, xn: Sequence[int],
                                  delta: float) -> np.ndarray:
    """Projector from conditionally typical eigenbasis sequences along xn."""
    mats = [s.matrix if isinstance(s, DensityMatrix) else np.asarray(s, dtype=complex)
            for s in branch_states]
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise ValidationError("branch states must share one dimension")
    dim = dims.pop()
    xs = np.asarray(xn, dtype=int)
    n = xs.size
    if n * math.log2(dim) > PROJECTOR_LOG2_LIMIT:
        raise ResourceLimitError(
            f"projector needs n * log2(dim) <= {PROJECTOR_LOG2_LIMIT}, "
            f"got {n * math.log2(dim):.1f}")
    if xs.min() < 0 or xs.max() >= len(mats):
        raise ValidationError("base sequence indexes a missing branch state")
    eig = [_descending_eigensystem(m) for m in mats]
    cond = np.stack([w for w, _ in eig], axis=0)
    seqs = enumerate_conditionally_typical(cond, xs, delta)
    bases = [eig[int(x)][1] for x in xs]
    return _basis_projector_sum(seqs, bases, dim, n)


@dataclass(frozen=True, eq=False)
class ProjectedSource:
    """Typical-projected tensor power of a block-form source."""

    state: DensityMatrix
    kept_strings: tuple[tuple[int, ...], ...]
    classical_mass: float
    joint_mass: float
    branch_masses: tuple[float, ...]


def project_and_renormalize(omega: DensityMatrix, m: int, delta: float,
                            c_label: str = "C", q_label: str = "Q",
                            r_label: str = "R") -> ProjectedSource:
    """Typical projection of the m-fold power of a block-form source.

    The classical register is restricted to the typical strings of the block
    weights; each surviving branch is conjugated on its quantum register by
    the conditional typical projector of the branch marginals along the
    string and renormalized.  Classical weights are renormalized by the
    retained classical mass; the overall retained joint mass is reported.
    """
    wanted = (c_label, q_label, r_label)
    if set(omega.space.labels) != set(wanted) or len(omega.space.labels) != 3:
        raise ValidationError(
            f"source must carry exactly the labels {wanted}, got {omega.space.labels}")
    work = omega if omega.space.labels == wanted else permute_subsystems(omega, wanted)
    d_c, d_q, d_r = work.space.dims
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValidationError(f"power must be a positive integer, got {m!r}")
    if m * math.log2(d_c * d_q) > PROJECTOR_LOG2_LIMIT:
        raise ResourceLimitError(
            f"projection needs m * log2(|C||Q|) <= {PROJECTOR_LOG2_LIMIT}")
    if m * math.log2(d_c * d_q * d_r) > PROJECTOR_LOG2_LIMIT:
        raise ResourceLimitError("projected output state would be too large to build")

    t4 = work.matrix.reshape(d_c, d_q * d_r, d_c, d_q * d_r)
    off = 0.0
    for c in range(d_c):
        for cp in range(d_c):
            if c != cp:
                off = max(off, float(np.max(np.abs(t4[c, :, cp, :]))))
    if off > 1e-10:
        raise ValidationError(
            f"state is not block diagonal over {c_label!r}: off-block weight {off:.2e}")
    probs = np.array([float(np.trace(t4[c, :, c, :]).real) for c in range(d_c)])
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    branches = [hermitize(t4[c, :, c, :]) / probs[c] if probs[c] > 1e-14
                else np.eye(d_q * d_r, dtype=complex) / (d_q * d_r)
                for c in range(d_c)]
    q_marginals = [b.reshape(d_q, d_r, d_q, d_r).trace(axis1=1, axis2=3)
                   for b in branches]

    kept = tuple(enumerate_typical(TypicalSpec(probs, m, delta)))
    if not kept:
        raise ValidationError("typical set of the classical register is empty")
    classical_mass = float(sum(np.prod(probs[list(s)]) for s in kept))
    if classical_mass <= 0.0:
        raise ValidationError("retained classical mass is zero")

    dq_m, dr_m = d_q ** m, d_r ** m
    out_dim = (d_c ** m) * dq_m * dr_m
    out = np.zeros((out_dim, out_dim), dtype=complex)
    out_view = out.reshape(d_c ** m, dq_m * dr_m, d_c ** m, dq_m * dr_m)
    # interleaved (q1 r1 ... qm rm) legs regrouped to (q1..qm, r1..rm)
    perm = [2 * t for t in range(m)] + [2 * t + 1 for t in range(m)]
    branch_masses = []
    joint_mass = 0.0
    for string in kept:
        joint = np.array([[1.0 + 0.0j]])
        for x in string:
            joint = np.kron(joint, branches[x])
        legs = joint.reshape((d_q, d_r) * (2 * m))
        legs = legs.transpose(perm + [2 * m + i for i in perm])
        joint = legs.reshape(dq_m * dr_m, dq_m * dr_m)
        proj = conditional_typical_projector(q_marginals, list(string), delta)
        big = np.kron(proj, np.eye(dr_m))
        cut = big @ joint @ big
        mass = float(np.trace(cut).real)
        if mass <= 1e-14:
            raise ValidationError(
                "a retained branch has zero mass under its conditional projector")
        branch_masses.append(mass)
        p_string = float(np.prod(probs[list(string)]))
        joint_mass += p_string * mass
        idx = 0
        for x in string:
            idx = idx * d_c + x
        out_view[idx, :, idx, :] += (p_string / classical_mass) * (cut / mass)

    space = TensorSpace.of((c_label, d_c ** m), (q_label, dq_m), (r_label, dr_m))
    state = DensityMatrix(space, hermitize(out))
    return ProjectedSource(state=state, kept_strings=kept,
                           classical_mass=classical_mass,
                           joint_mass=float(joint_mass),
                           branch_masses=tuple(branch_masses))


def sample_typical_fraction(probs, n: int, delta: float, samples: int,
                            seed: int = 0, chunk: int = 512) -> float:
    """Monte Carlo fraction of i.i.d. draws that land in the typical set."""
    spec = TypicalSpec(probs, n, delta)
    if samples < 1:
        raise ValidationError("sample count must be positive")
    rng = seed_rng(seed, "typical-fraction")
    lo, hi = spec.count_windows()
    k = spec.alphabet_size
    hits = 0
    done = 0
    while done < samples:
        take = min(chunk, samples - done)
        draws = rng.choice(k, size=(take, n), p=spec.probs)
        counts = np.stack([np.sum(draws == x, axis=1) for x in range(k)], axis=1)
        ok = np.all((counts >= lo) & (counts <= hi), axis=1)
        hits += int(np.sum(ok))
        done += take
    return hits / samples
