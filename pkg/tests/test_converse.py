"""Variational converse gadgets on block-form sources."""
import numpy as np
import pytest

from qcap.converse import (ConverseOptions, estimate_W, estimate_Y,
                           evaluate_isometry, extend_source, gadget_grid)
from qcap.errors import DimensionMismatchError, ValidationError
from qcap.sampling import seed_rng
from qcap.spaces import TensorSpace
from qcap.states import DensityMatrix, permute_subsystems

FAST = ConverseOptions(restarts=1, iters_per_stage=8, stages=3, seed=0)


def cqr_state(dims, matrix) -> DensityMatrix:
    space = TensorSpace.of(("C", dims[0]), ("Q", dims[1]), ("R", dims[2]))
    return DensityMatrix(space, matrix)


def classical_bit(p0: float = 0.5) -> DensityMatrix:
    """A classical bit with its copy held by the reference."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = p0
    m[3, 3] = 1.0 - p0
    return cqr_state((2, 1, 2), m)


def pure_ebit() -> DensityMatrix:
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1.0 / np.sqrt(2.0)
    return cqr_state((1, 2, 2), np.outer(v, v.conj()))


def two_block_mixed(seed: int = 0) -> DensityMatrix:
    """Two classical sectors, each holding a mixed correlated qubit pair."""
    rng = seed_rng(seed, "two-block")
    m = np.zeros((2, 4, 2, 4), dtype=complex)
    for c, p in enumerate((0.6, 0.4)):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        blk = a @ a.conj().T
        m[c, :, c, :] = p * blk / np.trace(blk).real
    return cqr_state((2, 2, 2), m.reshape(8, 8))


def test_extend_source_classical_bit():
    src = extend_source(classical_bit(0.65))
    assert (src.dim_c, src.dim_q, src.dim_r) == (2, 1, 2)
    assert src.dim_rp == 1  # pure branches need no purifying reference
    assert src.probs == pytest.approx([0.65, 0.35], abs=1e-12)
    for c in range(2):
        marg = src.branch_marginal(c)
        assert np.trace(marg).real == pytest.approx(1.0, abs=1e-12)
        # branch c holds the copy state |c><c| on R
        assert marg[c, c].real == pytest.approx(1.0, abs=1e-12)


def test_extend_source_purifies_mixed_branches():
    src = extend_source(two_block_mixed())
    assert src.dim_rp == 4  # full-rank 4x4 branches
    state = two_block_mixed()
    t4 = state.matrix.reshape(2, 4, 2, 4)
    for c in range(2):
        expect = np.asarray(t4[c, :, c, :]) / src.probs[c]
        assert src.branch_marginal(c) == pytest.approx(expect, abs=1e-10)
    # the stored target is the block-diagonal source itself
    assert src.target == pytest.approx(state.matrix, abs=1e-10)


def test_extend_source_label_handling():
    state = classical_bit()
    flipped = permute_subsystems(state, ("R", "Q", "C"))
    src = extend_source(flipped)
    assert src.probs == pytest.approx([0.5, 0.5], abs=1e-12)
    with pytest.raises(ValidationError):
        extend_source(DensityMatrix(TensorSpace.of(("C", 2), ("Q", 2)),
                                    np.eye(4) / 4.0))


def test_extend_source_rejects_off_block_weight():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = 0.5
    m[0, 3] = m[3, 0] = 0.25  # coherence between classical sectors
    with pytest.raises(ValidationError):
        extend_source(cqr_state((2, 1, 2), m))


def test_extend_source_size_cap():
    big = DensityMatrix(TensorSpace.of(("C", 2), ("Q", 4), ("R", 2)),
                        np.eye(16) / 16.0)
    with pytest.raises(ValidationError):
        extend_source(big)


def test_zero_epsilon_anchors():
    # the anchor holds at any search budget: the identity embedding stays in
    # the candidate pool and nothing feasible at fidelity 1 can beat it
    tiny = ConverseOptions(restarts=0, iters_per_stage=4, stages=2, seed=0)
    for state in (classical_bit(0.65), pure_ebit(), two_block_mixed()):
        src = extend_source(state)
        for fn in (estimate_Y, estimate_W):
            est = fn(src, 0.0, tiny)
            assert est.value == pytest.approx(0.0, abs=1e-9)
            assert est.achieved_fidelity >= 1.0 - 1e-9


def test_epsilon_range_enforced():
    src = extend_source(classical_bit())
    with pytest.raises(ValidationError):
        estimate_Y(src, 0.6, FAST)
    with pytest.raises(ValidationError):
        estimate_Y(src, -0.1, FAST)


def test_witness_reevaluation_is_exact():
    src = extend_source(classical_bit(0.65))
    for kind, fn in (("Y", estimate_Y), ("W", estimate_W)):
        est = fn(src, 0.3, FAST)
        value, fid = evaluate_isometry(src, kind, est.witness_isometry)
        assert value == pytest.approx(est.value, abs=1e-12)
        assert fid == pytest.approx(est.achieved_fidelity, abs=1e-12)
    with pytest.raises(DimensionMismatchError):
        evaluate_isometry(src, "Y", np.eye(4))


def test_witness_isometry_shape():
    src = extend_source(classical_bit())
    est = estimate_Y(src, 0.2, FAST)
    cq = src.dim_cq
    assert est.witness_isometry.shape == (cq ** 3, cq)
    gram = est.witness_isometry.conj().T @ est.witness_isometry
    assert gram == pytest.approx(np.eye(cq), abs=1e-10)


def test_grid_is_monotone_and_feasible():
    src = extend_source(classical_bit(0.5))
    grid = (0.0, 0.1, 0.3, 0.5)
    for kind in ("Y", "W"):
        ests = gadget_grid(src, grid, kind, FAST)
        values = [e.value for e in ests]
        assert values == sorted(values)
        for eps, est in zip(grid, ests):
            assert est.epsilon == eps
            assert est.achieved_fidelity >= 1.0 - eps - 1e-6


def test_smeared_classical_bit_reaches_log_c():
    # at epsilon = 1/2 a uniform bit can be smeared completely, which drives
    # the classical leakage entropy to its cap log|C| = 1
    src = extend_source(classical_bit(0.5))
    ests = gadget_grid(src, (0.0, 0.5), "W",
                       ConverseOptions(restarts=2, iters_per_stage=12, stages=3, seed=0))
    assert ests[-1].value == pytest.approx(1.0, abs=0.05)
    assert ests[-1].value <= 1.0 + 1e-9


def test_estimates_are_deterministic():
    tiny = ConverseOptions(restarts=1, iters_per_stage=4, stages=2, seed=0)
    src = extend_source(two_block_mixed())
    a = estimate_Y(src, 0.2, tiny)
    b = estimate_Y(src, 0.2, tiny)
    assert a.value == b.value
    assert np.array_equal(a.witness_isometry, b.witness_isometry)
