import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles as o
from qzkp import qla
from qzkp._validation import ValidationError
from qzkp.qla import RegisterLayout

seeds = st.integers(0, 2 ** 31)


def test_layout_offsets_and_wires():
    lay = RegisterLayout((("A", 2), ("B", 0), ("C", 3)))
    assert lay.total == 5
    assert lay.wires("C", "A") == [2, 3, 4, 0, 1]
    assert lay.wires("B") == []
    assert lay.wire("C", 2) == 4
    with pytest.raises(ValidationError):
        RegisterLayout((("A", 1), ("A", 2)))
    with pytest.raises(ValidationError):
        lay.wire("A", 2)


def test_basis_state_msb_convention():
    # wire 0 is the most significant bit
    assert qla.basis_index([1, 0, 0]) == 4
    assert qla.basis_state(3, 4)[4] == 1


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_apply_gate_matches_dense_embedding(seed, n_extra, k):
    rng = np.random.default_rng(seed)
    n = n_extra + k
    wires = list(rng.permutation(n)[:k])
    u = qla.random_unitary(1 << k, rng)
    psi = qla.random_state(1 << n, rng)
    got = qla.apply_gate(psi, u, wires, RegisterLayout((("Q", n),)))
    np.testing.assert_allclose(got, o.embed(u, wires, n) @ psi, atol=1e-12)


@given(seeds)
def test_marginal_factor_and_partial_trace_match_oracle(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout((("A", 1), ("B", 2), ("C", 1)))
    psi = qla.random_state(16, rng)
    rho = np.outer(psi, psi.conj())
    want = o.ptrace_keep(rho, 4, [0, 3])
    f = qla.marginal_factor(psi, lay, {"A", "C"})
    np.testing.assert_allclose(f @ f.conj().T, want, atol=1e-12)
    np.testing.assert_allclose(qla.partial_trace(rho, lay, {"A", "C"}), want, atol=1e-12)


def test_factor_on_wires_respects_order():
    # |01> on wires (0, 1); reading wires in order (1, 0) gives |10>
    psi = qla.basis_state(2, 1)
    f = qla.factor_on_wires(psi, 2, [1, 0])
    assert abs(f[2, 0]) == pytest.approx(1)


@given(seeds)
def test_fidelity_matches_sqrtm_oracle(seed):
    rng = np.random.default_rng(seed)
    a, b = qla.random_density(4, rng), qla.random_density(4, rng)
    assert qla.fidelity(a, b) == pytest.approx(o.fidelity(a, b), abs=1e-7)


def test_fidelity_pure_is_overlap_modulus():
    rng = np.random.default_rng(3)
    x, y = qla.random_state(4, rng), qla.random_state(4, rng)
    assert qla.fidelity(qla.density(x), qla.density(y)) == pytest.approx(abs(np.vdot(x, y)), abs=1e-7)


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_factor_trace_distance_matches_dense(seed, ra, rb):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, ra)) + 1j * rng.normal(size=(4, ra))
    b = rng.normal(size=(4, rb)) + 1j * rng.normal(size=(4, rb))
    want = o.trace_norm(a @ a.conj().T - b @ b.conj().T)
    assert qla.factor_trace_distance(a, b) == pytest.approx(want, abs=1e-10)


def test_trace_norm_orthogonal_pure_states_is_two():
    assert qla.trace_norm(qla.density(qla.basis_state(1, 0)) - qla.density(qla.basis_state(1, 1))) \
        == pytest.approx(2)


@given(seeds)
def test_factor_fidelity_matches_dense(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    b = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    assert qla.factor_fidelity(a, b) == pytest.approx(
        o.fidelity(a @ a.conj().T, b @ b.conj().T), abs=1e-7)


@given(seeds)
def test_random_unitary_is_unitary_and_density_valid(seed):
    rng = np.random.default_rng(seed)
    u = qla.random_unitary(8, rng)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(8), atol=1e-12)
    r = qla.random_density(4, rng)
    assert np.trace(r).real == pytest.approx(1)
    assert np.linalg.eigvalsh(r).min() > -1e-12


@given(seeds)
def test_purify_reduces_to_input(seed):
    rng = np.random.default_rng(seed)
    rho = qla.random_density(4, rng)
    psi, _ = qla.purify(rho)
    n = int(np.log2(psi.size))
    got = o.ptrace_keep(np.outer(psi, psi.conj()), n, [0, 1])
    np.testing.assert_allclose(got, rho, atol=1e-10)


@given(seeds)
def test_uhlmann_align_attains_fidelity(seed):
    # two purifications of the same reduced state on S are related by a unitary on R
    rng = np.random.default_rng(seed)
    lay = RegisterLayout((("S", 1), ("R", 2)))
    phi = qla.random_state(8, rng)
    v = qla.random_unitary(4, rng)
    psi = o.embed(v, [1, 2], 3) @ phi
    u = qla.uhlmann_align(phi, psi, lay, "R")
    got = qla.apply_gate(phi, u, [1, 2], lay)
    assert abs(np.vdot(psi, got)) == pytest.approx(1, abs=1e-9)
    # and in general it reaches the root fidelity of the S marginals
    chi = qla.random_state(8, rng)
    u = qla.uhlmann_align(phi, chi, lay, "R")
    got = abs(np.vdot(chi, qla.apply_gate(phi, u, [1, 2], lay)))
    ra = o.ptrace_keep(np.outer(phi, phi.conj()), 3, [0])
    rb = o.ptrace_keep(np.outer(chi, chi.conj()), 3, [0])
    assert got == pytest.approx(o.fidelity(ra, rb), abs=1e-7)


def test_psd_eigh_rejects_negative():
    with pytest.raises(ValidationError):
        qla.psd_eigh(np.diag([1.0, -0.5]))
