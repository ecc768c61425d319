import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles as o
from qzkp import circuits as C, qla
from qzkp._validation import ValidationError
from qzkp.qla import RegisterLayout

seeds = st.integers(0, 2 ** 31)
NAMED = [C.H(0), C.X(0), C.CNOT(0, 1), C.TOFFOLI(0, 1, 2), C.CSWAP(0, 1, 2), C.CPHASE_I(0, 1),
         C.UEPS(0.3, 0)]


@pytest.mark.parametrize("g", NAMED, ids=lambda g: g.kind)
def test_gate_matrices_match_textbook(g):
    np.testing.assert_allclose(C.gate_matrix(g), o.gate_dense(g), atol=1e-12)


def test_ueps_special_values():
    np.testing.assert_allclose(C.ueps_matrix(0), o.X, atol=1e-12)
    np.testing.assert_allclose(C.ueps_matrix(1), o.Z, atol=1e-12)
    np.testing.assert_allclose(C.ueps_matrix(0.5), o.H, atol=1e-12)


@given(st.floats(0, 1))
def test_ueps_is_real_symmetric_involution(eps):
    u = C.ueps_matrix(eps)
    np.testing.assert_allclose(u @ u, np.eye(2), atol=1e-12)
    # first column carries amplitude sqrt(eps) on |0>
    assert abs(u[0, 0]) ** 2 == pytest.approx(eps)


def test_gate_validation():
    with pytest.raises(ValidationError):
        C.UEPS(1.5, 0)
    with pytest.raises(ValidationError):
        C.CNOT(0, 0)
    with pytest.raises(ValidationError):
        C.CUSTOM(np.ones((2, 2)), (0,))
    with pytest.raises(ValidationError):
        C.Gate("FOO", (0,))


def _random_circuit(rng, lay, depth=8):
    n = lay.total
    gates = []
    for _ in range(depth):
        k = rng.integers(5)
        w = [int(x) for x in rng.permutation(n)[:3]]
        if k == 0:
            gates.append(C.H(w[0]))
        elif k == 1:
            gates.append(C.CNOT(w[0], w[1]))
        elif k == 2:
            gates.append(C.TOFFOLI(*w))
        elif k == 3:
            gates.append(C.UEPS(float(rng.uniform()), w[0]))
        else:
            gates.append(C.CUSTOM(qla.random_unitary(4, rng), tuple(w[:2])))
    return C.Circuit(lay, tuple(gates))


@given(seeds)
def test_circuit_apply_matches_dense_product(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout((("A", 2), ("B", 2)))
    c = _random_circuit(rng, lay)
    psi = qla.random_state(16, rng)
    np.testing.assert_allclose(c.apply(psi), o.circuit_unitary(c) @ psi, atol=1e-11)
    np.testing.assert_allclose(C.compile(c), o.circuit_unitary(c), atol=1e-11)


@given(seeds)
def test_adjoint_inverts(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout((("A", 3),))
    c = _random_circuit(rng, lay)
    psi = qla.random_state(8, rng)
    np.testing.assert_allclose(c.adjoint().apply(c.apply(psi)), psi, atol=1e-11)


@given(st.integers(1, 4), st.data())
def test_mcx_truth_table(nc, data):
    negated = data.draw(st.lists(st.integers(0, nc - 1), unique=True))
    work = list(range(nc + 1, nc + 1 + max(0, nc - 2)))
    n = nc + 1 + len(work)
    gates = C.mcx(list(range(nc)), nc, work, negated=negated)
    c = C.Circuit(RegisterLayout((("Q", n),)), tuple(gates))
    for ctrl in range(1 << nc):
        bits = [(ctrl >> (nc - 1 - i)) & 1 for i in range(nc)]
        fire = all((b == 0) if i in negated else (b == 1) for i, b in enumerate(bits))
        start = qla.basis_index(bits + [0] * (1 + len(work)))
        out = c.apply(qla.basis_state(n, start))
        want = qla.basis_index(bits + [int(fire)] + [0] * len(work))
        assert abs(out[want]) == pytest.approx(1)


@given(seeds)
def test_swap_select_applies_chosen_variant(seed):
    from qzkp.checks import swap_select_error
    assert swap_select_error(np.random.default_rng(seed)) <= 1e-12


def test_swap_select_rejects_identityless_variant_without_ancilla():
    lay = RegisterLayout((("C", 1), ("T", 1), ("A0", 1), ("A1", 1)))
    vs = [C.Circuit(lay, (C.X(1),)), C.Circuit(lay, ())]
    with pytest.raises(ValidationError):
        C.swap_select(vs, "C", [None, "A1"])


@given(seeds)
def test_state_prep_and_complete_basis(seed):
    rng = np.random.default_rng(seed)
    v = qla.random_state(8, rng)
    u = C.state_prep_unitary(v)
    np.testing.assert_allclose(u[:, 0], v, atol=1e-12)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(8), atol=1e-12)


def test_controlled_unitary_value():
    u = C.controlled_unitary(o.X, 2, value=1)
    # control bits 01 select the block at index 1
    e = np.zeros(8)
    e[0b011] = 1
    assert abs((u @ e)[0b010]) == pytest.approx(1)
    e = np.zeros(8)
    e[0b111] = 1
    assert abs((u @ e)[0b111]) == pytest.approx(1)


@pytest.mark.parametrize("g", NAMED + [C.CUSTOM(np.eye(2), (0,), label="prover")],
                         ids=lambda g: g.kind)
def test_gate_json_round_trip(g):
    d = json.loads(json.dumps(C.gate_to_json(g)))
    assert C.gate_from_json(d) == g


def test_move_into_zero_and_swap():
    lay = RegisterLayout((("Q", 2),))
    c = C.Circuit(lay, tuple(C.move_into_zero(0, 1)))
    out = c.apply(qla.basis_state(2, 0b10))
    assert abs(out[0b01]) == pytest.approx(1)
    c = C.Circuit(lay, tuple(C.swap_wires(0, 1)))
    assert abs(c.apply(qla.basis_state(2, 0b10))[0b01]) == pytest.approx(1)
