import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles as o
from qzkp import qla, simulators as S
from qzkp._validation import ValidationError
from qzkp.circuits import H, X, Circuit
from qzkp.qla import RegisterLayout

seeds = st.integers(0, 2 ** 31)


@given(seeds)
def test_from_factors_reproduces_states(seed):
    rng = np.random.default_rng(seed)
    view = RegisterLayout((("V", 1), ("M", 1)))
    rhos = [qla.random_density(4, rng, rank=int(rng.integers(1, 5))) for _ in range(2)]
    factors = []
    for r in rhos:
        w, v = np.linalg.eigh(r)
        factors.append(v * np.sqrt(np.clip(w, 0, None)))
    sim = S.from_factors(view, factors)
    for j, r in enumerate(rhos, 1):
        np.testing.assert_allclose(sim.state(j), r, atol=1e-10)


def test_mixture_and_to_circuit_agree():
    lay = RegisterLayout((("V", 1), ("A", 1)))
    a = Circuit(lay, (X(0),))
    b = Circuit(lay, (H(0),))
    sim = S.SimulatorEnsemble(lay, ("V",), (((0.3, a), (0.7, b)),))
    want = 0.3 * np.diag([0, 1]) + 0.7 * 0.5 * np.ones((2, 2))
    np.testing.assert_allclose(sim.state(1), want, atol=1e-12)
    c, glay = sim.to_circuit(1)
    psi = o.circuit_unitary(c) @ qla.basis_state(glay.total)
    got = o.ptrace_keep(np.outer(psi, psi.conj()), glay.total, [0])
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_ensemble_validation():
    lay = RegisterLayout((("V", 1), ("A", 1)))
    c = Circuit(lay, ())
    with pytest.raises(ValidationError):
        S.SimulatorEnsemble(lay, ("V",), (((0.5, c),),))
    with pytest.raises(ValidationError):
        S.SimulatorEnsemble(lay, ("A", "V"), (((1.0, c),),))
    with pytest.raises(ValidationError):
        S.SimulatorEnsemble(lay, ("V",), ((),))
