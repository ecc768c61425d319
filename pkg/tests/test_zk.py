import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qzkp import analysis, qip, qla, transforms as T, zk
from qzkp._validation import ValidationError
from qzkp.circuits import Circuit
from qzkp.fixtures import m4_chain, unveil
from qzkp.simulators import single

seeds = st.integers(0, 2 ** 31)


def _broken_unveil_sim():
    ps, h, sim = unveil()
    c1 = sim.branches[0][0][1]
    c2 = sim.branches[1][0][1]
    # drop the coin-controlled rotation of the unveiled message
    c2 = Circuit(c2.layout, c2.gates[:-5])
    return ps, h, single(sim.layout, sim.view_names, [c1, c2])


def test_hv_check_modes():
    ps, h, sim = unveil()
    assert max(zk.hv_check(ps, h, sim)) <= 1e-9
    ps, h, bad = _broken_unveil_sim()
    d = zk.hv_check(ps, h, bad, mode="statistical")
    assert d[0] <= 1e-9 and d[1] > 0.1
    with pytest.raises(zk.CheckFailure):
        zk.hv_check(ps, h, bad)
    with pytest.raises(ValidationError):
        zk.hv_check(ps, h, sim, mode="approximate")


@settings(max_examples=8)
@given(seeds)
def test_rewinding_exact_on_unveil(seed):
    ps, h, sim = unveil()
    rng = np.random.default_rng(seed)
    dv = zk.DishonestVerifier.random(rng, n_aux=int(rng.integers(1, 3)),
                                     n_work=int(rng.integers(1, 3)))
    res = zk.rewind_run(ps, h, sim, dv)
    assert res.success_prob == pytest.approx(0.5, abs=1e-10)
    assert res.output_choi.is_trace_preserving()
    assert res.interaction_choi.is_trace_preserving()
    eq = analysis.choi_bounds(res.output_choi, res.interaction_choi)
    assert eq.equal and eq.diamond_lower == 0.0


@settings(max_examples=5)
@given(seeds)
def test_success_for_matches_a_fresh_run(seed):
    # two routes to the success probability for a new auxiliary state
    ps, h, sim = unveil()
    rng = np.random.default_rng(seed)
    dv = zk.DishonestVerifier.random(rng, n_aux=1)
    aux = qla.random_density(2, rng)
    res = zk.rewind_run(ps, h, sim, dv)
    again = zk.rewind_run(ps, h, sim, dv.with_aux(aux))
    assert res.success_for(aux) == pytest.approx(again.success_prob, abs=1e-12)


def test_rewinding_detects_a_wrong_simulator():
    ps, h, bad = _broken_unveil_sim()
    dv = zk.DishonestVerifier.random(np.random.default_rng(1))
    res = zk.rewind_run(ps, h, bad, dv)
    eq = analysis.choi_bounds(res.output_choi, res.interaction_choi)
    assert not eq.equal and eq.diamond_lower > 1e-3


def test_rewinding_on_public_coin_transform():
    ps, h, sim, _ = T.to_public_coin(*unveil())
    dv = zk.DishonestVerifier.random(np.random.default_rng(2), n_msg=len(qip.stash_pairs(ps)))
    res = zk.rewind_run(ps, h, sim, dv)
    assert res.success_prob == pytest.approx(0.5, abs=1e-10)
    assert analysis.choi_bounds(res.output_choi, res.interaction_choi).equal


def test_rewinding_wide_coin():
    ps, h, sim, _ = T.parallel_repeat(*unveil(), 2)
    dv = zk.DishonestVerifier.random(np.random.default_rng(3), n_msg=2, n_reply=2)
    with pytest.raises(ValidationError):
        zk.rewind_run(ps, h, sim, dv)
    res = zk.rewind_run_wide(ps, h, sim, dv)
    assert res.success_prob == pytest.approx(0.25, abs=1e-10)
    assert res.post_success_prob > res.success_prob
    assert analysis.choi_bounds(res.conditional_choi, res.interaction_choi).equal


def test_rewinding_needs_public_coin_three_messages():
    ps, h, sim = m4_chain()
    with pytest.raises(ValidationError):
        zk.rewind_run(ps, h, sim, zk.DishonestVerifier.random(np.random.default_rng(0)))


def test_dishonest_verifier_validation():
    with pytest.raises(ValidationError):
        zk.DishonestVerifier(np.eye(8), np.eye(2) / 2)
    with pytest.raises(ValidationError):
        zk.DishonestVerifier(np.eye(16), np.eye(2))


@pytest.mark.parametrize("p", [0.0, 2.0 ** -8, 0.3, 0.5])
def test_fail_simulator_block_form(p):
    ps, h, sim = m4_chain(1 / 3)
    sf = zk.make_fail_simulator(sim, p)
    assert zk.fail_probabilities(sf) == pytest.approx([p] * len(sim), abs=1e-12)


@pytest.mark.parametrize("p,t", [(0.5, 1), (0.5, 2), (0.5, 3), (0.3, 2), (0.25, 3)])
def test_fail_amplify_powers(p, t):
    ps, h, sim = m4_chain(1 / 3)
    amp = zk.fail_amplify(zk.make_fail_simulator(sim, p), t)
    assert zk.fail_probabilities(amp) == pytest.approx([p ** t] * len(sim), abs=1e-10)
    # on success the amplified simulator still outputs the original view
    for j in range(1, len(sim) + 1):
        a = amp.factor(j)
        tail = a[a.shape[0] // 2:]
        want = np.sqrt(1 - p ** t) * sim.factor(j)
        assert qla.factor_trace_distance(tail, want) <= 1e-9


@pytest.mark.parametrize("p", [2.0 ** -8, 0.1, 0.5])
def test_fail_wrap_acceptance_and_views(p):
    ps, h, sim = m4_chain(1 / 3)
    pw, hw, sw = zk.fail_wrap(ps, h, zk.make_fail_simulator(sim, p))
    assert qip.run(pw, hw)[0] == pytest.approx((2 / 3) * (1 - p) ** 2, abs=1e-9)
    assert max(zk.hv_check(pw, hw, sw)) <= 1e-9


def test_fail_wrap_rejects_large_fail_probability():
    ps, h, sim = m4_chain(1 / 3)
    with pytest.raises(ValidationError):
        zk.fail_wrap(ps, h, zk.make_fail_simulator(sim, 0.75))
