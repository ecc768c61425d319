import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import binom

import oracles as o
from qzkp import qip, transforms as T, zk
from qzkp._validation import ValidationError
from qzkp.circuits import assert_named_only
from qzkp.fixtures import m4_chain, unveil


def test_bound_formulas_frozen():
    assert T.parallelize_bounds(0.1, 0.5, 4) == pytest.approx((0.95, 1 - 0.25 / 800))
    assert T.public_coin_bounds(0.2, 0.36) == pytest.approx((0.9, 0.9))
    assert T.perfect_complete_bounds(0.1, 0.5) == pytest.approx((1.0, 0.84))
    assert T.repetition_bounds(0.25, 0.5, 3, 2) == pytest.approx((0.84375, 0.5))
    assert T.repetition_bounds(0.25, 0.5, 2) == pytest.approx((0.5625, 0.25))
    assert T.parallelize_bounds(None, None, 4) == (None, None)


@given(st.integers(1, 8), st.data(), st.floats(0, 1))
def test_binomial_tail_matches_scipy(k, data, p):
    t = data.draw(st.integers(0, k))
    assert T.binomial_tail(k, t, p) == pytest.approx(binom.sf(t - 1, k, p), abs=1e-12)


def _named_verifier(ps):
    return all(assert_named_only(c) for c in ps.verifier)


def test_parallelize_m4():
    ps, h, s, rep = T.parallelize(*m4_chain(0.1))
    assert ps.m == 3
    assert qip.run(ps, h)[0] == pytest.approx(0.95, abs=1e-9)
    assert rep.completeness == pytest.approx(0.95)
    assert max(zk.hv_check(ps, h, s)) <= 1e-9
    assert _named_verifier(ps)


def test_parallelize_rejects_mismatched_simulator():
    ps, h, _ = m4_chain()
    with pytest.raises(ValidationError):
        T.parallelize(ps, h, unveil()[2])


def test_public_coin_unveil_matches_oracle():
    ps, h, s, rep = T.to_public_coin(*unveil(0.25))
    assert qip.is_public_coin(ps)
    p = qip.run(ps, h)[0]
    assert p == pytest.approx(o.run_dense(ps, h)[0], abs=1e-12)
    assert p == pytest.approx(0.875, abs=1e-9)
    assert p >= rep.completeness - 1e-9
    assert max(zk.hv_check(ps, h, s)) <= 1e-9
    assert _named_verifier(ps)


@pytest.mark.parametrize("base,eps", [(0.0, 0.0), (0.04, 0.04), (0.1, 0.1), (0.02, 0.1)])
def test_perfect_complete(base, eps):
    ps, h, s, rep = T.make_perfect_complete(*m4_chain(base), eps)
    p = qip.run(ps, h)[0]
    assert p == pytest.approx(1.0, abs=1e-9)
    assert p == pytest.approx(o.run_dense(ps, h)[0], abs=1e-12)
    dist = zk.hv_check(ps, h, s, mode="statistical")
    assert max(dist) <= 2 * np.sqrt(eps) + 1e-9
    if base == eps:
        # honest acceptance exactly 1 - eps leaves the views untouched
        assert max(dist) <= 1e-9
    assert _named_verifier(ps)


def test_perfect_complete_rejects_low_acceptance():
    with pytest.raises(ValidationError):
        T.make_perfect_complete(*m4_chain(0.2), 0.1)


def test_perfect_complete_verifier_on_no_instance_is_valid():
    ps = T.perfect_complete_verifier(m4_chain(0.1, no=True)[0], 0.1)
    assert ps.m == 6
    assert _named_verifier(ps)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_parallel_repeat_multiplies(k):
    ps, h, s, _ = T.parallel_repeat(*m4_chain(0.25), k)
    p = qip.run(ps, h)[0]
    assert p == pytest.approx(0.75 ** k, abs=1e-9)
    assert p == pytest.approx(o.run_dense(ps, h)[0], abs=1e-12)
    assert max(zk.hv_check(ps, h, s)) <= 1e-9


def test_parallel_repeat_keeps_public_coin():
    ps, h, s, _ = T.parallel_repeat(*unveil(0.25), 2)
    assert qip.is_public_coin(ps)
    assert qip.run(ps, h)[0] == pytest.approx(0.5625, abs=1e-9)


@pytest.mark.parametrize("k,t", [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)])
def test_sequential_repeat_is_binomial(k, t):
    ps, h, s, _ = T.sequential_repeat(*m4_chain(0.25), k, t)
    assert ps.m == 4 * k
    assert qip.run(ps, h)[0] == pytest.approx(binom.sf(t - 1, k, 0.75), abs=1e-9)
    assert max(zk.hv_check(ps, h, s)) <= 1e-9


def test_sequential_repeat_odd_messages():
    ps, h, s, _ = T.sequential_repeat(*unveil(0.25), 2, 1)
    assert qip.run(ps, h)[0] == pytest.approx(1 - 0.25 ** 2, abs=1e-9)
    assert max(zk.hv_check(ps, h, s)) <= 1e-9


def test_repeat_argument_checks():
    with pytest.raises(ValidationError):
        T.parallel_repeat(*m4_chain(), 0)
    with pytest.raises(ValidationError):
        T.sequential_repeat(*m4_chain(), 2, 3)


def test_padding_preserves_acceptance_and_views():
    ps, h, s = unveil(0.25)
    p2, h2, s2 = T.pad_to_even(ps, h, s)
    assert p2.m == 4
    assert qip.run(p2, h2)[0] == pytest.approx(0.75, abs=1e-12)
    assert max(zk.hv_check(p2, h2, s2)) <= 1e-9
    p3, h3, s3 = T.pad_rounds(p2, h2, s2, 4)
    assert p3.m == 8
    assert qip.run(p3, h3)[0] == pytest.approx(0.75, abs=1e-12)
    assert max(zk.hv_check(p3, h3, s3)) <= 1e-9


def test_report_as_dict():
    _, _, _, rep = T.parallel_repeat(*m4_chain(0.25), 2, eps=0.25, delta=0.5)
    d = rep.as_dict()
    assert d["kind"] and d["completeness"] == pytest.approx(0.5625)
    assert d["soundness"] == pytest.approx(0.25)
