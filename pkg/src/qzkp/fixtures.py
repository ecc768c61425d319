"""Small concrete protocol instances with yes/no variants.

unveil: three messages.  The prover sends half of a Bell pair, the verifier
flips a coin b and the prover returns its half, rotated by H when b = 1;
the verifier rotates its half the same way and checks the two agree.

m4-chain: four messages on one verifier, one message and one prover qubit.
The prover must keep M at |1> so the verifier's phase kicks cancel; the
final UEPS(eps) rotation makes the honest acceptance exactly 1 - eps.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import qip
from .circuits import CNOT, CPHASE_I, CUSTOM, H, UEPS, X, Circuit
from .qla import RegisterLayout
from .qip import ProofSystem, ProverStrategy
from .simulators import single

# Z . UEPS(c) . X . UEPS(c) . Z = H for c = cos^2(pi/8); with the X replaced
# by a CNOT from the coin this is a coin-controlled Hadamard from named gates
_CH_EPS = float(np.cos(np.pi / 8) ** 2)
_CH = np.array([[1, 0, 0, 0], [0, 1, 0, 0],
                [0, 0, 1 / np.sqrt(2), 1 / np.sqrt(2)],
                [0, 0, 1 / np.sqrt(2), -1 / np.sqrt(2)]], dtype=complex)


def controlled_h_named(ctrl, target):
    return [UEPS(1.0, target), UEPS(_CH_EPS, target), CNOT(ctrl, target),
            UEPS(_CH_EPS, target), UEPS(1.0, target)]


def unveil(eps=0.0, no=False):
    """Bell-pair unveiling game; `no` makes the verifier dephase its half first."""
    priv = [("S", 1), ("R", 1), ("OUT", 1)] + ([("D", 1)] if no else [])
    lay = RegisterLayout(tuple(priv) + (("MSG", 1), ("C", 1)))
    s, r, out, msg, c = (lay.wire(n) for n in ("S", "R", "OUT", "MSG", "C"))
    v1 = [CNOT(msg, s), CNOT(s, msg), H(r), CNOT(r, c)]
    v2 = [CNOT(s, lay.wire("D"))] if no else []
    v2 += controlled_h_named(r, s)
    v2 += [CNOT(s, msg), X(msg), CNOT(msg, out), X(msg)]
    if eps > 0:
        v2 += [X(out), UEPS(eps, out)]
    ps = ProofSystem(3, lay, len(priv), (Circuit(lay, tuple(v1)), Circuit(lay, tuple(v2))), out,
                     name="unveil-no" if no else "unveil")

    plo = RegisterLayout((("P", 2),))
    joint = lay + plo
    p0, pc = joint.wires("P")
    p1 = [H(msg), CNOT(msg, p0)]
    p2 = [CNOT(c, pc), CUSTOM(_CH, (c, p0), label="prover"), CNOT(p0, msg), CNOT(msg, p0)]
    honest = ProverStrategy(plo, (Circuit(joint, tuple(p1)), Circuit(joint, tuple(p2))))

    slay = lay.extend(("A", 1))
    a = slay.wire("A")
    s1 = [H(a), CNOT(a, msg)]
    s2 = [H(a), CNOT(a, r), CNOT(r, c), H(s), CNOT(s, msg)] + controlled_h_named(r, msg)
    sim = single(slay, lay.names, [Circuit(slay, tuple(s1)), Circuit(slay, tuple(s2))])
    return ps, honest, sim


def m4_chain(eps=0.0, no=False):
    """Four-message phase chain; `no` flips the last phase kick so it adds instead of cancels."""
    lay = RegisterLayout((("V", 1), ("M", 1)))
    v, m = 0, 1
    v1 = ()
    v2 = (H(v), CPHASE_I(v, m))
    kick = (CPHASE_I(v, m),) * (3 if no else 1)
    v3 = kick + (H(v), X(v), UEPS(eps, v))
    ps = ProofSystem(4, lay, 1, tuple(Circuit(lay, g) for g in (v1, v2, v3)), v,
                     name="m4-chain-no" if no else "m4-chain")
    plo = RegisterLayout((("P", 1),))
    joint = lay + plo
    honest = ProverStrategy(plo, (Circuit(joint, (X(m),)), Circuit(joint, ())))
    sim = single(lay, lay.names, [Circuit(lay, (X(m),)),
                                  Circuit(lay, (X(m), H(v), CPHASE_I(v, m)))])
    return ps, honest, sim


@dataclass
class Fixture:
    """A protocol instance plus ground truth computed on first use.

    `delta` of a no-instance is 1 minus the best cheating acceptance the
    optimizer finds.  The optimizer only lower-bounds the true cheat value,
    so this delta may overstate the real soundness gap.
    """

    name: str
    ps: ProofSystem
    honest: ProverStrategy
    sim: object
    eps: float = 0.0
    yes: bool = True
    attack_restarts: int = 8
    attack_iters: int = 500

    @cached_property
    def p_acc(self):
        return qip.run(self.ps, self.honest)[0]

    @cached_property
    def view_distances(self):
        from .zk import hv_check
        return hv_check(self.ps, self.honest, self.sim, mode="statistical")

    @cached_property
    def cheat_value(self):
        from .analysis import optimize_prover
        res = optimize_prover(self.ps, restarts=self.attack_restarts, iters=self.attack_iters,
                              seed=0, init=self.honest)
        return res.best_p

    @property
    def delta(self):
        """1 - (best acceptance found); only meaningful for no-instances."""
        return None if self.yes else 1.0 - self.cheat_value

    def ground_truth(self):
        out = {"p_acc": (self.p_acc, "run"),
               "view_distances": (list(self.view_distances), "hv_check")}
        if not self.yes:
            out["cheat_value"] = (self.cheat_value, "optimize_prover")
        return out


def fixture_catalog():
    return [
        Fixture("unveil", *unveil()),
        Fixture("unveil-no", *unveil(no=True), yes=False),
        Fixture("m4-chain", *m4_chain(0.1), eps=0.1),
        Fixture("m4-chain-no", *m4_chain(no=True), yes=False),
    ]


def get_fixture(name):
    for f in fixture_catalog():
        if f.name == name:
            return f
    raise KeyError(f"unknown fixture {name!r}")
