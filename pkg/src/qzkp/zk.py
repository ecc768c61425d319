"""Zero-knowledge checks: honest-verifier view comparison, rewinding
simulation against dishonest verifiers, and simulators allowed to FAIL.

Rewinding works on a public-coin three-message system.  Its wires are
sorted into roles: M (private wires holding the stashed first message),
R (private coin wires), the coin-copy message wires (which the dishonest
verifier overwrites with its own reply S), N (the other message wires)
and everything else, which joins the simulator's ancillae as A.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qip, qla
from ._config import DERIVED_TOL, REPORT_TOL
from ._validation import ValidationError, check_density, check_unitary
from .circuits import CNOT, CSWAP, CUSTOM, TOFFOLI, UEPS, X, Circuit, controlled_unitary, gate_matrix, mcx
from .qip import ProofSystem, ProverStrategy, choi_from_factors
from .qla import RegisterLayout
from .simulators import FAIL, SimulatorEnsemble


class CheckFailure(AssertionError):
    """A numerical check that should hold exactly did not."""


# ---------------------------------------------------------------- hv check

def hv_check(ps, honest, sim, mode="perfect", tol=REPORT_TOL):
    """Per-turn trace norm between simulated and real views.

    In perfect mode a CheckFailure is raised if any distance exceeds tol.
    """
    if mode not in ("perfect", "statistical"):
        raise ValidationError(f"unknown mode {mode!r}")
    vs = qip.views(ps, honest)
    if len(vs) != len(sim):
        raise ValidationError(f"{len(vs)} views but {len(sim)} simulated views")
    if list(sim.view_names) != ps.layout.names:
        raise ValidationError("simulator view registers differ from the proof system's")
    dist = [qla.factor_trace_distance(v.factor, sim.factor(j + 1)) for j, v in enumerate(vs)]
    if mode == "perfect" and max(dist) > tol:
        raise CheckFailure(f"view distances {dist} exceed {tol}")
    return dist


# --------------------------------------------------------------- rewinding

@dataclass(frozen=True)
class DishonestVerifier:
    """First move W1 of a cheating verifier plus its auxiliary input.

    W1 acts on (S, W, X, M) in that order: S the reply (coin-width wires),
    W private workspace, X the auxiliary register, M the prover's first
    message.  `aux` is a density matrix on X.
    """

    w1: np.ndarray = field(repr=False)
    aux: np.ndarray = field(repr=False)
    n_reply: int = 1
    n_work: int = 1
    n_msg: int = 1

    def __post_init__(self):
        w1 = check_unitary(self.w1, "W1")
        aux = check_density(self.aux, "aux")
        nx = qla.num_qubits(aux.shape[0])
        n = self.n_reply + self.n_work + nx + self.n_msg
        if w1.shape[0] != 1 << n:
            raise ValidationError(f"W1 has dimension {w1.shape[0]}, expected 2^{n}")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "aux", aux)

    @property
    def n_aux(self):
        return qla.num_qubits(self.aux.shape[0])

    @classmethod
    def random(cls, rng, n_msg=1, n_reply=1, n_work=1, n_aux=1):
        d = 1 << (n_reply + n_work + n_aux + n_msg)
        return cls(qla.random_unitary(d, rng), qla.random_density(1 << n_aux, rng),
                   n_reply, n_work, n_msg)

    def with_aux(self, aux):
        return DishonestVerifier(self.w1, aux, self.n_reply, self.n_work, self.n_msg)


@dataclass(frozen=True)
class RewindResult:
    success_prob: float
    output_choi: object
    interaction_choi: object
    post_success_prob: float = None
    conditional_choi: object = None
    success_gram: np.ndarray = field(default=None, repr=False)

    def success_for(self, aux):
        """First-attempt success probability for another auxiliary state, tr(G aux)."""
        aux = check_density(aux, "aux")
        if aux.shape != self.success_gram.shape:
            raise ValidationError("aux dimension differs from the rewound run")
        return float(np.trace(self.success_gram @ aux).real)


def _roles(ps):
    if ps.m != 3 or not qip.is_public_coin(ps):
        raise ValidationError("rewinding needs a public-coin three-message system")
    coins = qip.coin_wires(ps)[0]
    copies = qip.copy_targets(ps)
    stash = qip.stash_pairs(ps)
    m_wires = [b for _, b in stash]
    first = [a for a, _ in stash]
    n_wires = [w for w in ps.message_wires if w not in set(copies)]
    return coins, copies, m_wires, first, n_wires


def _aux_columns(aux):
    w, v = qla.psd_eigh(aux)
    keep = w > 0
    return v[:, keep] * np.sqrt(w[keep])


def _rewind_layout(ps, sim, dv, c):
    """Layout F, S, W, X, FW, then the simulator's registers."""
    gen, glay = sim.to_circuit(2)
    fw = max(0, c - 1)
    lay = RegisterLayout((("F", 1), ("RS", c), ("RW", dv.n_work), ("RX", dv.n_aux),
                          ("FW", fw))) + glay
    return lay, gen, glay


def _shift(c, lay, off):
    return Circuit(lay, tuple(g.moved({w: w + off for w in g.wires}) for g in c.gates))


def _rewind(ps, sim, dv):
    coins, copies, m_wires, _, n_wires = _roles(ps)
    c = len(coins)
    if dv.n_reply != c or dv.n_msg != len(m_wires):
        raise ValidationError("dishonest verifier widths do not match the protocol's coin and message")
    lay, gen, glay = _rewind_layout(ps, sim, dv, c)
    off = lay.total - glay.total
    n = lay.total
    q = _shift(gen, lay, off)
    F = lay.wire("F")
    S, W, Xa, FW = lay.wires("RS"), lay.wires("RW"), lay.wires("RX"), lay.wires("FW")
    M = [w + off for w in m_wires]
    Rw = [w + off for w in coins]
    N = [w + off for w in n_wires]
    w1 = Circuit(lay, (CUSTOM(dv.w1, tuple(S + W + Xa + M), label="verifier"),))
    # F = [R != S]: XOR R into S, flag when any bit is set, undo the XOR
    xor = [CNOT(r, s) for r, s in zip(Rw, S)]
    flag = xor + [X(F)] + mcx(S, F, FW, negated=S) + xor[::-1]
    flag_c = Circuit(lay, tuple(flag))
    out_wires = W + Xa + M + N + Rw

    batch = qip.initial_batch(lay, "RX")
    psi = w1.apply(q.apply(batch))
    psi = flag_c.apply(psi)
    fbit = n - 1 - F
    idx = np.arange(1 << n)
    ok = ((idx >> fbit) & 1) == 0
    good = np.where(ok[:, None], psi, 0)
    bad = np.where(ok[:, None], 0, psi)
    # failure branch: F is known to be 1, uncompute it and rewind
    bad = flag_c.apply(bad)
    bad = q.adjoint().apply(w1.adjoint().apply(bad))
    zero_mask = np.ones(1 << n, dtype=bool)
    for w in range(n):
        if w not in set(Xa):
            zero_mask &= ((idx >> (n - 1 - w)) & 1) == 0
    bad = np.where(zero_mask[:, None], -bad, bad)
    bad = w1.apply(q.apply(bad))
    # the sign flip above is -(2|0><0| - I); the global sign drops out of every output
    post = flag_c.apply(bad)
    post_ok = np.where(ok[:, None], post, 0)

    cols = _aux_columns(dv.aux)
    def prob(v):
        a = v @ cols
        return float(np.vdot(a, a).real)
    p0 = prob(good)
    p_post = p0 + prob(post_ok)

    rows = [np.hstack([qla.factor_on_wires(good[:, i], n, out_wires),
                       qla.factor_on_wires(bad[:, i], n, out_wires)])
            for i in range(good.shape[1])]
    out = choi_from_factors(rows)
    cond_rows = [qla.factor_on_wires(good[:, i], n, out_wires) * np.sqrt(2.0 ** c)
                 for i in range(good.shape[1])]
    cond = choi_from_factors(cond_rows)
    gram = good.conj().T @ good
    return p0, p_post, out, cond, gram


def graft(ps, honest, dv):
    """The dishonest verifier's interaction with the honest prover.

    The verifier stashes the first message into M and applies W1; its reply
    S sits on the coin-copy wires.  The prover first copies S into a fresh
    register (the measure-first rule), then runs its honest second move.
    Returns (proof system, prover, output wires in (W, X, M, N, S) order).
    """
    coins, copies, m_wires, first, n_wires = _roles(ps)
    msg_regs = tuple(r for r in ps.layout.registers if r[0] in ps.message_names)
    lay = RegisterLayout((("GM", len(m_wires)), ("RW", dv.n_work), ("RX", dv.n_aux),
                          ("DOUT", 1)) + msg_regs)
    npriv = lay.total - ps.q_message
    mv = lambda w: w - ps.n_private + npriv
    GM, W, Xa = lay.wires("GM"), lay.wires("RW"), lay.wires("RX")
    S = [mv(w) for w in copies]
    g1 = []
    for a, b in zip(first, GM):
        g1 += [CNOT(mv(a), b), CNOT(b, mv(a))]
    g1.append(CUSTOM(dv.w1, tuple(S + W + Xa + GM), label="verifier"))
    ps2 = ProofSystem(3, lay, npriv, (Circuit(lay, tuple(g1)), Circuit(lay, ())),
                      lay.wire("DOUT"), name=f"grafted({ps.name})")
    plo = honest.layout.extend(("MEAS", len(copies)))
    joint = lay + plo
    pshift = lambda w: mv(w) if w < ps.layout.total else w - ps.layout.total + lay.total
    circs = []
    for j, c in enumerate(honest.circuits):
        gates = [g.moved({w: pshift(w) for w in g.wires}) for g in c.gates]
        if j == 1:
            gates = [CNOT(s, t) for s, t in zip(S, joint.wires("MEAS"))] + gates
        circs.append(Circuit(joint, tuple(gates)))
    pr2 = ProverStrategy(plo, tuple(circs))
    out = W + Xa + GM + [mv(w) for w in n_wires] + S
    return ps2, pr2, out


def interaction_choi(ps, honest, dv):
    ps2, pr2, out = graft(ps, honest, dv)
    joint = qip.joint_layout(ps2, pr2.layout)
    batch = qip.initial_batch(joint, "RX")
    _, final = qip.run(ps2, pr2, initial=batch)
    return qip.choi_from_outputs(final, joint, out)


def rewind_run(ps, honest, sim, dv):
    """Rewinding simulator against dv on a one-coin public-coin system."""
    coins = _roles(ps)[0]
    if len(coins) != 1:
        raise ValidationError(f"coin has {len(coins)} bits; use rewind_run_wide")
    return rewind_run_wide(ps, honest, sim, dv)


def rewind_run_wide(ps, honest, sim, dv):
    """Rewinding with a c-bit coin: one attempt, one reflection step.

    success_prob is the first-attempt probability (2^-c on exact
    simulators); post_success_prob adds the success after one reflection,
    and conditional_choi is the output channel given first-attempt success.
    """
    p0, p_post, out, cond, gram = _rewind(ps, sim, dv)
    return RewindResult(p0, out, interaction_choi(ps, honest, dv), p_post, cond, gram)


# --------------------------------------------------------- FAIL simulators

def make_fail_simulator(sim, p):
    """Simulator that FAILs with probability p[j] at turn j (a float applies to all)."""
    nj = len(sim)
    ps_ = [float(p)] * nj if np.isscalar(p) else [float(x) for x in p]
    lay = RegisterLayout(((FAIL, 1),)) + sim.layout.extend(("FCOPY", 1))
    f, fc = lay.wire(FAIL), lay.wire("FCOPY")
    branches = []
    for j in range(1, nj + 1):
        branches.append(sim.to_circuit(j))
    na = max(gl.total - sim.layout.total for _, gl in branches)
    lay = lay.extend(("FIDX", na))
    out = []
    for j, (c, glay) in enumerate(branches):
        tgt = [w + 1 for w in range(sim.layout.total)] + lay.wires("FIDX")
        placed = [g.moved({w: tgt[w] for w in g.wires}) for g in c.gates]
        g = [UEPS(ps_[j], f), CNOT(f, fc)]
        for x in placed:
            u = controlled_unitary(gate_matrix(x), 1, 1)
            g.append(CUSTOM(u, (f,) + x.wires, label="simulator"))
        out.append(((1.0, Circuit(lay, tuple(g))),))
    return SimulatorEnsemble(lay, (FAIL,) + tuple(sim.view_names), tuple(out), FAIL)


def fail_probabilities(sim_fail, tol=REPORT_TOL):
    """Per-turn FAIL probability, checking the required block form.

    The output must be p |0><0| (x) |0...0><0...0| + (1 - p) |1><1| (x) view.
    """
    if sim_fail.fail_register is None or sim_fail.view_names[0] != sim_fail.fail_register:
        raise ValidationError("simulator has no leading FAIL register")
    out = []
    for j in range(1, len(sim_fail) + 1):
        a = sim_fail.factor(j)
        half = a.shape[0] // 2
        a0, a1 = a[:half], a[half:]
        cross = np.abs(a0 @ a1.conj().T).max() if a0.size and a1.size else 0.0
        stray = np.abs(a0[1:]).max() if half > 1 else 0.0
        if cross > tol or stray > tol:
            raise ValidationError(f"simulated view {j} is not of the FAIL block form")
        out.append(float(np.vdot(a0, a0).real))
    return out


def fail_amplify(sim_fail, t):
    """Run t independent attempts and keep the first non-failing one."""
    if t < 1:
        raise ValidationError("t must be at least 1")
    if t == 1:
        return sim_fail
    fail_probabilities(sim_fail)
    base = sim_fail.layout
    nb = base.total
    nv = sim_fail.view_layout.total
    regs = base.registers + tuple((f"T{a}.{n}", w) for a in range(1, t) for n, w in base.registers)
    regs += (("TFLAG", t - 1),)
    lay = RegisterLayout(regs)
    flag = lay.wires("TFLAG")
    f0 = 0
    view0 = list(range(nv))
    branches = []
    for j in range(1, len(sim_fail) + 1):
        c, glay = sim_fail.to_circuit(j)
        if glay.total != nb:
            raise ValidationError("fail_amplify needs single-branch FAIL simulators")
        g = [x for x in c.gates]
        for a in range(1, t):
            off = a * nb
            g += [x.moved({w: w + off for w in x.wires}) for x in c.gates]
        for a in range(1, t):
            off = a * nb
            fa = off
            g += [X(f0), TOFFOLI(f0, fa, flag[a - 1]), X(f0)]
            g += [CSWAP(flag[a - 1], v, v + off) for v in view0]
        branches.append(((1.0, Circuit(lay, tuple(g))),))
    return SimulatorEnsemble(lay, sim_fail.view_names, tuple(branches), sim_fail.fail_register)


def fail_wrap(ps, honest, sim_fail, p_bound=0.5):
    """Protocol whose honest-verifier simulator never FAILs, from one that may.

    A flag B travels with every message.  The prover samples the FAIL
    simulator each round; on a simulated FAIL it clears B (forcing the
    verifier to reject), otherwise it plays honestly.  The new verifier
    accepts iff B = 1 and the original test passes.
    """
    if ps.m % 2:
        raise ValidationError("fail_wrap expects an even number of messages")
    ps_fail = fail_probabilities(sim_fail)
    if max(ps_fail) > p_bound + REPORT_TOL:
        raise ValidationError(f"FAIL probabilities {ps_fail} exceed the bound {p_bound}")
    if list(sim_fail.view_names[1:]) != ps.layout.names:
        raise ValidationError("FAIL simulator views must cover the proof system's registers")
    k = ps.m // 2
    n0 = ps.layout.total
    priv = tuple(r for r in ps.layout.registers if r[0] in ps.private_names)
    msgr = tuple(r for r in ps.layout.registers if r[0] in ps.message_names)
    conds = ps.accept_conditions()
    lay = RegisterLayout(priv + (("OUTB", 1), ("WKB", max(0, len(conds) - 1))) + msgr
                         + (("BFLAG", 1),))
    npriv = ps.n_private + 1 + lay.size("WKB")
    base = list(range(ps.n_private)) + list(range(npriv, npriv + ps.q_message))
    B, OUTB = lay.wire("BFLAG"), lay.wire("OUTB")

    def vturn(j):
        return [g.moved({w: base[w] for w in g.wires}) for g in ps.verifier[j].gates]

    ver = []
    for j in range(k + 1):
        g = vturn(j)
        if j == 0:
            g = [X(B)] + g
        if j == k:
            g += mcx([B] + [base[w] for w, _ in conds], OUTB, lay.wires("WKB"),
                     negated=[base[w] for w, v in conds if v == 0])
        ver.append(Circuit(lay, tuple(g)))
    psw = ProofSystem(ps.m, lay, npriv, tuple(ver), OUTB, name=f"fail-wrap({ps.name})")

    slay0 = sim_fail.layout
    ns = slay0.total
    gens = [sim_fail.to_circuit(j)[0] for j in range(1, k + 1)]
    if any(c.layout.total != ns for c in gens):
        raise ValidationError("fail_wrap needs single-branch FAIL simulators")
    # prover: original registers, then per round a B record and a simulator copy
    plo = honest.layout
    for j in range(1, k + 1):
        plo = plo.extend((f"FREC{j}", 1), (f"G{j}", ns))
    joint = lay + plo
    pw = joint.wires(*honest.layout.names)
    circs = []
    for j in range(1, k + 1):
        rec = joint.wire(f"FREC{j}")
        G = joint.wires(f"G{j}")
        fl = G[0]
        g = [CNOT(B, rec)]
        g += [x.moved({w: G[w] for w in x.wires}) for x in gens[j - 1].gates]
        g += [X(fl), TOFFOLI(rec, fl, B), X(fl)]
        placed = [x.moved({w: (base + pw)[w] for w in x.wires}) for x in honest.circuits[j - 1].gates]
        for x in placed:
            u = controlled_unitary(gate_matrix(x), 2, 3)
            g.append(CUSTOM(u, (rec, fl) + x.wires, label="prover"))
        circs.append(Circuit(joint, tuple(g)))
    honestw = ProverStrategy(plo, tuple(circs))

    # simulator: per round a B record, a simulator copy and a swap flag
    slay = lay
    for j in range(1, k + 1):
        slay = slay.extend((f"SREC{j}", 1), (f"SG{j}", ns), (f"SFL{j}", 1))
    vm = base + [B]
    branches = []
    acc = []
    for j in range(1, k + 1):
        vj = [x.moved({w: w for w in x.wires}) for x in ver[j - 1].gates]
        rec = slay.wire(f"SREC{j}")
        G = slay.wires(f"SG{j}")
        fl, sfl = G[0], slay.wire(f"SFL{j}")
        step = list(vj) + [CNOT(B, rec)]
        step += [x.moved({w: G[w] for w in x.wires}) for x in gens[j - 1].gates]
        step += [TOFFOLI(rec, fl, sfl)]
        step += [CSWAP(sfl, base[i], G[1 + i]) for i in range(n0)]
        step += [X(fl), TOFFOLI(rec, fl, B), X(fl)]
        acc = acc + step
        branches.append(((1.0, Circuit(slay, tuple(acc))),))
    simw = SimulatorEnsemble(slay, lay.names, tuple(branches))
    return psw, honestw, simw
