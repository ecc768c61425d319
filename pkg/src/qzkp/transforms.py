"""Protocol rewrites on (proof system, honest prover, simulator) triples.

Every transform returns a new triple and a TransformReport carrying the
claimed completeness and soundness bounds as formulas evaluated at the
given (eps, delta).  The claims are checked elsewhere, never assumed.

Wire bookkeeping: a base circuit is moved onto a new layout by sending
base wire w to targets[w] (`_place`).  Base proof systems keep private
registers first and the message register last; base prover circuits live
on the base joint layout (verifier wires, then prover wires); base
simulator circuits have the view registers first, then ancillae.
"""

from dataclasses import dataclass, field
from itertools import product
from math import ceil, comb, log2, sqrt

import numpy as np

from . import qip, qla
from ._validation import ValidationError
from .circuits import (
    CNOT, CSWAP, CUSTOM, H, UEPS, X, Circuit, complete_basis, controlled_unitary, gate_matrix,
    mcx, move_into_zero, swap_select, swap_wires,
)
from .qip import ProofSystem, ProverStrategy, n_prover_turns
from .qla import RegisterLayout
from .simulators import SimulatorEnsemble

_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


@dataclass(frozen=True)
class TransformReport:
    kind: str
    messages: int
    registers: tuple
    prover_registers: tuple
    completeness: float = None
    soundness: float = None
    completeness_rule: str = ""
    soundness_rule: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in (self.completeness, self.soundness):
            if v is not None and not -1e-12 <= v <= 1 + 1e-12:
                raise ValidationError(f"bound {v} outside [0, 1]")

    def as_dict(self):
        return {"kind": self.kind, "messages": self.messages,
                "registers": [list(r) for r in self.registers],
                "prover_registers": [list(r) for r in self.prover_registers],
                "completeness": self.completeness, "soundness": self.soundness,
                "completeness_rule": self.completeness_rule,
                "soundness_rule": self.soundness_rule, "params": dict(self.params)}


# ------------------------------------------------------------ bound formulas

def parallelize_bounds(eps, delta, m):
    c = None if eps is None else 1 - eps / 2
    s = None if delta is None else 1 - delta ** 2 / (32 * (m + 1) ** 2)
    return c, s


def public_coin_bounds(eps, delta):
    c = None if eps is None else 1 - eps / 2
    s = None if delta is None else 0.5 + sqrt(max(0.0, 1 - delta)) / 2
    return c, s


def perfect_complete_bounds(eps, delta):
    s = None if delta is None else 1 - (delta - eps) ** 2
    return 1.0, s


def binomial_tail(k, t, p):
    """P[Binomial(k, p) >= t]."""
    return float(sum(comb(k, i) * p ** i * (1 - p) ** (k - i) for i in range(t, k + 1)))


def repetition_bounds(eps, delta, k, t=None):
    t = k if t is None else t
    c = None if eps is None else binomial_tail(k, t, 1 - eps)
    s = None if delta is None else binomial_tail(k, t, 1 - delta)
    return c, s


# ------------------------------------------------------------------ helpers

def _place(c, layout, targets):
    """Base circuit c moved onto `layout`, base wire w going to targets[w]."""
    targets = list(targets)
    if len(targets) < c.layout.total:
        raise ValidationError("not enough target wires to place circuit")
    return [g.moved({w: targets[w] for w in range(c.layout.total)}) for g in c.gates]


def _controlled(gates, ctrl_wires, value, label):
    """Per-gate controlled CUSTOM blocks (prover or simulator side only)."""
    if not ctrl_wires:
        return list(gates)
    out = []
    for g in gates:
        u = controlled_unitary(gate_matrix(g), len(ctrl_wires), value)
        out.append(CUSTOM(u, tuple(ctrl_wires) + tuple(g.wires), label=label))
    return out


def _gen(sim, j):
    """(circuit, n_ancilla) generating view j of a simulator."""
    c, lay = sim.to_circuit(j)
    return c, lay.total - sim.view_layout.total


def _honest_eps(ps, honest, eps):
    if eps is not None:
        return float(eps)
    return max(0.0, 1.0 - qip.run(ps, honest)[0])


def _report(kind, ps, pr, c, s, crule, srule, **params):
    return TransformReport(kind, ps.m, ps.layout.registers, pr.layout.registers, c, s,
                           crule, srule, params)


def _remap_sim(sim, layout, view_names, wire_fn):
    branches = []
    for b in sim.branches:
        branches.append(tuple((w, Circuit(layout, tuple(g.moved({x: wire_fn(x) for x in g.wires})
                                                       for g in c.gates)))
                              for w, c in b))
    return SimulatorEnsemble(layout, view_names, tuple(branches))


def _fresh(name, layout):
    while name in layout:
        name = "_" + name
    return name


def pad_to_even(ps, honest, sim):
    """Odd m: prepend an identity verifier turn and a one-qubit dummy message register."""
    if ps.m % 2 == 0:
        return ps, honest, sim
    n = ps.layout.total
    dummy = _fresh("DUMMY", ps.layout)
    lay = ps.layout.extend((dummy, 1))
    ident = {w: w for w in range(n)}
    ver = (Circuit(lay, ()),) + tuple(c.remap(lay, ident) for c in ps.verifier)
    ps2 = ProofSystem(ps.m + 1, lay, ps.n_private, ver, ps.output_wire, ps.name, ps.accept_flags)
    joint = lay + honest.layout
    shift = lambda w: w if w < n else w + 1
    pr2 = ProverStrategy(honest.layout, tuple(
        Circuit(joint, tuple(g.moved({x: shift(x) for x in g.wires}) for g in c.gates))
        for c in honest.circuits))
    slay = lay + RegisterLayout(tuple((a, sim.layout.size(a)) for a in sim.ancilla_names))
    sim2 = _remap_sim(sim, slay, lay.names, shift)
    return ps2, pr2, sim2


def pad_rounds(ps, honest, sim, rounds):
    """Even m with K = m/2 rounds: insert identity rounds before the final verifier turn."""
    k = ps.m // 2
    if ps.m % 2 or rounds < k:
        raise ValidationError("pad_rounds needs even m and rounds >= m/2")
    if rounds == k:
        return ps, honest, sim
    extra = rounds - k
    idv = Circuit(ps.layout, ())
    ver = ps.verifier[:k] + (idv,) * extra + ps.verifier[k:]
    ps2 = ProofSystem(2 * rounds, ps.layout, ps.n_private, ver, ps.output_wire, ps.name,
                      ps.accept_flags)
    joint = ps.layout + honest.layout
    pr2 = ProverStrategy(honest.layout, honest.circuits + (Circuit(joint, ()),) * extra)
    sim2 = SimulatorEnsemble(sim.layout, sim.view_names,
                             sim.branches + (sim.branches[-1],) * extra, sim.fail_register)
    return ps2, pr2, sim2


def _check_triple(ps, honest, sim):
    qip.check_pair(ps, honest)
    if len(sim) != n_prover_turns(ps.m):
        raise ValidationError(f"simulator has {len(sim)} views, expected {n_prover_turns(ps.m)}")
    if list(sim.view_names) != ps.layout.names:
        raise ValidationError("simulator view registers must be the proof system's registers")


# ------------------------------------------------------------- parallelize

def _cyclic_swaps(n, s):
    """Transpositions turning positions [0..n) into a left rotation by s."""
    cur = list(range(n))
    tgt = [(i + s) % n for i in range(n)]
    out = []
    for i in range(n):
        if cur[i] != tgt[i]:
            k = cur.index(tgt[i])
            cur[i], cur[k] = cur[k], cur[i]
            out.append((i, k))
    return out


def _rotation(slots, ctrl):
    """Rotate the slot registers left by the value held in ctrl (MSB first)."""
    n, l = len(slots), len(ctrl)
    gates = []
    for b in range(l):
        for i, k in _cyclic_swaps(n, (1 << b) % n):
            gates += [CSWAP(ctrl[l - 1 - b], x, y) for x, y in zip(slots[i], slots[k])]
    return gates


def parallelize(ps, honest, sim, eps=None, delta=None):
    """Three-message version of an m-message system.

    The prover sends every intermediate snapshot; the verifier runs one
    uniformly chosen transition V_r on snapshot r and then either finishes
    the protocol on the last snapshot (b = 0) or swap-tests snapshot r
    after the prover's P_r against snapshot r+1 (b = 1).
    """
    _check_triple(ps, honest, sim)
    m0 = ps.m
    eps = _honest_eps(ps, honest, eps)
    ps, honest, sim = pad_to_even(ps, honest, sim)
    k = ps.m // 2
    l = ceil(log2(k)) if k > 1 else 0
    L = 1 << l
    ps, honest, sim = pad_rounds(ps, honest, sim, L)
    N = L + 1
    qV, qM = ps.n_private, ps.q_message
    qS = qV + qM
    n0 = ps.layout.total
    conds = ps.accept_conditions()
    nonid = [r for r in range(1, L + 1) if ps.verifier[r - 1].gates]
    qW = max(L * qS, qM + 1 + l)
    priv = [(f"S{j}", qS) for j in range(1, N + 1)] + [("R", l), ("X", 1)]
    priv += [(f"A{r}", qS) for r in nonid]
    priv += [("WK", max(l - 1, 0)), ("B", 1), ("OUT", 1), ("WF", max(0, len(conds) - 1))]
    lay = RegisterLayout(tuple(priv) + (("MSG", qW),))
    n_priv = lay.total - qW

    S = [lay.wires(f"S{j}") for j in range(1, N + 1)]
    msg = lay.wires("MSG")
    R, Xw, B, OUT = lay.wires("R"), lay.wire("X"), lay.wire("B"), lay.wire("OUT")
    Y = msg[qM]
    RC = msg[qM + 1:qM + 1 + l]
    pos1 = S[0][:qV] + msg[:qM]

    def slot_msg(j):
        return msg[(j - 2) * qS:(j - 1) * qS]

    rot = _rotation(S, R)
    rot_inv = rot[::-1]

    g1 = []
    for j in range(2, N + 1):
        for a, b in zip(slot_msg(j), S[j - 1]):
            g1 += move_into_zero(a, b)
    for i in range(l):
        g1 += [H(R[i]), CNOT(R[i], RC[i])]
    g1 += [H(Xw), CNOT(Xw, Y)]
    g1 += rot
    variants = [Circuit(lay, tuple(_place(ps.verifier[r - 1], lay, S[0]))) for r in range(1, L + 1)]
    anc = [f"A{r}" if r in nonid else None for r in range(1, L + 1)]
    g1 += list(swap_select(variants, "R", anc, target="S1", work="WK" if l >= 2 else None).gates)
    for q in range(qM):
        g1 += move_into_zero(S[0][qV + q], msg[q])

    vf = _place(ps.verifier[-1], lay, S[-1])
    cw = [S[-1][w] for w, _ in conds]
    neg = [B] + [S[-1][w] for w, v in conds if v == 0]
    g2 = [H(B)]
    for q in range(qM):
        g2 += move_into_zero(msg[q], S[0][qV + q])
    g2 += rot_inv
    g2 += vf + mcx([B] + cw, OUT, lay.wires("WF"), negated=neg) + list(Circuit(lay, tuple(vf)).adjoint().gates)
    g2 += rot
    g2 += [CSWAP(Xw, a, b) for a, b in zip(S[0], S[1])]
    g2 += [CNOT(Xw, Y), H(Xw)]
    g2 += mcx([B, Xw], OUT, negated=[Xw])

    ps3 = ProofSystem(3, lay, n_priv, (Circuit(lay, tuple(g1)), Circuit(lay, tuple(g2))), OUT,
                      name=f"parallelize({ps.name})")

    # honest prover R
    qP = honest.width
    plo = RegisterLayout(tuple((f"RP{j}", qP) for j in range(1, N + 1)) + (("RREC", l),))
    joint = lay + plo
    RP = [joint.wires(f"RP{j}") for j in range(1, N + 1)]
    RREC = joint.wires("RREC")
    p1 = []
    for j in range(2, N + 1):
        base_v = slot_msg(j)
        for i in range(1, j):
            p1 += _place(ps.verifier[i - 1], joint, base_v)
            p1 += _place(honest.circuits[i - 1], joint, base_v + RP[j - 1])
    p2 = [CNOT(a, b) for a, b in zip(RC, RREC)]
    for r in range(1, L + 1):
        pr_r = honest.circuits[r - 1]
        if not pr_r.gates:
            continue
        # P_r only touches message and prover wires of the base system
        placed = _place(pr_r, joint, [None] * qV + msg[:qM] + RP[r - 1])
        p2 += _controlled(placed, RREC, r - 1, "prover")
    for r in range(1, L + 1):
        for a, b in zip(RP[r - 1], RP[r]):
            if l == 0:
                p2.append(CSWAP(Y, a, b))
            else:
                u = controlled_unitary(_SWAP, l + 1, ((r - 1) << 1) | 1)
                p2.append(CUSTOM(u, tuple(RREC) + (Y, a, b), label="prover"))
    honest3 = ProverStrategy(plo, (Circuit(joint, tuple(p1)), Circuit(joint, tuple(p2))))

    # simulator T_W
    gens = [None] + [_gen(sim, j) for j in range(1, L + 1)]
    widths = []
    for s in range(1, N + 1):
        ks = [x for x in (s - 1, s) if 1 <= x <= L]
        widths.append(max([gens[x][1] for x in ks] + [0]))
    slay = lay + RegisterLayout(tuple((f"TA{s}", widths[s - 1]) for s in range(1, N + 1)))
    TA = [slay.wires(f"TA{s}") for s in range(1, N + 1)]

    def gen_into(x, targets, s):
        if x < 1:
            return []
        c, na = gens[x]
        return _place(c, slay, list(targets) + TA[s - 1][:na])

    t1 = []
    for s in range(2, N + 1):
        t1 += gen_into(s - 1, slot_msg(s), s)
    branches2 = []
    for r in range(1, L + 1):
        rh = r - 1
        g = []
        for i in range(l):
            if (rh >> (l - 1 - i)) & 1:
                g += [X(R[i]), X(RC[i])]
        for s in range(1, N + 1):
            if s == r:
                g += gen_into(r, pos1, s)
            else:
                p = (s - 1 - rh) % N
                g += gen_into(s - 1, S[p], s)
        for s in nonid:
            if s != r:
                g += _place(ps.verifier[s - 1], slay, slay.wires(f"A{s}"))
        g += [H(Xw), CNOT(Xw, Y)]
        g += [CSWAP(Xw, a, b) for a, b in zip(pos1, S[1])]
        branches2.append((1.0 / L, Circuit(slay, tuple(g))))
    sim3 = SimulatorEnsemble(slay, lay.names, (((1.0, Circuit(slay, tuple(t1))),),
                                               tuple(branches2)))

    c, s = parallelize_bounds(eps, delta, m0)
    rep = _report("parallelize", ps3, honest3, c, s, "1 - eps/2", "1 - delta^2 / (32 (m+1)^2)",
                  eps=eps, delta=delta, m=m0, rounds=L)
    return ps3, honest3, sim3, rep


# ------------------------------------------------------------ public coin

def public_coin_verifier(ps3):
    """Verifier of the one-coin three-message system built from ps3 (plus wire map)."""
    if ps3.m != 3:
        raise ValidationError(f"public-coin conversion needs 3 messages, got {ps3.m}")
    qV, qM = ps3.n_private, ps3.q_message
    conds = ps3.accept_conditions()
    wz = max(0, qV - 1, len(conds) - 1)
    qv = max(qV, qM)
    lay = RegisterLayout((("SV", qV), ("BCOIN", 1), ("OUT", 1), ("WZ", wz), ("PV", qv), ("BC", 1)))
    SV, PV = lay.wires("SV"), lay.wires("PV")
    bcoin, bc, out = lay.wire("BCOIN"), lay.wire("BC"), lay.wire("OUT")
    base = SV + PV[:qM]
    g1 = []
    for a, b in zip(PV[:qV], SV):
        g1 += move_into_zero(a, b)
    g1 += [H(bcoin), CNOT(bcoin, bc)]
    v2 = _place(ps3.verifier[1], lay, base)
    v1 = _place(ps3.verifier[0], lay, base)
    cw = [base[w] for w, _ in conds]
    neg = [bcoin] + [base[w] for w, v in conds if v == 0]
    g2 = v2 + mcx([bcoin] + cw, out, lay.wires("WZ"), negated=neg)
    g2 += list(Circuit(lay, tuple(v2)).adjoint().gates)
    g2 += list(Circuit(lay, tuple(v1)).adjoint().gates)
    g2 += mcx([bcoin] + SV, out, lay.wires("WZ"), negated=SV)
    return ProofSystem(3, lay, lay.total - qv - 1,
                       (Circuit(lay, tuple(g1)), Circuit(lay, tuple(g2))), out,
                       name=f"public-coin({ps3.name})")


def to_public_coin(ps3, honest3, sim3, eps=None, delta=None):
    """Three-message system whose only verifier message is one fair coin.

    The prover sends the verifier's private register after V_1; on b = 0
    the verifier finishes the original protocol, on b = 1 it undoes V_1
    and accepts iff that register returns to all zeros.
    """
    if ps3.m != 3:
        raise ValidationError(f"public-coin conversion needs 3 messages, got {ps3.m}")
    _check_triple(ps3, honest3, sim3)
    eps = _honest_eps(ps3, honest3, eps)
    pspc = public_coin_verifier(ps3)
    lay = pspc.layout
    qV, qM = ps3.n_private, ps3.q_message
    SV, PV = lay.wires("SV"), lay.wires("PV")
    bcoin, bc = lay.wire("BCOIN"), lay.wire("BC")

    qP = honest3.width
    plo = RegisterLayout((("RM", qM), ("RP", qP), ("RB", 1)))
    joint = lay + plo
    RM, RP, RB = joint.wires("RM"), joint.wires("RP"), joint.wire("RB")
    p1 = _place(honest3.circuits[0], joint, PV[:qV] + RM + RP)
    p1 += _place(ps3.verifier[0], joint, PV[:qV] + RM)
    p2 = [CNOT(bc, RB)]
    p2 += _controlled(_place(honest3.circuits[1], joint, PV[:qV] + RM + RP), [RB], 0, "prover")
    for a, b in zip(RM, PV[:qM]):
        p2 += move_into_zero(a, b)
    honest = ProverStrategy(plo, (Circuit(joint, tuple(p1)), Circuit(joint, tuple(p2))))

    (c1, n1), (c2, n2) = _gen(sim3, 1), _gen(sim3, 2)
    slay = lay + RegisterLayout((("TM", qM), ("TA", max(n1, n2))))
    TM, TA = slay.wires("TM"), slay.wires("TA")
    t1 = _place(c1, slay, PV[:qV] + TM + TA[:n1]) + _place(ps3.verifier[0], slay, PV[:qV] + TM)
    b0 = _place(c2, slay, SV + PV[:qM] + TA[:n2])
    b1 = _place(c1, slay, SV + PV[:qM] + TA[:n1]) + _place(ps3.verifier[0], slay, SV + PV[:qM])
    b1 += [X(bcoin), X(bc)]
    sim = SimulatorEnsemble(slay, lay.names, (
        ((1.0, Circuit(slay, tuple(t1))),),
        ((0.5, Circuit(slay, tuple(b0))), (0.5, Circuit(slay, tuple(b1))))))

    c, s = public_coin_bounds(eps, delta)
    rep = _report("public-coin", pspc, honest, c, s, "1 - eps/2", "1/2 + sqrt(1 - delta)/2",
                  eps=eps, delta=delta)
    return pspc, honest, sim, rep


# ------------------------------------------------------ perfect completeness

def perfect_complete_verifier(ps, eps):
    """Verifier of the perfectly complete (m+2)-message system, for any base system.

    Useful on its own for no-instances, whose honest acceptance is below
    1 - eps so no honest prover can be built.
    """
    if ps.m % 2:
        raise ValidationError("perfect-completeness transform expects even m (pad first)")
    if not 0 <= eps < 1:
        raise ValidationError(f"eps {eps} outside [0, 1)")
    k = ps.m // 2
    qV, qM = ps.n_private, ps.q_message
    conds = ps.accept_conditions()
    priv = tuple(r for r in ps.layout.registers if r[0] in ps.private_names)
    msgr = tuple(r for r in ps.layout.registers if r[0] in ps.message_names)
    xn = _fresh("X", ps.layout)
    wk = _fresh("WK", ps.layout)
    bn = _fresh("B", ps.layout)
    vs = _fresh("VSLOT", ps.layout)
    lay = RegisterLayout(priv + ((xn, 1), (wk, max(0, len(conds) - 1))) + msgr + ((bn, 1), (vs, qV)))
    n_priv = qV + 1 + lay.size(wk)
    base = list(range(qV)) + list(range(n_priv, n_priv + qM))
    xw, bw = lay.wire(xn), lay.wire(bn)
    ver = [Circuit(lay, tuple(_place(ps.verifier[j], lay, base))) for j in range(k)]
    g = _place(ps.verifier[k], lay, base)
    cw = [base[w] for w, _ in conds]
    g += mcx([bw] + cw, xw, lay.wires(wk), negated=[base[w] for w, v in conds if v == 0])
    for a, b in zip(range(qV), lay.wires(vs)):
        g += swap_wires(a, b)
    ver.append(Circuit(lay, tuple(g)))
    ver.append(Circuit(lay, (CNOT(xw, bw), UEPS(eps, xw), X(xw))))
    return ProofSystem(ps.m + 2, lay, n_priv, tuple(ver), xw,
                       name=f"perfect-complete({ps.name})")


def make_perfect_complete(ps, honest, sim, eps, p_acc=None, delta=None):
    """(m+2)-message system with honest acceptance exactly 1.

    The prover scales its acceptance down to exactly 1 - eps with a bit B,
    the verifier records "B and accept" in X and hands everything else back;
    the prover then rotates its state so the final UEPS(eps) test on X
    succeeds with certainty.
    """
    _check_triple(ps, honest, sim)
    ps, honest, sim = pad_to_even(ps, honest, sim)
    if p_acc is None:
        p_acc = qip.run(ps, honest)[0]
    if p_acc < 1 - eps - 1e-12:
        raise ValidationError(f"honest acceptance {p_acc} below 1 - eps = {1 - eps}")
    k = ps.m // 2
    qV, qM = ps.n_private, ps.q_message
    new = perfect_complete_verifier(ps, eps)
    lay = new.layout
    n_priv = new.n_private
    base = list(range(qV)) + list(range(n_priv, n_priv + qM))
    bw, xw = lay.wire(lay.names[-2]), new.output_wire

    plo = honest.layout
    joint = lay + plo
    pw = joint.wires(*plo.names)
    circs = [Circuit(joint, tuple(_place(honest.circuits[j], joint, base + pw))) for j in range(k)]
    a = min(1.0, max(0.0, 1 - (1 - eps) / p_acc))
    circs[k - 1] = circs[k - 1].then([UEPS(a, bw)])
    # Z from the state after the verifier's (m/2+1)-th turn
    partial = ProverStrategy(plo, tuple(circs) + (Circuit(joint, ()),))
    sched = qip.schedule(new, partial)
    psi = qla.basis_state(joint.total)
    for party, j, c in sched[:2 * k + 1]:
        psi = c.apply(psi)
    tail = joint.total - n_priv
    mat = psi.reshape(1 << n_priv, 1 << tail)
    row = lambda x: (1 << (n_priv - 1 - xw)) if x else 0
    xi0, xi1 = mat[row(0)], mat[row(1)]
    n0, n1 = np.linalg.norm(xi0), np.linalg.norm(xi1)
    cols, tcols = [], []
    bpos = bw - n_priv
    e = np.eye(1 << tail, dtype=complex)
    if n0 > 1e-12:
        cols.append(xi0 / n0)
        tcols.append(e[0])
    if n1 > 1e-12:
        cols.append(xi1 / n1)
        tcols.append(e[1 << (tail - 1 - bpos)])
    q = complete_basis(np.array(cols).T)
    t = complete_basis(np.array(tcols).T)
    z = t @ q.conj().T
    tail_wires = tuple(range(n_priv, joint.total))
    circs.append(Circuit(joint, (CUSTOM(z, tail_wires, label="prover"),)))
    honest2 = ProverStrategy(plo, tuple(circs))

    gens = [_gen(sim, j) for j in range(1, k + 1)]
    na = max(x[1] for x in gens)
    slay = lay + RegisterLayout(((_fresh("TA", lay), na),))
    TA = slay.wires(slay.names[-1])
    branches = []
    for j in range(1, k + 1):
        c, n = gens[j - 1]
        g = _place(c, slay, base + TA[:n])
        if j == k:
            g.append(X(bw))
        branches.append(((1.0, Circuit(slay, tuple(g))),))
    branches.append(((1.0, Circuit(slay, (UEPS(eps, xw), CNOT(xw, bw)))),))
    sim2 = SimulatorEnsemble(slay, lay.names, tuple(branches))

    c, s = perfect_complete_bounds(eps, delta)
    rep = _report("perfect-complete", new, honest2, c, s, "1", "1 - (delta - eps)^2",
                  eps=eps, delta=delta, p_acc=p_acc)
    return new, honest2, sim2, rep


# -------------------------------------------------------------- repetition

def _copy_regs(regs, prefix):
    return tuple((f"{prefix}{n}", w) for n, w in regs)


def parallel_repeat(ps, honest, sim, k, eps=None, delta=None):
    """k copies in lock-step; accept iff every copy accepts."""
    _check_triple(ps, honest, sim)
    if k < 1:
        raise ValidationError("k must be at least 1")
    eps = _honest_eps(ps, honest, eps)
    c, s = repetition_bounds(eps, delta, k)
    if k == 1:
        return ps, honest, sim, _report("par-rep", ps, honest, c, s, "c^k", "s^k", eps=eps,
                                        delta=delta, k=k)
    priv = tuple(r for r in ps.layout.registers if r[0] in ps.private_names)
    msgr = tuple(r for r in ps.layout.registers if r[0] in ps.message_names)
    conds = ps.accept_conditions()
    ncond = k * len(conds)
    regs = ()
    for i in range(k):
        regs += _copy_regs(priv, f"c{i}.")
    regs += (("OUT", 1), ("WK", max(0, ncond - 2)))
    for i in range(k):
        regs += _copy_regs(msgr, f"c{i}.")
    lay = RegisterLayout(regs)
    n_priv = k * ps.n_private + 1 + lay.size("WK")

    def base_wires(i):
        v = lay.wires(*[f"c{i}.{n}" for n, _ in priv])
        mm = lay.wires(*[f"c{i}.{n}" for n, _ in msgr])
        return v + mm

    bw = [base_wires(i) for i in range(k)]
    ver = []
    for t, vc in enumerate(ps.verifier):
        g = []
        for i in range(k):
            g += _place(vc, lay, bw[i])
        if t == len(ps.verifier) - 1:
            cw = [bw[i][w] for i in range(k) for w, _ in conds]
            neg = [bw[i][w] for i in range(k) for w, v in conds if v == 0]
            g += mcx(cw, lay.wire("OUT"), lay.wires("WK"), negated=neg)
        ver.append(Circuit(lay, tuple(g)))
    psk = ProofSystem(ps.m, lay, n_priv, tuple(ver), lay.wire("OUT"),
                      name=f"par-rep({ps.name},{k})")

    plo = RegisterLayout(sum((_copy_regs(honest.layout.registers, f"c{i}.") for i in range(k)), ()))
    joint = lay + plo
    pw = [joint.wires(*[f"c{i}.{n}" for n in honest.layout.names]) for i in range(k)]
    pcs = []
    for pc in honest.circuits:
        g = []
        for i in range(k):
            g += _place(pc, joint, bw[i] + pw[i])
        pcs.append(Circuit(joint, tuple(g)))
    honestk = ProverStrategy(plo, tuple(pcs))

    nj = len(sim)
    gens = [_gen(sim, j) for j in range(1, nj + 1)]
    na = max(x[1] for x in gens)
    slay = lay + RegisterLayout(tuple((f"c{i}.SA", na) for i in range(k)))
    branches = []
    for j in range(nj):
        c0, n = gens[j]
        g = []
        for i in range(k):
            g += _place(c0, slay, bw[i] + slay.wires(f"c{i}.SA")[:n])
        branches.append(((1.0, Circuit(slay, tuple(g))),))
    simk = SimulatorEnsemble(slay, lay.names, tuple(branches))
    rep = _report("par-rep", psk, honestk, c, s, "c^k", "s^k", eps=eps, delta=delta, k=k)
    return psk, honestk, simk, rep


def sequential_repeat(ps, honest, sim, k, t=None, eps=None, delta=None):
    """k runs one after another on fresh registers; accept iff at least t runs accept."""
    _check_triple(ps, honest, sim)
    t = k if t is None else t
    if k < 1 or not 1 <= t <= k:
        raise ValidationError("need k >= 1 and 1 <= t <= k")
    eps = _honest_eps(ps, honest, eps)
    c, s = repetition_bounds(eps, delta, k, t)
    rules = ("P[Bin(k, 1-eps) >= t]", "P[Bin(k, 1-delta) >= t]")
    if k == 1:
        return ps, honest, sim, _report("seq-rep", ps, honest, c, s, *rules, eps=eps,
                                        delta=delta, k=k, t=t)
    priv = tuple(r for r in ps.layout.registers if r[0] in ps.private_names)
    msgr = tuple(r for r in ps.layout.registers if r[0] in ps.message_names)
    conds = ps.accept_conditions()
    regs = ()
    for i in range(k):
        regs += _copy_regs(priv, f"r{i}.")
    regs += tuple((f"ACC{i}", 1) for i in range(k))
    regs += (("OUT", 1), ("WK", max(0, k - 2, len(conds) - 2)))
    for i in range(k):
        regs += _copy_regs(msgr, f"r{i}.")
    lay = RegisterLayout(regs)
    n_priv = k * ps.n_private + k + 1 + lay.size("WK")
    bw = [lay.wires(*[f"r{i}.{n}" for n, _ in priv + msgr]) for i in range(k)]
    acc = [lay.wire(f"ACC{i}") for i in range(k)]
    WK, OUT = lay.wires("WK"), lay.wire("OUT")

    def finish(i):
        g = _place(ps.verifier[-1], lay, bw[i])
        cw = [bw[i][w] for w, _ in conds]
        g += mcx(cw, acc[i], WK, negated=[bw[i][w] for w, v in conds if v == 0])
        return g

    ver = []
    T = len(ps.verifier)
    for i in range(k):
        for j in range(T):
            g = _place(ps.verifier[j], lay, bw[i]) if j < T - 1 else finish(i)
            if ps.m % 2 == 0 and j == 0 and i > 0:
                ver[-1] = ver[-1] + g
            else:
                ver.append(g)
    thr = []
    for bits in product((0, 1), repeat=k):
        if sum(bits) >= t:
            thr += mcx(acc, OUT, WK, negated=[a for a, b in zip(acc, bits) if b == 0])
    ver[-1] = ver[-1] + thr
    m_seq = k * ps.m if ps.m % 2 == 0 else k * (ps.m + 1) - 1
    pss = ProofSystem(m_seq, lay, n_priv, tuple(Circuit(lay, tuple(g)) for g in ver), OUT,
                      name=f"seq-rep({ps.name},{k},{t})")

    plo = RegisterLayout(sum((_copy_regs(honest.layout.registers, f"r{i}.") for i in range(k)), ()))
    joint = lay + plo
    pw = [joint.wires(*[f"r{i}.{n}" for n in honest.layout.names]) for i in range(k)]
    pcs = [Circuit(joint, tuple(_place(pc, joint, bw[i] + pw[i])))
           for i in range(k) for pc in honest.circuits]
    honests = ProverStrategy(plo, tuple(pcs))

    nj = len(sim)
    gens = [_gen(sim, j) for j in range(1, nj + 1)]
    na = max(x[1] for x in gens)
    slay = lay + RegisterLayout(tuple((f"r{i}.SA", na) for i in range(k)))
    SA = [slay.wires(f"r{i}.SA") for i in range(k)]
    last, nl = gens[-1]
    branches = []
    for i in range(k):
        done = []
        for i2 in range(i):
            done += _place(last, slay, bw[i2] + SA[i2][:nl]) + finish_sim(ps, slay, bw[i2],
                                                                            acc[i2], WK)
        for j in range(nj):
            c0, n = gens[j]
            g = done + _place(c0, slay, bw[i] + SA[i][:n])
            branches.append(((1.0, Circuit(slay, tuple(g))),))
    sims = SimulatorEnsemble(slay, lay.names, tuple(branches))
    rep = _report("seq-rep", pss, honests, c, s, *rules, eps=eps, delta=delta, k=k, t=t)
    return pss, honests, sims, rep


def finish_sim(ps, layout, wires, acc, work):
    """A run's last verifier turn plus its accept bit, placed for a simulator."""
    conds = ps.accept_conditions()
    g = _place(ps.verifier[-1], layout, wires)
    g += mcx([wires[w] for w, _ in conds], acc, work,
             negated=[wires[w] for w, v in conds if v == 0])
    return g
