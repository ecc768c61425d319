"""Proof systems as alternating unitary circuits.

A proof system holds the verifier-side registers (private ones first, then
the message register) and the verifier circuits.  A prover strategy adds
its own private registers and one circuit per prover turn; prover circuits
may only touch the message and prover registers.

Turn order: with m even the verifier moves first (V_1 P_1 ... P_{m/2}
V_{m/2+1}); with m odd the prover moves first (P_1 V_1 ... P_{(m+1)/2}
V_{(m+1)/2}).  Acceptance is the probability of reading 1 on the output
wire, optionally jointly with flag wires holding given values.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import qla
from ._config import CapExceeded, DERIVED_TOL, REPORT_TOL, get_caps
from ._validation import ValidationError
from .circuits import Circuit
from .qla import RegisterLayout


def n_verifier_turns(m):
    return (m + 2) // 2 if m % 2 == 0 else (m + 1) // 2


def n_prover_turns(m):
    return (m + 1) // 2


@dataclass(frozen=True)
class ProofSystem:
    m: int
    layout: RegisterLayout
    n_private: int
    verifier: tuple
    output_wire: int
    name: str = ""
    # extra (wire, value) conditions joined to the output wire by AND
    accept_flags: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "verifier", tuple(self.verifier))
        object.__setattr__(self, "accept_flags", tuple(tuple(f) for f in self.accept_flags))
        if self.m < 1:
            raise ValidationError("a proof system needs at least one message")
        if len(self.verifier) != n_verifier_turns(self.m):
            raise ValidationError(
                f"{self.m} messages need {n_verifier_turns(self.m)} verifier circuits, "
                f"got {len(self.verifier)}")
        for i, c in enumerate(self.verifier):
            if c.layout != self.layout:
                raise ValidationError(f"verifier circuit {i + 1} is over a different layout")
        acc = 0
        for _, c in self.layout.registers:
            if acc == self.n_private:
                break
            acc += c
        if acc != self.n_private:
            raise ValidationError("private width does not fall on a register boundary")
        if self.n_private >= self.layout.total:
            raise ValidationError("a proof system needs at least one message qubit")
        if not 0 <= self.output_wire < self.n_private:
            raise ValidationError(f"output wire {self.output_wire} is not a private wire")
        for w, v in self.accept_flags:
            if not 0 <= w < self.layout.total or v not in (0, 1):
                raise ValidationError(f"bad accept flag {(w, v)}")

    @property
    def q_private(self):
        return self.n_private

    @property
    def q_message(self):
        return self.layout.total - self.n_private

    @property
    def private_names(self):
        out, acc = [], 0
        for n, c in self.layout.registers:
            if acc < self.n_private:
                out.append(n)
            acc += c
        return out

    @property
    def message_names(self):
        priv = set(self.private_names)
        return [n for n in self.layout.names if n not in priv]

    @property
    def private_wires(self):
        return list(range(self.n_private))

    @property
    def message_wires(self):
        return list(range(self.n_private, self.layout.total))

    def accept_conditions(self):
        return ((self.output_wire, 1),) + self.accept_flags


@dataclass(frozen=True)
class ProverStrategy:
    layout: RegisterLayout
    circuits: tuple

    def __post_init__(self):
        object.__setattr__(self, "circuits", tuple(self.circuits))

    @property
    def width(self):
        return self.layout.total


def joint_layout(ps, pr_layout):
    clash = set(ps.layout.names) & set(pr_layout.names)
    if clash:
        raise ValidationError(f"prover registers clash with verifier registers: {sorted(clash)}")
    return ps.layout + pr_layout


def check_pair(ps, pr):
    joint = joint_layout(ps, pr.layout)
    if len(pr.circuits) != n_prover_turns(ps.m):
        raise ValidationError(
            f"{ps.m} messages need {n_prover_turns(ps.m)} prover circuits, got {len(pr.circuits)}")
    for i, c in enumerate(pr.circuits):
        if c.layout != joint:
            raise ValidationError(f"prover circuit {i + 1} is not over the joint layout")
        bad = [w for w in c.touched() if w < ps.n_private]
        if bad:
            raise ValidationError(f"prover circuit {i + 1} touches verifier-private wires {bad}")
    return joint


@lru_cache(maxsize=512)
def lift(c, joint):
    """Verifier circuit moved onto the joint layout (same wire numbers)."""
    return c.remap(joint, {w: w for w in range(c.layout.total)})


def schedule(ps, pr):
    """Ordered list of (party, index, circuit-on-joint-layout)."""
    joint = check_pair(ps, pr)
    vs = [("V", i + 1, lift(c, joint)) for i, c in enumerate(ps.verifier)]
    prs = [("P", j + 1, c) for j, c in enumerate(pr.circuits)]
    out = []
    if ps.m % 2 == 0:
        for i in range(len(prs)):
            out += [vs[i], prs[i]]
        out.append(vs[-1])
    else:
        for i in range(len(prs)):
            out += [prs[i], vs[i]]
    return out


@lru_cache(maxsize=64)
def _accept_mask(n, conditions):
    idx = np.arange(1 << n, dtype=np.int64)
    mask = np.ones(1 << n, dtype=bool)
    for w, v in conditions:
        mask &= ((idx >> (n - 1 - w)) & 1) == v
    return mask


def accept_mask(ps, n):
    return _accept_mask(n, ps.accept_conditions())


def _check_cap(n):
    if n > get_caps().pure:
        raise CapExceeded(f"{n} qubits exceeds the state-vector cap {get_caps().pure}")


def acceptance(ps, state, n):
    mask = accept_mask(ps, n)
    s = state[mask]
    return float(np.vdot(s, s).real)


def run(ps, pr, initial=None):
    """Execute the protocol; returns (p_acc, final state on the joint layout).

    `initial` may be a state vector or a column batch over the joint
    layout (default |0...0>).  For a batch p_acc sums over columns.
    """
    sched = schedule(ps, pr)
    n = sched[0][2].layout.total
    _check_cap(n)
    psi = qla.basis_state(n) if initial is None else np.asarray(initial, dtype=complex)
    for _, _, c in sched:
        psi = c.apply(psi)
    return acceptance(ps, psi, n), psi


@dataclass(frozen=True)
class ViewState:
    """Verifier-held state after a prover turn, kept as a factor A (rho = A A^dagger)."""

    j: int
    layout: RegisterLayout
    factor: np.ndarray = field(repr=False)

    @property
    def state(self):
        if self.layout.total > get_caps().density:
            raise CapExceeded(f"dense view on {self.layout.total} qubits exceeds the cap")
        return qla.density(self.factor)

    def trace(self):
        return float(np.vdot(self.factor, self.factor).real)


def views(ps, pr, initial=None):
    """Reduced verifier-held states (V and M) right after each prover turn."""
    sched = schedule(ps, pr)
    joint = sched[0][2].layout
    n = joint.total
    _check_cap(n)
    psi = qla.basis_state(n) if initial is None else np.asarray(initial, dtype=complex)
    out = []
    for party, j, c in sched:
        psi = c.apply(psi)
        if party == "P":
            f = qla.marginal_factor(psi, joint, ps.layout.names)
            out.append(ViewState(j, ps.layout, qla.compress_factor(f)))
    return out


@dataclass(frozen=True)
class ChoiMatrix:
    """J = sum_ij Phi(|i><j|) (x) |i><j|, output first, reference second.

    Stored as a factor T with J = T T^dagger (rows indexed by (out, in));
    the dense matrix is formed only on request.
    """

    in_dim: int
    out_dim: int
    factor: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.factor.shape[0] != self.in_dim * self.out_dim:
            raise ValidationError("Choi factor shape does not match its dimensions")

    @classmethod
    def from_matrix(cls, in_dim, out_dim, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (in_dim * out_dim,) * 2:
            raise ValidationError("Choi matrix shape does not match its dimensions")
        w, v = qla.psd_eigh((m + m.conj().T) / 2)
        keep = w > 0
        return cls(in_dim, out_dim, v[:, keep] * np.sqrt(w[keep]))

    @property
    def matrix(self):
        if self.in_dim * self.out_dim > 1 << get_caps().density:
            raise CapExceeded("dense Choi matrix exceeds the density cap")
        return qla.density(self.factor)

    def trace_out(self):
        """Partial trace over the output factor (identity for a trace-preserving map)."""
        t = self.factor.reshape(self.out_dim, self.in_dim, -1)
        return np.einsum("air,ajr->ij", t, t.conj())

    def is_trace_preserving(self, tol=REPORT_TOL):
        return bool(np.allclose(self.trace_out(), np.eye(self.in_dim), atol=tol, rtol=0))


def choi_from_factors(rows):
    """Choi matrix from per-input factors: rows[i] is the output factor for input |i>."""
    d_in = len(rows)
    d_out = rows[0].shape[0]
    r = max(x.shape[1] for x in rows)
    t = np.zeros((d_out, d_in, r), dtype=complex)
    for i, x in enumerate(rows):
        t[:, i, :x.shape[1]] = x
    return ChoiMatrix(d_in, d_out, t.reshape(d_out * d_in, r))


def choi_from_outputs(columns, joint, out_registers):
    """Choi matrix from final states of a batch whose column i started from |i> on the input.

    `out_registers` are register names (kept in layout order) or, given as
    a list of ints, explicit wires in the given order.
    """
    n = joint.total
    wires = list(out_registers)
    explicit = all(isinstance(w, (int, np.integer)) for w in wires)
    rows = []
    for i in range(columns.shape[1]):
        if explicit:
            rows.append(qla.factor_on_wires(columns[:, i], n, wires))
        else:
            rows.append(qla.marginal_factor(columns[:, i], joint, wires))
    return choi_from_factors(rows)


def induced_choi(ps, pr, aux_register, out_registers):
    """Choi matrix of the channel from the verifier's auxiliary register to out_registers.

    Each column of a batch starts with |i> on the auxiliary register and
    zeros elsewhere; running the batch through the protocol is the action
    on one half of an unnormalized maximally entangled state.
    """
    joint = joint_layout(ps, pr.layout)
    if aux_register not in ps.layout.names or ps.layout.offset(aux_register) >= ps.n_private:
        raise ValidationError(f"{aux_register!r} is not a verifier-private register")
    w = ps.layout.size(aux_register)
    if w > get_caps().density:
        raise CapExceeded("auxiliary register too wide")
    batch = initial_batch(joint, aux_register)
    _, final = run(ps, pr, initial=batch)
    return choi_from_outputs(final, joint, out_registers)


def initial_batch(layout, register):
    """Columns |i> on `register`, zeros elsewhere, i over the register's basis."""
    n = layout.total
    w = layout.size(register)
    wires = layout.wires(register)
    batch = np.zeros((1 << n, 1 << w), dtype=complex)
    for i in range(1 << w):
        idx = 0
        for k, wire in enumerate(wires):
            if (i >> (w - 1 - k)) & 1:
                idx |= 1 << (n - 1 - wire)
        batch[idx, i] = 1.0
    return batch


def _coin_template(c, n_private, used):
    """Parse c as the coin-flip template, or return None.

    Allowed gates, in any interleaving: stash pairs CNOT(msg, v) CNOT(v, msg)
    moving a message wire into a fresh private wire; H on a fresh private
    wire (a coin); one CNOT from each coin, after its H, onto a distinct
    message wire (the copy sent out).  Every coin must be copied.
    """
    gates = list(c.gates)
    priv = lambda w: w < n_private
    fresh, coins, copies, stashes, targets = set(), [], {}, [], set()
    i = 0
    while i < len(gates):
        g = gates[i]
        if g.kind == "CNOT":
            a, b = g.wires
            nxt = gates[i + 1] if i + 1 < len(gates) else None
            if (not priv(a) and priv(b) and nxt is not None and nxt.kind == "CNOT"
                    and nxt.wires == (b, a) and b not in used and b not in fresh
                    and b not in coins):
                fresh.add(b)
                stashes.append((a, b))
                i += 2
                continue
            if a in coins and a not in copies and not priv(b) and b not in targets:
                copies[a] = b
                targets.add(b)
                i += 1
                continue
            return None
        if g.kind == "H":
            w = g.wires[0]
            if not priv(w) or w in used or w in fresh or w in coins:
                return None
            coins.append(w)
            i += 1
            continue
        return None
    if not coins or set(copies) != set(coins):
        return None
    used |= fresh | set(coins)
    return {"coins": coins, "copies": [copies[w] for w in coins], "stashes": stashes}


def _templates(ps):
    used = set()
    out = []
    for c in ps.verifier[:-1]:
        t = _coin_template(c, ps.n_private, used)
        if t is None:
            return None
        out.append(t)
    return out


def coin_wires(ps):
    """Per intermediate verifier turn, the private coin wires; None if not public-coin."""
    t = _templates(ps)
    return None if t is None else [x["coins"] for x in t]


def is_public_coin(ps):
    """True iff every intermediate verifier turn is the canonical coin-flip template."""
    return len(ps.verifier) > 1 and _templates(ps) is not None


def copy_targets(ps, turn=0):
    """Message wires receiving the coin copies at intermediate verifier turn `turn`, coin order."""
    return list(_templates(ps)[turn]["copies"])


def stash_pairs(ps, turn=0):
    """(message wire, private wire) pairs stashed at intermediate verifier turn `turn`."""
    return list(_templates(ps)[turn]["stashes"])


def trace_error(ch):
    return float(np.max(np.abs(ch.trace_out() - np.eye(ch.in_dim))))
