"""Gate set, circuits, and the fast state-vector engine.

Named gates: H, X, CNOT, TOFFOLI, CSWAP, CPHASE_I = diag(1, 1, 1, i),
UEPS(eps) = [[sqrt(eps), sqrt(1-eps)], [sqrt(1-eps), -sqrt(eps)]] and
CUSTOM(matrix).  For multi-qubit gates the first listed wire is the most
significant bit of the gate's local index, so CNOT(c, t) has control c.

Simulation groups consecutive monomial gates (permutation times phases:
X, CNOT, TOFFOLI, CSWAP, CPHASE_I, UEPS(0), UEPS(1), monomial CUSTOM) into
a single scatter over basis indices; the remaining gates are applied as
local tensor contractions.  That keeps 20-qubit protocol runs cheap.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import qla
from ._config import CapExceeded, STRUCT_TOL, get_caps
from ._validation import ValidationError, check_unitary, num_qubits
from .qla import RegisterLayout

NAMED = ("H", "X", "CNOT", "TOFFOLI", "CSWAP", "CPHASE_I", "UEPS")
KINDS = NAMED + ("CUSTOM",)
ARITY = {"H": 1, "X": 1, "UEPS": 1, "CNOT": 2, "CPHASE_I": 2, "TOFFOLI": 3, "CSWAP": 3}

_S2 = 1 / np.sqrt(2)
_FIXED = {
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "CNOT": np.eye(4, dtype=complex)[[0, 1, 3, 2]],
    "CPHASE_I": np.diag([1, 1, 1, 1j]).astype(complex),
    "TOFFOLI": np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 5, 7, 6]],
    "CSWAP": np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 6, 5, 7]],
}


def ueps_matrix(eps):
    eps = float(eps)
    if not (0.0 <= eps <= 1.0) or not np.isfinite(eps):
        raise ValidationError(f"UEPS parameter must lie in [0, 1], got {eps!r}")
    a, b = np.sqrt(eps), np.sqrt(1.0 - eps)
    return np.array([[a, b], [b, -a]], dtype=complex)


@dataclass(frozen=True, eq=False)
class Gate:
    kind: str
    wires: tuple
    param: float = None
    matrix: np.ndarray = field(default=None, compare=False, repr=False)
    # free-form tag; CUSTOM gates used by provers or simulators carry
    # "prover" or "simulator" so verifier circuits can be audited
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        wires = tuple(int(w) for w in self.wires)
        object.__setattr__(self, "wires", wires)
        if len(set(wires)) != len(wires):
            raise ValidationError(f"{self.kind} has repeated wires {wires}")
        if self.kind == "CUSTOM":
            u = check_unitary(self.matrix, "CUSTOM matrix")
            if u.shape[0] != 1 << len(wires):
                raise ValidationError(
                    f"CUSTOM matrix of dimension {u.shape[0]} on {len(wires)} wires")
            u = u.copy()
            u.setflags(write=False)
            object.__setattr__(self, "matrix", u)
        else:
            if len(wires) != ARITY[self.kind]:
                raise ValidationError(f"{self.kind} takes {ARITY[self.kind]} wires, got {len(wires)}")
            if self.kind == "UEPS":
                ueps_matrix(self.param)
                object.__setattr__(self, "param", float(self.param))

    def _key(self):
        m = None if self.matrix is None else self.matrix.tobytes()
        return (self.kind, self.wires, self.param, m, self.label)

    def __eq__(self, other):
        return isinstance(other, Gate) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def moved(self, wire_map):
        return Gate(self.kind, tuple(wire_map[w] for w in self.wires), self.param,
                    self.matrix, self.label)


def H(w):
    return Gate("H", (w,))


def X(w):
    return Gate("X", (w,))


def CNOT(c, t):
    return Gate("CNOT", (c, t))


def TOFFOLI(c1, c2, t):
    return Gate("TOFFOLI", (c1, c2, t))


def CSWAP(c, a, b):
    return Gate("CSWAP", (c, a, b))


def CPHASE_I(a, b):
    return Gate("CPHASE_I", (a, b))


def UEPS(eps, w):
    return Gate("UEPS", (w,), param=eps)


def CUSTOM(matrix, wires, label=""):
    return Gate("CUSTOM", tuple(wires), matrix=np.asarray(matrix, dtype=complex), label=label)


def gate_matrix(g):
    """Exact unitary of a gate on its own wires."""
    if g.kind == "CUSTOM":
        return np.array(g.matrix)
    if g.kind == "UEPS":
        return ueps_matrix(g.param)
    return _FIXED[g.kind].copy()


def adjoint_gates(g):
    """Gates realizing the adjoint of g, staying inside the named set."""
    # H, X, CNOT, TOFFOLI, CSWAP and every UEPS are self-adjoint
    if g.kind == "CPHASE_I":
        return [g, g, g]
    if g.kind == "CUSTOM":
        return [Gate("CUSTOM", g.wires, matrix=g.matrix.conj().T, label=g.label)]
    return [g]


@dataclass(frozen=True)
class Circuit:
    layout: RegisterLayout
    gates: tuple = ()

    def __post_init__(self):
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        n = self.layout.total
        for i, g in enumerate(gates):
            if not isinstance(g, Gate):
                raise ValidationError(f"gate {i} is not a Gate")
            if any(w < 0 or w >= n for w in g.wires):
                raise ValidationError(f"gate {i} ({g.kind}) uses wires {g.wires} outside 0..{n - 1}")

    def __len__(self):
        return len(self.gates)

    def then(self, *more):
        gates = list(self.gates)
        for c in more:
            if isinstance(c, Circuit):
                if c.layout != self.layout:
                    raise ValidationError("cannot concatenate circuits over different layouts")
                gates.extend(c.gates)
            else:
                gates.extend(c)
        return Circuit(self.layout, tuple(gates))

    def adjoint(self):
        return Circuit(self.layout, tuple(a for g in reversed(self.gates) for a in adjoint_gates(g)))

    def remap(self, layout, wire_map):
        """Same gates on another layout, wire w sent to wire_map[w]."""
        return Circuit(layout, tuple(g.moved(wire_map) for g in self.gates))

    def embed(self, layout, reg_map=None):
        """Move onto `layout`, sending each register to reg_map.get(name, name).

        Target registers must have the same width; a target may also be an
        explicit list of wires.
        """
        reg_map = reg_map or {}
        wire_map = {}
        for name in self.layout.names:
            src = self.layout.wires(name)
            dst = reg_map.get(name, name)
            dst = list(dst) if not isinstance(dst, str) else layout.wires(dst)
            if len(dst) != len(src):
                raise ValidationError(f"register {name!r} width {len(src)} mapped to {len(dst)} wires")
            wire_map.update(zip(src, dst))
        return self.remap(layout, wire_map)

    def touched(self):
        return sorted({w for g in self.gates for w in g.wires})

    def is_identity_gateless(self):
        return len(self.gates) == 0

    @cached_property
    def program(self):
        return _build_program(self.gates, self.layout.total)

    def apply(self, state):
        return run_program(self.program, state, self.layout.total)


def circuit(layout, *gates):
    return Circuit(layout, tuple(gates))


# ---------------------------------------------------------------- engine

def _monomial(u):
    """(perm, phase) with u[perm[c], c] = phase[c], or None if not monomial."""
    nz = np.abs(u) > 1e-15
    if not np.all(nz.sum(axis=0) == 1):
        return None
    perm = np.argmax(nz, axis=0)
    phase = u[perm, np.arange(u.shape[1])]
    return perm, phase


def _build_program(gates, n):
    ops = []
    pending = []

    def flush():
        if not pending:
            return
        dest = np.arange(1 << n, dtype=np.int64)
        phase = None
        for wires, perm, ph in pending:
            k = len(wires)
            pos = [n - 1 - w for w in wires]
            loc = np.zeros_like(dest)
            for i, p in enumerate(pos):
                loc |= ((dest >> p) & 1) << (k - 1 - i)
            if not np.allclose(ph, 1):
                phase = ph[loc] if phase is None else phase * ph[loc]
            new = perm[loc]
            mask = 0
            for p in pos:
                mask |= 1 << p
            dest &= ~mask
            for i, p in enumerate(pos):
                dest |= ((new >> (k - 1 - i)) & 1) << p
        pending.clear()
        if np.array_equal(dest, np.arange(1 << n)) and phase is None:
            return
        ops.append(("perm", dest, phase))

    for g in gates:
        u = gate_matrix(g)
        mono = _monomial(u)
        if mono is not None:
            pending.append((g.wires, mono[0], mono[1]))
        else:
            flush()
            ops.append(("dense", g.wires, u))
    flush()
    return ops


def run_program(ops, state, n):
    psi = np.asarray(state, dtype=complex)
    if psi.shape[0] != 1 << n:
        raise ValidationError(f"state dimension {psi.shape[0]} does not match {n} qubits")
    for op in ops:
        if op[0] == "perm":
            _, dest, phase = op
            out = np.empty_like(psi)
            if phase is None:
                out[dest] = psi
            elif psi.ndim == 1:
                out[dest] = phase * psi
            else:
                out[dest] = phase[:, None] * psi
            psi = out
        else:
            psi = qla.apply_local(psi, op[2], op[1], n)
    return psi


def simulate(c, state=None):
    """Apply a circuit to `state` (default |0...0>); vectors or column batches."""
    n = c.layout.total
    if n > get_caps().pure:
        raise CapExceeded(f"{n} qubits exceeds the state-vector cap {get_caps().pure}")
    if state is None:
        state = qla.basis_state(n)
    return c.apply(state)


def compile(c, cap=None):
    """Full unitary of a circuit (ordered product of embedded gates)."""
    n = c.layout.total
    cap = get_caps().density if cap is None else cap
    if n > cap:
        raise CapExceeded(f"compiling {n} qubits exceeds the dense cap {cap}")
    return c.apply(np.eye(1 << n, dtype=complex))


# ------------------------------------------------------- building blocks

def swap_wires(a, b):
    """SWAP of two wires from three CNOTs."""
    return [CNOT(a, b), CNOT(b, a), CNOT(a, b)]


def move_into_zero(src, dst):
    """Move the content of `src` into `dst` assuming dst holds |0>; src ends at |0>."""
    return [CNOT(src, dst), CNOT(dst, src)]


def mcx(controls, target, work=(), negated=()):
    """Multi-controlled X from Toffolis with clean work qubits (restored).

    `negated` lists controls that fire on |0>.  Needs len(controls) - 2
    work wires when there are more than two controls.
    """
    controls = list(controls)
    neg = [c for c in controls if c in set(negated)]
    pre = [X(c) for c in neg]
    k = len(controls)
    if k == 0:
        core = [X(target)]
    elif k == 1:
        core = [CNOT(controls[0], target)]
    elif k == 2:
        core = [TOFFOLI(controls[0], controls[1], target)]
    else:
        work = list(work)
        if len(work) < k - 2:
            raise ValidationError(f"{k} controls need {k - 2} work wires, got {len(work)}")
        up = [TOFFOLI(controls[0], controls[1], work[0])]
        for i in range(2, k - 1):
            up.append(TOFFOLI(controls[i], work[i - 2], work[i - 1]))
        core = up + [TOFFOLI(controls[k - 1], work[k - 3], target)] + up[::-1]
    return pre + core + pre[::-1]


def _equality_flag(ctrl_wires, value, work):
    """Gates computing [control register == value] into work[-1], and undo.

    For a single control wire no work is used and the flag is the wire
    itself after an optional X; returns (compute, uncompute, flag).
    """
    l = len(ctrl_wires)
    bits = [(value >> (l - 1 - i)) & 1 for i in range(l)]
    flips = [X(w) for w, b in zip(ctrl_wires, bits) if b == 0]
    if l == 1:
        return flips, flips[::-1], ctrl_wires[0]
    work = list(work)
    if len(work) < l - 1:
        raise ValidationError(f"{l} control wires need {l - 1} work wires")
    comp = [TOFFOLI(ctrl_wires[0], ctrl_wires[1], work[0])]
    for i in range(2, l):
        comp.append(TOFFOLI(ctrl_wires[i], work[i - 2], work[i - 1]))
    return flips + comp, comp[::-1] + flips[::-1], work[l - 2]


def controlled_swap_on_value(layout, control, value, a_wires, b_wires, work=()):
    """Swap wire lists a and b when the control register holds `value`."""
    cw = layout.wires(control)
    if len(cw) == 0:
        return [g for x, y in zip(a_wires, b_wires) for g in swap_wires(x, y)]
    comp, undo, flag = _equality_flag(cw, value, work)
    return comp + [CSWAP(flag, x, y) for x, y in zip(a_wires, b_wires)] + undo


def swap_select(variants, control, ancillae, target="T", work=None):
    """Apply variants[r] to the target register when the control register holds r.

    Each variant acts only on `target`.  For every r with an ancilla the
    target is swapped into ancilla r, all variants run on their ancillae,
    and the swaps are undone.  On control |r> the target ends with
    U_r applied, ancilla r is restored to |0> and every other ancilla s
    holds U_s|0>.  A variant without gates may be given ancilla None; it
    then needs no swap at all since leaving the target alone is its action.
    `work` names a register with (control width - 1) clean qubits, needed
    only for multi-bit controls.
    """
    variants = list(variants)
    if not variants:
        raise ValidationError("swap_select needs at least one variant")
    layout = variants[0].layout
    cw = layout.wires(control)
    if len(variants) != 1 << len(cw):
        raise ValidationError(f"{len(variants)} variants for a {len(cw)}-qubit control")
    if len(ancillae) != len(variants):
        raise ValidationError("one ancilla entry per variant required")
    tw = layout.wires(target)
    work_w = layout.wires(work) if work else []
    tset = set(tw)
    swaps, body = [], []
    for r, (v, anc) in enumerate(zip(variants, ancillae)):
        if v.layout != layout:
            raise ValidationError("variants must share one layout")
        if not set(v.touched()) <= tset:
            raise ValidationError(f"variant {r} acts outside the target register")
        if anc is None:
            if len(v.gates):
                raise ValidationError(f"variant {r} is not the identity but has no ancilla")
            continue
        aw = layout.wires(anc)
        if len(aw) != len(tw):
            raise ValidationError(f"ancilla {anc!r} width {len(aw)} differs from target width {len(tw)}")
        swaps.extend(controlled_swap_on_value(layout, control, r, tw, aw, work_w))
        body.extend(g.moved(dict(zip(tw, aw))) for g in v.gates)
    return Circuit(layout, tuple(swaps + body + swaps[::-1]))


def controlled_unitary(u, n_controls, value=None):
    """Matrix of U applied when the control qubits (most significant) equal `value`."""
    d = u.shape[0]
    value = (1 << n_controls) - 1 if value is None else value
    blocks = [u if c == value else np.eye(d) for c in range(1 << n_controls)]
    out = np.zeros((d << n_controls, d << n_controls), dtype=complex)
    for c, b in enumerate(blocks):
        out[c * d:(c + 1) * d, c * d:(c + 1) * d] = b
    return out


def state_prep_unitary(vec):
    """Unitary whose first column is the normalized vector `vec`."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return complete_basis(v[:, None])


def complete_basis(cols):
    """Unitary whose leading columns are the given orthonormal columns."""
    cols = np.asarray(cols, dtype=complex)
    d, k = cols.shape
    num_qubits(d)
    if not np.allclose(cols.conj().T @ cols, np.eye(k), atol=1e-10):
        raise ValidationError("columns are not orthonormal")
    # the first k columns of Q span the given columns, the rest complete them
    q, _ = np.linalg.qr(np.hstack([cols, np.eye(d, dtype=complex)]))
    q[:, :k] = cols
    return q


def gate_to_json(g):
    if g.kind == "CUSTOM":
        m = g.matrix
        d = {"matrix": [[[float(x.real), float(x.imag)] for x in row] for row in m],
             "wires": list(g.wires)}
        if g.label:
            d["label"] = g.label
        return d
    d = {"gate": g.kind, "wires": list(g.wires)}
    if g.kind == "UEPS":
        d["param"] = g.param
    return d


def gate_from_json(d):
    if "matrix" in d:
        m = np.array([[complex(re, im) for re, im in row] for row in d["matrix"]])
        return Gate("CUSTOM", tuple(d["wires"]), matrix=m, label=d.get("label", ""))
    return Gate(d["gate"], tuple(d["wires"]), d.get("param"))


def unitary_error(g):
    u = gate_matrix(g)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def assert_named_only(c, allow_labels=()):
    """True when every CUSTOM gate in c carries one of the allowed labels."""
    for g in c.gates:
        if g.kind == "CUSTOM" and g.label not in allow_labels:
            return False
    return True
