"""Simulator ensembles: generating circuits for simulated views.

A simulator lays out the simulated verifier-held registers first (with the
same names and widths as the proof system's registers, optionally preceded
by a one-qubit FAIL flag) followed by private ancillae.  For each prover
turn j it stores a list of (weight, circuit) branches; the simulated view
is the weighted mixture of the branch outputs after tracing the ancillae.
"""

from dataclasses import dataclass

import numpy as np

from . import qla
from ._validation import ValidationError
from .circuits import CUSTOM, Circuit, H, controlled_unitary, gate_matrix, state_prep_unitary
from .qla import RegisterLayout

FAIL = "FAIL"


@dataclass(frozen=True)
class SimulatorEnsemble:
    layout: RegisterLayout
    view_names: tuple
    branches: tuple
    fail_register: str = None

    def __post_init__(self):
        object.__setattr__(self, "view_names", tuple(self.view_names))
        br = tuple(tuple((float(w), c) for w, c in b) for b in self.branches)
        object.__setattr__(self, "branches", br)
        if list(self.view_names) != self.layout.names[:len(self.view_names)]:
            raise ValidationError("view registers must lead the simulator layout")
        for j, b in enumerate(br):
            if not b:
                raise ValidationError(f"simulated view {j + 1} has no branches")
            tot = sum(w for w, _ in b)
            if any(w < 0 for w, _ in b) or abs(tot - 1) > 1e-12:
                raise ValidationError(f"branch weights of view {j + 1} must be a distribution")
            for _, c in b:
                if c.layout != self.layout:
                    raise ValidationError(f"branch of view {j + 1} is over a different layout")
        if self.fail_register is not None and self.fail_register not in self.view_names:
            raise ValidationError("FAIL register must be one of the view registers")

    def __len__(self):
        return len(self.branches)

    @property
    def view_layout(self):
        return RegisterLayout(tuple((n, self.layout.size(n)) for n in self.view_names))

    @property
    def ancilla_names(self):
        return [n for n in self.layout.names if n not in self.view_names]

    def factor(self, j):
        """Factor A of the simulated view for prover turn j (1-based)."""
        cols = []
        for w, c in self.branches[j - 1]:
            if w == 0:
                continue
            psi = c.apply(qla.basis_state(self.layout.total))
            cols.append(np.sqrt(w) * qla.marginal_factor(psi, self.layout, self.view_names))
        return qla.compress_factor(np.hstack(cols))

    def state(self, j):
        return qla.density(self.factor(j))

    def to_circuit(self, j, index_name="IDX"):
        """Single generating circuit for view j (index register added if mixed).

        A mixture becomes an index register prepared in sum_b sqrt(w_b)|b>
        followed by each branch controlled on its index value; the index
        register is part of the ancilla, so tracing it out leaves the mixture.
        Returns (circuit, layout).
        """
        br = [(w, c) for w, c in self.branches[j - 1] if w > 0]
        if len(br) == 1:
            return br[0][1], self.layout
        l = max(1, int(np.ceil(np.log2(len(br)))))
        layout = self.layout.extend((index_name, l))
        idx = layout.wires(index_name)
        amps = np.zeros(1 << l)
        amps[:len(br)] = np.sqrt([w for w, _ in br])
        if np.allclose(amps, amps[0]):
            gates = [H(w) for w in idx]
        else:
            gates = [CUSTOM(state_prep_unitary(amps), idx, label="simulator")]
        ident = {w: w for w in range(self.layout.total)}
        for b, (_, c) in enumerate(br):
            for g in c.remap(layout, ident).gates:
                u = controlled_unitary(gate_matrix(g), l, value=b)
                gates.append(CUSTOM(u, tuple(idx) + g.wires, label="simulator"))
        return Circuit(layout, tuple(gates)), layout


def single(layout, view_names, circuits, fail_register=None):
    """Ensemble with one deterministic generating circuit per turn."""
    return SimulatorEnsemble(layout, view_names, tuple(((1.0, c),) for c in circuits),
                             fail_register)


def prep_from_factor(a, view_layout, anc_name="A"):
    """Generating circuit for rho = A A^dagger on view_layout plus an ancilla.

    The purification sum_c A[:, c] (x) |c> is loaded by one CUSTOM
    state-preparation unitary over all view and ancilla wires.
    """
    a = qla.compress_factor(np.asarray(a, dtype=complex))
    r = a.shape[1]
    na = int(np.ceil(np.log2(r))) if r > 1 else 0
    layout = view_layout.extend((anc_name, na))
    vec = np.zeros((a.shape[0], 1 << na), dtype=complex)
    vec[:, :r] = a
    vec = vec.reshape(-1)
    u = state_prep_unitary(vec)
    c = Circuit(layout, (CUSTOM(u, tuple(range(layout.total)), label="simulator"),))
    return c, layout


def from_factors(view_layout, factors, anc_name="A"):
    """Ensemble whose turn-j generator prepares the factor factors[j-1] exactly."""
    preps = [prep_from_factor(f, view_layout, anc_name) for f in factors]
    na = max(lay.size(anc_name) for _, lay in preps)
    layout = view_layout.extend((anc_name, na))
    circs = []
    for c, lay in preps:
        circs.append(c.embed(layout, {anc_name: layout.wires(anc_name)[:lay.size(anc_name)]}))
    return single(layout, view_layout.names, circs)


def controlled_circuit(c, layout, control_wires, value):
    """Each gate of c (already on `layout`) applied only when control wires equal value."""
    l = len(control_wires)
    gates = []
    for g in c.gates:
        u = controlled_unitary(gate_matrix(g), l, value=value)
        gates.append(CUSTOM(u, tuple(control_wires) + g.wires, label="simulator"))
    return gates
