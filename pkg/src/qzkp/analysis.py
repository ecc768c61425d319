"""Fidelity chains, a prover built from snapshots, the cheating-prover
optimizer and channel distance bounds.

The optimizer is a seesaw: with every other prover turn fixed, acceptance
is a quadratic form whose best unitary at turn j is read off one SVD.
Each update cannot lower the acceptance, so per-restart values are
monotone; the result is a lower bound on the best cheating probability.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import qip, qla
from ._config import CapExceeded, get_caps
from ._validation import ValidationError, check_unitary
from .circuits import CUSTOM, Circuit
from .qip import ProverStrategy
from .qla import RegisterLayout

# ------------------------------------------------------------ chain bound


@dataclass(frozen=True)
class ChainInstance:
    """Verifier unitaries V_1..V_k on (V, M), accept projector, snapshots rho_1..rho_k."""

    layout: RegisterLayout
    unitaries: tuple = field(repr=False)
    projector: np.ndarray = field(repr=False)
    snapshots: tuple = field(repr=False)
    eps: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if self.layout.names != ["V", "M"]:
            raise ValidationError("chain layout must have registers V and M")
        d = self.layout.dim
        us = tuple(check_unitary(u, "V_j") for u in self.unitaries)
        if any(u.shape[0] != d for u in us):
            raise ValidationError("unitary dimension mismatch")
        if len(self.snapshots) != len(us) or len(us) < 2:
            raise ValidationError("need k >= 2 unitaries and k snapshots")
        snaps = tuple(np.asarray(r, dtype=complex) for r in self.snapshots)
        if any(r.shape != (d, d) for r in snaps):
            raise ValidationError("snapshot dimension mismatch")
        if abs(snaps[0][0, 0] - 1) > 1e-12:
            raise ValidationError("first snapshot must be |0...0>")
        if not 0 <= self.eps < self.delta <= 1:
            raise ValidationError("need 0 <= eps < delta <= 1")
        object.__setattr__(self, "unitaries", us)
        object.__setattr__(self, "snapshots", snaps)
        object.__setattr__(self, "projector", np.asarray(self.projector, dtype=complex))

    @property
    def k(self):
        return len(self.unitaries)

    def final_acceptance(self):
        u = self.unitaries[-1]
        return float(np.trace(self.projector @ u @ self.snapshots[-1] @ u.conj().T).real)


class ChainBound(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def chain_fidelities(ci):
    out = []
    for j in range(ci.k - 1):
        u = ci.unitaries[j]
        a = qla.partial_trace(u @ ci.snapshots[j] @ u.conj().T, ci.layout, {"V"})
        b = qla.partial_trace(ci.snapshots[j + 1], ci.layout, {"V"})
        out.append(qla.fidelity(a, b))
    return out


def fidelity_chain_bound(ci):
    """Sum of consecutive fidelities against (k-1) - (sqrt(1-eps) - sqrt(1-delta))^2 / (2(k-1))."""
    k = ci.k
    lhs = float(sum(chain_fidelities(ci)))
    rhs = (k - 1) - (np.sqrt(1 - ci.eps) - np.sqrt(1 - ci.delta)) ** 2 / (2 * (k - 1))
    return ChainBound(lhs, float(rhs), bool(lhs <= rhs + 1e-9))


def hypothesis_holds(ci, tol=1e-12):
    """Whether the last snapshot is accepted with probability at least 1 - eps."""
    return ci.final_acceptance() >= 1 - ci.eps - tol


def build_prover_from_snapshots(ci):
    """Prover unitaries on (M, P) aligning purifications of consecutive snapshots.

    P has the dimension of (V, M).  Returns (unitaries, achieved acceptance).
    """
    nv, nm = ci.layout.size("V"), ci.layout.size("M")
    n = nv + nm
    lay = RegisterLayout((("V", nv), ("MP", nm + n)))
    psis = [qla.basis_state(2 * n)]
    for rho in ci.snapshots[1:]:
        psi, _ = qla.purify(rho)
        psis.append(psi)
    eye_p = np.eye(1 << n)
    ps_ = []
    for j in range(ci.k - 1):
        phi = np.kron(ci.unitaries[j], eye_p) @ psis[j]
        ps_.append(qla.uhlmann_align(phi, psis[j + 1], lay, "MP"))
    xi = qla.basis_state(2 * n)
    for j in range(ci.k - 1):
        xi = np.kron(ci.unitaries[j], eye_p) @ xi
        xi = qla.apply_local(xi, ps_[j], list(range(nv, 2 * n)), 2 * n)
    xi = np.kron(ci.unitaries[-1], eye_p) @ xi
    acc = np.kron(ci.projector, eye_p) @ xi
    return ps_, float(np.vdot(acc, acc).real)


def triangle_bound(ci):
    """sqrt(final acceptance) - sum_j sqrt(2 (1 - F_j)), the guaranteed sqrt of `achieved`."""
    fs = chain_fidelities(ci)
    return float(np.sqrt(max(0.0, ci.final_acceptance()))
                 - sum(np.sqrt(2 * max(0.0, 1 - f)) for f in fs))


def random_chain_instance(rng, k, nv=1, nm=1, noise=0.3):
    """A near-honest chain: true prover states mixed with noise, Pi on the top eigenspace."""
    n = nv + nm
    d = 1 << n
    lay = RegisterLayout((("V", nv), ("M", nm)))
    us = [qla.random_unitary(d, rng) for _ in range(k)]
    big = 2 * n
    psi = qla.basis_state(big)
    snaps = [qla.density(qla.basis_state(n))]
    eye_p = np.eye(d)
    for j in range(k - 1):
        psi = np.kron(us[j], eye_p) @ psi
        q = qla.random_unitary(1 << (nm + n), rng)
        psi = qla.apply_local(psi, q, list(range(nv, big)), big)
        rho = qla.density(qla.marginal_factor(psi, RegisterLayout((("S", n), ("P", n))), {"S"}))
        eta = rng.uniform(0, noise)
        snaps.append((1 - eta) * rho + eta * qla.random_density(d, rng))
    fin = us[-1] @ snaps[-1] @ us[-1].conj().T
    w, v = qla.psd_eigh(fin)
    rank = int(rng.integers(1, d))
    top = v[:, -rank:]
    proj = top @ top.conj().T
    acc = float(np.trace(proj @ fin).real)
    eps = max(0.0, 1 - acc)
    delta = float(rng.uniform(min(eps + 1e-3, 1.0), 1.0)) if eps < 1 - 1e-3 else 1.0
    eps = min(eps, delta - 1e-6)
    return ChainInstance(lay, tuple(us), proj, tuple(snaps), eps, delta)


# -------------------------------------------------------------- optimizer


@dataclass
class AttackResult:
    best_p: float
    strategy: ProverStrategy
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


class _Attack:
    """Forward/backward machinery for the seesaw over dense prover unitaries."""

    def __init__(self, ps, width):
        name = "PRV"
        while name in ps.layout:
            name = "_" + name
        self.plo = RegisterLayout(((name, width),))
        self.joint = qip.joint_layout(ps, self.plo)
        self.n = self.joint.total
        if self.n > get_caps().pure:
            raise CapExceeded(f"{self.n} qubits exceeds the state-vector cap {get_caps().pure}")
        self.npriv = ps.n_private
        self.nmw = self.n - self.npriv
        self.ps = ps
        ops = []
        if ps.m % 2 == 0:
            vs = list(ps.verifier)
            for j in range(qip.n_prover_turns(ps.m)):
                ops += [("V", qip.lift(vs[j], self.joint)), ("P", j)]
            ops.append(("V", qip.lift(vs[-1], self.joint)))
        else:
            for j, c in enumerate(ps.verifier):
                ops += [("P", j), ("V", qip.lift(c, self.joint))]
        self.ops = ops
        self.adj = {id(c): c.adjoint() for kind, c in ops if kind == "V"}
        self.pidx = [i for i, (kind, _) in enumerate(ops) if kind == "P"]
        self.mask = qip.accept_mask(ps, self.n)

    def apply_p(self, psi, u):
        m = psi.reshape(1 << self.npriv, 1 << self.nmw)
        return (m @ u.T).reshape(-1)

    def apply_p_adj(self, psi, u):
        m = psi.reshape(1 << self.npriv, 1 << self.nmw)
        return (m @ u.conj()).reshape(-1)

    def forward(self, psi, us, start, stop):
        for kind, c in self.ops[start:stop]:
            psi = c.apply(psi) if kind == "V" else self.apply_p(psi, us[c])
        return psi

    def backward(self, psi, us, start, stop):
        for kind, c in reversed(self.ops[start:stop]):
            psi = self.adj[id(c)].apply(psi) if kind == "V" else self.apply_p_adj(psi, us[c])
        return psi

    def accept(self, psi):
        s = psi[self.mask]
        return float(np.vdot(s, s).real)

    def value(self, us):
        return self.accept(self.forward(qla.basis_state(self.n), us, 0, len(self.ops)))

    def sweep(self, us, rng):
        psi = qla.basis_state(self.n)
        pos = 0
        p = 0.0
        for j, i in enumerate(self.pidx):
            alpha = self.forward(psi, us, pos, i)
            omega = self.forward(self.apply_p(alpha, us[j]), us, i + 1, len(self.ops))
            p = self.accept(omega)
            if p > 1e-300:
                beta = np.where(self.mask, omega, 0) / np.sqrt(p)
            else:
                r = qla.random_state(1 << self.n, rng)
                beta = np.where(self.mask, r, 0)
                beta /= max(np.linalg.norm(beta), 1e-300)
            bt = self.backward(beta, us, i + 1, len(self.ops))
            a = alpha.reshape(1 << self.npriv, -1).T @ bt.reshape(1 << self.npriv, -1).conj()
            w, _, vh = np.linalg.svd(a)
            us[j] = vh.conj().T @ w.conj().T
            psi, pos = alpha, i
        return self.value(us)

    def strategy(self, us):
        wires = tuple(range(self.npriv, self.n))
        return ProverStrategy(self.plo, tuple(
            Circuit(self.joint, (CUSTOM(u, wires, label="prover"),)) for u in us))

    def unitaries_of(self, pr):
        """Dense per-turn unitaries on (message, prover) wires of a given strategy."""
        if pr.width != self.plo.total:
            raise ValidationError("initial strategy width differs from the optimizer's")
        d = 1 << self.nmw
        out = []
        for c in pr.circuits:
            cc = c.remap(self.joint, {w: w for w in range(self.n)})
            batch = np.zeros((1 << self.n, d), dtype=complex)
            batch[:d, :] = np.eye(d)
            u = cc.apply(batch)[:d, :]
            out.append(u)
        return out


def optimize_prover(ps, restarts=8, iters=500, tol=1e-10, width=None, seed=0, init=None):
    """Best cheating acceptance found by seesaw ascent over prover unitaries.

    The prover's private register has `width` qubits (default: the message
    width, or the width of `init`).  The first restart starts from `init`
    (or the identity), the rest from Haar-random unitaries.
    """
    if width is None:
        width = init.width if init is not None else ps.q_message
    att = _Attack(ps, width)
    rng = np.random.default_rng(seed)
    d = 1 << att.nmw
    nturn = qip.n_prover_turns(ps.m)
    best = None
    for r in range(max(1, restarts)):
        if r == 0:
            us = att.unitaries_of(init) if init is not None else [np.eye(d, dtype=complex)] * nturn
            us = list(us)
        else:
            us = [qla.random_unitary(d, rng) for _ in range(nturn)]
        p = att.value(us)
        hist = [p]
        converged = False
        it = 0
        for it in range(1, iters + 1):
            q = att.sweep(us, rng)
            if q < p - 1e-9:
                raise AssertionError(f"ascent decreased acceptance {p} -> {q}")
            hist.append(q)
            done = abs(q - p) < tol
            p = max(p, q)
            if done:
                converged = True
                break
        if best is None or p > best.best_p:
            best = AttackResult(min(1.0, p), att.strategy(us), it, converged, hist)
    return best


# ------------------------------------------------------------ channels

class ChoiBounds(NamedTuple):
    equal: bool
    diamond_lower: float


def choi_bounds(a, b, tol=1e-8):
    """Choi equality test and the lower bound trace_norm(J_a - J_b) / in_dim on the diamond distance.

    Differences at or below tol count as equal and report a zero bound.
    """
    if (a.in_dim, a.out_dim) != (b.in_dim, b.out_dim):
        raise ValidationError("Choi matrices of different channels shapes")
    tn = qla.factor_trace_distance(a.factor, b.factor)
    if tn <= tol:
        return ChoiBounds(True, 0.0)
    return ChoiBounds(False, tn / a.in_dim)
