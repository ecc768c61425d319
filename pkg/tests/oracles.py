"""Slow, direct reference computations the package is checked against.

Everything here works on full dense matrices built index by index, with no
use of the package's own kernels beyond reading circuit descriptions.
"""

import numpy as np
from scipy.linalg import sqrtm

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
I2 = np.eye(2, dtype=complex)


def ueps(eps):
    a, b = np.sqrt(eps), np.sqrt(1 - eps)
    return np.array([[a, b], [b, -a]], dtype=complex)


def controlled(u, n_ctrl=1):
    d = u.shape[0]
    out = np.eye(d << n_ctrl, dtype=complex)
    out[-d:, -d:] = u
    return out


def gate_dense(g):
    k = g.kind
    if k == "H":
        return H
    if k == "X":
        return X
    if k == "CNOT":
        return controlled(X)
    if k == "TOFFOLI":
        return controlled(X, 2)
    if k == "CSWAP":
        sw = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
        return controlled(sw)
    if k == "CPHASE_I":
        return np.diag([1, 1, 1, 1j])
    if k == "UEPS":
        return ueps(g.param)
    if k == "CUSTOM":
        return np.asarray(g.matrix)
    raise KeyError(k)


def embed(u, wires, n):
    """Full 2^n operator of u on `wires` (wire 0 most significant), by index loops."""
    k = len(wires)
    full = np.zeros((1 << n, 1 << n), dtype=complex)
    for col in range(1 << n):
        bits = [(col >> (n - 1 - w)) & 1 for w in range(n)]
        sub = 0
        for w in wires:
            sub = (sub << 1) | bits[w]
        for out_sub in range(1 << k):
            amp = u[out_sub, sub]
            if amp == 0:
                continue
            nb = list(bits)
            for i, w in enumerate(wires):
                nb[w] = (out_sub >> (k - 1 - i)) & 1
            row = 0
            for b in nb:
                row = (row << 1) | b
            full[row, col] += amp
    return full


def circuit_unitary(c, n=None):
    n = c.layout.total if n is None else n
    u = np.eye(1 << n, dtype=complex)
    for g in c.gates:
        u = embed(gate_dense(g), g.wires, n) @ u
    return u


def accept_prob(psi, n, conditions):
    p = 0.0
    for i, a in enumerate(psi):
        if all(((i >> (n - 1 - w)) & 1) == v for w, v in conditions):
            p += abs(a) ** 2
    return p


def apply_vec(psi, u, wires, n):
    """u on `wires` of a state vector by explicit index arithmetic."""
    k = len(wires)
    idx = np.arange(1 << n)
    sub = np.zeros_like(idx)
    base = idx.copy()
    for w in wires:
        sub = (sub << 1) | ((idx >> (n - 1 - w)) & 1)
        base &= ~(1 << (n - 1 - w))
    out = np.zeros_like(psi)
    for s_out in range(1 << k):
        tgt = base.copy()
        for i, w in enumerate(wires):
            tgt |= ((s_out >> (k - 1 - i)) & 1) << (n - 1 - w)
        np.add.at(out, tgt, u[s_out, sub] * psi)
    return out


class _VecOp:
    def __init__(self, c, n):
        self.gates = [(gate_dense(g), g.wires) for g in c.gates]
        self.n = n

    def __matmul__(self, psi):
        for u, w in self.gates:
            psi = apply_vec(psi, u, w, self.n)
        return psi


def run_dense(ps, pr):
    """Acceptance by gate-by-gate state-vector evolution, turn order spelled out."""
    n = ps.layout.total + pr.width
    vs = [_VecOp(c, n) for c in ps.verifier]
    prs = [_VecOp(c, n) for c in pr.circuits]
    order = []
    if ps.m % 2 == 0:
        for j in range(len(prs)):
            order += [vs[j], prs[j]]
        order.append(vs[-1])
    else:
        for j in range(len(prs)):
            order += [prs[j], vs[j]]
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    for u in order:
        psi = u @ psi
    return accept_prob(psi, n, ps.accept_conditions()), psi


def ptrace_keep(rho, n, keep):
    """Reduced density matrix on the wires in `keep` (sorted order)."""
    keep = sorted(keep)
    drop = [w for w in range(n) if w not in keep]
    t = rho.reshape([2] * (2 * n))
    for k, w in enumerate(sorted(drop, reverse=True)):
        m = t.ndim // 2
        t = np.trace(t, axis1=w, axis2=w + m)
    d = 1 << len(keep)
    return t.reshape(d, d)


def fidelity(rho, sigma):
    s = sqrtm(rho)
    return float(np.real(np.trace(sqrtm(s @ sigma @ s))))


def trace_norm(a):
    return float(np.linalg.svd(a, compute_uv=False).sum())
