"""Dense linear algebra for multi-qubit states and operators.

Conventions: wire 0 is the most significant bit of a basis index, so the
basis state |b_0 b_1 ... b_{n-1}> sits at index sum_w b_w 2^(n-1-w).  All
reshaping between flat vectors and per-qubit axes goes through
`RegisterLayout` and `_axes`, nothing else computes offsets by hand.

States are plain numpy arrays.  Pure states are 1-d vectors; batches of
unnormalized vectors are (dim, k) arrays whose columns are processed
together.  Mixed states are either dense (dim, dim) matrices or low-rank
factors A with rho = A A^dagger, which is how large views are handled.
"""

from dataclasses import dataclass

import numpy as np

from ._config import CLIP_TOL, DERIVED_TOL
from ._validation import (
    ValidationError,
    check_density,
    check_square,
    check_state,
    check_unitary,
    num_qubits,
)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named qubit registers.

    Register r occupies wires offset(r) .. offset(r)+size(r)-1.  Zero-width
    registers are allowed so optional pieces can be named uniformly.
    """

    registers: tuple

    def __post_init__(self):
        regs = tuple((str(n), int(c)) for n, c in self.registers)
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate register names in {names}")
        if any(c < 0 for _, c in regs):
            raise ValidationError("register widths must be non-negative")
        object.__setattr__(self, "registers", regs)

    @classmethod
    def of(cls, *pairs, **named):
        return cls(tuple(pairs) + tuple(named.items()))

    @property
    def total(self):
        return sum(c for _, c in self.registers)

    @property
    def names(self):
        return [n for n, _ in self.registers]

    @property
    def dim(self):
        return 1 << self.total

    def __contains__(self, name):
        return name in self.names

    def size(self, name):
        for n, c in self.registers:
            if n == name:
                return c
        raise ValidationError(f"unknown register {name!r}")

    def offset(self, name):
        off = 0
        for n, c in self.registers:
            if n == name:
                return off
            off += c
        raise ValidationError(f"unknown register {name!r}")

    def wires(self, *names):
        """Global wire indices of the named registers, concatenated in order."""
        out = []
        for name in names:
            off = self.offset(name)
            out.extend(range(off, off + self.size(name)))
        return out

    def wire(self, name, i=0):
        if not 0 <= i < self.size(name):
            raise ValidationError(f"register {name!r} has no qubit {i}")
        return self.offset(name) + i

    def extend(self, *pairs):
        return RegisterLayout(self.registers + tuple(pairs))

    def __add__(self, other):
        return RegisterLayout(self.registers + other.registers)


def bit_position(wire, n):
    """Bit position (from the least significant end) of a wire among n."""
    return n - 1 - wire


def basis_index(bits):
    """Index of the computational basis state with the given wire values."""
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def basis_state(n, index=0):
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def _num_wires(layout_or_n):
    if isinstance(layout_or_n, RegisterLayout):
        return layout_or_n.total
    return int(layout_or_n)


def kron(a, b):
    """Kronecker product; the first factor occupies the more significant wires."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(*mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        m = np.asarray(m, dtype=complex)
        out = np.kron(out, m if m.ndim == 2 else m.reshape(-1, 1))
    return out


def apply_local(state, u, wires, n):
    """Apply a 2^k x 2^k matrix to k wires of a state vector or column batch.

    No validation; used by the simulator inner loop.
    """
    k = len(wires)
    cols = state.size >> n
    t = state.reshape((2,) * n + (cols,))
    ut = u.reshape((2,) * (2 * k))
    t = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), list(wires)))
    t = np.moveaxis(t, list(range(k)), list(wires))
    return np.ascontiguousarray(t).reshape(state.shape)


def apply_gate(state, u, wires, layout):
    """Apply unitary u to the given wires of a pure state over `layout`."""
    n = _num_wires(layout)
    psi = np.asarray(state, dtype=complex)
    if psi.shape[0] != 1 << n:
        raise ValidationError(f"state dimension {psi.shape[0]} does not match {n} qubits")
    wires = [int(w) for w in wires]
    if len(set(wires)) != len(wires):
        raise ValidationError(f"duplicate wires {wires}")
    if any(w < 0 or w >= n for w in wires):
        raise ValidationError(f"wires {wires} outside 0..{n - 1}")
    u = check_unitary(u, "gate")
    if u.shape[0] != 1 << len(wires):
        raise ValidationError(f"gate of dimension {u.shape[0]} cannot act on {len(wires)} wires")
    return apply_local(psi, u, wires, n)


def _split_axes(layout, keep):
    keep = set(keep)
    unknown = keep - set(layout.names)
    if unknown:
        raise ValidationError(f"unknown registers {sorted(unknown)}")
    kw = [w for name in layout.names if name in keep for w in layout.wires(name)]
    rest = [w for w in range(layout.total) if w not in set(kw)]
    return kw, rest


def marginal_factor(state, layout, keep):
    """Factor A with A A^dagger equal to the reduced state of a pure state.

    `state` may be a vector or a (dim, k) batch (an unnormalized mixture
    whose columns are sqrt(p_i) psi_i).  The result has one row per basis
    state of the kept registers, in layout order.
    """
    n = layout.total
    psi = np.asarray(state, dtype=complex)
    cols = psi.size >> n
    kw, rest = _split_axes(layout, keep)
    t = psi.reshape((2,) * n + (cols,)).transpose(kw + rest + [n])
    return t.reshape(1 << len(kw), -1)


def factor_on_wires(state, n, wires):
    """Like marginal_factor but keeps an explicit wire list, in the given order."""
    psi = np.asarray(state, dtype=complex)
    cols = psi.size >> n
    wires = list(wires)
    ws = set(wires)
    rest = [w for w in range(n) if w not in ws]
    t = psi.reshape((2,) * n + (cols,)).transpose(wires + rest + [n])
    return t.reshape(1 << len(wires), -1)


def partial_trace(rho, layout, keep):
    """Reduced density matrix on the registers in `keep` (layout order)."""
    rho = check_square(rho, "density matrix")
    n = layout.total
    if rho.shape[0] != 1 << n:
        raise ValidationError(f"density matrix dimension {rho.shape[0]} does not match layout")
    kw, rest = _split_axes(layout, keep)
    perm = kw + rest
    dk, dr = 1 << len(kw), 1 << len(rest)
    t = rho.reshape((2,) * (2 * n)).transpose(perm + [n + p for p in perm])
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("ajbj->ab", t)


def density(state):
    """Density matrix of a pure state, or of a factor A (returns A A^dagger)."""
    a = np.asarray(state, dtype=complex)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    return a @ a.conj().T


def psd_eigh(a):
    """Eigendecomposition of a Hermitian PSD matrix with noise clipped to 0."""
    a = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(a)
    if w.size and w.min() < -CLIP_TOL * max(1.0, abs(w).max()):
        raise ValidationError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
    return np.clip(w, 0.0, None), v


def psd_sqrt(a):
    w, v = psd_eigh(a)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma):
    """Root fidelity ||sqrt(rho) sqrt(sigma)||_1, which is |<phi|psi>| on pure states."""
    rho = check_density(rho, "rho", tol=DERIVED_TOL)
    sigma = check_density(sigma, "sigma", tol=DERIVED_TOL)
    if rho.shape != sigma.shape:
        raise ValidationError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    s = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False)
    return float(min(1.0, s.sum()))


def trace_norm(a):
    """Sum of singular values (sum of |eigenvalues| for Hermitian input)."""
    a = check_square(a)
    if np.allclose(a, a.conj().T, rtol=0, atol=1e-14):
        return float(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2)).sum())
    return float(np.linalg.svd(a, compute_uv=False).sum())


def factor_trace_distance(a, b):
    """trace_norm(A A^dagger - B B^dagger) without forming the dense matrices.

    With K = [A B] = Q R, the difference equals Q (R J R^dagger) Q^dagger
    where J = diag(I, -I), so its spectrum is that of the small matrix
    R J R^dagger.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"factor row mismatch {a.shape[0]} vs {b.shape[0]}")
    k = np.hstack([a, b])
    r = np.linalg.qr(k, mode="r")
    sign = np.concatenate([np.ones(a.shape[1]), -np.ones(b.shape[1])])
    mid = (r * sign) @ r.conj().T
    return float(np.abs(np.linalg.eigvalsh((mid + mid.conj().T) / 2)).sum())


def factor_fidelity(a, b):
    """Root fidelity of A A^dagger and B B^dagger, equal to ||A^dagger B||_1."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    s = np.linalg.svd(a.conj().T @ b, compute_uv=False)
    return float(s.sum())


def compress_factor(a, tol=1e-13):
    """Equivalent factor with at most rank(A) columns."""
    a = np.asarray(a, dtype=complex)
    if a.shape[1] <= a.shape[0]:
        return a
    w, v = psd_eigh(a @ a.conj().T)
    keep = w > tol * max(1.0, w.max())
    return v[:, keep] * np.sqrt(w[keep])


def purify(rho):
    """Purification sum_i sqrt(l_i) |e_i>|i> on system (S) then reference (R)."""
    rho = check_density(rho, "rho", tol=DERIVED_TOL)
    n = num_qubits(rho.shape[0])
    w, v = psd_eigh(rho)
    psi = (v * np.sqrt(w)).reshape(-1)
    layout = RegisterLayout((("S", n), ("R", n)))
    return psi / np.linalg.norm(psi), layout


def uhlmann_align(phi, psi, layout, aligned):
    """Unitary U on register `aligned` maximizing |<psi|(I (x) U)|phi>|.

    With phi and psi written as matrices (rest x aligned), the overlap is
    tr(U C) for C = Phi^T conj(Psi); if C = W S V^dagger the optimum is
    U = V W^dagger and the overlap is tr(S).
    """
    phi = check_state(phi, "phi", tol=DERIVED_TOL)
    psi = check_state(psi, "psi", tol=DERIVED_TOL)
    if phi.shape[0] != layout.dim or psi.shape[0] != layout.dim:
        raise ValidationError("state dimension does not match layout")
    rest = [n for n in layout.names if n != aligned]
    if aligned not in layout.names:
        raise ValidationError(f"unknown register {aligned!r}")
    pm = marginal_factor(phi, layout, rest)
    qm = marginal_factor(psi, layout, rest)
    c = pm.T @ qm.conj()
    w, _, vh = np.linalg.svd(c)
    return vh.conj().T @ w.conj().T


def random_unitary(d, rng):
    """Haar-random unitary from QR of a complex Gaussian with phase fix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_state(d, rng):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(d, rng, rank=None):
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
