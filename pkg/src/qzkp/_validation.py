"""Input validation helpers shared by all modules."""

import numpy as np

from ._config import STRUCT_TOL, CLIP_TOL


class ValidationError(ValueError):
    """A value failed a structural check (unitarity, normalization, shape)."""


class SchemaError(ValueError):
    """A protocol document does not follow the expected schema."""


def as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def check_square(a, name="matrix"):
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    return a


def num_qubits(dim, name="dimension"):
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValidationError(f"{name} {dim} is not a power of two")
    return n


def is_unitary(u, tol=STRUCT_TOL):
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=tol))


def check_unitary(u, name="matrix", tol=STRUCT_TOL):
    u = check_square(u, name)
    if not is_unitary(u, tol):
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        raise ValidationError(f"{name} is not unitary (max deviation {err:.3e})")
    return u


def check_state(psi, name="state", tol=STRUCT_TOL):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValidationError(f"{name} must be a vector")
    num_qubits(psi.shape[0], f"{name} dimension")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1) > tol:
        raise ValidationError(f"{name} has norm {nrm!r}, expected 1")
    return psi


def check_density(rho, name="density matrix", tol=STRUCT_TOL):
    rho = check_square(rho, name)
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=tol):
        raise ValidationError(f"{name} is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValidationError(f"{name} has trace {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -CLIP_TOL:
        raise ValidationError(f"{name} has negative eigenvalue {lo!r}")
    return rho


def check_probability(p, name="probability"):
    p = float(p)
    if not (0.0 <= p <= 1.0) or not np.isfinite(p):
        raise ValidationError(f"{name} must lie in [0, 1], got {p!r}")
    return p
