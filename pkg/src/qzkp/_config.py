"""Shared tolerances and resource caps.

Every numeric comparison in the package goes through these names so the
three tiers stay consistent: structural checks (unitarity, normalization),
derived quantities (fidelities, traces after long products) and reported
comparisons against claimed bounds.
"""

from dataclasses import dataclass, replace

STRUCT_TOL = 1e-12
DERIVED_TOL = 1e-10
REPORT_TOL = 1e-9

# eigenvalues of PSD inputs down to -CLIP_TOL are treated as numerical noise
CLIP_TOL = 1e-10


@dataclass(frozen=True)
class Caps:
    # qubits for state-vector simulation and for full dense operators
    pure: int = 24
    density: int = 8


_caps = Caps()


def get_caps():
    return _caps


def set_caps(**kw):
    """Override resource caps globally; returns the previous value."""
    global _caps
    old = _caps
    _caps = replace(_caps, **kw)
    return old


class CapExceeded(RuntimeError):
    """Raised when a computation would exceed a configured qubit cap."""
