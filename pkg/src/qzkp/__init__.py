"""Quantum interactive proofs as explicit unitary circuits, with the
protocol rewrites used for quantum zero knowledge and numerical checks of
their completeness, soundness and zero-knowledge guarantees."""

__version__ = "0.1.0"
