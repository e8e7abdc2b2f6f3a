"""Cavity-mediated two-photon Raman coupling between quantum-dot spin qubits."""

__version__ = "0.1.0"
