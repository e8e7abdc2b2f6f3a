"""Dot-pair logical qubits and the X rotations generated by the XY coupling.

A logical qubit occupies the single-excitation sector of an adjacent pair:
``|0_L> = |01>``, ``|1_L> = |10>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import xy_basis
from .dynamics import GateResult
from .quantum_core import StateVector

LOGICAL_INDICES = (1, 2)  # |01>, |10> in the {00, 01, 10, 11} ordering
ROTATION_UNITARITY_TOL = 1e-3
X_AXIS = (1.0, 0.0, 0.0)

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class LogicalQubit:
    """Logical qubit on dots ``(i, i + 1)``."""

    first_dot: int = 0

    @property
    def dot_pair(self) -> tuple[int, int]:
        return (self.first_dot, self.first_dot + 1)

    def state(self, bit: int) -> StateVector:
        return encode(bit)


@dataclass
class LogicalGateReport:
    logical_2x2: np.ndarray
    leakage: float
    unitarity_defect: float
    equivalent_rotation: tuple[tuple[float, float, float], float] | None


def encode(bit: int) -> StateVector:
    if bit not in (0, 1):
        raise ValueError(f"logical bit must be 0 or 1, got {bit!r}")
    amps = np.zeros(4, dtype=complex)
    amps[LOGICAL_INDICES[bit]] = 1.0
    return StateVector(amps, xy_basis())


def logical_rotation_matrix(theta: float) -> np.ndarray:
    """``exp(-i θ/2 X_L)``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def logical_rotation_from_theta(theta: float) -> LogicalGateReport:
    return LogicalGateReport(logical_rotation_matrix(theta), 0.0, 0.0, (X_AXIS, float(theta)))


def _unitarity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def rotation_of(u: np.ndarray) -> tuple[tuple[float, float, float], float]:
    """Axis and angle of a 2x2 unitary with its global phase removed.

    Global phase makes ``(n, a)`` and ``(-n, 2π - a)`` indistinguishable, so the
    angle is reported in ``[0, π]``. For the identity the axis defaults to X.
    """
    su = u / np.sqrt(np.linalg.det(u))
    # su = cos(a/2) 1 - i sin(a/2) n.sigma, determined up to an overall sign
    c = float(np.clip(np.real(np.trace(su)) / 2.0, -1.0, 1.0))
    n = np.array([float(np.real(1j * np.trace(p @ su)) / 2.0) for p in _PAULI])
    if c < 0:
        c, n = -c, -n
    angle = 2.0 * math.atan2(float(np.linalg.norm(n)), c)
    norm = np.linalg.norm(n)
    axis = tuple(float(x) for x in n / norm) if norm > 1e-12 else X_AXIS
    return axis, angle


def logical_gate_from_simulation(gate: GateResult) -> LogicalGateReport:
    """Restrict a simulated physical gate to the logical span of its dot pair."""
    idx = np.array(LOGICAL_INDICES)
    block = np.asarray(gate.unitary_4x4)[np.ix_(idx, idx)]
    retained = np.sum(np.abs(block) ** 2, axis=0)
    leakage = float(np.clip(1.0 - np.min(retained), 0.0, 1.0))
    defect = _unitarity_defect(block)
    rotation = rotation_of(block) if defect < ROTATION_UNITARITY_TOL else None
    return LogicalGateReport(block, leakage, defect, rotation)
