"""Dense linear algebra on labeled tensor-product bases and time-ordered propagation.

All Hamiltonian matrices handled here are in angular-frequency units (1/ps).
Energies given in meV are converted exactly once, through :data:`HBAR_MEV_PS`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

HBAR_MEV_PS = 0.6582119569
"""Reduced Planck constant in meV·ps."""

HERMITIAN_ATOL = 1e-12


class DimensionError(ValueError):
    """Operator, state, or basis dimensions do not agree."""


class NumericalError(ArithmeticError):
    """A numerical routine received or produced non-finite values."""


def mev_to_angular(energy_mev):
    """Convert an energy in meV to an angular frequency in 1/ps."""
    return energy_mev / HBAR_MEV_PS


@dataclass(frozen=True)
class BasisDescriptor:
    """Ordered list of ``(label, dimension)`` subsystems, composed row-major."""

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        labels = [label for label, _ in subs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")
        if any(dim < 1 for _, dim in subs):
            raise ValueError("subsystem dimensions must be >= 1")
        object.__setattr__(self, "subsystems", subs)

    @classmethod
    def of(cls, *subsystems: tuple[str, int]) -> "BasisDescriptor":
        return cls(tuple(subsystems))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def slot(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem {label!r}; basis has {list(self.labels)}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.slot(label)]

    def flat_index(self, multi: Sequence[int]) -> int:
        if len(multi) != len(self.dims):
            raise DimensionError(f"expected {len(self.dims)} sub-indices, got {len(multi)}")
        for i, d in zip(multi, self.dims):
            if not 0 <= i < d:
                raise IndexError(f"sub-index {i} out of range for dimension {d}")
        return int(np.ravel_multi_index(tuple(multi), self.dims))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.dim:
            raise IndexError(f"flat index {flat} out of range for dimension {self.dim}")
        return tuple(int(i) for i in np.unravel_index(flat, self.dims))

    def level_indices(self, label: str) -> np.ndarray:
        """Sub-index of subsystem ``label`` for every flat basis index."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1)
        return grids[self.slot(label)]


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix over a :class:`BasisDescriptor`."""

    matrix: np.ndarray
    basis: BasisDescriptor
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != self.basis.dim:
            raise DimensionError(f"operator dimension {m.shape[0]} != basis dimension {self.basis.dim}")
        if self.hermitian:
            residual = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
            if residual >= HERMITIAN_ATOL * max(1.0, np.max(np.abs(m))):
                raise ValueError(f"operator flagged Hermitian but max |M - M^dag| = {residual:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_basis(self.basis, other.basis)
        return Operator(self.matrix + other.matrix, self.basis, self.hermitian and other.hermitian)

    def scaled(self, factor: complex) -> "Operator":
        keep = self.hermitian and np.isreal(factor)
        return Operator(self.matrix * factor, self.basis, bool(keep))

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.basis, self.hermitian)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    basis: BasisDescriptor

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.shape[0] != self.basis.dim:
            raise DimensionError(f"state of shape {amps.shape} does not match basis dimension {self.basis.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, basis: BasisDescriptor, multi: Sequence[int]) -> "StateVector":
        amps = np.zeros(basis.dim, dtype=complex)
        amps[basis.flat_index(multi)] = 1.0
        return cls(amps, basis)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def inner(self, other: "StateVector") -> complex:
        _check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_start + k*dt`` for ``k = 0..n_steps`` (times in ps)."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.t_start + self.dt * (np.arange(self.n_steps) + 0.5)


def _check_same_basis(a: BasisDescriptor, b: BasisDescriptor):
    if a != b:
        raise DimensionError(f"basis mismatch: {a.subsystems} vs {b.subsystems}")


def identity(basis: BasisDescriptor) -> Operator:
    return Operator(np.eye(basis.dim), basis, hermitian=True)


def annihilation(n_levels: int) -> np.ndarray:
    """Truncated bosonic lowering operator on ``n_levels`` Fock states."""
    return np.diag(np.sqrt(np.arange(1, n_levels)), k=1).astype(complex)


def projector(dim: int, i: int, j: int | None = None) -> np.ndarray:
    """Matrix unit ``|i><j|`` (``|i><i|`` when ``j`` is omitted)."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, i if j is None else j] = 1.0
    return m


def tensor_embed(op_local, slot: str, basis: BasisDescriptor) -> Operator:
    """Embed a local operator on subsystem ``slot`` as ``op ⊗ 1`` in basis order.

    ``op_local`` may be an :class:`Operator` or a bare square array.
    """
    local = op_local.matrix if isinstance(op_local, Operator) else np.asarray(op_local, dtype=complex)
    idx = basis.slot(slot)
    if local.shape != (basis.dims[idx], basis.dims[idx]):
        raise DimensionError(
            f"local operator shape {local.shape} does not match slot {slot!r} of dimension {basis.dims[idx]}"
        )
    full = np.ones((1, 1), dtype=complex)
    for k, d in enumerate(basis.dims):
        full = np.kron(full, local if k == idx else np.eye(d))
    hermitian = bool(np.allclose(local, local.conj().T, atol=0, rtol=0))
    return Operator(full, basis, hermitian)


def step_propagator(h_mid, dt: float) -> Operator | np.ndarray:
    """Return ``exp(-i H dt)`` for a frozen Hamiltonian.

    Hermitian input (per its flag, or as detected on bare arrays) goes through an
    eigendecomposition; anything else through Padé scaling-and-squaring.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    is_op = isinstance(h_mid, Operator)
    m = h_mid.matrix if is_op else np.asarray(h_mid, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise NumericalError("Hamiltonian has non-finite entries")
    hermitian = h_mid.hermitian if is_op else np.array_equal(m, m.conj().T)
    u = _expm_hermitian(m, dt) if hermitian else scipy.linalg.expm(-1j * dt * m)
    if is_op:
        return Operator(u, h_mid.basis)
    return u


def _expm_hermitian(m: np.ndarray, dt: float) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.exp(-1j * dt * w)) @ v.conj().T


def evolve_block(
    h_of_t: Callable[[float], np.ndarray],
    psi0: np.ndarray,
    grid: TimeGrid,
    hermitian: bool = True,
    observer: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Midpoint-exponential propagation of one state or a block of column states.

    ``h_of_t`` returns a bare matrix in 1/ps. Returns the final state(s);
    ``observer(k, psi)`` is called on the initial state (``k=0``) and after
    every step.
    """
    psi = np.array(psi0, dtype=complex)
    dt = grid.dt
    if observer is not None:
        observer(0, psi)
    for k, tm in enumerate(grid.midpoints, start=1):
        h = h_of_t(tm)
        if h.shape[0] != psi.shape[0]:
            raise DimensionError(f"Hamiltonian dimension {h.shape[0]} != state dimension {psi.shape[0]}")
        if not np.all(np.isfinite(h)):
            raise NumericalError(f"Hamiltonian has non-finite entries at t={tm}")
        u = _expm_hermitian(h, dt) if hermitian else scipy.linalg.expm(-1j * dt * h)
        psi = u @ psi
        if observer is not None:
            observer(k, psi)
    return psi


@dataclass
class Propagation:
    """Raw propagation output: the grid and one state snapshot per grid point."""

    grid: TimeGrid
    states: np.ndarray
    basis: BasisDescriptor = field(repr=False)

    def state(self, k: int) -> StateVector:
        return StateVector(self.states[k], self.basis)

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.states) ** 2, axis=1))


def propagate(h_of_t: Callable[[float], Operator], psi0: StateVector, grid: TimeGrid) -> Propagation:
    """Propagate ``psi0`` through ``grid`` with H sampled at each interval midpoint."""
    states = np.empty((grid.n_steps + 1, psi0.basis.dim), dtype=complex)
    states[0] = psi0.amplitudes
    dt = grid.dt
    for k, tm in enumerate(grid.midpoints, start=1):
        op = h_of_t(tm)
        if op.basis != psi0.basis:
            raise DimensionError(f"Hamiltonian basis {op.basis.subsystems} != state basis {psi0.basis.subsystems}")
        states[k] = step_propagator(op, dt).matrix @ states[k - 1]
    return Propagation(grid, states, psi0.basis)


def expectation(op: Operator, psi: StateVector) -> complex | float:
    """``<psi|op|psi>``; returned as a float when the operator is flagged Hermitian."""
    _check_same_basis(op.basis, psi.basis)
    value = complex(np.vdot(psi.amplitudes, op.matrix @ psi.amplitudes))
    return value.real if op.hermitian else value
