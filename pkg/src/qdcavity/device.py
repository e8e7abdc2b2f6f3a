"""Quantum-dot + cavity device parameters and the three Hamiltonian descriptions.

Each dot is a Λ system on ``|0>`` (spin -1/2), ``|1>`` (spin +1/2) and the
charged exciton ``|X>``. In the rotating frame used throughout, ``|1>`` sits
at zero energy, ``|X>`` at ``delta_big`` and one cavity photon at
``-delta_small``; the laser drives ``|1> <-> |X>`` and the cavity mode couples
``|0>`` to ``|X>`` by absorbing a photon.

Energies are in meV and times in ps; builders return matrices in 1/ps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quantum_core import (
    HBAR_MEV_PS,
    BasisDescriptor,
    Operator,
    annihilation,
    projector,
    tensor_embed,
)

ZERO, ONE, EXCITON = 0, 1, 2
DOT_LABELS = ("A", "B")
CAVITY = "cav"
DETUNING_MATCH_TOL = 1e-9


class InvalidParameter(ValueError):
    """A physical parameter violates its declared constraint."""


class DomainError(ValueError):
    """A closed-form expression was evaluated where it is undefined."""


def _require(ok: bool, constraint: str):
    if not ok:
        raise InvalidParameter(constraint)


@dataclass(frozen=True)
class DotParams:
    """One Λ-system dot with its Gaussian laser pulse.

    Attributes
    ----------
    delta_big : float
        Laser-leg detuning Δ (meV).
    delta_small : float
        Two-photon detuning δ (meV); the cavity leg is detuned by Δ + δ.
    g_las_peak : float
        Peak laser coupling (meV).
    tau : float
        Gaussian pulse width (ps).
    t_center : float
        Pulse centre (ps).
    gamma_x : float
        Exciton decay rate expressed as an energy, ħ·rate (meV).
    """

    delta_big: float
    delta_small: float
    g_las_peak: float
    tau: float
    t_center: float = 0.0
    gamma_x: float = 0.0

    def __post_init__(self):
        _require(self.delta_big > 0, "delta_big > 0")
        _require(self.delta_big + self.delta_small > 0, "delta_big + delta_small > 0")
        _require(self.tau > 0, "tau > 0")
        _require(self.g_las_peak >= 0, "g_las_peak >= 0")
        _require(self.gamma_x >= 0, "gamma_x >= 0")

    def g_las(self, t):
        return gaussian_pulse(self.g_las_peak, self.tau, self.t_center, t)


@dataclass(frozen=True)
class CavityParams:
    g_c: float
    kappa: float = 0.0
    n_max: int = 2

    def __post_init__(self):
        _require(self.g_c >= 0, "g_c >= 0")
        _require(self.kappa >= 0, "kappa >= 0")
        _require(int(self.n_max) == self.n_max and self.n_max >= 1, "n_max >= 1")


@dataclass(frozen=True)
class DeviceSpec:
    dots: tuple[DotParams, ...]
    cavity: CavityParams

    def __post_init__(self):
        object.__setattr__(self, "dots", tuple(self.dots))
        _require(len(self.dots) in (1, 2), "one or two dots")

    @property
    def n_dots(self) -> int:
        return len(self.dots)

    @property
    def dot_labels(self) -> tuple[str, ...]:
        return DOT_LABELS[: self.n_dots]

    def require_identical_two_photon_detuning(self):
        if self.n_dots != 2:
            raise InvalidParameter("two dots required")
        a, b = self.dots
        if abs(a.delta_small - b.delta_small) > DETUNING_MATCH_TOL:
            raise InvalidParameter(
                f"delta_small of both dots must agree within {DETUNING_MATCH_TOL} meV "
                f"(got {a.delta_small} and {b.delta_small})"
            )


def gaussian_pulse(peak, tau, t_center, t):
    """``peak * exp(-(t - t_center)^2 / (2 tau^2))``."""
    if not tau > 0:
        raise DomainError("tau must be positive")
    t = np.asarray(t, dtype=float)
    out = peak * np.exp(-((t - t_center) ** 2) / (2.0 * tau**2))
    return float(out) if out.ndim == 0 else out


def raman_rabi(g_c, g_las, delta_big, delta_small):
    """Two-photon Raman coupling ``G_c G_las (1/Δ + 1/(Δ+δ))`` in meV."""
    if delta_big == 0 or delta_big + delta_small == 0:
        raise DomainError("Raman denominators must be nonzero")
    if not (delta_big > 0 and delta_big + delta_small > 0):
        raise DomainError("Raman formula requires delta_big > 0 and delta_big + delta_small > 0")
    return g_c * g_las * (1.0 / delta_big + 1.0 / (delta_big + delta_small))


def xy_strength(omega_a, omega_b, delta_small):
    """Cavity-mediated flip-flop strength ``Ω_A Ω_B / (2δ)`` in meV."""
    if delta_small == 0:
        raise DomainError("XY strength is undefined at delta_small = 0")
    return omega_a * omega_b / (2.0 * delta_small)


def raman_rabi_of_t(dot: DotParams, cavity: CavityParams, t):
    return raman_rabi(cavity.g_c, dot.g_las(t), dot.delta_big, dot.delta_small)


def xy_strength_of_t(spec: DeviceSpec, t):
    spec.require_identical_two_photon_detuning()
    a, b = spec.dots
    return xy_strength(raman_rabi_of_t(a, spec.cavity, t), raman_rabi_of_t(b, spec.cavity, t), a.delta_small)


# ---------------------------------------------------------------------------
# bases
# ---------------------------------------------------------------------------


def full_basis(spec: DeviceSpec) -> BasisDescriptor:
    subs = [(label, 3) for label in spec.dot_labels]
    return BasisDescriptor(tuple(subs) + ((CAVITY, spec.cavity.n_max + 1),))


def raman_basis(spec: DeviceSpec) -> BasisDescriptor:
    return BasisDescriptor.of((DOT_LABELS[0], 2), (CAVITY, spec.cavity.n_max + 1))


def xy_basis() -> BasisDescriptor:
    return BasisDescriptor.of((DOT_LABELS[0], 2), (DOT_LABELS[1], 2))


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------


@dataclass
class HamiltonianTerms:
    """``H(t) = static + sum_k coef_k(t) * term_k`` with matrices in 1/ps.

    Kept as a decomposition so propagation loops only do scalar-times-matrix
    work per step.
    """

    basis: BasisDescriptor
    static: np.ndarray
    drives: list[tuple[Callable[[float], float], np.ndarray]] = field(default_factory=list)

    def matrix(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for coef, term in self.drives:
            h += coef(t) * term
        return h

    def operator(self, t: float) -> Operator:
        return Operator(self.matrix(t), self.basis, hermitian=True)


def full_hamiltonian_terms(spec: DeviceSpec) -> HamiltonianTerms:
    """Λ-system + single-mode cavity model for one or two dots.

    The photon energy is referenced to the first dot's two-photon detuning. A
    second dot with a different δ gets its ``|0>`` level offset by
    ``δ_A - δ_B`` so that its own cavity leg is still detuned by ``Δ_B + δ_B``.
    """
    basis = full_basis(spec)
    cav_dim = spec.cavity.n_max + 1
    a = tensor_embed(annihilation(cav_dim), CAVITY, basis).matrix
    n_photon = a.conj().T @ a
    delta_ref = spec.dots[0].delta_small

    static = -delta_ref * n_photon
    drives = []
    for label, dot in zip(spec.dot_labels, spec.dots):
        x_proj = tensor_embed(projector(3, EXCITON), label, basis).matrix
        zero_proj = tensor_embed(projector(3, ZERO), label, basis).matrix
        x_from_0 = tensor_embed(projector(3, EXCITON, ZERO), label, basis).matrix
        x_from_1 = tensor_embed(projector(3, EXCITON, ONE), label, basis).matrix
        cav_leg = a @ x_from_0
        static = static + dot.delta_big * x_proj + (delta_ref - dot.delta_small) * zero_proj
        static = static + spec.cavity.g_c * (cav_leg + cav_leg.conj().T)
        laser_leg = (x_from_1 + x_from_1.conj().T) / HBAR_MEV_PS
        drives.append((dot.g_las, laser_leg))
    return HamiltonianTerms(basis, static / HBAR_MEV_PS, drives)


def build_full_hamiltonian(spec: DeviceSpec, t: float) -> Operator:
    return full_hamiltonian_terms(spec).operator(t)


def effective_raman_terms(spec: DeviceSpec) -> HamiltonianTerms:
    if spec.n_dots != 1:
        raise InvalidParameter("effective Raman model takes exactly one dot")
    basis = raman_basis(spec)
    dot = spec.dots[0]
    a = tensor_embed(annihilation(spec.cavity.n_max + 1), CAVITY, basis).matrix
    sigma_01 = tensor_embed(projector(2, ONE, ZERO), DOT_LABELS[0], basis).matrix
    coupling = a @ sigma_01
    term = (coupling + coupling.conj().T) / (2.0 * HBAR_MEV_PS)
    return HamiltonianTerms(
        basis, np.zeros((basis.dim, basis.dim), dtype=complex), [(lambda t: raman_rabi_of_t(dot, spec.cavity, t), term)]
    )


def build_effective_raman(spec: DeviceSpec, t: float) -> Operator:
    return effective_raman_terms(spec).operator(t)


def effective_xy_terms(spec: DeviceSpec) -> HamiltonianTerms:
    spec.require_identical_two_photon_detuning()
    basis = xy_basis()
    flip = projector(4, basis.flat_index((1, 0)), basis.flat_index((0, 1)))
    term = (flip + flip.conj().T) / (2.0 * HBAR_MEV_PS)
    return HamiltonianTerms(basis, np.zeros((4, 4), dtype=complex), [(lambda t: xy_strength_of_t(spec, t), term)])


def build_effective_xy(spec: DeviceSpec, t: float) -> Operator:
    return effective_xy_terms(spec).operator(t)


def single_dot_sector(dot: DotParams, g_c: float, t) -> np.ndarray:
    """Single-dot Hamiltonian (meV) on ``{|1,0>, |X,0>, |0,1>}``, stacked over ``t``."""
    g = np.atleast_1d(dot.g_las(t))
    h = np.zeros(g.shape + (3, 3))
    h[..., 0, 1] = h[..., 1, 0] = g
    h[..., 1, 1] = dot.delta_big
    h[..., 1, 2] = h[..., 2, 1] = g_c
    h[..., 2, 2] = -dot.delta_small
    return h
