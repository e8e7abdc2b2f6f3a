"""Trajectories under the full, Raman and XY models; gates, fidelities, decay estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import simpson

from . import device
from .device import CAVITY, EXCITON, DeviceSpec, HamiltonianTerms, InvalidParameter
from .feasibility import pulse_area
from .quantum_core import (
    HBAR_MEV_PS,
    BasisDescriptor,
    DimensionError,
    NumericalError,
    StateVector,
    TimeGrid,
    evolve_block,
)

DEFAULT_WINDOW = 3.0
STEPS_PER_TAU = 200
UNBOUNDED = math.inf


class Model(str, Enum):
    FULL = "full"
    EFFECTIVE_RAMAN = "effective_raman"
    EFFECTIVE_XY = "effective_xy"


@dataclass(frozen=True)
class DecayParams:
    """No-jump decay rates, each given as ħ·rate in meV."""

    kappa: float = 0.0
    gamma_x: float = 0.0
    enabled: bool = False

    def __post_init__(self):
        if self.kappa < 0 or self.gamma_x < 0:
            raise InvalidParameter("decay rates must be >= 0")

    @property
    def active(self) -> bool:
        return self.enabled and (self.kappa > 0 or self.gamma_x > 0)


@dataclass
class Trajectory:
    grid: TimeGrid
    states: np.ndarray = field(repr=False)
    basis: BasisDescriptor
    populations: dict[str, np.ndarray] = field(repr=False)
    norm: np.ndarray = field(repr=False)
    model: Model = Model.FULL

    def state(self, k: int) -> StateVector:
        return StateVector(self.states[k], self.basis)

    @property
    def final(self) -> StateVector:
        return self.state(-1)


@dataclass
class GateResult:
    """Simulated two-qubit gate on ``{|00>, |01>, |10>, |11>}`` (cavity in vacuum).

    ``norm_loss`` is the largest no-jump probability loss over the four
    inputs; ``unitarity_defect`` is ``max |U^dag U - 1|`` of the projected
    matrix and so also counts population left outside the qubit-vacuum
    subspace. ``frame`` is ``"dressed"`` when the single-dot AC-Stark phases
    (``qubit_phases``, radians per dot) have been removed.
    """

    unitary_4x4: np.ndarray
    theta_accumulated: float
    fidelity: float
    max_exciton_pop: float
    max_photon_pop: float
    norm_loss: float
    unitarity_defect: float
    area_deficit: float
    leakage: float
    model: Model
    frame: str
    qubit_phases: tuple[float, ...]


# ---------------------------------------------------------------------------
# model plumbing
# ---------------------------------------------------------------------------


def model_terms(model: Model, spec: DeviceSpec) -> HamiltonianTerms:
    model = Model(model)
    if model is Model.FULL:
        return device.full_hamiltonian_terms(spec)
    if model is Model.EFFECTIVE_RAMAN:
        return device.effective_raman_terms(spec)
    return device.effective_xy_terms(spec)


def _qubit_labels(model: Model, spec: DeviceSpec) -> tuple[str, ...]:
    return spec.dot_labels if model is not Model.EFFECTIVE_RAMAN else spec.dot_labels[:1]


def _diagonal_observables(model: Model, spec: DeviceSpec, basis: BasisDescriptor) -> dict[str, np.ndarray]:
    """Diagonal (in the product basis) observables as weight vectors."""
    labels = _qubit_labels(model, spec)
    levels = {label: basis.level_indices(label) for label in labels}
    n_photon = basis.level_indices(CAVITY).astype(float) if CAVITY in basis.labels else np.zeros(basis.dim)
    obs: dict[str, np.ndarray] = {}
    exciton_any = np.zeros(basis.dim, dtype=bool)
    exciton_total = np.zeros(basis.dim)
    for label in labels:
        is_x = levels[label] == EXCITON
        obs[f"exciton_{label}"] = is_x.astype(float)
        exciton_total += is_x
        exciton_any |= is_x
    obs["exciton_total"] = exciton_total
    obs["photon"] = n_photon
    for bits in np.ndindex(*(2,) * len(labels)):
        mask = np.ones(basis.dim, dtype=bool)
        for label, b in zip(labels, bits):
            mask &= levels[label] == b
        obs["".join(map(str, bits))] = mask.astype(float)
    obs["exciton_sector"] = exciton_any.astype(float)
    obs["qubit_vacuum"] = ((~exciton_any) & (n_photon == 0)).astype(float)
    return obs


def populations_of(model: Model, spec: DeviceSpec, basis: BasisDescriptor, states: np.ndarray) -> dict[str, np.ndarray]:
    probs = np.abs(states) ** 2
    return {name: probs @ w for name, w in _diagonal_observables(Model(model), spec, basis).items()}


def decay_generator(model: Model, spec: DeviceSpec, basis: BasisDescriptor, decay: DecayParams) -> np.ndarray:
    """Diagonal loss rates Γ (1/ps) entering as ``H - (i/2) Γ``."""
    obs = _diagonal_observables(Model(model), spec, basis)
    rates = decay.kappa * obs["photon"] + decay.gamma_x * obs["exciton_total"]
    return rates / HBAR_MEV_PS


def model_hamiltonian(model: Model, spec: DeviceSpec, decay: DecayParams | None = None):
    """Return ``(basis, h_of_t, hermitian)`` with ``h_of_t`` giving bare matrices in 1/ps."""
    terms = model_terms(model, spec)
    if decay is None or not decay.active:
        return terms.basis, terms.matrix, True
    loss = np.diag(-0.5j * decay_generator(model, spec, terms.basis, decay))

    def h_of_t(t):
        return terms.matrix(t) + loss

    return terms.basis, h_of_t, False


def model_basis(model: Model, spec: DeviceSpec) -> BasisDescriptor:
    model = Model(model)
    if model is Model.FULL:
        return device.full_basis(spec)
    if model is Model.EFFECTIVE_RAMAN:
        return device.raman_basis(spec)
    return device.xy_basis()


def initial_state(model: Model, spec: DeviceSpec, bits: str) -> StateVector:
    """Product state with the dots in qubit levels ``bits`` (e.g. ``"10"``) and cavity vacuum."""
    model = Model(model)
    basis = model_basis(model, spec)
    labels = _qubit_labels(model, spec)
    if len(bits) != len(labels) or set(bits) - {"0", "1"}:
        raise InvalidParameter(f"initial state {bits!r} must be {len(labels)} characters of 0/1")
    multi = [int(b) for b in bits] + ([0] if CAVITY in basis.labels else [])
    return StateVector.basis_state(basis, multi)


def default_grid(spec: DeviceSpec, window: float = DEFAULT_WINDOW, steps_per_tau: int = STEPS_PER_TAU) -> TimeGrid:
    """Window ``t_center ± W·τ`` around the pulses with ``dt <= τ_min / steps_per_tau``."""
    tau_max = max(d.tau for d in spec.dots)
    tau_min = min(d.tau for d in spec.dots)
    t_c = spec.dots[0].t_center
    span = 2.0 * window * tau_max
    n_steps = math.ceil(round(span * steps_per_tau / tau_min, 9))
    return TimeGrid(t_c - window * tau_max, t_c + window * tau_max, n_steps)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def xy_gate_matrix(theta: float) -> np.ndarray:
    """Closed-form XY evolution on ``{|00>,|01>,|10>,|11>}`` for accumulated angle ``theta``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    u = np.eye(4, dtype=complex)
    u[1, 1] = u[2, 2] = c
    u[1, 2] = u[2, 1] = -1j * s
    return u


def analytic_xy_evolution(theta: float, psi0) -> StateVector:
    amps = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, dtype=complex)
    if amps.shape != (4,):
        raise DimensionError(f"two-qubit state must have 4 amplitudes, got shape {amps.shape}")
    return StateVector(xy_gate_matrix(theta) @ amps, device.xy_basis())


def run_model(
    model: Model,
    spec: DeviceSpec,
    psi0: StateVector,
    grid: TimeGrid,
    decay: DecayParams | None = None,
) -> Trajectory:
    model = Model(model)
    basis, h_of_t, hermitian = model_hamiltonian(model, spec, decay)
    if psi0.basis != basis:
        raise DimensionError(f"initial state basis {psi0.basis.subsystems} does not match {model.value} basis {basis.subsystems}")
    states = np.empty((grid.n_steps + 1, basis.dim), dtype=complex)

    def record(k, psi):
        states[k] = psi

    evolve_block(h_of_t, psi0.amplitudes, grid, hermitian=hermitian, observer=record)
    if not np.all(np.isfinite(states)):
        raise NumericalError("propagation produced non-finite amplitudes")
    pops = populations_of(model, spec, basis, states)
    norm = np.sqrt(np.sum(np.abs(states) ** 2, axis=1))
    return Trajectory(grid, states, basis, pops, norm, model)


def theta_accumulated(spec: DeviceSpec, grid: TimeGrid) -> float:
    """``(1/ħ) ∫ Ω̃(t) dt`` over the grid by Simpson's rule."""
    t = grid.times
    return float(simpson(device.xy_strength_of_t(spec, t), x=t)) / HBAR_MEV_PS


def dressed_qubit_energies(dot: device.DotParams, g_c: float, t) -> np.ndarray:
    """Instantaneous energy (meV) of the dressed ``|1, vac>`` level of a lone dot.

    Taken from the single-excitation sector ``{|1,0>, |X,0>, |0,1>}``; the
    eigenvector with the largest ``|1,0>`` weight is followed.
    """
    w, v = np.linalg.eigh(device.single_dot_sector(dot, g_c, t))
    pick = np.argmax(np.abs(v[..., 0, :]) ** 2, axis=-1)
    return np.take_along_axis(w, pick[..., None], axis=-1)[..., 0]


def dressed_qubit_phases(spec: DeviceSpec, grid: TimeGrid) -> tuple[float, ...]:
    t = grid.times
    return tuple(
        float(simpson(dressed_qubit_energies(dot, spec.cavity.g_c, t), x=t)) / HBAR_MEV_PS for dot in spec.dots
    )


def gate_fidelity(u_sim, u_target) -> float:
    """Global-phase-insensitive ``|Tr(U_t^dag U)|^2 / d^2`` clipped to [0, 1]."""
    u_sim = np.asarray(u_sim, dtype=complex)
    u_target = np.asarray(u_target, dtype=complex)
    if u_sim.shape != (4, 4) or u_target.shape != (4, 4):
        raise DimensionError(f"fidelity needs two 4x4 matrices, got {u_sim.shape} and {u_target.shape}")
    f = abs(np.trace(u_target.conj().T @ u_sim)) ** 2 / 16.0
    return float(min(max(f, 0.0), 1.0))


def extract_gate(
    spec: DeviceSpec,
    grid: TimeGrid,
    model: Model = Model.FULL,
    decay: DecayParams | None = None,
    frame: str = "dressed",
    target: np.ndarray | None = None,
) -> GateResult:
    """Propagate the four computational inputs together and project onto qubit ⊗ vacuum.

    ``target`` defaults to the closed-form XY gate at θ = 2π.
    """
    model = Model(model)
    if model is Model.EFFECTIVE_RAMAN or spec.n_dots != 2:
        raise InvalidParameter("gate extraction needs a two-dot spec and the full or effective_xy model")
    if frame not in ("dressed", "lab"):
        raise InvalidParameter("frame must be 'dressed' or 'lab'")
    spec.require_identical_two_photon_detuning()
    basis, h_of_t, hermitian = model_hamiltonian(model, spec, decay)
    inputs = ("00", "01", "10", "11")
    cols = [int(np.flatnonzero(initial_state(model, spec, b).amplitudes)[0]) for b in inputs]
    psi0 = np.eye(basis.dim, dtype=complex)[:, cols]

    obs = _diagonal_observables(model, spec, basis)
    w_x, w_ph = obs["exciton_total"], obs["photon"]
    peaks = {"x": 0.0, "ph": 0.0}

    def watch(k, psi):
        probs = np.abs(psi) ** 2
        peaks["x"] = max(peaks["x"], float(np.max(w_x @ probs)))
        peaks["ph"] = max(peaks["ph"], float(np.max(w_ph @ probs)))

    final = evolve_block(h_of_t, psi0, grid, hermitian=hermitian, observer=watch)
    if not np.all(np.isfinite(final)):
        raise NumericalError("propagation produced non-finite amplitudes")
    u = final[cols, :]

    phases: tuple[float, ...] = (0.0, 0.0)
    if model is Model.FULL and frame == "dressed":
        phases = dressed_qubit_phases(spec, grid)
        bits = np.array([[int(c) for c in b] for b in inputs])
        u = np.exp(1j * (bits @ np.array(phases)))[:, None] * u

    theta = theta_accumulated(spec, grid)
    a, b = spec.dots
    analytic = pulse_area(a, b, spec.cavity)
    deficit = 1.0 - theta / analytic if analytic else 0.0
    full_norm = np.sum(np.abs(final) ** 2, axis=0)
    projected = np.sum(np.abs(u) ** 2, axis=0)
    if target is None:
        target = xy_gate_matrix(2 * math.pi)
    return GateResult(
        unitary_4x4=u,
        theta_accumulated=theta,
        fidelity=gate_fidelity(u, target),
        max_exciton_pop=min(peaks["x"], 1.0),
        max_photon_pop=min(peaks["ph"], 1.0),
        norm_loss=float(max(0.0, np.max(1.0 - full_norm))),
        unitarity_defect=float(np.max(np.abs(u.conj().T @ u - np.eye(4)))),
        area_deficit=float(deficit),
        leakage=float(max(0.0, np.max(full_norm - projected))),
        model=model,
        frame=frame if model is Model.FULL else "lab",
        qubit_phases=tuple(phases),
    )


def virtual_population_stats(traj: Trajectory) -> tuple[float, float]:
    """Per-step maxima of total exciton population and mean photon number."""
    return float(np.max(traj.populations["exciton_total"])), float(np.max(traj.populations["photon"]))


def decoherence_dilation(max_exciton: float, max_photon: float, kappa: float, gamma_x: float) -> float:
    """Excitation-weighted coherent window ``1 / (p_x γ_x/ħ + p_ph κ/ħ)`` in ps.

    Returns ``math.inf`` when no decay channel is both populated and lossy.
    """
    if min(max_exciton, max_photon, kappa, gamma_x) < 0:
        raise InvalidParameter("populations and rates must be >= 0")
    rate = (max_exciton * gamma_x + max_photon * kappa) / HBAR_MEV_PS
    return UNBOUNDED if rate == 0 else 1.0 / rate
