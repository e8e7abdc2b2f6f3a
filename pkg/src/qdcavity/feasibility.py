"""Adiabatic-condition checks, the pulse-area constraint, and (G_c, τ) plane scans.

"≫" is read as a ratio threshold: a condition ``x ≫ y`` holds when
``x / y >= m``. Inverse pulse widths enter as energies ``ħ/τ``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.special import erf

from .device import CavityParams, DomainError, DotParams, InvalidParameter, raman_rabi, xy_strength
from .quantum_core import HBAR_MEV_PS

TWO_PI = 2.0 * math.pi
PULSE_MATCH_TOL = 1e-9

CONDITIONS = ("detuning_hierarchy", "two_photon_detuning", "cavity_leg", "laser_leg")
CONDITION_TEXT = {
    "detuning_hierarchy": "delta_big >> delta_small",
    "two_photon_detuning": "delta_small >> max(omega/2, hbar/tau)",
    "cavity_leg": "delta_big + delta_small >> max(g_c, hbar/tau)",
    "laser_leg": "delta_big >> max(g_las, hbar/tau)",
}


@dataclass(frozen=True)
class MarginPolicy:
    """Minimum ratio ``m`` for every "≫", with optional per-condition overrides."""

    m: float = 10.0
    overrides: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "overrides", tuple(sorted(dict(self.overrides).items())))
        for name, value in ((None, self.m),) + self.overrides:
            if name is not None and name not in CONDITIONS:
                raise InvalidParameter(f"unknown condition {name!r}; expected one of {list(CONDITIONS)}")
            if not value > 1:
                raise InvalidParameter("margin m > 1")

    def threshold(self, name: str) -> float:
        return dict(self.overrides).get(name, self.m)

    def thresholds(self) -> dict[str, float]:
        return {name: self.threshold(name) for name in CONDITIONS}


@dataclass
class FeasibilityReport:
    ratios: dict[str, float]
    thresholds: dict[str, float]
    feasible: bool
    binding_constraint: str
    min_ratio: float
    omega_peak: float
    hbar_over_tau: float


def hbar_over_tau(tau):
    return HBAR_MEV_PS / tau


def adiabatic_ratios(delta_big, delta_small, g_c, g_las, tau) -> dict[str, np.ndarray | float]:
    """The four adiabatic ratios; broadcasts over array inputs."""
    omega = g_c * g_las * (1.0 / delta_big + 1.0 / (delta_big + delta_small))
    inv_tau = hbar_over_tau(tau)
    return {
        "detuning_hierarchy": delta_big / delta_small,
        "two_photon_detuning": delta_small / np.maximum(omega / 2.0, inv_tau),
        "cavity_leg": (delta_big + delta_small) / np.maximum(g_c, inv_tau),
        "laser_leg": delta_big / np.maximum(g_las, inv_tau),
    }


def _binding(ratios: dict[str, float], policy: MarginPolicy) -> str:
    # ties go to the first condition in CONDITIONS order
    def slack(name):
        th = policy.threshold(name)
        return ratios[name] / th if math.isfinite(th) else ratios[name]

    return min(CONDITIONS, key=slack)


def check_adiabatic(dot: DotParams, cavity: CavityParams, policy: MarginPolicy = MarginPolicy()) -> FeasibilityReport:
    if dot.delta_small == 0:
        raise InvalidParameter("delta_small != 0 (two-photon detuning enters as a denominator)")
    raw = adiabatic_ratios(dot.delta_big, dot.delta_small, cavity.g_c, dot.g_las_peak, dot.tau)
    ratios = {k: float(v) for k, v in raw.items()}
    thresholds = policy.thresholds()
    feasible = all(ratios[k] >= thresholds[k] for k in CONDITIONS)
    binding = _binding(ratios, policy)
    return FeasibilityReport(
        ratios=ratios,
        thresholds=thresholds,
        feasible=feasible,
        binding_constraint=binding,
        min_ratio=min(ratios.values()),
        omega_peak=raman_rabi(cavity.g_c, dot.g_las_peak, dot.delta_big, dot.delta_small),
        hbar_over_tau=hbar_over_tau(dot.tau),
    )


# ---------------------------------------------------------------------------
# pulse area
# ---------------------------------------------------------------------------


def _check_simultaneous(dot_a: DotParams, dot_b: DotParams):
    scale = max(dot_a.tau, dot_b.tau)
    if abs(dot_a.tau - dot_b.tau) > PULSE_MATCH_TOL * scale or abs(dot_a.t_center - dot_b.t_center) > PULSE_MATCH_TOL * scale:
        raise InvalidParameter("pulse area needs simultaneous pulses: equal tau and t_center on both dots")
    if abs(dot_a.delta_small - dot_b.delta_small) > 1e-9:
        raise InvalidParameter("pulse area needs equal delta_small on both dots")


def xy_peak(dot_a: DotParams, dot_b: DotParams, cavity: CavityParams) -> float:
    om_a = raman_rabi(cavity.g_c, dot_a.g_las_peak, dot_a.delta_big, dot_a.delta_small)
    om_b = raman_rabi(cavity.g_c, dot_b.g_las_peak, dot_b.delta_big, dot_b.delta_small)
    return xy_strength(om_a, om_b, dot_a.delta_small)


def pulse_area(dot_a: DotParams, dot_b: DotParams, cavity: CavityParams) -> float:
    """Untruncated ``(1/ħ) ∫ Ω̃ dt``; the product of two Gaussians of width τ integrates to ``τ√π``."""
    _check_simultaneous(dot_a, dot_b)
    return xy_peak(dot_a, dot_b, cavity) * dot_a.tau * math.sqrt(math.pi) / HBAR_MEV_PS


def pulse_area_quadrature(
    dot_a: DotParams, dot_b: DotParams, cavity: CavityParams, window: float = 3.0, n_points: int = 2401
) -> float:
    """Simpson quadrature of the same area over ``t_center ± window·τ``."""
    _check_simultaneous(dot_a, dot_b)
    t = dot_a.t_center + dot_a.tau * np.linspace(-window, window, n_points)
    om_a = raman_rabi(cavity.g_c, dot_a.g_las(t), dot_a.delta_big, dot_a.delta_small)
    om_b = raman_rabi(cavity.g_c, dot_b.g_las(t), dot_b.delta_big, dot_b.delta_small)
    return float(simpson(xy_strength(om_a, om_b, dot_a.delta_small), x=t)) / HBAR_MEV_PS


def window_fraction(window: float | None) -> float:
    """Fraction of the ``exp(-t²/τ²)`` area inside ``±window·τ`` (1 for no window)."""
    return 1.0 if window is None else float(erf(window))


def solve_g_las_for_area(target, delta_big, delta_small, g_c, tau, window: float | None = None):
    """Peak laser coupling giving XY pulse area ``target`` (radians) for two identical dots.

    With ``window`` set, the area counted is the part inside ``±window·τ``.
    Broadcasts over array inputs.
    """
    args = np.broadcast_arrays(*map(np.asarray, (target, delta_big, delta_small, g_c, tau)))
    if any(np.any(a <= 0) for a in args):
        raise DomainError("target, delta_big, delta_small, g_c and tau must all be positive")
    omega_tilde = HBAR_MEV_PS * target / (tau * math.sqrt(math.pi) * window_fraction(window))
    omega = np.sqrt(2.0 * delta_small * omega_tilde)
    g_las = omega / (g_c * (1.0 / delta_big + 1.0 / (delta_big + delta_small)))
    return float(g_las) if np.ndim(g_las) == 0 else g_las


# ---------------------------------------------------------------------------
# designs along a margin ladder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Design:
    delta_big: float
    delta_small: float
    g_las: float
    g_c: float
    tau: float
    min_ratio: float

    def dot(self, t_center: float = 0.0, gamma_x: float = 0.0) -> DotParams:
        return DotParams(self.delta_big, self.delta_small, self.g_las, self.tau, t_center, gamma_x)


def balanced_design(g_c: float, tau: float, target: float = TWO_PI, window: float | None = None) -> Design:
    """Area-solved design whose smallest adiabatic ratio is as large as possible.

    δ balances the two-photon and laser-leg ratios (the only two that trade
    against each other once the area is fixed); Δ is then the smallest value
    keeping the detuning-hierarchy and cavity-leg ratios at least as large.
    """
    inv_tau = hbar_over_tau(tau)

    def ratios(big, small):
        g = solve_g_las_for_area(target, big, small, g_c, tau, window)
        return g, adiabatic_ratios(big, small, g_c, g, tau)

    def imbalance(log_small, big):
        _, r = ratios(big, math.exp(log_small))
        return math.log(r["two_photon_detuning"] / r["laser_leg"])

    big = max(g_c, inv_tau) * 10.0
    for _ in range(200):
        small = math.exp(brentq(imbalance, -30.0, 15.0, args=(big,), xtol=1e-14))
        _, r = ratios(big, small)
        level = min(r["two_photon_detuning"], r["laser_leg"])
        new_big = max(level * small, level * max(g_c, inv_tau) - small, small)
        if abs(new_big - big) <= 1e-13 * big:
            big = new_big
            break
        big = new_big
    small = math.exp(brentq(imbalance, -30.0, 15.0, args=(big,), xtol=1e-14))
    g, r = ratios(big, small)
    return Design(big, small, g, g_c, tau, float(min(r.values())))


def design_for_margin(m: float, g_c: float, target: float = TWO_PI, window: float | None = None) -> Design:
    """Shortest-pulse balanced design whose every adiabatic ratio is at least ``m``."""
    if not m > 1:
        raise InvalidParameter("margin m > 1")
    # the balanced margin grows roughly like sqrt(tau * g_c / hbar)
    tau_guess = m**2 * HBAR_MEV_PS / g_c
    tau = brentq(
        lambda tau: balanced_design(g_c, tau, target, window).min_ratio - m,
        tau_guess / 100.0,
        tau_guess * 100.0,
        xtol=1e-12,
        rtol=1e-12,
    )
    return balanced_design(g_c, tau, target, window)


# ---------------------------------------------------------------------------
# plane scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    delta_big_bounds: tuple[float, float] = (1.0, 50.0)
    delta_small_bounds: tuple[float, float] = (0.1, 5.0)
    g_las_max: float = 10.0
    n_delta_big: int = 40
    n_delta_small: int = 40
    policy: MarginPolicy = field(default_factory=MarginPolicy)
    area_target: float = TWO_PI
    window: float = 3.0
    workers: int = 1

    def __post_init__(self):
        for name in ("delta_big_bounds", "delta_small_bounds"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi):
                raise InvalidParameter(f"{name}: 0 < lower < upper")
        if not self.g_las_max > 0:
            raise InvalidParameter("g_las_max > 0")
        if self.n_delta_big < 1 or self.n_delta_small < 1:
            raise InvalidParameter("grid densities >= 1")
        if not self.area_target > 0:
            raise InvalidParameter("area_target > 0")
        if not self.window > 0:
            raise InvalidParameter("window > 0")
        if self.workers < 1:
            raise InvalidParameter("workers >= 1")

    def delta_big_axis(self) -> np.ndarray:
        return np.geomspace(*self.delta_big_bounds, self.n_delta_big)

    def delta_small_axis(self) -> np.ndarray:
        return np.geomspace(*self.delta_small_bounds, self.n_delta_small)


@dataclass(frozen=True)
class RegionCell:
    g_c: float
    tau: float
    feasible: bool
    delta_big: float
    delta_small: float
    g_las: float
    min_ratio: float
    gate_time: float


@dataclass
class RegionGrid:
    gc_axis: np.ndarray
    tau_axis: np.ndarray
    cells: list[list[RegionCell]]
    search: SearchConfig

    @property
    def feasible_mask(self) -> np.ndarray:
        return np.array([[c.feasible for c in row] for row in self.cells], dtype=bool)

    def iter_cells(self):
        for row in self.cells:
            yield from row

    def min_gate_time(self, gc_index: int) -> float:
        times = [c.gate_time for c in self.cells[gc_index] if c.feasible]
        return min(times) if times else math.inf


def _strictly_increasing(axis, name):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size == 0:
        raise InvalidParameter(f"{name} must be a non-empty 1-d axis")
    if np.any(np.diff(axis) <= 0) or np.any(axis <= 0):
        raise InvalidParameter(f"{name} must be positive and strictly increasing")
    return axis


def scan_cell(g_c: float, tau: float, search: SearchConfig) -> RegionCell:
    big, small = np.meshgrid(search.delta_big_axis(), search.delta_small_axis(), indexing="ij")
    g_las = solve_g_las_for_area(search.area_target, big, small, g_c, tau)
    ratios = adiabatic_ratios(big, small, g_c, g_las, tau)
    stack = np.stack([ratios[name] for name in CONDITIONS])
    thresholds = np.array([search.policy.threshold(name) for name in CONDITIONS])
    base = search.policy.m
    weights = thresholds / base if math.isfinite(base) else np.ones_like(thresholds)
    weights = np.where(np.isfinite(weights), weights, 1.0)
    score = np.min(stack / weights[:, None, None], axis=0)
    allowed = g_las <= search.g_las_max
    score = np.where(allowed, score, -np.inf)
    flat = int(np.argmax(score))
    i, j = np.unravel_index(flat, score.shape)
    if not allowed[i, j]:
        return RegionCell(g_c, tau, False, math.nan, math.nan, math.nan, math.nan, math.nan)
    passes = bool(np.all(stack[:, i, j] >= thresholds))
    return RegionCell(
        g_c=float(g_c),
        tau=float(tau),
        feasible=passes,
        delta_big=float(big[i, j]),
        delta_small=float(small[i, j]),
        g_las=float(g_las[i, j]),
        min_ratio=float(np.min(stack[:, i, j])),
        gate_time=2.0 * search.window * tau if passes else math.nan,
    )


def scan_plane(gc_axis, tau_axis, search: SearchConfig = SearchConfig()) -> RegionGrid:
    """Grid-search (Δ, δ) at every (G_c, τ) cell with G_las fixed by the area target.

    A cell is feasible when some candidate within the bounds passes every
    adiabatic condition; the recorded candidate maximizes the smallest
    (threshold-weighted) ratio. Cells are keyed by index, so the result does
    not depend on ``search.workers``.
    """
    gc_axis = _strictly_increasing(gc_axis, "gc_axis")
    tau_axis = _strictly_increasing(tau_axis, "tau_axis")

    def row(g_c):
        return [scan_cell(g_c, tau, search) for tau in tau_axis]

    if search.workers > 1:
        with ThreadPoolExecutor(max_workers=search.workers) as pool:
            cells = list(pool.map(row, gc_axis))
    else:
        cells = [row(g_c) for g_c in gc_axis]
    return RegionGrid(gc_axis, tau_axis, cells, search)
