import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdcavity.device import CavityParams, DeviceSpec, DomainError, DotParams, InvalidParameter
from qdcavity.dynamics import default_grid, extract_gate
from qdcavity.feasibility import (
    CONDITIONS,
    TWO_PI,
    MarginPolicy,
    SearchConfig,
    adiabatic_ratios,
    balanced_design,
    check_adiabatic,
    design_for_margin,
    pulse_area,
    pulse_area_quadrature,
    scan_plane,
    solve_g_las_for_area,
)
from qdcavity.quantum_core import HBAR_MEV_PS

WORKED = DotParams(13.0, 1.3, 3.0, 25.0)
CAV = CavityParams(1.0)


# --- check_adiabatic -----------------------------------------------------------------


def test_worked_point_report():
    report = check_adiabatic(WORKED, CAV, MarginPolicy(10))
    expected = {
        "detuning_hierarchy": 10.0,
        "two_photon_detuning": 5.9015873015873016,
        "cavity_leg": 14.3,
        "laser_leg": 4.333333333333333,
    }
    for name, value in expected.items():
        assert report.ratios[name] == pytest.approx(value, rel=1e-12)
    assert report.feasible is False
    assert report.binding_constraint == "laser_leg"
    assert report.min_ratio == pytest.approx(13 / 3)
    assert report.omega_peak == pytest.approx(0.44055944055944056)
    assert report.hbar_over_tau == pytest.approx(0.026328478276)


def test_zero_laser_uses_pulse_floor():
    report = check_adiabatic(DotParams(13.0, 1.3, 0.0, 25.0), CAV)
    assert report.ratios["laser_leg"] == pytest.approx(13.0 * 25.0 / HBAR_MEV_PS)
    assert report.ratios["two_photon_detuning"] == pytest.approx(1.3 * 25.0 / HBAR_MEV_PS)


def test_zero_two_photon_detuning_rejected():
    with pytest.raises(InvalidParameter):
        check_adiabatic(DotParams(13.0, 0.0, 3.0, 25.0), CAV)


def test_margin_policy_validation_and_overrides():
    with pytest.raises(InvalidParameter):
        MarginPolicy(1.0)
    policy = MarginPolicy(10, (("laser_leg", 4.0),))
    assert policy.threshold("laser_leg") == 4.0 and policy.threshold("cavity_leg") == 10
    report = check_adiabatic(WORKED, CAV, MarginPolicy(5, (("laser_leg", 4.0),)))
    assert report.feasible is True


@settings(max_examples=50, deadline=None)
@given(
    st.floats(1.0, 40.0),
    st.floats(0.05, 5.0),
    st.floats(0.01, 5.0),
    st.floats(0.05, 5.0),
    st.floats(5.0, 500.0),
    st.floats(0.1, 10.0),
)
def test_ratios_homogeneous_of_degree_zero(big, small, g_las, g_c, tau, lam):
    dot = DotParams(big, small, g_las, tau)
    scaled = DotParams(big * lam, small * lam, g_las * lam, tau / lam)
    a = check_adiabatic(dot, CavityParams(g_c))
    b = check_adiabatic(scaled, CavityParams(g_c * lam))
    for name in CONDITIONS:
        assert b.ratios[name] == pytest.approx(a.ratios[name], rel=1e-10)
    assert a.feasible == b.feasible or min(abs(r - 10) for r in a.ratios.values()) < 1e-8


def test_feasible_iff_all_ratios_pass():
    rng = np.random.default_rng(11)
    for _ in range(200):
        dot = DotParams(rng.uniform(1, 50), rng.uniform(0.1, 5), rng.uniform(0, 3), rng.uniform(10, 2000))
        report = check_adiabatic(dot, CavityParams(rng.uniform(0.1, 3)), MarginPolicy(5))
        assert report.feasible == all(r >= 5 for r in report.ratios.values())
        assert report.ratios[report.binding_constraint] == report.min_ratio


# --- pulse area ---------------------------------------------------------------------


def test_pulse_area_examples():
    zero = DotParams(13.0, 1.3, 0.0, 25.0)
    assert pulse_area(zero, zero, CAV) == 0.0
    # Ω̃_peak = 0.0933 meV, τ = 25 ps
    omega = math.sqrt(2 * 1.3 * 0.0933)
    g = omega / (1 / 13 + 1 / 14.3)
    dot = DotParams(13.0, 1.3, g, 25.0)
    assert pulse_area(dot, dot, CAV) == pytest.approx(6.2810293308986775, rel=1e-12)


def test_pulse_area_needs_simultaneous_pulses():
    with pytest.raises(InvalidParameter):
        pulse_area(WORKED, DotParams(13.0, 1.3, 3.0, 30.0), CAV)
    with pytest.raises(InvalidParameter):
        pulse_area(WORKED, DotParams(13.0, 1.3, 3.0, 25.0, t_center=5.0), CAV)


def test_solver_worked_value():
    g = solve_g_las_for_area(TWO_PI, 13.0, 1.3, 1.0, 25.0)
    assert g == pytest.approx(3.3544302205782765, rel=1e-12)
    dot = DotParams(13.0, 1.3, g, 25.0)
    assert pulse_area(dot, dot, CAV) == pytest.approx(TWO_PI, abs=1e-12)


def test_solver_scaling_law():
    g1 = solve_g_las_for_area(TWO_PI, 9.0, 0.8, 1.2, 40.0)
    g4 = solve_g_las_for_area(TWO_PI, 9.0, 0.8, 1.2, 160.0)
    assert g4 == pytest.approx(g1 / 2, rel=1e-14)


def test_solver_window_compensation():
    g = solve_g_las_for_area(TWO_PI, 13.0, 1.3, 1.0, 25.0, window=3.0)
    dot = DotParams(13.0, 1.3, g, 25.0)
    assert pulse_area_quadrature(dot, dot, CAV, window=3.0, n_points=4001) == pytest.approx(TWO_PI, rel=1e-9)


def test_solver_domain_errors():
    for bad in ((0.0, 13, 1.3, 1, 25), (TWO_PI, -1, 1.3, 1, 25), (TWO_PI, 13, 0, 1, 25), (TWO_PI, 13, 1.3, 0, 25)):
        with pytest.raises(DomainError):
            solve_g_las_for_area(*bad)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.1, 20.0), st.floats(1.0, 50.0), st.floats(0.1, 5.0), st.floats(0.1, 4.0), st.floats(10.0, 1000.0))
def test_solver_round_trip(target, big, small, g_c, tau):
    g = solve_g_las_for_area(target, big, small, g_c, tau)
    dot = DotParams(big, small, g, tau)
    assert abs(pulse_area(dot, dot, CavityParams(g_c)) - target) <= 1e-9 * target


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 50.0), st.floats(0.1, 5.0), st.floats(0.1, 4.0), st.floats(10.0, 1000.0))
def test_analytic_area_matches_quadrature(big, small, g_c, tau):
    g = solve_g_las_for_area(TWO_PI, big, small, g_c, tau)
    dot = DotParams(big, small, g, tau, t_center=3 * tau)
    analytic = pulse_area(dot, dot, CavityParams(g_c))
    assert abs(pulse_area_quadrature(dot, dot, CavityParams(g_c)) - analytic) / analytic < 1e-4


def test_solver_broadcasts():
    g = solve_g_las_for_area(TWO_PI, np.array([10.0, 20.0]), 1.0, 1.0, 100.0)
    assert g.shape == (2,)
    assert g[1] == pytest.approx(solve_g_las_for_area(TWO_PI, 20.0, 1.0, 1.0, 100.0))


# --- designs ----------------------------------------------------------------------


@pytest.mark.parametrize("m", [3.0, 10.0, 30.0])
def test_design_for_margin_is_tight(m):
    d = design_for_margin(m, 1.0)
    ratios = adiabatic_ratios(d.delta_big, d.delta_small, d.g_c, d.g_las, d.tau)
    assert min(float(v) for v in ratios.values()) == pytest.approx(m, rel=1e-9)
    dot = d.dot()
    assert pulse_area(dot, dot, CavityParams(d.g_c)) == pytest.approx(TWO_PI, rel=1e-12)


def test_balanced_margin_grows_with_tau():
    margins = [balanced_design(1.0, tau).min_ratio for tau in (20.0, 80.0, 320.0)]
    assert margins[0] < margins[1] < margins[2]


# --- scan ------------------------------------------------------------------------------


TAU_AXIS = np.geomspace(10.0, 1000.0, 40)


def test_infinite_margin_gives_empty_region():
    region = scan_plane([0.5, 1.0, 2.0], [20.0, 200.0], SearchConfig(policy=MarginPolicy(math.inf)))
    assert not region.feasible_mask.any()
    assert all(math.isinf(region.min_gate_time(i)) for i in range(3))


def test_region_non_empty_in_sanity_window():
    gc_axis = np.linspace(0.5, 2.0, 7)
    tau_axis = np.geomspace(10.0, 100.0, 12)
    region = scan_plane(gc_axis, tau_axis, SearchConfig(policy=MarginPolicy(5)))
    assert region.feasible_mask.any()
    assert region.feasible_mask[-1].any()


def test_region_monotone_in_coupling():
    gc_axis = np.linspace(0.1, 4.0, 40)
    region = scan_plane(gc_axis, TAU_AXIS, SearchConfig(policy=MarginPolicy(5)))
    mask = region.feasible_mask
    assert np.all(mask[1:] >= mask[:-1])


def test_feasible_cells_report_gate_time_and_pass_check():
    search = SearchConfig(policy=MarginPolicy(5))
    region = scan_plane([1.0], TAU_AXIS, search)
    for cell in region.iter_cells():
        if cell.feasible:
            assert cell.gate_time == pytest.approx(6.0 * cell.tau)
            report = check_adiabatic(DotParams(cell.delta_big, cell.delta_small, cell.g_las, cell.tau), CavityParams(1.0),
                                     search.policy)
            assert report.feasible and cell.g_las <= search.g_las_max
        else:
            assert math.isnan(cell.gate_time)


def test_parallel_scan_is_identical():
    gc_axis = np.linspace(0.3, 3.0, 6)
    serial = scan_plane(gc_axis, TAU_AXIS[::4], SearchConfig(policy=MarginPolicy(5)))
    threaded = scan_plane(gc_axis, TAU_AXIS[::4], SearchConfig(policy=MarginPolicy(5), workers=4))
    assert serial.cells == threaded.cells


def test_scan_rejects_bad_axes():
    with pytest.raises(InvalidParameter):
        scan_plane([1.0, 0.5], [10.0])
    with pytest.raises(InvalidParameter):
        scan_plane([], [10.0])
    with pytest.raises(InvalidParameter):
        SearchConfig(delta_big_bounds=(5.0, 1.0))


def test_solver_consistency_on_sampled_feasible_cells():
    region = scan_plane([0.5, 1.0, 2.0], np.geomspace(30.0, 300.0, 6), SearchConfig(policy=MarginPolicy(5)))
    cells = [c for c in region.iter_cells() if c.feasible]
    assert cells
    for cell in cells[:: max(1, len(cells) // 4)]:
        dot = DotParams(cell.delta_big, cell.delta_small, cell.g_las, cell.tau)
        spec = DeviceSpec((dot, dot), CavityParams(cell.g_c))
        gate = extract_gate(spec, default_grid(spec))
        assert gate.theta_accumulated == pytest.approx(TWO_PI, rel=0.02)
