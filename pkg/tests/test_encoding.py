import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from qdcavity.device import CavityParams, DeviceSpec, DotParams
from qdcavity.dynamics import GateResult, Model, default_grid, extract_gate, xy_gate_matrix
from qdcavity.encoding import (
    X_AXIS,
    LogicalQubit,
    encode,
    logical_gate_from_simulation,
    logical_rotation_from_theta,
    logical_rotation_matrix,
    rotation_of,
)
from qdcavity.feasibility import solve_g_las_for_area

angles = st.floats(min_value=-30.0, max_value=30.0, allow_nan=False)


def fake_gate(u):
    return GateResult(u, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, Model.EFFECTIVE_XY, "lab", (0.0, 0.0))


def test_encoding_map():
    np.testing.assert_array_equal(encode(0).amplitudes, [0, 1, 0, 0])
    np.testing.assert_array_equal(encode(1).amplitudes, [0, 0, 1, 0])
    assert encode(0).inner(encode(1)) == 0
    assert encode(1).norm_sq == 1.0
    assert LogicalQubit(1).dot_pair == (1, 2)
    with pytest.raises(ValueError):
        encode(2)


def test_rotation_examples():
    np.testing.assert_allclose(logical_rotation_matrix(0.0), np.eye(2))
    np.testing.assert_allclose(logical_rotation_matrix(math.pi), -1j * np.array([[0, 1], [1, 0]]), atol=1e-15)
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(logical_rotation_matrix(math.pi / 2), [[s, -1j * s], [-1j * s, s]], atol=1e-15)
    report = logical_rotation_from_theta(1.25)
    assert report.leakage == 0.0 and report.equivalent_rotation == (X_AXIS, 1.25)


@settings(max_examples=100, deadline=None)
@given(angles, angles)
def test_rotation_composition(a, b):
    product = logical_rotation_from_theta(a).logical_2x2 @ logical_rotation_from_theta(b).logical_2x2
    np.testing.assert_allclose(product, logical_rotation_from_theta(a + b).logical_2x2, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(angles)
def test_rotation_periodicity(theta):
    m = logical_rotation_matrix(theta)
    np.testing.assert_allclose(logical_rotation_matrix(theta + 4 * math.pi), m, atol=1e-12)
    np.testing.assert_allclose(logical_rotation_matrix(theta + 2 * math.pi), -m, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.0, max_value=math.pi))
def test_rotation_of_recovers_x_rotation(theta):
    axis, angle = rotation_of(logical_rotation_matrix(theta) * np.exp(0.4j))
    assert angle == pytest.approx(theta, abs=1e-7)
    if theta > 1e-6:
        np.testing.assert_allclose(axis, X_AXIS, atol=1e-9)


def test_ideal_two_pi_gate_is_minus_identity():
    report = logical_gate_from_simulation(fake_gate(xy_gate_matrix(2 * math.pi)))
    np.testing.assert_allclose(report.logical_2x2, -np.eye(2), atol=1e-15)
    assert report.leakage == pytest.approx(0.0, abs=1e-15)
    assert report.equivalent_rotation[1] == pytest.approx(0.0, abs=1e-7)


def test_haar_random_unitaries_leak():
    rng = np.random.default_rng(20240101)
    leaks = np.array([
        logical_gate_from_simulation(fake_gate(unitary_group.rvs(4, random_state=rng))).leakage for _ in range(100)
    ])
    assert np.all((leaks > 0) & (leaks <= 1))
    assert np.median(leaks) == pytest.approx(0.6873174206777682, abs=1e-12)


def test_rotation_withheld_when_block_not_unitary():
    u = xy_gate_matrix(1.0)
    u[1, 1] *= 0.9
    report = logical_gate_from_simulation(fake_gate(u))
    assert report.equivalent_rotation is None and report.unitarity_defect > 1e-3


@pytest.mark.parametrize("theta", [0.7, math.pi, 2 * math.pi, 9.0])
def test_simulation_consistency_effective_xy(theta):
    g = solve_g_las_for_area(theta, 10.0, 1.0, 1.0, 40.0, window=3.0)
    dot = DotParams(10.0, 1.0, g, 40.0)
    spec = DeviceSpec((dot, dot), CavityParams(1.0))
    gate = extract_gate(spec, default_grid(spec), model=Model.EFFECTIVE_XY)
    report = logical_gate_from_simulation(gate)
    expected = logical_rotation_from_theta(gate.theta_accumulated).logical_2x2
    assert np.max(np.abs(report.logical_2x2 - expected)) < 1e-6
    assert report.leakage < 1e-12


def test_full_model_logical_leakage_below_one_percent(gate_m10):
    assert logical_gate_from_simulation(gate_m10).leakage < 0.01
