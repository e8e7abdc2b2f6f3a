from __future__ import annotations

import functools

import pytest

from qdcavity.device import CavityParams, DeviceSpec
from qdcavity.dynamics import DecayParams, default_grid, extract_gate
from qdcavity.feasibility import design_for_margin

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@functools.lru_cache(maxsize=None)
def margin_design(m: float, g_c: float = 1.0):
    return design_for_margin(m, g_c)


def two_dot_spec(design, kappa: float = 0.0, gamma_x: float = 0.0, n_max: int = 2) -> DeviceSpec:
    dot = design.dot(t_center=0.0, gamma_x=gamma_x)
    return DeviceSpec((dot, dot), CavityParams(design.g_c, kappa, n_max))


@functools.lru_cache(maxsize=None)
def margin_gate(m: float, frame: str = "dressed", kappa: float = 0.0, gamma_x: float = 0.0):
    """Full-model gate of the shortest balanced design at margin ``m`` (G_c = 1 meV)."""
    spec = two_dot_spec(margin_design(m), kappa, gamma_x)
    decay = DecayParams(kappa, gamma_x, enabled=kappa > 0 or gamma_x > 0)
    return extract_gate(spec, default_grid(spec), decay=decay, frame=frame)


@pytest.fixture(scope="session")
def gate_m10():
    return margin_gate(10.0)
