"""Run configuration: strict JSON schema with unit-suffixed keys and echoed defaults.

Layout (every section except ``dots`` and ``cavity`` is optional)::

    {
      "dot_shared": {<dot keys>},            merged under each entry of "dots"
      "dots": [{<dot keys>}, ...],           one or two dots
      "cavity": {"g_c_meV", "kappa_meV", "n_max"},
      "model": "full" | "effective_raman" | "effective_xy",
      "initial_state": "10",
      "window_w": 3,
      "steps_per_tau": 200,
      "grid": {"t_start_ps", "t_end_ps", "n_steps"},
      "gate_frame": "dressed" | "lab",
      "decay": {"enabled", "kappa_meV", "gamma_x_meV"},
      "policy": {"margin", "overrides": {<condition>: ratio}},
      "area": {"target_rad", "compensate_window"},
      "scan": {"gc_axis_meV", "tau_axis_ps", "delta_big_bounds_meV",
               "delta_small_bounds_meV", "g_las_max_meV", "n_delta_big",
               "n_delta_small", "workers"},
      "output": {"dir", "prefix", "amplitudes"}
    }

Dot keys are ``delta_big_meV``, ``delta_small_meV``, ``g_las_peak_meV``,
``tau_ps``, ``t_center_ps`` and ``gamma_x_meV``. ``g_las_peak_meV`` may be the
string ``"area"`` to have it solved from the pulse-area target. Scan axes are
either explicit lists or ``{"start", "stop", "num", "spacing"}`` with spacing
``"linear"`` or ``"log"``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .device import CavityParams, DeviceSpec, DotParams, InvalidParameter
from .dynamics import DEFAULT_WINDOW, STEPS_PER_TAU, DecayParams, Model, default_grid
from .feasibility import CONDITIONS, TWO_PI, MarginPolicy, SearchConfig, solve_g_las_for_area
from .output import to_json
from .quantum_core import TimeGrid


class ConfigError(ValueError):
    """The configuration is malformed or violates a constraint."""


DOT_KEYS = ("delta_big_meV", "delta_small_meV", "g_las_peak_meV", "tau_ps", "t_center_ps", "gamma_x_meV")
CAVITY_KEYS = ("g_c_meV", "kappa_meV", "n_max")
TOP_KEYS = (
    "dot_shared",
    "dots",
    "cavity",
    "model",
    "initial_state",
    "window_w",
    "steps_per_tau",
    "grid",
    "gate_frame",
    "decay",
    "policy",
    "area",
    "scan",
    "output",
)
SECTION_KEYS = {
    "grid": ("t_start_ps", "t_end_ps", "n_steps"),
    "decay": ("enabled", "kappa_meV", "gamma_x_meV"),
    "policy": ("margin", "overrides"),
    "area": ("target_rad", "compensate_window"),
    "scan": (
        "gc_axis_meV",
        "tau_axis_ps",
        "delta_big_bounds_meV",
        "delta_small_bounds_meV",
        "g_las_max_meV",
        "n_delta_big",
        "n_delta_small",
        "workers",
    ),
    "output": ("dir", "prefix", "amplitudes"),
}
AXIS_KEYS = ("start", "stop", "num", "spacing")

DEFAULT_GC_AXIS = {"start": 0.1, "stop": 4.0, "num": 40, "spacing": "linear"}
DEFAULT_TAU_AXIS = {"start": 10.0, "stop": 1000.0, "num": 40, "spacing": "log"}


@dataclass
class RunConfig:
    device: DeviceSpec
    model: Model
    initial_state: str
    window: float
    steps_per_tau: int
    grid: TimeGrid
    gate_frame: str
    decay: DecayParams
    policy: MarginPolicy
    area_target: float
    compensate_window: bool
    search: SearchConfig
    gc_axis: np.ndarray
    tau_axis: np.ndarray
    output_dir: str
    prefix: str
    amplitudes: bool
    resolved: dict = field(repr=False)
    defaults_applied: dict = field(repr=False)
    g_las_solved: tuple[bool, ...] = ()

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_text(self.resolved).encode("utf-8")).hexdigest()


def _sorted(obj):
    if isinstance(obj, dict):
        return {k: _sorted(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_sorted(v) for v in obj]
    return obj


def canonical_text(resolved: dict) -> str:
    """Key-sorted text with the output float format, so ``3`` and ``3.0`` hash alike."""
    return to_json(_sorted(resolved), indent=0)


def _reject_unknown(obj: dict, allowed, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}; valid keys: {list(allowed)}")


def _number(value, where: str) -> float:
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number")
    return float(value)


def _check(ok: bool, constraint: str):
    if not ok:
        raise ConfigError(constraint)


class _Resolver:
    """Fills defaults into a copy of the raw config and records each one."""

    def __init__(self, raw: dict):
        self.data = copy.deepcopy(raw)
        self.defaults: dict[str, object] = {}

    def default(self, section: dict, key: str, value, path: str):
        if key not in section:
            section[key] = value
            self.defaults[path] = value
        return section[key]


def _axis(spec, where: str) -> np.ndarray:
    if isinstance(spec, list):
        axis = np.array([_number(v, f"{where}[{i}]") for i, v in enumerate(spec)])
    else:
        _reject_unknown(spec, AXIS_KEYS, where)
        for key in ("start", "stop", "num"):
            _check(key in spec, f"{where}.{key} is required")
        start, stop = _number(spec["start"], f"{where}.start"), _number(spec["stop"], f"{where}.stop")
        num = spec["num"]
        _check(isinstance(num, int) and not isinstance(num, bool) and num >= 1, f"{where}.num >= 1 (integer)")
        spacing = spec.get("spacing", "linear")
        _check(spacing in ("linear", "log"), f"{where}.spacing in ['linear', 'log']")
        _check(0 < start < stop or (num == 1 and start > 0), f"{where}: 0 < start < stop")
        axis = np.linspace(start, stop, num) if spacing == "linear" else np.geomspace(start, stop, num)
    _check(axis.size > 0 and bool(np.all(axis > 0)), f"{where} entries > 0")
    _check(bool(np.all(np.diff(axis) > 0)), f"{where} strictly increasing")
    return axis


def _bounds(value, where: str) -> tuple[float, float]:
    _check(isinstance(value, list) and len(value) == 2, f"{where} must be [lower, upper]")
    lo, hi = _number(value[0], f"{where}[0]"), _number(value[1], f"{where}[1]")
    _check(0 < lo < hi, f"{where}: 0 < lower < upper")
    return lo, hi


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration, filling and recording defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    _reject_unknown(raw, TOP_KEYS, "config")
    for section, keys in SECTION_KEYS.items():
        if section in raw:
            _reject_unknown(raw[section], keys, section)
    for key in ("dots", "cavity"):
        _check(key in raw, f"'{key}' is required")

    r = _Resolver(raw)
    cfg = r.data

    # cavity
    cav = cfg["cavity"]
    _reject_unknown(cav, CAVITY_KEYS, "cavity")
    _check("g_c_meV" in cav, "cavity.g_c_meV is required")
    g_c = _number(cav["g_c_meV"], "cavity.g_c_meV")
    kappa = _number(r.default(cav, "kappa_meV", 0.0, "cavity.kappa_meV"), "cavity.kappa_meV")
    n_max = r.default(cav, "n_max", 2, "cavity.n_max")
    _check(g_c >= 0, "cavity.g_c_meV >= 0")
    _check(kappa >= 0, "cavity.kappa_meV >= 0")
    _check(isinstance(n_max, int) and not isinstance(n_max, bool) and n_max >= 1, "cavity.n_max >= 1 (integer)")

    window = _number(r.default(cfg, "window_w", DEFAULT_WINDOW, "window_w"), "window_w")
    _check(window > 0, "window_w > 0")
    steps_per_tau = r.default(cfg, "steps_per_tau", STEPS_PER_TAU, "steps_per_tau")
    _check(isinstance(steps_per_tau, int) and not isinstance(steps_per_tau, bool) and steps_per_tau >= 1,
           "steps_per_tau >= 1 (integer)")

    area = cfg["area"] if "area" in cfg else r.default(cfg, "area", {}, "area")
    target = _number(r.default(area, "target_rad", TWO_PI, "area.target_rad"), "area.target_rad")
    _check(target > 0, "area.target_rad > 0")
    compensate = r.default(area, "compensate_window", False, "area.compensate_window")
    _check(isinstance(compensate, bool), "area.compensate_window must be true or false")

    # dots
    shared = cfg.get("dot_shared", {})
    _reject_unknown(shared, DOT_KEYS, "dot_shared")
    dots_raw = cfg["dots"]
    _check(isinstance(dots_raw, list) and len(dots_raw) in (1, 2), "dots must be a list of one or two objects")
    merged = []
    for i, entry in enumerate(dots_raw):
        _reject_unknown(entry, DOT_KEYS, f"dots[{i}]")
        merged.append({**shared, **entry})
    for i, d in enumerate(merged):
        where = f"dots[{i}]"
        for key in ("delta_big_meV", "delta_small_meV", "g_las_peak_meV", "tau_ps"):
            _check(key in d, f"{where}.{key} is required (directly or via dot_shared)")
        for key in ("delta_big_meV", "delta_small_meV", "tau_ps"):
            d[key] = _number(d[key], f"{where}.{key}")
        _check(d["tau_ps"] > 0, f"{where}.tau_ps > 0")
        _check(d["delta_big_meV"] > 0, f"{where}.delta_big_meV > 0")
        _check(d["delta_big_meV"] + d["delta_small_meV"] > 0, f"{where}.delta_big_meV + delta_small_meV > 0")
        if "t_center_ps" not in d:
            d["t_center_ps"] = window * d["tau_ps"]
            entry_default = dots_raw[i]
            r.defaults[f"{where}.t_center_ps"] = d["t_center_ps"]
            entry_default["t_center_ps"] = d["t_center_ps"]
        if "gamma_x_meV" not in d:
            d["gamma_x_meV"] = 0.0
            r.defaults[f"{where}.gamma_x_meV"] = 0.0
            dots_raw[i]["gamma_x_meV"] = 0.0
        for key in ("t_center_ps", "gamma_x_meV"):
            d[key] = _number(d[key], f"{where}.{key}")
        _check(d["gamma_x_meV"] >= 0, f"{where}.gamma_x_meV >= 0")

    solved = []
    for i, d in enumerate(merged):
        where = f"dots[{i}]"
        g = d["g_las_peak_meV"]
        if g == "area":
            _check(g_c > 0 and d["delta_small_meV"] > 0, f"{where}: solving g_las from the area needs g_c_meV > 0 and delta_small_meV > 0")
            g = solve_g_las_for_area(target, d["delta_big_meV"], d["delta_small_meV"], g_c, d["tau_ps"],
                                     window if compensate else None)
            solved.append(True)
        else:
            g = _number(g, f"{where}.g_las_peak_meV")
            solved.append(False)
        _check(g >= 0, f"{where}.g_las_peak_meV >= 0")
        d["_g_las"] = g

    try:
        dots = tuple(
            DotParams(d["delta_big_meV"], d["delta_small_meV"], d["_g_las"], d["tau_ps"], d["t_center_ps"], d["gamma_x_meV"])
            for d in merged
        )
        device = DeviceSpec(dots, CavityParams(g_c, kappa, n_max))
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from None

    model_name = r.default(cfg, "model", Model.FULL.value, "model")
    _check(model_name in [m.value for m in Model], f"model in {[m.value for m in Model]}")
    model = Model(model_name)
    n_qubits = 1 if model is Model.EFFECTIVE_RAMAN else device.n_dots
    initial = r.default(cfg, "initial_state", "1" + "0" * (n_qubits - 1), "initial_state")
    _check(isinstance(initial, str), "initial_state must be a string of 0/1")

    frame = r.default(cfg, "gate_frame", "dressed", "gate_frame")
    _check(frame in ("dressed", "lab"), "gate_frame in ['dressed', 'lab']")

    # grid
    auto = default_grid(device, window, steps_per_tau)
    grid_cfg = cfg["grid"] if "grid" in cfg else r.default(cfg, "grid", {}, "grid")
    t0 = _number(r.default(grid_cfg, "t_start_ps", auto.t_start, "grid.t_start_ps"), "grid.t_start_ps")
    t1 = _number(r.default(grid_cfg, "t_end_ps", auto.t_end, "grid.t_end_ps"), "grid.t_end_ps")
    _check(t1 > t0, "grid.t_end_ps > grid.t_start_ps")
    tau_min = min(d.tau for d in device.dots)
    n_auto = math.ceil(round((t1 - t0) * steps_per_tau / tau_min, 9))
    n_steps = r.default(grid_cfg, "n_steps", n_auto, "grid.n_steps")
    _check(isinstance(n_steps, int) and not isinstance(n_steps, bool) and n_steps >= 1, "grid.n_steps >= 1 (integer)")
    grid = TimeGrid(t0, t1, n_steps)

    # decay
    decay_cfg = cfg["decay"] if "decay" in cfg else r.default(cfg, "decay", {}, "decay")
    enabled = r.default(decay_cfg, "enabled", False, "decay.enabled")
    _check(isinstance(enabled, bool), "decay.enabled must be true or false")
    d_kappa = _number(r.default(decay_cfg, "kappa_meV", kappa, "decay.kappa_meV"), "decay.kappa_meV")
    d_gamma = _number(r.default(decay_cfg, "gamma_x_meV", device.dots[0].gamma_x, "decay.gamma_x_meV"), "decay.gamma_x_meV")
    _check(d_kappa >= 0, "decay.kappa_meV >= 0")
    _check(d_gamma >= 0, "decay.gamma_x_meV >= 0")
    decay = DecayParams(d_kappa, d_gamma, enabled)

    # policy
    pol = cfg["policy"] if "policy" in cfg else r.default(cfg, "policy", {}, "policy")
    margin = _number(r.default(pol, "margin", 10.0, "policy.margin"), "policy.margin")
    _check(margin > 1, "policy.margin > 1")
    overrides = r.default(pol, "overrides", {}, "policy.overrides")
    _reject_unknown(overrides, CONDITIONS, "policy.overrides")
    ov = {name: _number(v, f"policy.overrides.{name}") for name, v in overrides.items()}
    for name, v in ov.items():
        _check(v > 1, f"policy.overrides.{name} > 1")
    policy = MarginPolicy(margin, tuple(ov.items()))

    # scan
    sc = cfg["scan"] if "scan" in cfg else r.default(cfg, "scan", {}, "scan")
    gc_axis = _axis(r.default(sc, "gc_axis_meV", dict(DEFAULT_GC_AXIS), "scan.gc_axis_meV"), "scan.gc_axis_meV")
    tau_axis = _axis(r.default(sc, "tau_axis_ps", dict(DEFAULT_TAU_AXIS), "scan.tau_axis_ps"), "scan.tau_axis_ps")
    big_b = _bounds(r.default(sc, "delta_big_bounds_meV", [1.0, 50.0], "scan.delta_big_bounds_meV"), "scan.delta_big_bounds_meV")
    small_b = _bounds(r.default(sc, "delta_small_bounds_meV", [0.1, 5.0], "scan.delta_small_bounds_meV"), "scan.delta_small_bounds_meV")
    g_max = _number(r.default(sc, "g_las_max_meV", 10.0, "scan.g_las_max_meV"), "scan.g_las_max_meV")
    _check(g_max > 0, "scan.g_las_max_meV > 0")
    ints = {}
    for key, dflt in (("n_delta_big", 40), ("n_delta_small", 40), ("workers", 1)):
        v = r.default(sc, key, dflt, f"scan.{key}")
        _check(isinstance(v, int) and not isinstance(v, bool) and v >= 1, f"scan.{key} >= 1 (integer)")
        ints[key] = v
    search = SearchConfig(big_b, small_b, g_max, ints["n_delta_big"], ints["n_delta_small"], policy, target, window,
                          ints["workers"])

    out = cfg["output"] if "output" in cfg else r.default(cfg, "output", {}, "output")
    out_dir = r.default(out, "dir", ".", "output.dir")
    prefix = r.default(out, "prefix", "run", "output.prefix")
    amplitudes = r.default(out, "amplitudes", False, "output.amplitudes")
    _check(isinstance(out_dir, str) and isinstance(prefix, str) and prefix != "", "output.dir and output.prefix must be strings")
    _check(isinstance(amplitudes, bool), "output.amplitudes must be true or false")

    return RunConfig(
        device=device,
        model=model,
        initial_state=initial,
        window=window,
        steps_per_tau=steps_per_tau,
        grid=grid,
        gate_frame=frame,
        decay=decay,
        policy=policy,
        area_target=target,
        compensate_window=compensate,
        search=search,
        gc_axis=gc_axis,
        tau_axis=tau_axis,
        output_dir=out_dir,
        prefix=prefix,
        amplitudes=amplitudes,
        resolved=cfg,
        defaults_applied=r.defaults,
        g_las_solved=tuple(solved),
    )


def emit_config(cfg: RunConfig) -> str:
    """The fully resolved configuration (all defaults explicit) as JSON text."""
    return to_json(cfg.resolved) + "\n"
