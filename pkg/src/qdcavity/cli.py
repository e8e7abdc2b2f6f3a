"""Command-line entry point: ``qdcavity {simulate,gate,check,scan,solve-area} CONFIG``.

Exit status is 0 on success, 2 for invalid input and 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, emit_config, parse_config
from .dynamics import (
    Model,
    decoherence_dilation,
    extract_gate,
    initial_state,
    run_model,
    theta_accumulated,
    virtual_population_stats,
)
from .encoding import logical_gate_from_simulation
from .feasibility import CONDITION_TEXT, check_adiabatic, pulse_area, scan_plane, solve_g_las_for_area
from .output import csv_text, to_json, write_atomic
from .quantum_core import NumericalError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("simulate", "gate", "check", "scan", "solve-area")


def provenance(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "config_sha256": cfg.config_hash,
        "defaults_applied": dict(cfg.defaults_applied),
        "version": f"qdcavity {__version__}",
    }


def _report_dict(report) -> dict:
    d = dataclasses.asdict(report)
    d["binding_text"] = CONDITION_TEXT[report.binding_constraint]
    return d


def _gate_dicts(gate, logical) -> dict:
    u = np.asarray(gate.unitary_4x4)
    rot = logical.equivalent_rotation
    return {
        "gate": {
            "model": gate.model.value,
            "frame": gate.frame,
            "theta_accumulated_rad": gate.theta_accumulated,
            "area_deficit": gate.area_deficit,
            "fidelity": gate.fidelity,
            "max_exciton_pop": gate.max_exciton_pop,
            "max_photon_pop": gate.max_photon_pop,
            "norm_loss": gate.norm_loss,
            "leakage": gate.leakage,
            "unitarity_defect": gate.unitarity_defect,
            "qubit_phases_rad": list(gate.qubit_phases),
            "unitary_re": u.real,
            "unitary_im": u.imag,
        },
        "logical": {
            "logical_re": logical.logical_2x2.real,
            "logical_im": logical.logical_2x2.imag,
            "leakage": logical.leakage,
            "unitarity_defect": logical.unitarity_defect,
            "equivalent_rotation": None if rot is None else {"axis": list(rot[0]), "angle_rad": rot[1]},
        },
    }


def cmd_simulate(cfg: RunConfig, out: Path) -> dict:
    spec = cfg.device
    psi0 = initial_state(cfg.model, spec, cfg.initial_state)
    traj = run_model(cfg.model, spec, psi0, cfg.grid, cfg.decay)
    pops = traj.populations
    qubit_keys = sorted(k for k in pops if set(k) <= {"0", "1"})
    header = ["t_ps"]
    columns = [traj.grid.times]
    if cfg.amplitudes:
        for flat in range(traj.basis.dim):
            tag = "_".join(str(i) for i in traj.basis.multi_index(flat))
            header += [f"re_{tag}", f"im_{tag}"]
            columns += [traj.states[:, flat].real, traj.states[:, flat].imag]
    header += ["pop_exciton_total", "pop_photon"] + [f"pop_{k}" for k in qubit_keys] + ["norm"]
    columns += [pops["exciton_total"], pops["photon"]] + [pops[k] for k in qubit_keys] + [traj.norm]
    rows = np.column_stack(columns)
    write_atomic(out / f"{cfg.prefix}_trajectory.csv", csv_text(header, rows))

    max_x, max_ph = virtual_population_stats(traj)
    summary = {
        "model": cfg.model.value,
        "initial_state": cfg.initial_state,
        "n_steps": cfg.grid.n_steps,
        "final_norm": float(traj.norm[-1]),
        "norm_drift": float(np.max(np.abs(traj.norm - traj.norm[0]))),
        "final_populations": {k: float(v[-1]) for k, v in pops.items()},
        "max_exciton_pop": max_x,
        "max_photon_pop": max_ph,
        "coherent_window_ps": decoherence_dilation(max_x, max_ph, cfg.decay.kappa, cfg.decay.gamma_x),
    }
    if spec.n_dots == 2:
        summary["theta_accumulated_rad"] = theta_accumulated(spec, cfg.grid)
    return summary


def cmd_gate(cfg: RunConfig, out: Path) -> dict:
    model = cfg.model if cfg.model is not Model.EFFECTIVE_RAMAN else Model.FULL
    gate = extract_gate(cfg.device, cfg.grid, model, cfg.decay, frame=cfg.gate_frame)
    return _gate_dicts(gate, logical_gate_from_simulation(gate))


def cmd_check(cfg: RunConfig, out: Path) -> dict:
    reports = [check_adiabatic(dot, cfg.device.cavity, cfg.policy) for dot in cfg.device.dots]
    worst = min(reports, key=lambda r: r.min_ratio)
    return {
        "feasible": all(r.feasible for r in reports),
        "binding_constraint": worst.binding_constraint,
        "min_ratio": worst.min_ratio,
        "margin": cfg.policy.m,
        "dots": [_report_dict(r) for r in reports],
    }


SCAN_HEADER = [
    "gc_meV",
    "tau_ps",
    "feasible",
    "delta_big_meV",
    "delta_small_meV",
    "g_las_meV",
    "min_ratio",
    "gate_time_ps",
]


def cmd_scan(cfg: RunConfig, out: Path) -> dict:
    region = scan_plane(cfg.gc_axis, cfg.tau_axis, cfg.search)
    rows = [
        [c.g_c, c.tau, "1" if c.feasible else "0", c.delta_big, c.delta_small, c.g_las, c.min_ratio, c.gate_time]
        for c in region.iter_cells()
    ]
    write_atomic(out / f"{cfg.prefix}_scan.csv", csv_text(SCAN_HEADER, rows))
    min_times = [region.min_gate_time(i) for i in range(len(region.gc_axis))]
    result = {
        "margin": cfg.policy.m,
        "n_feasible": int(region.feasible_mask.sum()),
        "gc_axis_meV": region.gc_axis,
        "tau_axis_ps": region.tau_axis,
        "min_gate_time_ps": min_times,
        "cells": [dict(zip(SCAN_HEADER, [c.g_c, c.tau, c.feasible, c.delta_big, c.delta_small, c.g_las, c.min_ratio,
                                          c.gate_time])) for c in region.iter_cells()],
    }
    return result


def cmd_solve_area(cfg: RunConfig, out: Path) -> dict:
    cav = cfg.device.cavity
    solutions = []
    for dot in cfg.device.dots:
        g = solve_g_las_for_area(cfg.area_target, dot.delta_big, dot.delta_small, cav.g_c, dot.tau)
        g_w = solve_g_las_for_area(cfg.area_target, dot.delta_big, dot.delta_small, cav.g_c, dot.tau, cfg.window)
        solutions.append({"g_las_meV": g, "g_las_window_compensated_meV": g_w})
    result = {"target_rad": cfg.area_target, "window_w": cfg.window, "dots": solutions, "g_las_meV": solutions[0]["g_las_meV"]}
    if cfg.device.n_dots == 2:
        a, b = cfg.device.dots
        result["configured_area_rad"] = pulse_area(a, b, cav)
    return result


HANDLERS = {
    "simulate": cmd_simulate,
    "gate": cmd_gate,
    "check": cmd_check,
    "scan": cmd_scan,
    "solve-area": cmd_solve_area,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdcavity", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qdcavity {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--model", choices=[m.value for m in Model], help="override the config's model")
        p.add_argument("--initial", help="initial qubit levels, e.g. 10 (overrides initial_state)")
        p.add_argument("--margin", help="override policy.margin (number or inf)")
        p.add_argument("--amplitudes", action="store_true", help="include amplitude columns in trajectory CSV")
        p.add_argument("--emit-config", action="store_true", help="also write the resolved configuration")
    return parser


def _apply_overrides(text: str, args) -> str:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError:
        return text  # parse_config reports it
    if not isinstance(raw, dict):
        return text
    if args.model:
        raw["model"] = args.model
    if args.initial:
        raw["initial_state"] = args.initial
    if args.margin:
        raw.setdefault("policy", {})["margin"] = args.margin if args.margin.lower() in ("inf", "infinity") else float(args.margin)
    if args.amplitudes:
        raw.setdefault("output", {})["amplitudes"] = True
    return json.dumps(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        text = _apply_overrides(text, args)
        cfg = parse_config(text)
        out = Path(args.out if args.out else cfg.output_dir)
        result = HANDLERS[args.command](cfg, out)
        document = {"result": result, "provenance": provenance(cfg, args.command)}
        name = args.command.replace("-", "_")
        payload = to_json(document) + "\n"
        write_atomic(out / f"{cfg.prefix}_{name}.json", payload)
        if args.emit_config:
            write_atomic(out / f"{cfg.prefix}_config.json", emit_config(cfg))
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"qdcavity: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        # ConfigError, InvalidParameter, DomainError, DimensionError and JSON errors
        print(f"qdcavity: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(payload)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
