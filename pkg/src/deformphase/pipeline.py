"""Scenario runs: integrate, analyse, and write trajectory/report files."""

from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, build_model
from .deformation import DeformationModel, sample_model, write_tabulated_csv
from .errors import NotDiagonalOrdered
from .momentum import MomentumTrajectory, energy_along, omega_along
from .phase import analyze_segments, regime_classify
from .reconstruct import RotationTrajectory, integrate_reconstruction

TRAJECTORY_COLUMNS = (["t", "Pi1", "Pi2", "Pi3"]
                      + [f"R{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
                      + ["omega1", "omega2", "omega3", "energy", "theta_dyn", "spatial_residual"])


@dataclass(frozen=True)
class Simulation:
    model: DeformationModel
    mtraj: MomentumTrajectory
    rtraj: RotationTrajectory
    seconds: float


def simulate(cfg: ScenarioConfig) -> Simulation:
    model = build_model(cfg)
    start = time.perf_counter()
    R0 = None if cfg.R0 is None else np.asarray(cfg.R0)
    mtraj, rtraj = integrate_reconstruction(model, cfg.pi0, R0, cfg.t0, cfg.t1, cfg.h,
                                            cfg.tolerances.tol_spatial, cfg.allow_partial)
    return Simulation(model, mtraj, rtraj, time.perf_counter() - start)


def trajectory_table(sim: Simulation) -> np.ndarray:
    states = sim.model.eval_many(sim.mtraj.times)
    omega = omega_along(sim.mtraj, sim.model, states)
    energy = energy_along(sim.mtraj, sim.model, states)
    n = len(sim.mtraj)
    return np.column_stack([sim.mtraj.times, sim.mtraj.points, sim.rtraj.rotations.reshape(n, 9),
                            omega, energy, sim.rtraj.theta_dyn, sim.rtraj.spatial_residual])


def _atomic_write(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory_csv(path: Path, table: np.ndarray) -> None:
    def write(fh):
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")
    _atomic_write(Path(path), write)


def write_json(path: Path, obj) -> None:
    _atomic_write(Path(path), lambda fh: (json.dump(obj, fh, indent=2, sort_keys=True),
                                         fh.write("\n")))


def _regime_summary(sim: Simulation) -> dict | None:
    try:
        rep = regime_classify(sim.model, sim.mtraj)
    except NotDiagonalOrdered:
        return None
    return {"regime": rep.regime.value, "E_min": rep.E_min, "E_max": rep.E_max,
            "E_homoclinic_min": rep.E_homoclinic_min, "E_homoclinic_max": rep.E_homoclinic_max,
            "E_start": rep.E_start, "E_end": rep.E_end, "transition": rep.transition}


def build_report(cfg: ScenarioConfig, sim: Simulation, segments: list | None) -> dict:
    """Run report; everything in it is a deterministic function of the config."""
    theta = float(sim.rtraj.theta_dyn[-1])
    return {
        "name": cfg.name,
        "config": cfg.to_dict(),
        "nodes": len(sim.mtraj),
        "partial_step": sim.mtraj.partial_step,
        "conservation": {
            "spatial_residual_max": sim.rtraj.spatial_residual_max,
            "norm_drift_max": sim.mtraj.norm_drift_max,
            "orthogonality_max": sim.rtraj.orthogonality_max,
        },
        "spatial_momentum": sim.rtraj.spatial_momentum.tolist(),
        "theta_dyn_final": theta,
        "regime": _regime_summary(sim),
        "segments": segments,
    }


def run(cfg: ScenarioConfig, out_dir: str | Path, with_phase: bool) -> dict:
    """Simulate (and optionally analyse phases), writing the configured outputs."""
    out = Path(out_dir)
    sim = simulate(cfg)
    start = time.perf_counter()
    segments = None
    if with_phase:
        segments = analyze_segments(sim.model, sim.mtraj, sim.rtraj, cfg.tolerances.closure_tol,
                                    cfg.tolerances.axis_tol, cfg.max_segments)
    report = build_report(cfg, sim, segments)
    if cfg.outputs.trajectory:
        write_trajectory_csv(out / "trajectory.csv", trajectory_table(sim))
    if cfg.outputs.model_csv:
        records = sample_model(sim.model, sim.mtraj.times)
        out.mkdir(parents=True, exist_ok=True)
        tmp = out / ".model.csv.tmp"
        write_tabulated_csv(tmp, records)
        os.replace(tmp, out / "model.csv")
    if cfg.outputs.report:
        write_json(out / "report.json", report)
    # wall-clock numbers vary run to run, so they live outside the report
    write_json(out / "timing.json", {"integration_seconds": sim.seconds,
                                     "analysis_seconds": time.perf_counter() - start})
    return report
