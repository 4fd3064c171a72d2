"""Time-series CSV, binary checkpoints and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .config import SimConfig
from .diagnostics import DiagnosticsRecord
from .grid import get_grid
from .state import FluidState, ParticleEnsemble

CSV_COLUMNS = [
    "time", "mass", "momentum_x", "momentum_y", "momentum_z", "E_particles", "E_fluid",
    "D_viscous", "D_drag", "D_align", "R", "R_bound", "M2", "M3", "M6", "var_v", "picard_iters",
    "u_max", "b_max",
]

CHECKPOINT_FORMAT = "csstokes-checkpoint/1"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def record_row(r: DiagnosticsRecord) -> list:
    return [r.time, r.mass, *r.momentum, r.energy_particles, r.energy_fluid, r.dissipation_viscous,
            r.dissipation_drag, r.dissipation_alignment, r.support_radius, r.support_bound_rhs,
            *r.moments, r.velocity_variance, r.picard_iters, r.u_max, r.b_max]


def write_timeseries(records, path) -> Path:
    """One CSV row per record, 17 significant digits, fixed column order."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in records:
                w.writerow([_fmt(x) for x in record_row(r)])
    except OSError as exc:
        raise OSError(f"cannot write time series to {path}: {exc}") from exc
    return path


def read_timeseries(path) -> list[DiagnosticsRecord]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header")
    out = []
    for row in rows[1:]:
        d = dict(zip(CSV_COLUMNS, row))
        f = {k: float(v) for k, v in d.items()}
        out.append(DiagnosticsRecord(
            time=f["time"], mass=f["mass"],
            momentum=(f["momentum_x"], f["momentum_y"], f["momentum_z"]),
            energy_particles=f["E_particles"], energy_fluid=f["E_fluid"],
            dissipation_viscous=f["D_viscous"], dissipation_drag=f["D_drag"],
            dissipation_alignment=f["D_align"], support_radius=f["R"], support_bound_rhs=f["R_bound"],
            moments=(f["M2"], f["M3"], f["M6"]), velocity_variance=f["var_v"],
            picard_iters=int(d["picard_iters"]), u_max=f["u_max"], b_max=f["b_max"],
        ))
    return out


def _f8(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype="<f8")


def write_checkpoint(path, config: SimConfig, ensemble: ParticleEnsemble, fluid: FluidState,
                     step: int, time: float, bound_integral: float) -> Path:
    """npz container; every array little-endian float64, metadata as JSON bytes."""
    path = Path(path)
    meta = {
        "format": CHECKPOINT_FORMAT,
        "n_particles": ensemble.n,
        "grid_n": fluid.grid.n,
        "box_length": ensemble.box_length,
        "step": int(step),
        "time": float(time),
        "r0": float(ensemble.r0),
        "bound_integral": float(bound_integral),
        "config": config.to_dict(),
    }
    with path.open("wb") as fh:
        np.savez(
            fh,
            positions=_f8(ensemble.positions),
            velocities=_f8(ensemble.velocities),
            weights=_f8(ensemble.weights),
            velocity_grid=_f8(fluid.velocity_grid),
            velocity_spectral_re=_f8(fluid.velocity_spectral.real),
            velocity_spectral_im=_f8(fluid.velocity_spectral.imag),
            meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
        )
    return path


def read_checkpoint(path) -> dict:
    """Returns dict with keys config, ensemble, fluid, step, time, bound_integral, meta."""
    with np.load(Path(path)) as z:
        meta = json.loads(bytes(z["meta"]).decode())
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
        arrays = {k: z[k] for k in z.files if k != "meta"}
    config = SimConfig.from_dict(meta["config"])
    grid = get_grid(meta["box_length"], meta["grid_n"])
    ensemble = ParticleEnsemble(arrays["positions"], arrays["velocities"], arrays["weights"],
                                meta["box_length"], r0=meta["r0"])
    spectral = arrays["velocity_spectral_re"] + 1j * arrays["velocity_spectral_im"]
    fluid = FluidState(grid, spectral, np.array(arrays["velocity_grid"]))
    return dict(config=config, ensemble=ensemble, fluid=fluid, step=meta["step"], time=meta["time"],
                bound_integral=meta["bound_integral"], meta=meta)


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, config: SimConfig, version: str, start: str, end: str, artifacts) -> Path:
    """JSON manifest listing each artifact with its SHA-256; write it last."""
    path = Path(path)
    manifest = {
        "config": config.to_dict(),
        "version": version,
        "seed": config.rng_seed,
        "start_time": start,
        "end_time": end,
        "artifacts": [{"file": Path(a).name, "sha256": sha256(a)} for a in artifacts],
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
