"""Result files: the energy CSV, a per-step diagnostics CSV, raw snapshots
with a JSON sidecar, legacy VTK export and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy

from . import __version__, kernels
from .errors import IoError
from .grid import FaceField, MacGrid
from .stepper import CSV_COLUMNS, EnergyReport, SimState

DIAGNOSTIC_COLUMNS = ("step", "time", "mean_mu", "abs_int_mu", "l2_psi0_prime", "l2_grad_phi",
                      "l2_grad_mu")
_INT_COLUMNS = {"step", "outer_iters", "newton_iters", "lin_iters"}


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


class CsvStream:
    """Row-at-a-time CSV writer that flushes after every row."""

    def __init__(self, path: str | Path, columns: tuple[str, ...]):
        self.columns = columns
        try:
            self._fh = open(path, "w", newline="")
        except OSError as exc:
            raise IoError(f"cannot open {path}: {exc}") from exc
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(columns)

    def write(self, values: Iterable) -> None:
        self._w.writerow([_fmt(x) for x in values])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> CsvStream:
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def energy_row(rep: EnergyReport) -> tuple:
    return rep.row()


def diagnostics_row(rep: EnergyReport) -> tuple:
    d = rep.diagnostics
    return (rep.step, rep.time, *(d[c] for c in DIAGNOSTIC_COLUMNS[2:]))


def write_energy_csv(path: str | Path, reports: Iterable[EnergyReport]) -> None:
    with CsvStream(path, CSV_COLUMNS) as out:
        for rep in reports:
            out.write(energy_row(rep))


def write_diagnostics_csv(path: str | Path, reports: Iterable[EnergyReport]) -> None:
    with CsvStream(path, DIAGNOSTIC_COLUMNS) as out:
        for rep in reports:
            out.write(diagnostics_row(rep))


def read_energy_csv(path: str | Path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return [{k: (int(v) if k in _INT_COLUMNS else float(v)) for k, v in r.items()} for r in rows]


# -- snapshots -----------------------------------------------------------------

def _snapshot_fields(state: SimState) -> dict[str, np.ndarray]:
    return {"phi": state.phi, "mu": state.mu, "g": state.g, "u": state.v.u, "w": state.v.w}


def write_snapshot(grid: MacGrid, state: SimState, path: str | Path) -> Path:
    """Write ``<path>.<field>.f64`` files and the ``<path>.json`` sidecar."""
    base = Path(path)
    meta = {
        "format": "aggflow-snapshot-1",
        "nx": grid.nx, "ny": grid.ny, "hx": grid.hx, "hy": grid.hy,
        "Lx": grid.Lx, "Ly": grid.Ly, "time": state.t, "step": state.step,
        "dtype": "<f8", "order": "C", "fields": [],
    }
    try:
        base.parent.mkdir(parents=True, exist_ok=True)
        for name, arr in _snapshot_fields(state).items():
            fname = f"{base.name}.{name}.f64"
            np.ascontiguousarray(arr, dtype="<f8").tofile(base.parent / fname)
            meta["fields"].append({"name": name, "file": fname, "shape": list(arr.shape)})
        sidecar = base.parent / f"{base.name}.json"
        sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write snapshot {base}: {exc}") from exc
    return sidecar


def read_snapshot(sidecar: str | Path) -> tuple[MacGrid, SimState]:
    sidecar = Path(sidecar)
    try:
        meta = json.loads(sidecar.read_text())
        arrays = {}
        for f in meta["fields"]:
            data = np.fromfile(sidecar.parent / f["file"], dtype=meta["dtype"])
            arrays[f["name"]] = data.reshape(f["shape"]).astype(float)
    except (OSError, KeyError, ValueError) as exc:
        raise IoError(f"cannot read snapshot {sidecar}: {exc}") from exc
    grid = MacGrid(meta["nx"], meta["ny"], meta["Lx"], meta["Ly"])
    state = SimState(t=meta["time"], step=meta["step"], v=FaceField(arrays["u"], arrays["w"]),
                     phi=arrays["phi"], mu=arrays["mu"], g=arrays["g"])
    return grid, state


def write_vtk(grid: MacGrid, state: SimState, path: str | Path) -> None:
    """Legacy ASCII VTK structured points with cell data (phi, mu, g, velocity)."""
    # VTK cell order has x fastest, so transpose the (nx, ny) arrays
    def flat(a):
        return "\n".join(format(x, ".10g") for x in np.asarray(a).T.ravel())

    uc = 0.5 * (state.v.u[1:, :] + state.v.u[:-1, :])
    wc = 0.5 * (state.v.w[:, 1:] + state.v.w[:, :-1])
    vec = "\n".join(f"{a:.10g} {b:.10g} 0" for a, b in zip(uc.T.ravel(), wc.T.ravel()))
    lines = [
        "# vtk DataFile Version 3.0",
        f"aggflow step {state.step} t={state.t:.17g}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid.nx + 1} {grid.ny + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {grid.hx:.17g} {grid.hy:.17g} 1",
        f"CELL_DATA {grid.nx * grid.ny}",
    ]
    for name, arr in (("phi", state.phi), ("mu", state.mu), ("g", state.g)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default", flat(arr)]
    lines += ["VECTORS velocity double", vec]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_manifest(path: str | Path, config_echo: str, seed: int | None, extra: dict) -> None:
    manifest = {
        "package": "aggflow",
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
        "seed": seed,
        "config_sha256": hashlib.sha256(config_echo.encode()).hexdigest(),
        **extra,
    }
    try:
        Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
