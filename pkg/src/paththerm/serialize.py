"""Delimited and JSON emission for fields, kernels, series and reports.

CSV floats are written with shortest round-trip precision (`repr`), so parsing
an emitted file reproduces the values exactly; JSON payloads are written with
sorted keys so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path as FsPath

import numpy as np

from .bridge import BridgeSystem
from .diffusion import Field, Kernel
from .errors import InvalidArgumentError
from .irreversibility import HSeries, VelocityCorrEstimate

__all__ = [
    "emit_series",
    "parse_series",
    "field_to_csv",
    "field_to_json_dict",
    "kernel_to_csv",
    "kernel_to_json_dict",
    "hseries_to_csv",
    "append_vcorr_row",
    "bridge_to_files",
    "dump_json",
]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def emit_series(columns, path) -> FsPath:
    """Write named columns as CSV: header row, fixed column order, full precision.

    `columns` is a list of (name, sequence) pairs or an ordered mapping; all
    columns must share one length (possibly zero, yielding a header-only file).
    """
    if isinstance(columns, dict):
        columns = list(columns.items())
    if not columns:
        raise InvalidArgumentError("emit_series needs at least one column")
    names = [name for name, _ in columns]
    arrays = [np.asarray(vals) for _, vals in columns]
    lengths = {a.shape[0] if a.ndim else 1 for a in arrays}
    if len(lengths) != 1:
        raise InvalidArgumentError(f"column lengths differ: {sorted(lengths)}")
    path = FsPath(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*arrays):
            writer.writerow([_fmt(x) for x in row])
    return path


def parse_series(path) -> dict[str, np.ndarray]:
    """Read back a CSV written by emit_series; float columns parse exactly."""
    with FsPath(path).open(newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [row for row in reader]
    out = {}
    for j, name in enumerate(names):
        col = [row[j] for row in rows]
        try:
            out[name] = np.array([float(x) for x in col])
        except ValueError:
            out[name] = np.array(col)
    return out


def _to_jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def dump_json(obj, path) -> FsPath:
    path = FsPath(path)
    with path.open("w") as fh:
        json.dump(_to_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def field_to_csv(field: Field, path) -> FsPath:
    return emit_series([("x", field.grid.centers), ("value", field.values)], path)


def field_to_json_dict(field: Field) -> dict:
    g = field.grid
    return {
        "t": field.t,
        "grid": {"x_min": g.x_min, "x_max": g.x_max, "n_cells": g.n_cells,
                 "boundary": g.boundary},
        "values": field.values.tolist(),
    }


def kernel_to_csv(k: Kernel, path) -> FsPath:
    centers = k.grid.centers
    y, x = np.meshgrid(centers, centers, indexing="ij")
    return emit_series([("x_source", y.ravel()), ("x_target", x.ravel()),
                        ("q", k.entries.ravel())], path)


def kernel_to_json_dict(k: Kernel) -> dict:
    g = k.grid
    return {
        "t0": k.t0,
        "t1": k.t1,
        "grid": {"x_min": g.x_min, "x_max": g.x_max, "n_cells": g.n_cells,
                 "boundary": g.boundary},
        "entries": k.entries.tolist(),
    }


def hseries_to_csv(series: HSeries, path) -> FsPath:
    return emit_series([("t", series.times), ("H", series.H),
                        ("H_rate", series.H_rate), ("S_total", series.S_total)], path)


def append_vcorr_row(est: VelocityCorrEstimate, path) -> FsPath:
    """Append one JSON row (JSON-lines) so sweeps over (beta, delta_t) stack up."""
    path = FsPath(path)
    row = {"beta": est.beta, "delta_t": est.delta_t, "value": est.value,
           "std_error": est.std_error, "n_paths": est.n_paths}
    with path.open("a") as fh:
        json.dump(_to_jsonable(row), fh, sort_keys=True)
        fh.write("\n")
    return path


def bridge_to_files(bs: BridgeSystem, out_dir, V: np.ndarray | None = None,
                    residuals: dict | None = None) -> list[FsPath]:
    """Per-snapshot CSV stack plus a JSON manifest of times, norms and residuals."""
    out_dir = FsPath(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    x = bs.grid.centers
    for i, t in enumerate(bs.times):
        cols = [
            ("x", x),
            ("phi", bs.phi[i]),
            ("phihat", bs.phihat[i]),
            ("mu", bs.mu[i]),
            ("a", bs.a[i]),
            ("ahat", bs.ahat[i]),
            ("R", bs.R[i]),
            ("S", bs.S[i]),
            ("re_psi", np.real(bs.psi[i])),
            ("im_psi", np.imag(bs.psi[i])),
        ]
        if V is not None:
            cols.append(("V", V[i]))
        written.append(emit_series(cols, out_dir / f"snapshot_{i:04d}.csv"))
    manifest = {
        "times": bs.times.tolist(),
        "grid": {"x_min": bs.grid.x_min, "x_max": bs.grid.x_max,
                 "n_cells": bs.grid.n_cells, "boundary": bs.grid.boundary},
        "dt_solver": bs.dt_solver,
        "mu_masses": (bs.mu.sum(axis=1) * bs.grid.h).tolist(),
    }
    if residuals:
        manifest["residuals"] = _to_jsonable(residuals)
    written.append(dump_json(manifest, out_dir / "bridge_manifest.json"))
    return written
