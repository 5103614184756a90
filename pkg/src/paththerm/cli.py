"""Experiment harness: `paththerm <experiment> --config file [options]`.

Five experiments are exposed: thermo (equilibrium window solve), htheorem
(relaxation in a box), vcorr (velocity-correlation sweep), bridge (entry-exit
construction) and kernel (fundamental solution dump).  A run validates its
JSON config strictly (unknown keys are rejected with their dotted path),
computes, and writes a bundle: manifest.json, report.json, CSV series and PNG
figures.  stdout carries the summary, stderr the diagnostics.

Exit codes: 0 ok, 2 config/schema violation, 3 numerical failure, 4 infeasible
energy or entry-exit pair, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from . import __version__, analytic, figures
from .bridge import (build_bridge, continuity_residual, normalize_entry_exit,
                     sample_bridge_paths, schrodinger_residual)
from .diffusion import Field, gaussian_field, kernel, uniform_field
from .errors import (AmbiguousTemperatureError, ConfigError,
                     InfeasibleEnergyError, InfeasiblePairError,
                     InvalidArgumentError, MonotonicityError,
                     NumericalFailureError, PrecisionFailureError)
from .irreversibility import relaxation_experiment, velocity_correlation
from .pathintegral import dlnz_dtau
from .serialize import (bridge_to_files, dump_json, emit_series,
                        hseries_to_csv, kernel_to_csv, kernel_to_json_dict,
                        append_vcorr_row)
from .spacetime import (Constant, Free, Grid1D, Harmonic, Potential,
                        Tabulated, UnitSystem, substreams)
from .thermo import SystemSpec, solve_equilibrium_tau

__all__ = ["main", "run_experiment", "load_config", "ReportBundle", "EXPERIMENTS"]

EXPERIMENTS = ("thermo", "htheorem", "vcorr", "bridge", "kernel")

_REQUIRED = object()


@dataclass(frozen=True)
class _Opt:
    kind: str
    default: object = _REQUIRED
    choices: tuple | None = None
    schema: dict | None = None


def _join(path: str, key: str) -> str:
    return key if not path else f"{path}.{key}"


def _check_scalar(value, opt: _Opt, path: str):
    if opt.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {type(value).__name__}")
        return float(value)
    if opt.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
        return int(value)
    if opt.kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {type(value).__name__}")
        return value
    if opt.kind == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {type(value).__name__}")
        if opt.choices and value not in opt.choices:
            raise ConfigError(path, f"must be one of {list(opt.choices)}, got {value!r}")
        return value
    if opt.kind == "list_float":
        if not isinstance(value, list) or not value:
            raise ConfigError(path, "expected a non-empty list of numbers")
        out = []
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}[{i}]", "expected a number")
            out.append(float(v))
        return out
    raise AssertionError(f"unhandled option kind {opt.kind}")


def _validate(section, schema: dict, path: str = "") -> dict:
    if not isinstance(section, dict):
        raise ConfigError(path or "<root>", "expected an object")
    for key in section:
        if key not in schema:
            raise ConfigError(_join(path, key), "unknown key")
    out = {}
    for key, opt in schema.items():
        where = _join(path, key)
        if key not in section:
            if opt.default is _REQUIRED:
                raise ConfigError(where, "required key is missing")
            out[key] = opt.default
            continue
        value = section[key]
        if opt.kind == "dict":
            out[key] = _validate(value, opt.schema, where)
        else:
            out[key] = _check_scalar(value, opt, where)
    return out


_UNITS_SCHEMA = {
    "hbar": _Opt("float", 1.0),
    "mass": _Opt("float", 1.0),
    "kB": _Opt("float", 1.0),
}
_GRID_SCHEMA = {
    "x_min": _Opt("float"),
    "x_max": _Opt("float"),
    "n_cells": _Opt("int"),
    "boundary": _Opt("str", "reflecting", choices=("reflecting", "periodic")),
}
_POTENTIAL_SCHEMA = {
    "kind": _Opt("str", choices=("free", "constant", "harmonic", "tabulated")),
    "c": _Opt("float", 0.0),
    "omega": _Opt("float", 1.0),
    "center": _Opt("float", 0.0),
    "mass": _Opt("float", None),
    "x": _Opt("list_float", None),
    "values": _Opt("list_float", None),
}
_FIELD_SCHEMA = {
    "kind": _Opt("str", choices=("gaussian", "uniform", "half_box", "cosine", "tabulated")),
    "center": _Opt("float", 0.0),
    "sigma2": _Opt("float", 0.1),
    "values": _Opt("list_float", None),
}

_SCHEMAS = {
    "thermo": {
        "units": _Opt("dict", {}, schema=_UNITS_SCHEMA),
        "grid": _Opt("dict", schema=_GRID_SCHEMA),
        "potential": _Opt("dict", schema=_POTENTIAL_SCHEMA),
        "U": _Opt("float"),
        "mode": _Opt("str", "auto", choices=("auto", "analytic", "mc")),
        "n_paths": _Opt("int", 10_000),
        "n_steps": _Opt("int", 256),
        "quad_points": _Opt("int", 64),
        "tol": _Opt("float", 1e-3),
        "tau_scan_points": _Opt("int", 21),
        "seed": _Opt("int"),
        "out_dir": _Opt("str", None),
    },
    "htheorem": {
        "units": _Opt("dict", {}, schema=_UNITS_SCHEMA),
        "grid": _Opt("dict", schema=_GRID_SCHEMA),
        "initial": _Opt("dict", schema=_FIELD_SCHEMA),
        "t_end": _Opt("float"),
        "n_snapshots": _Opt("int", 201),
        "tau": _Opt("float"),
        "dt_solver": _Opt("float", None),
        "seed": _Opt("int"),
        "out_dir": _Opt("str", None),
    },
    "vcorr": {
        "units": _Opt("dict", {}, schema=_UNITS_SCHEMA),
        "betas": _Opt("list_float"),
        "delta_t_fractions": _Opt("list_float", [0.125, 0.25]),
        "n_paths": _Opt("int", 100_000),
        "seed": _Opt("int"),
        "out_dir": _Opt("str", None),
    },
    "bridge": {
        "units": _Opt("dict", {}, schema=_UNITS_SCHEMA),
        "grid": _Opt("dict", schema=_GRID_SCHEMA),
        "potential": _Opt("dict", {"kind": "free"}, schema=_POTENTIAL_SCHEMA),
        "t0": _Opt("float", 0.0),
        "t1": _Opt("float"),
        "entry": _Opt("dict", schema=_FIELD_SCHEMA),
        "exit": _Opt("dict", schema=_FIELD_SCHEMA),
        "n_snapshots": _Opt("int", 129),
        "dt_solver": _Opt("float"),
        "n_sample_paths": _Opt("int", 0),
        "residuals": _Opt("bool", True),
        "seed": _Opt("int"),
        "out_dir": _Opt("str", None),
    },
    "kernel": {
        "units": _Opt("dict", {}, schema=_UNITS_SCHEMA),
        "grid": _Opt("dict", schema=_GRID_SCHEMA),
        "potential": _Opt("dict", {"kind": "free"}, schema=_POTENTIAL_SCHEMA),
        "t0": _Opt("float", 0.0),
        "t1": _Opt("float"),
        "dt_solver": _Opt("float"),
        "seed": _Opt("int", 0),
        "out_dir": _Opt("str", None),
    },
}


def load_config(path, experiment: str) -> dict:
    """Read and schema-validate one experiment config; unknown keys reject."""
    if experiment not in _SCHEMAS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}")
    try:
        with FsPath(path).open() as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}") from e
    cfg = _validate(raw, _SCHEMAS[experiment])
    cfg["experiment"] = experiment
    if isinstance(cfg.get("units"), dict):
        cfg["units"] = _validate(cfg["units"], _UNITS_SCHEMA, "units")
    return cfg


def _build_units(cfg) -> UnitSystem:
    u = cfg.get("units") or {}
    return UnitSystem(hbar=u.get("hbar", 1.0), mass=u.get("mass", 1.0), kB=u.get("kB", 1.0))


def _build_grid(cfg_grid) -> Grid1D:
    try:
        return Grid1D(x_min=cfg_grid["x_min"], x_max=cfg_grid["x_max"],
                      n_cells=cfg_grid["n_cells"], boundary=cfg_grid["boundary"])
    except InvalidArgumentError as e:
        raise ConfigError("grid", str(e)) from e


def _build_potential(cfg_pot, units: UnitSystem) -> Potential:
    kind = cfg_pot.get("kind", "free")
    if kind == "free":
        return Free()
    if kind == "constant":
        return Constant(c=cfg_pot.get("c", 0.0))
    if kind == "harmonic":
        mass = cfg_pot.get("mass")
        try:
            return Harmonic(omega=cfg_pot.get("omega", 1.0),
                            center=cfg_pot.get("center", 0.0),
                            mass=units.mass if mass is None else mass)
        except InvalidArgumentError as e:
            raise ConfigError("potential.omega", str(e)) from e
    if cfg_pot.get("x") is None or cfg_pot.get("values") is None:
        raise ConfigError("potential.values", "tabulated potential needs x and values")
    try:
        return Tabulated(cfg_pot["x"], cfg_pot["values"])
    except InvalidArgumentError as e:
        raise ConfigError("potential", str(e)) from e


def _build_field(spec: dict, grid: Grid1D, t: float, where: str) -> Field:
    kind = spec["kind"]
    if kind == "gaussian":
        if not spec["sigma2"] > 0:
            raise ConfigError(f"{where}.sigma2", "must be positive")
        return gaussian_field(grid, spec["center"], spec["sigma2"], t)
    if kind == "uniform":
        return uniform_field(grid, t)
    if kind == "half_box":
        mid = 0.5 * (grid.x_min + grid.x_max)
        values = np.where(grid.centers < mid, 2.0 / grid.length, 0.0)
        return Field(grid, t, values)
    if kind == "cosine":
        x = grid.centers
        values = (1.0 + np.cos(math.pi * (x - grid.x_min) / grid.length)) / grid.length
        return Field(grid, t, values)
    values = spec["values"]
    if values is None or len(values) != grid.n_cells:
        raise ConfigError(f"{where}.values",
                          f"tabulated field needs exactly {grid.n_cells} values")
    return Field(grid, t, np.asarray(values))


@dataclass(frozen=True)
class ReportBundle:
    out_dir: FsPath
    manifest: dict
    report: dict
    series: dict
    figures: list


def _run_thermo(cfg, units, out_dir):
    grid = _build_grid(cfg["grid"])
    u = _build_potential(cfg["potential"], units)
    spec = SystemSpec(units=units, grid=grid, u=u, U=cfg["U"])
    report = solve_equilibrium_tau(
        spec, cfg["tol"], mode=cfg["mode"], n_paths=cfg["n_paths"],
        n_steps=cfg["n_steps"], quad_points=cfg["quad_points"], rng=cfg["seed"])
    taus = report.tau_star * np.geomspace(0.25, 4.0, cfg["tau_scan_points"])
    if report.provenance["mode"] == "analytic":
        energies = np.array([analytic.internal_energy(u, t, units) for t in taus])
    else:
        energies = np.array([
            -units.hbar * dlnz_dtau(u, grid, float(t), cfg["n_paths"], cfg["n_steps"],
                                    rng=cfg["seed"], units=units,
                                    quad_points=cfg["quad_points"]).mean
            for t in taus])
    series = {"tau_scan": emit_series(
        [("tau", taus), ("path_energy", energies)], out_dir / "tau_scan.csv")}
    report_dict = report.to_json_dict()
    figs = figures.render_thermo(taus, energies, report_dict, out_dir)
    summary = (f"tau* = {report.tau_star:.6g}  T* = {report.T_star:.6g}  "
               f"S_path = {report.S_path:.6g}  F = {report.F:.6g}")
    return report_dict, series, figs, summary


def _run_htheorem(cfg, units, out_dir):
    grid = _build_grid(cfg["grid"])
    phi0 = _build_field(cfg["initial"], grid, 0.0, "initial")
    series_data = relaxation_experiment(
        phi0, units, cfg["t_end"], cfg["n_snapshots"], tau=cfg["tau"],
        dt_solver=cfg["dt_solver"])
    series = {"hseries": hseries_to_csv(series_data, out_dir / "hseries.csv")}
    report = {
        "H_initial": float(series_data.H[0]),
        "H_final": float(series_data.H[-1]),
        "max_H_decrease": float(max(0.0, -np.min(np.diff(series_data.H)))),
        "S_total_final": float(series_data.S_total[-1]),
        "S_stationary": series_data.S_final,
        "n_snapshots": cfg["n_snapshots"],
    }
    figs = figures.render_htheorem(series_data, out_dir)
    summary = (f"H: {report['H_initial']:.6g} -> {report['H_final']:.6g}  "
               f"(stationary entropy {series_data.S_final:.6g})")
    return report, series, figs, summary


def _run_vcorr(cfg, units, out_dir):
    rows = []
    (out_dir / "vcorr_rows.jsonl").unlink(missing_ok=True)
    combos = [(b, f) for b in cfg["betas"] for f in cfg["delta_t_fractions"]]
    streams = substreams(cfg["seed"], len(combos))
    for (beta, frac), stream in zip(combos, streams):
        tau = beta * units.hbar
        est = velocity_correlation(units, beta, frac * tau, cfg["n_paths"], stream)
        rows.append({
            "beta": beta, "delta_t": est.delta_t, "value": est.value,
            "std_error": est.std_error, "n_paths": est.n_paths,
            "expected": -1.0 / (units.mass * beta),
        })
        append_vcorr_row(est, out_dir / "vcorr_rows.jsonl")
    series = {"vcorr": emit_series(
        [(k, [r[k] for r in rows]) for k in
         ("beta", "delta_t", "value", "std_error", "expected")],
        out_dir / "vcorr.csv")}
    worst = max(abs(r["value"] - r["expected"]) / max(r["std_error"], 1e-300)
                for r in rows)
    report = {"rows": rows, "worst_deviation_sigmas": worst}
    figs = figures.render_vcorr(rows, out_dir)
    summary = f"{len(rows)} (beta, dt) points; worst |dev|/SE = {worst:.2f}"
    return report, series, figs, summary


def _run_bridge(cfg, units, out_dir):
    grid = _build_grid(cfg["grid"])
    u = _build_potential(cfg["potential"], units)
    if not cfg["t1"] > cfg["t0"]:
        raise ConfigError("t1", "must exceed t0")
    phi0 = _build_field(cfg["entry"], grid, cfg["t0"], "entry")
    phihat1 = _build_field(cfg["exit"], grid, cfg["t1"], "exit")
    ee = normalize_entry_exit(phi0, phihat1, u, cfg["dt_solver"], units)
    bs = build_bridge(ee, cfg["n_snapshots"], units)

    residuals = None
    V = None
    if cfg["residuals"]:
        t_mid, cont = continuity_residual(bs)
        V, _, schro = schrodinger_residual(bs)
        residuals = {"times": t_mid, "continuity": cont, "schrodinger": schro}
    files = bridge_to_files(bs, out_dir / "snapshots", V=V, residuals=residuals)
    series = {"snapshots": files[:-1], "manifest": files[-1]}

    report = {
        "t0": cfg["t0"], "t1": cfg["t1"], "n_snapshots": bs.n_snapshots,
        "mu_mass_max_dev": float(np.max(np.abs(bs.mu.sum(axis=1) * grid.h - 1.0))),
    }
    if residuals is not None:
        report["continuity_residual_max"] = float(np.max(residuals["continuity"]))
        report["schrodinger_residual_max"] = float(np.max(residuals["schrodinger"]))
    if cfg["n_sample_paths"] > 0:
        ensemble = sample_bridge_paths(bs, cfg["n_sample_paths"], cfg["seed"])
        mid = bs.n_snapshots // 2
        counts, edges = np.histogram(ensemble.positions[:, mid], bins=32,
                                     range=(grid.x_min, grid.x_max))
        series["mid_marginal"] = emit_series(
            [("bin_left", edges[:-1]), ("count", counts)],
            out_dir / "mid_marginal.csv")
        report["n_sample_paths"] = cfg["n_sample_paths"]
    figs = figures.render_bridge(bs, residuals, out_dir)
    summary = (f"bridge over [{cfg['t0']}, {cfg['t1']}], "
               f"mu mass max dev = {report['mu_mass_max_dev']:.2e}")
    if residuals is not None:
        summary += (f", residuals (cont/schro) = "
                    f"{report['continuity_residual_max']:.2e}/"
                    f"{report['schrodinger_residual_max']:.2e}")
    return report, series, figs, summary


def _run_kernel(cfg, units, out_dir):
    grid = _build_grid(cfg["grid"])
    u = _build_potential(cfg["potential"], units)
    if not cfg["t1"] >= cfg["t0"]:
        raise ConfigError("t1", "must not precede t0")
    k = kernel(grid, u, cfg["t0"], cfg["t1"], cfg["dt_solver"], units)
    series = {"kernel": kernel_to_csv(k, out_dir / "kernel.csv")}
    dump_json(kernel_to_json_dict(k), out_dir / "kernel.json")
    col_mass = k.entries.sum(axis=1) * grid.h
    report = {
        "t0": cfg["t0"], "t1": cfg["t1"],
        "source_mass_max_dev": float(np.max(np.abs(col_mass - 1.0))),
        "symmetry_max_dev": float(np.max(np.abs(k.entries - k.entries.T))),
    }
    figs = figures.render_kernel(k, out_dir)
    summary = (f"kernel on {grid.n_cells} cells, source-mass max dev = "
               f"{report['source_mass_max_dev']:.2e}")
    return report, series, figs, summary


_RUNNERS = {
    "thermo": _run_thermo,
    "htheorem": _run_htheorem,
    "vcorr": _run_vcorr,
    "bridge": _run_bridge,
    "kernel": _run_kernel,
}


def run_experiment(config: dict, out_dir=None, deterministic: bool = False) -> ReportBundle:
    """Dispatch a validated config, write the bundle, return it."""
    experiment = config["experiment"]
    out_dir = FsPath(out_dir or config.get("out_dir") or f"paththerm_{experiment}_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    units = _build_units(config)
    start = time.perf_counter()
    report, series, figs, summary = _RUNNERS[experiment](config, units, out_dir)
    wall = time.perf_counter() - start

    report_path = dump_json(report, out_dir / "report.json")
    manifest = {
        "experiment": experiment,
        "config": {k: v for k, v in config.items() if k != "experiment"},
        "seed": config.get("seed"),
        "deterministic": deterministic,
        "versions": {
            "paththerm": __version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "wall_time_s": wall,
        "outputs": {
            "report": report_path.name,
            "series": {k: ([p.name for p in v] if isinstance(v, list) else v.name)
                       for k, v in series.items()},
            "figures": [p.name for p in figs],
        },
    }
    dump_json(manifest, out_dir / "manifest.json")
    print(f"[{experiment}] {summary}")
    print(f"[{experiment}] bundle written to {out_dir}")
    return ReportBundle(out_dir=out_dir, manifest=manifest, report=report,
                        series=series, figures=figs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paththerm",
        description="Path-based statistical thermodynamics experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--deterministic", action="store_true",
                       help="fixed-order reductions; identical config+seed "
                            "reproduce byte-identical report payloads")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.experiment)
        if args.seed is not None:
            config["seed"] = args.seed
        run_experiment(config, out_dir=args.out, deterministic=args.deterministic)
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (NumericalFailureError, PrecisionFailureError, MonotonicityError,
            AmbiguousTemperatureError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except (InfeasibleEnergyError, InfeasiblePairError) as e:
        print(f"infeasible request: {e}", file=sys.stderr)
        return 4
    except OSError as e:
        print(f"I/O failure: {e}", file=sys.stderr)
        return 5
    except InvalidArgumentError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
