"""Report figures rendered to files next to the delimited output."""

from __future__ import annotations

from pathlib import Path as FsPath

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "render_thermo",
    "render_htheorem",
    "render_vcorr",
    "render_bridge",
    "render_kernel",
]

_DPI = 150


def _save(fig, path) -> FsPath:
    path = FsPath(path)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_thermo(tau_scan, energy_scan, report: dict, out_dir) -> list[FsPath]:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(tau_scan, energy_scan, "o-", ms=3, label=r"$-\hbar\,d\ln Z/d\tau$")
    ax.axhline(report["U"], color="gray", lw=0.8, label="U")
    ax.axvline(report["tau_star"], color="crimson", lw=0.8, ls="--",
               label=rf"$\tau^*$ = {report['tau_star']:.4g}")
    ax.set_xlabel(r"window $\tau$")
    ax.set_ylabel("path energy")
    ax.legend(frameon=False)
    return [_save(fig, FsPath(out_dir) / "equilibrium_window.png")]


def render_htheorem(series, out_dir) -> list[FsPath]:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(series.times, series.H, lw=1.2)
    ax1.set_ylabel("H(t)")
    ax2.plot(series.times, series.H_rate, lw=1.2, color="darkorange")
    ax2.set_yscale("log")
    ax2.set_ylabel("dH/dt")
    ax2.set_xlabel("t")
    paths = [_save(fig, FsPath(out_dir) / "relaxation.png")]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(series.times, series.S_total, lw=1.2, color="seagreen")
    ax.axhline(series.S_final, color="gray", lw=0.8, ls="--", label="stationary entropy")
    ax.set_xlabel("t")
    ax.set_ylabel("S_total(t)")
    ax.legend(frameon=False)
    paths.append(_save(fig, FsPath(out_dir) / "entropy_growth.png"))
    return paths


def render_vcorr(rows: list[dict], out_dir) -> list[FsPath]:
    fig, ax = plt.subplots(figsize=(6, 4))
    betas = sorted({row["beta"] for row in rows})
    for beta in betas:
        sel = [r for r in rows if r["beta"] == beta]
        dts = np.array([r["delta_t"] for r in sel])
        vals = np.array([r["value"] for r in sel])
        errs = np.array([3 * r["std_error"] for r in sel])
        ax.errorbar(dts, vals, yerr=errs, fmt="o", ms=4, capsize=3,
                    label=rf"$\beta$ = {beta:g}")
        ax.axhline(sel[0].get("expected", -1.0 / beta), color="gray", lw=0.6, ls=":")
    ax.set_xlabel(r"$\delta t$")
    ax.set_ylabel(r"$\langle V_+ V_-\rangle$")
    ax.legend(frameon=False)
    return [_save(fig, FsPath(out_dir) / "velocity_correlation.png")]


def render_bridge(bs, residuals: dict | None, out_dir) -> list[FsPath]:
    x = bs.grid.centers
    extent = [bs.times[0], bs.times[-1], x[0], x[-1]]
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(bs.mu.T, origin="lower", aspect="auto", extent=extent,
                   cmap="viridis")
    fig.colorbar(im, ax=ax, label=r"$\mu(t, x)$")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    paths = [_save(fig, FsPath(out_dir) / "bridge_density.png")]

    mid = bs.n_snapshots // 2
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, label in ((0, "t0"), (mid, "mid"), (bs.n_snapshots - 1, "t1")):
        ax.plot(x, bs.mu[i], lw=1.2, label=f"μ at {label}")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    paths.append(_save(fig, FsPath(out_dir) / "bridge_marginals.png"))

    if residuals:
        fig, ax = plt.subplots(figsize=(6, 4))
        t_mid = np.asarray(residuals["times"])
        ax.plot(t_mid, residuals["continuity"], "o-", ms=3, label="continuity")
        ax.plot(t_mid, residuals["schrodinger"], "s-", ms=3, label="wave equation")
        ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("L2 residual")
        ax.legend(frameon=False)
        paths.append(_save(fig, FsPath(out_dir) / "bridge_residuals.png"))
    return paths


def render_kernel(k, out_dir) -> list[FsPath]:
    x = k.grid.centers
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(k.entries, origin="lower", aspect="auto",
                   extent=[x[0], x[-1], x[0], x[-1]], cmap="magma")
    fig.colorbar(im, ax=ax, label="q(t0, y; t1, x)")
    ax.set_xlabel("x (target)")
    ax.set_ylabel("y (source)")
    paths = [_save(fig, FsPath(out_dir) / "kernel_matrix.png")]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, np.diag(k.entries), lw=1.2)
    ax.set_xlabel("x")
    ax.set_ylabel("q(t0, x; t1, x)")
    paths.append(_save(fig, FsPath(out_dir) / "kernel_diagonal.png"))
    return paths
