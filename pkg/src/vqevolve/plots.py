"""Optional PNG figures written next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def heat1d_figure(series, path: Path, every: int = 2) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    n = len(series.snapshots[0])
    idx = np.arange(n)
    for k in range(0, len(series.snapshots), every):
        line, = ax.plot(idx, series.snapshots[k], "o-", ms=3, lw=1)
        if series.oracle_snapshots is not None:
            ax.plot(idx, series.oracle_snapshots[k], "--", color=line.get_color(), lw=0.8)
    ax.set_xlabel("grid index")
    ax.set_ylabel("u")
    ax.set_title(f"{series.scheme}: variational (solid) vs dense (dashed)")
    return _save(fig, path)


def heat2d_figure(series, shape, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    cs = ax.contourf(np.asarray(series.final).reshape(shape), levels=20)
    fig.colorbar(cs, ax=ax)
    ax.set_xlabel("x index")
    ax.set_ylabel("y index")
    ax.set_title("final snapshot")
    return _save(fig, path)


def spacetime_figure(pair, path: Path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, series, name in zip(axes, pair, ("u1", "u2")):
        data = np.array(series.snapshots)
        im = ax.imshow(data, aspect="auto", origin="lower",
                       extent=(0, data.shape[1], series.times[0], series.times[-1]))
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("grid index")
        ax.set_ylabel("t")
        ax.set_title(name)
    return _save(fig, path)


def cavity_figure(run, path: Path) -> Path:
    s = run.final
    ny, nx = s.grid.shape
    y, x = np.mgrid[0:ny, 0:nx]
    fig, ax = plt.subplots(figsize=(5, 5))
    cs = ax.contourf(x, y, s.p.reshape(ny, nx), levels=20, cmap="coolwarm")
    fig.colorbar(cs, ax=ax, label="p")
    ax.quiver(x, y, s.u.reshape(ny, nx), s.v.reshape(ny, nx))
    ax.invert_yaxis()
    ax.set_title("final velocity and pressure (lid on top)")
    return _save(fig, path)


def sweep_figure(stats, slope, path: Path) -> Path:
    nl = np.array([s["nl"] for s in stats], dtype=float)
    mean = np.array([s["mean_function_evals"] for s in stats])
    std = np.array([s["std_function_evals"] for s in stats])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.errorbar(nl, mean, yerr=std, fmt="o", capsize=3)
    if np.isfinite(slope):
        ref = mean[np.argmin(nl)] * (nl / nl.min()) ** slope
        order = np.argsort(nl)
        ax.plot(nl[order], ref[order], "--", label=f"slope {slope:.2f}")
        ax.legend()
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n l")
    ax.set_ylabel("mean evaluations per step")
    return _save(fig, path)


def render(outcome, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    name = outcome.experiment
    if name == "heat1d":
        return [heat1d_figure(outcome.payload, out_dir / "solutions.png")]
    if name == "heat2d":
        ts, shape = outcome.payload
        return [heat2d_figure(ts, shape, out_dir / "solutions.png")]
    if name in ("grayscott", "brusselator"):
        return [spacetime_figure(outcome.payload, out_dir / "solutions.png")]
    if name == "cavity":
        return [cavity_figure(outcome.payload, out_dir / "solutions.png")]
    return []
