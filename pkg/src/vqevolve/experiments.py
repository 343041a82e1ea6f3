"""Experiment drivers behind the command line.

Each driver turns a validated config into an :class:`Outcome`: rows for
``solutions.csv`` and ``metrics.csv``, a summary, and the raw run object
for plotting.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig, expand, swept_keys
from .evolution import AxisBC, BoundarySpec, GridSpec, evolve, evolve_2d
from .navier_stokes import FlowState, cavity_grid, evolve_ns
from .reaction import (
    RDSystem,
    brusselator_initial,
    evolve_rd,
    gray_scott_initial,
    rd_grid,
)


@dataclass
class Outcome:
    experiment: str
    solutions: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    components: bool = False
    summary: dict = field(default_factory=dict)
    payload: object = None


def _n_steps(T: float, dt: float) -> int:
    n_t = int(round(T / dt))
    if n_t < 1 or not math.isclose(n_t * dt, T, rel_tol=1e-9):
        raise ValueError(f"T={T} is not a whole number of steps dt={dt}")
    return n_t


def _series_rows(series, component=None):
    sol, met = [], []
    extra = () if component is None else (component,)
    for k, u in enumerate(series.snapshots):
        t = float(series.times[k])
        for i, value in enumerate(u):
            sol.append((k, t, i, float(value)) + extra)
    for m in series.metrics:
        met.append((m.step, m.cost, m.n_function_evals, m.n_iterations, m.trace_error) + extra)
    return sol, met


def _summary(series_list, n_params):
    metrics = [m for s in series_list for m in s.metrics]
    n_t = max(len(s.metrics) for s in series_list)
    return {
        "mean_trace_error": float(np.mean([m.trace_error for m in metrics])),
        "mean_function_evals": float(sum(m.n_function_evals for m in metrics)) / n_t,
        "mean_iterations": float(np.mean([m.n_iterations for m in metrics])),
        "flagged_steps": sum(1 for m in metrics if not m.converged),
        "n_params": n_params,
    }


def heat1d_setup(cfg: ExperimentConfig):
    n, n_t = cfg["n"], cfg["n_t"]
    if cfg["delta"] is not None:
        grid = GridSpec.heat_1d(n, cfg["delta"], n_t, cfg["T"], cfg["L"])
    else:
        grid = GridSpec.heat_1d_physical(n, cfg["D"], n_t, cfg["T"], cfg["L"])
    if cfg["boundary"] == "N":
        axis = AxisBC.neumann()
    else:
        axis = AxisBC.dirichlet(cfg["g_left"], cfg["g_right"])
    x = grid.x
    if cfg["initial"] == "zero":
        u0 = np.zeros(grid.size)
    elif cfg["initial"] == "sine":
        u0 = np.sin(np.pi * x / cfg["L"])
    else:
        u0 = cfg["g_left"] + (cfg["g_right"] - cfg["g_left"]) * x / cfg["L"]
    return grid, BoundarySpec(axis), u0


def run_heat1d(cfg: ExperimentConfig) -> Outcome:
    grid, bc, u0 = heat1d_setup(cfg)
    ts = evolve(
        grid, bc, u0, cfg["scheme"], cfg["layers"], cfg["tol"], cfg["seed"],
        cfg["warm_start"], cfg["mode"], cfg["max_evals"], cfg["verify"],
    )
    sol, met = _series_rows(ts)
    summary = _summary([ts], ts.n_params)
    summary["delta"] = grid.delta_x
    return Outcome("heat1d", sol, met, False, summary, ts)


def run_heat2d(cfg: ExperimentConfig) -> Outcome:
    grid = GridSpec.heat_2d(cfg["mx"], cfg["my"], cfg["delta_x"], cfg["delta_y"], cfg["n_t"], cfg["T"])
    bc = BoundarySpec(
        AxisBC.dirichlet(cfg["g_x_left"], cfg["g_x_right"]),
        AxisBC.dirichlet(cfg["g_y_left"], cfg["g_y_right"]),
    )
    if cfg["initial"] == "zero":
        u0 = np.zeros(grid.size)
    elif cfg["initial"] == "sine":
        u0 = np.outer(np.sin(np.pi * grid.y), np.sin(np.pi * grid.x)).ravel()
    else:
        u0 = np.repeat(cfg["g_y_left"] + (cfg["g_y_right"] - cfg["g_y_left"]) * grid.y, 2**grid.mx)
    ts = evolve_2d(
        grid, bc, u0, cfg["layers"], cfg["tol"], cfg["seed"], cfg["warm_start"],
        cfg["mode"], cfg["max_evals"], cfg["verify"],
    )
    sol, met = _series_rows(ts)
    summary = _summary([ts], ts.n_params)
    summary["delta"] = grid.delta_x
    return Outcome("heat2d", sol, met, False, summary, (ts, grid.shape))


def _run_rd(cfg, system, u0, name):
    grid = rd_grid(cfg["n"], cfg["dt"], _n_steps(cfg["T"], cfg["dt"]))
    a, b = evolve_rd(
        system, grid, u0, cfg["layers"], cfg["tol"], cfg["seed"], cfg["mode"],
        cfg["warm_start"], cfg["max_evals"], cfg["verify"],
    )
    sol, met = [], []
    for comp, ts in ((1, a), (2, b)):
        s, m = _series_rows(ts, comp)
        sol += s
        met += m
    return Outcome(name, sol, met, True, _summary([a, b], a.n_params), (a, b))


def run_grayscott(cfg: ExperimentConfig) -> Outcome:
    system = RDSystem.gray_scott((cfg["D1"], cfg["D2"]), cfg["k1"], cfg["k2"])
    return _run_rd(cfg, system, gray_scott_initial(cfg["n"]), "grayscott")


def run_brusselator(cfg: ExperimentConfig) -> Outcome:
    system = RDSystem.brusselator((cfg["D1"], cfg["D2"]), cfg["k1"], cfg["k2"])
    return _run_rd(cfg, system, brusselator_initial(cfg["n"]), "brusselator")


def run_cavity(cfg: ExperimentConfig) -> Outcome:
    grid = cavity_grid(cfg["m"], cfg["Re"], cfg["dt"], _n_steps(cfg["T"], cfg["dt"]))
    state = FlowState.at_rest(grid, cfg["Re"], cfg["lid_velocity"])
    run = evolve_ns(
        state, layers=cfg["layers"], tol=cfg["tol"], seed=cfg["seed"], mode=cfg["mode"],
        max_evals=cfg["max_evals"], with_oracle=cfg["verify"], pressure_layers=cfg["pressure_layers"],
    )
    sol, met = [], []
    for k, s in enumerate(run.states):
        t = k * grid.dt
        for comp in ("u", "v", "p"):
            for i, value in enumerate(getattr(s, comp)):
                sol.append((k, t, i, float(value), comp))
    for fm in run.metrics:
        for comp in ("u", "v", "p"):
            m = getattr(fm, comp)
            met.append((m.step, m.cost, m.n_function_evals, m.n_iterations, m.trace_error, comp))
    steps = [getattr(fm, c) for fm in run.metrics for c in ("u", "v", "p")]
    u_evals, v_evals = run.velocity_evals
    summary = {
        "mean_trace_error": float(np.mean([m.trace_error for m in steps])),
        "mean_function_evals": float(sum(m.n_function_evals for m in steps)) / len(run.metrics),
        "mean_iterations": float(np.mean([m.n_iterations for m in steps])),
        "flagged_steps": len(run.flagged_steps),
        "n_params": grid.n_qubits * cfg["layers"] if cfg["mode"] == "quantum" else 0,
        "pressure_velocity_eval_ratio": (
            run.pressure_evals / (0.5 * (u_evals + v_evals)) if u_evals + v_evals else float("nan")
        ),
    }
    return Outcome("cavity", sol, met, True, summary, run)


RUNNERS = {
    "heat1d": run_heat1d,
    "heat2d": run_heat2d,
    "grayscott": run_grayscott,
    "brusselator": run_brusselator,
    "cavity": run_cavity,
}


def run_experiment(cfg: ExperimentConfig) -> Outcome:
    return RUNNERS[cfg.experiment](cfg)


# --- sweeps -------------------------------------------------------------------


def _sweep_job(cfg: ExperimentConfig) -> dict:
    out = run_experiment(cfg)
    return {k: v for k, v in out.summary.items()}


def run_sweep(cfg: ExperimentConfig) -> tuple[list[dict], list[dict], dict]:
    """Run every expanded point ``runs`` times (seeds ``seed, seed+1, ...``).

    Returns per-run rows, per-point statistics and the fit summary.
    """
    points = expand(cfg)
    keys = swept_keys(cfg)
    jobs = []
    for p_idx, point in enumerate(points):
        for r in range(point["runs"]):
            jobs.append((p_idx, r, point.replace(seed=point["seed"] + r, runs=1)))
    workers = cfg["workers"] if not isinstance(cfg["workers"], list) else 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, [j[2] for j in jobs]))
    else:
        results = [_sweep_job(j[2]) for j in jobs]
    run_rows = []
    for (p_idx, r, point), res in zip(jobs, results):
        row = {"point": p_idx, "run": r, "seed": point["seed"]}
        row.update({k: point[k] for k in keys})
        row.update(res)
        run_rows.append(row)
    stats = []
    for p_idx, point in enumerate(points):
        rows = [r for r in run_rows if r["point"] == p_idx]
        entry = {"point": p_idx}
        entry.update({k: point[k] for k in keys})
        entry["nl"] = rows[0]["n_params"]
        entry["delta"] = rows[0].get("delta", float("nan"))
        entry["runs"] = len(rows)
        for metric in ("mean_trace_error", "mean_function_evals", "mean_iterations"):
            vals = np.array([r[metric] for r in rows], dtype=float)
            entry[metric] = float(vals.mean())
            entry["std_" + metric[len("mean_"):]] = float(vals.std())
        stats.append(entry)
    return run_rows, stats, fit_summary(stats)


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if np.count_nonzero(ok) < 2 or len(np.unique(x[ok])) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def fit_summary(stats: list[dict]) -> dict:
    """Log-log slope of mean evaluations vs ``n l`` and the delta trend."""
    out = {"nl_slope": loglog_slope([s["nl"] for s in stats], [s["mean_function_evals"] for s in stats])}
    by_delta = sorted((s["delta"], s["mean_iterations"]) for s in stats if not math.isnan(s["delta"]))
    deltas = [d for d, _ in by_delta]
    if len(set(deltas)) > 1:
        its = [i for _, i in by_delta]
        out["delta_monotone"] = all(b >= a for a, b in zip(its, its[1:]))
    return out
