"""Two-component reaction-diffusion stepping.

Diffusion is implicit per component and the reaction source explicit, both
components seeing the same frozen ``u^k``. Grids here use ``dx = 2**-n`` so
that ``delta_i = 2**(2n) dt D_i``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import oracle
from .evolution import (
    AxisBC,
    BoundarySpec,
    DenseSolver,
    GridSpec,
    TimeSeries,
    _pair_error,
    assemble_ie,
    dense_laplacian,
    make_solver,
    step_metrics,
)
from .operators import Boundary, reaction_implicit_operator
from .vqls import DEFAULT_MAX_EVALS, DEFAULT_TOL

log = logging.getLogger(__name__)


class DivergenceError(FloatingPointError):
    """The explicit reaction step produced non-finite values."""


def gray_scott_source(u1, u2, k1, k2):
    u1, u2 = np.asarray(u1, dtype=float), np.asarray(u2, dtype=float)
    if u1.shape != u2.shape:
        raise ValueError("components must have equal lengths")
    r = u1 * u2**2
    return k1 * (1.0 - u1) - r, -(k1 + k2) * u2 + r


def brusselator_source(u1, u2, k1, k2):
    u1, u2 = np.asarray(u1, dtype=float), np.asarray(u2, dtype=float)
    if u1.shape != u2.shape:
        raise ValueError("components must have equal lengths")
    r = u1**2 * u2
    return -(k1 + 1.0) * u1 + r + k2, k1 * u1 - r


@dataclass(frozen=True)
class RDSystem:
    D: tuple[float, float]
    source: Callable = field(repr=False)
    params: dict = field(default_factory=dict)
    bc: tuple[AxisBC, AxisBC] = (AxisBC(), AxisBC())

    def __post_init__(self):
        if len(self.D) != 2 or min(self.D) < 0:
            raise ValueError("need two non-negative diffusion coefficients")

    def f(self, u1, u2):
        return self.source(u1, u2, **self.params)

    @classmethod
    def gray_scott(cls, D=(1e-4, 1e-6), k1=0.04, k2=0.02) -> "RDSystem":
        return cls(tuple(D), gray_scott_source, {"k1": k1, "k2": k2},
                   (AxisBC.dirichlet(1.0, 1.0), AxisBC.dirichlet(0.0, 0.0)))

    @classmethod
    def brusselator(cls, D=(1e-4, 1e-4), k1=3.0, k2=1.0) -> "RDSystem":
        return cls(tuple(D), brusselator_source, {"k1": k1, "k2": k2},
                   (AxisBC.neumann(), AxisBC.neumann()))


def rd_grid(n: int, dt: float, n_t: int) -> GridSpec:
    """Shared grid; per-component ``D`` and ``delta`` come from :func:`component_grid`."""
    return GridSpec(1, n, 0, 2.0**-n, 0.0, dt, n_t, 0.0, 0.0)


def component_grid(grid: GridSpec, D: float) -> GridSpec:
    return replace(grid, D=D, delta_x=2.0 ** (2 * grid.mx) * grid.dt * D)


def grid_points(n: int, boundary) -> np.ndarray:
    """Node positions in ``(0, 1)``: interior nodes for Dirichlet, cell centres for Neumann."""
    N = 2**n
    if Boundary.parse(boundary) is Boundary.NEUMANN:
        return (np.arange(N) + 0.5) / N
    return (np.arange(N) + 1.0) / (N + 1)


def mid_pulse(x):
    """``|sin(pi x)|**100``; the absolute value keeps roundoff signs out."""
    return np.abs(np.sin(np.pi * np.asarray(x))) ** 100


def gray_scott_initial(n: int):
    s = mid_pulse(grid_points(n, "D"))
    return 1.0 - 0.5 * s, 0.25 * s


def brusselator_initial(n: int):
    x = grid_points(n, "N")
    return np.full_like(x, 0.5), 1.0 + 5.0 * x


def _seeds(seed, count):
    return np.random.SeedSequence(seed).spawn(count)


def evolve_rd(
    system: RDSystem, grid: GridSpec, u0, layers: int = 4, tol: float = DEFAULT_TOL,
    seed=None, mode: str = "quantum", warm_start: bool = True,
    max_evals: int = DEFAULT_MAX_EVALS, with_oracle: bool = True,
) -> tuple[TimeSeries, TimeSeries]:
    """Semi-implicit marching; returns one :class:`TimeSeries` per component.

    ``trace_error`` compares against the classically propagated semi-implicit
    solution, ``local_trace_error`` against a dense solve of the same step.
    """
    u = [np.asarray(c, dtype=float).copy() for c in u0]
    grids = [component_grid(grid, D) for D in system.D]
    bcs = [BoundarySpec(b) for b in system.bc]
    solvers = [
        make_solver(mode, grid.n_qubits, layers, tol, max_evals, s, warm_start)
        for s in _seeds(seed, 2)
    ]
    times = grid.times
    ref = None
    if with_oracle:
        try:
            ref = oracle.semi_implicit_rd(
                u,
                [g.delta_x for g in grids],
                [b.boundary_vector(g, 0.0) for g, b in zip(grids, bcs)],
                system.f,
                grid.dt,
                grid.n_t,
                [dense_laplacian(replace(g, delta_x=1.0), b) for g, b in zip(grids, bcs)],
            )
        except FloatingPointError as exc:
            raise DivergenceError(f"classical reference diverged: {exc}") from exc
    series = [
        TimeSeries("IE", times.copy(), [c.copy()], [], None if ref is None else [r[i] for r in ref])
        for i, c in enumerate(u)
    ]
    dense = DenseSolver()
    for k in range(grid.n_t):
        with np.errstate(over="ignore", invalid="ignore"):
            f = system.f(*u)
        if not all(np.all(np.isfinite(c)) for c in f):
            raise DivergenceError(f"reaction source is not finite at step {k + 1} (t={times[k]:g})")
        new = []
        for i in range(2):
            A, b = assemble_ie(grids[i], bcs[i], u[i], times[k + 1], source=f[i])
            step = solvers[i].solve(A, b)
            m = step_metrics(k + 1, step)
            if ref is not None:
                m.trace_error = _pair_error(step.solution, ref[k + 1][i])
                m.local_trace_error = _pair_error(step.solution, dense.solve(A, b).solution)
            if not step.converged:
                log.warning("step %d, component %d: variational solve did not converge", k + 1, i + 1)
            series[i].metrics.append(m)
            series[i].snapshots.append(step.solution.copy())
            new.append(step.solution)
        u = new
    for s in series:
        s.n_params = grid.n_qubits * layers if mode == "quantum" else 0
    return series[0], series[1]


def evolve_rd_implicit_linear(
    K, grid: GridSpec, u0, layers: int = 4, tol: float = DEFAULT_TOL, seed=None,
    bc: AxisBC = AxisBC(), mode: str = "quantum", max_evals: int = DEFAULT_MAX_EVALS,
    with_oracle: bool = True,
) -> TimeSeries:
    """Fully implicit stepping for a constant symmetric source matrix ``K``.

    Both components share ``grid.delta_x`` and one ``n + 1`` qubit register,
    component 1 in the lower half. Snapshots hold the stacked vector.
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (2, 2) or not np.allclose(K, K.T, rtol=0, atol=1e-14):
        raise ValueError("K must be a symmetric 2x2 matrix")
    n = grid.mx
    A = reaction_implicit_operator(n, K, grid.dt, grid.delta_x, bc.kind)
    spec = BoundarySpec(bc)
    g_vec = spec.boundary_vector(grid, 0.0)
    u = np.concatenate([np.asarray(c, dtype=float) for c in u0])
    if u.shape != (2 * grid.size,):
        raise ValueError(f"expected two components of {grid.size} values")
    times = grid.times
    ref = None
    if with_oracle:
        ref = oracle.fully_implicit_linear_rd(
            np.split(u, 2), K, grid.delta_x, grid.dt, grid.n_t,
            dense_laplacian(replace(grid, delta_x=1.0), spec), (g_vec, g_vec),
        )
    solver = make_solver(mode, n + 1, layers, tol, max_evals, seed)
    series = TimeSeries("IE", times.copy(), [u.copy()], [], ref)
    dense = DenseSolver()
    for k in range(grid.n_t):
        b = u + grid.delta_x * np.concatenate([spec.boundary_vector(grid, times[k + 1])] * 2)
        step = solver.solve(A, b)
        m = step_metrics(k + 1, step)
        if ref is not None:
            m.trace_error = _pair_error(step.solution, ref[k + 1])
            m.local_trace_error = _pair_error(step.solution, dense.solve(A, b).solution)
        series.metrics.append(m)
        u = step.solution
        series.snapshots.append(u.copy())
    series.n_params = (n + 1) * layers if mode == "quantum" else 0
    return series


def count_local_maxima(profile, rel_height: float = 0.1) -> int:
    """Separated interior peaks above ``rel_height`` of the profile's range."""
    p = np.asarray(profile, dtype=float)
    floor = p.min() + rel_height * (p.max() - p.min())
    peaks = 0
    for i in range(1, len(p) - 1):
        if p[i] > p[i - 1] and p[i] >= p[i + 1] and p[i] > floor:
            peaks += 1
    return peaks


def mean_crossings(signal) -> int:
    """Number of sign changes of ``signal - mean(signal)``."""
    s = np.asarray(signal, dtype=float)
    d = np.sign(s - s.mean())
    d = d[d != 0]
    return int(np.count_nonzero(d[1:] != d[:-1]))
