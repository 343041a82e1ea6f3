"""Projection-method stepping for 2D incompressible flow on a collocated grid.

Each step solves a Burgers-type predictor for ``u*`` and ``v*`` (implicit
viscosity, explicit advection), a regularized pressure Poisson corrector,
and then subtracts the pressure gradient. The lid moves along the ``y = 0``
face (first grid row).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .evolution import (
    AxisBC,
    BoundarySpec,
    DenseSolver,
    GridSpec,
    StepMetrics,
    _pair_error,
    diffusion_operator,
    make_solver,
    step_metrics,
)
from .operators import (
    Boundary,
    DecomposedOperator,
    decompose_laplacian_2d,
    divergence_dense,
    projector_zero,
)
from .vqls import DEFAULT_MAX_EVALS, DEFAULT_TOL

log = logging.getLogger(__name__)


def cavity_grid(m: int = 3, Re: float = 100.0, dt: float = 0.5, n_t: int = 10, L: float = 1.0) -> GridSpec:
    """Square ``2**m x 2**m`` grid of interior nodes with ``dx = L / (2**m + 1)``."""
    dx = L / (2**m + 1)
    delta = dt / (Re * dx**2)
    return GridSpec(2, m, m, dx, dx, dt, n_t, 1.0 / Re, delta, delta)


@dataclass(frozen=True)
class FlowState:
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    Re: float
    grid: GridSpec
    lid_velocity: float = 0.0

    def __post_init__(self):
        if self.grid.dims != 2:
            raise ValueError("flow needs a 2D grid")
        for name in ("u", "v", "p"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.size,):
                raise ValueError(f"{name} must have {self.grid.size} entries, got {arr.shape}")
            object.__setattr__(self, name, arr)
        if self.Re <= 0:
            raise ValueError("Re must be positive")

    @classmethod
    def at_rest(cls, grid: GridSpec, Re: float, lid_velocity: float = 0.0) -> "FlowState":
        z = np.zeros(grid.size)
        return cls(z, z.copy(), z.copy(), Re, grid, lid_velocity)


def velocity_bcs(lid_velocity: float) -> tuple[BoundarySpec, BoundarySpec]:
    """No-slip walls; ``u`` equals the lid speed on the ``y = 0`` face."""
    wall = AxisBC.dirichlet(0.0, 0.0)
    return BoundarySpec(wall, AxisBC.dirichlet(lid_velocity, 0.0)), BoundarySpec(wall, wall)


@dataclass(frozen=True)
class FlowMatrices:
    """Central-difference matrices on the 2D register (x in the low bits)."""

    Bx_D: np.ndarray
    By_D: np.ndarray
    Bx_N: np.ndarray
    By_N: np.ndarray

    @classmethod
    def build(cls, grid: GridSpec) -> "FlowMatrices":
        ix, iy = np.eye(2**grid.mx), np.eye(2**grid.my)
        mats = {}
        for bc in (Boundary.DIRICHLET, Boundary.NEUMANN):
            mats[f"Bx_{bc.value}"] = np.kron(iy, divergence_dense(grid.mx, bc, grid.dx))
            mats[f"By_{bc.value}"] = np.kron(divergence_dense(grid.my, bc, grid.dy), ix)
        return cls(**mats)

    def divergence(self, u, v) -> np.ndarray:
        return self.Bx_D @ u + self.By_D @ v


def advect(u, v, field_, mats: FlowMatrices) -> np.ndarray:
    """``F^k field`` with ``F^k = diag(u) B_x,D + diag(v) B_y,D``."""
    return u * (mats.Bx_D @ field_) + v * (mats.By_D @ field_)


def assemble_predictor(state: FlowState, bc=None, mats: FlowMatrices | None = None):
    """``((A, b_u), (A, b_v))`` for the intermediate velocity.

    ``A = I + delta_x A_x,D + delta_y A_y,D`` and
    ``b = (1 - dt F^k) u^k + delta_x u_xD + delta_y u_yD``.
    """
    g = state.grid
    mats = mats or FlowMatrices.build(g)
    bc_u, bc_v = bc if bc is not None else velocity_bcs(state.lid_velocity)
    dirichlet = BoundarySpec(AxisBC.dirichlet(), AxisBC.dirichlet())
    A = DecomposedOperator.identity(g.n_qubits) + diffusion_operator(g, dirichlet)
    t_next = g.dt
    b_u = state.u - g.dt * advect(state.u, state.v, state.u, mats) + bc_u.boundary_sum(g, t_next)
    b_v = state.v - g.dt * advect(state.u, state.v, state.v, mats) + bc_v.boundary_sum(g, t_next)
    return (A, b_u), (A, b_v)


def pressure_operator(grid: GridSpec, regularize: bool = True) -> DecomposedOperator:
    """``dt/dx^2 (A_x,N + 1/2 I0) + dt/dy^2 (A_y,N + 1/2 I0)``.

    Without the projector terms the Neumann operator has the constant
    vector in its kernel.
    """
    a_x, a_y = decompose_laplacian_2d(grid.mx, grid.my, Boundary.NEUMANN, Boundary.NEUMANN)
    if regularize:
        pin = projector_zero(grid.n_qubits, 0.5)
        a_x, a_y = a_x.with_terms(pin), a_y.with_terms(pin)
    return a_x.scaled(grid.dt / grid.dx**2) + a_y.scaled(grid.dt / grid.dy**2)


def assemble_corrector(u_star, v_star, grid: GridSpec, mats: FlowMatrices | None = None):
    """Pressure operator and ``b_p = -(B_x,D u* + B_y,D v*)``."""
    mats = mats or FlowMatrices.build(grid)
    return pressure_operator(grid), -mats.divergence(u_star, v_star)


def velocity_update(u_star, v_star, p_next, grid: GridSpec, mats: FlowMatrices | None = None):
    mats = mats or FlowMatrices.build(grid)
    return u_star - grid.dt * mats.Bx_N @ p_next, v_star - grid.dt * mats.By_N @ p_next


@dataclass
class FlowStepMetrics:
    step: int
    u: StepMetrics
    v: StepMetrics
    p: StepMetrics
    divergence_before: float
    divergence_after: float

    @property
    def converged(self) -> bool:
        return self.u.converged and self.v.converged and self.p.converged


@dataclass
class FlowRun:
    states: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    oracle_states: list | None = None

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    @property
    def velocity_evals(self) -> tuple[int, int]:
        return (sum(m.u.n_function_evals for m in self.metrics),
                sum(m.v.n_function_evals for m in self.metrics))

    @property
    def pressure_evals(self) -> int:
        return sum(m.p.n_function_evals for m in self.metrics)

    @property
    def flagged_steps(self) -> list[int]:
        return [m.step for m in self.metrics if not m.converged]


def zero_mean(p) -> np.ndarray:
    return np.asarray(p) - np.mean(p)


def evolve_ns(
    initial: FlowState, lid_velocity: float | None = None, n_t: int | None = None,
    layers: int = 8, tol: float = DEFAULT_TOL, seed=None, mode: str = "quantum",
    max_evals: int = DEFAULT_MAX_EVALS, with_oracle: bool = True,
    pressure_layers: int | None = None,
) -> FlowRun:
    """Projection-method time loop.

    Per step: predictor solves for ``u*`` and ``v*``, the pressure solve, and
    the velocity update. Each of the three solves keeps its own ansatz.
    Reported pressures are shifted to zero mean.
    """
    state = initial
    if lid_velocity is not None:
        state = replace(state, lid_velocity=float(lid_velocity))
    g = state.grid
    n_t = g.n_t if n_t is None else n_t
    mats = FlowMatrices.build(g)
    seeds = np.random.SeedSequence(seed).spawn(3)
    n = g.n_qubits
    pl = layers if pressure_layers is None else pressure_layers
    solvers = {
        "u": make_solver(mode, n, layers, tol, max_evals, seeds[0]),
        "v": make_solver(mode, n, layers, tol, max_evals, seeds[1]),
        "p": make_solver(mode, n, pl, tol, max_evals, seeds[2]),
    }
    dense = DenseSolver()
    ref = None
    if with_oracle:
        from .oracle import classical_projection_step

        ref = [state]
        for _ in range(n_t):
            ref.append(classical_projection_step(ref[-1]))
        ref = [replace(s, p=zero_mean(s.p)) for s in ref]
    run = FlowRun([replace(state, p=zero_mean(state.p))], [], ref)
    for k in range(n_t):
        (A, b_u), (_, b_v) = assemble_predictor(state, mats=mats)
        su = solvers["u"].solve(A, b_u)
        sv = solvers["v"].solve(A, b_v)
        A_p, b_p = assemble_corrector(su.solution, sv.solution, g, mats)
        sp = solvers["p"].solve(A_p, b_p)
        u_new, v_new = velocity_update(su.solution, sv.solution, sp.solution, g, mats)
        mu, mv, mp = step_metrics(k + 1, su), step_metrics(k + 1, sv), step_metrics(k + 1, sp)
        for m, step, (A_, b_) in ((mu, su, (A, b_u)), (mv, sv, (A, b_v)), (mp, sp, (A_p, b_p))):
            m.local_trace_error = _pair_error(step.solution, dense.solve(A_, b_).solution)
        if ref is not None:
            mu.trace_error = _pair_error(u_new, ref[k + 1].u)
            mv.trace_error = _pair_error(v_new, ref[k + 1].v)
            mp.trace_error = _pair_error(zero_mean(sp.solution), ref[k + 1].p)
        metrics = FlowStepMetrics(
            k + 1, mu, mv, mp,
            float(np.linalg.norm(mats.divergence(su.solution, sv.solution))),
            float(np.linalg.norm(mats.divergence(u_new, v_new))),
        )
        if not metrics.converged:
            log.warning("step %d: a variational solve did not converge", k + 1)
        state = replace(state, u=u_new, v=v_new, p=sp.solution)
        run.states.append(replace(state, p=zero_mean(sp.solution)))
        run.metrics.append(metrics)
    return run


def vortex_sign_pattern(state: FlowState) -> tuple[int, int, int, int]:
    """Signs of ``u`` on the upper/lower halves of the vertical centreline and
    of ``v`` on the left/right halves of the horizontal centreline.

    A single cavity vortex shows ``u`` and ``v`` each changing sign.
    """
    g = state.grid
    u = state.u.reshape(g.shape)
    v = state.v.reshape(g.shape)
    ny, nx = u.shape
    cx = u[:, nx // 2 - 1: nx // 2 + 1].mean(axis=1)
    cy = v[ny // 2 - 1: ny // 2 + 1, :].mean(axis=0)
    return (int(np.sign(cx[: ny // 2].sum())), int(np.sign(cx[ny // 2:].sum())),
            int(np.sign(cy[: nx // 2].sum())), int(np.sign(cy[nx // 2:].sum())))


def has_single_vortex(state: FlowState) -> bool:
    su_top, su_bot, sv_left, sv_right = vortex_sign_pattern(state)
    return su_top == -su_bot != 0 and sv_left == -sv_right != 0
