"""Implicit time stepping of the heat equation with variational linear solves.

Grids hold ``2**n`` unknowns per axis. For the heat problems the boundary
nodes sit outside the register, so ``dx = L / (2**n + 1)`` and the unknowns
live at ``x_i = (i + 1) dx``. In 2D, index ``iy * nx + ix`` (x fastest, x in
the low qubits).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import oracle
from .operators import Boundary, DecomposedOperator, decompose_laplacian_1d, decompose_laplacian_2d
from .state import DegenerateInputError, StateVector, encode
from .vqls import DEFAULT_MAX_EVALS, DEFAULT_TOL, AnsatzParams, min_layers, vqls_solve

log = logging.getLogger(__name__)

SCHEMES = ("IE", "CN")


class StateError(RuntimeError):
    """A stepping routine was called without the state it depends on."""


# --- grid and boundary data ---------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    dims: int
    mx: int
    my: int
    dx: float
    dy: float
    dt: float
    n_t: int
    D: float
    delta_x: float
    delta_y: float = 0.0

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if self.mx < 1 or (self.dims == 2 and self.my < 1):
            raise ValueError("need at least one qubit per axis")
        if self.dims == 1 and self.my != 0:
            raise ValueError("1D grids must have my = 0")
        if self.n_t < 1:
            raise ValueError(f"n_t must be >= 1, got {self.n_t}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.delta_x < 0 or self.delta_y < 0 or self.D < 0:
            raise ValueError("diffusion parameters must be non-negative")

    @classmethod
    def heat_1d(cls, n: int, delta: float, n_t: int, T: float = 1.0, L: float = 1.0) -> "GridSpec":
        """Grid for a fixed diffusion parameter; ``D`` follows from ``delta``."""
        dx = L / (2**n + 1)
        dt = T / n_t
        return cls(1, n, 0, dx, 0.0, dt, n_t, delta * dx**2 / dt, delta)

    @classmethod
    def heat_1d_physical(cls, n: int, D: float, n_t: int, T: float = 1.0, L: float = 1.0) -> "GridSpec":
        dx = L / (2**n + 1)
        dt = T / n_t
        return cls(1, n, 0, dx, 0.0, dt, n_t, D, D * dt / dx**2)

    @classmethod
    def heat_2d(
        cls, mx: int, my: int, delta_x: float, delta_y: float, n_t: int,
        T: float = 1.0, Lx: float = 1.0, Ly: float = 1.0,
    ) -> "GridSpec":
        dx, dy = Lx / (2**mx + 1), Ly / (2**my + 1)
        dt = T / n_t
        return cls(2, mx, my, dx, dy, dt, n_t, delta_x * dx**2 / dt, delta_x, delta_y)

    @property
    def n_qubits(self) -> int:
        return self.mx + self.my

    @property
    def size(self) -> int:
        return 2**self.n_qubits

    @property
    def shape(self) -> tuple[int, ...]:
        return (2**self.mx,) if self.dims == 1 else (2**self.my, 2**self.mx)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t + 1)

    @property
    def x(self) -> np.ndarray:
        return (np.arange(2**self.mx) + 1) * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(2**self.my) + 1) * self.dy


BoundaryValue = Union[float, Callable[[float], float]]


def _value(g: BoundaryValue, t: float) -> float:
    return float(g(t)) if callable(g) else float(g)


@dataclass(frozen=True)
class AxisBC:
    """Boundary condition on the two faces of one axis.

    Neumann faces are zero-flux, so their values are ignored.
    """

    kind: Boundary = Boundary.DIRICHLET
    left: BoundaryValue = 0.0
    right: BoundaryValue = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Boundary.parse(self.kind))

    @classmethod
    def dirichlet(cls, left: BoundaryValue = 0.0, right: BoundaryValue = 0.0) -> "AxisBC":
        return cls(Boundary.DIRICHLET, left, right)

    @classmethod
    def neumann(cls) -> "AxisBC":
        return cls(Boundary.NEUMANN)

    def values(self, t: float) -> tuple[float, float]:
        if self.kind is Boundary.NEUMANN:
            return 0.0, 0.0
        return _value(self.left, t), _value(self.right, t)


@dataclass(frozen=True)
class BoundarySpec:
    x: AxisBC = field(default_factory=AxisBC)
    y: Optional[AxisBC] = None

    def boundary_vector(self, grid: GridSpec, t: float, axis: str = "x") -> np.ndarray:
        """Unscaled Dirichlet data on the boundary-adjacent entries of ``axis``."""
        out = np.zeros(grid.shape)
        if axis == "x":
            left, right = self.x.values(t)
            out[..., 0] += left
            out[..., -1] += right
        elif axis == "y":
            if grid.dims != 2 or self.y is None:
                raise ValueError("y boundary requested on a 1D setup")
            left, right = self.y.values(t)
            out[0, :] += left
            out[-1, :] += right
        else:
            raise ValueError(f"unknown axis {axis!r}")
        return out.ravel()

    def boundary_sum(self, grid: GridSpec, t: float) -> np.ndarray:
        """``delta_x u_xD + delta_y u_yD`` at time ``t``."""
        out = grid.delta_x * self.boundary_vector(grid, t, "x")
        if grid.dims == 2:
            out = out + grid.delta_y * self.boundary_vector(grid, t, "y")
        return out

    def kinds(self, grid: GridSpec) -> tuple[Boundary, Boundary]:
        y = self.y.kind if self.y is not None else Boundary.DIRICHLET
        return self.x.kind, y


def diffusion_operator(grid: GridSpec, bc: BoundarySpec) -> DecomposedOperator:
    """``delta_x A_x (+ delta_y A_y)`` in decomposed form (no identity added)."""
    bx, by = bc.kinds(grid)
    if grid.dims == 1:
        return decompose_laplacian_1d(grid.mx, bx).scaled(grid.delta_x)
    a_x, a_y = decompose_laplacian_2d(grid.mx, grid.my, bx, by)
    return a_x.scaled(grid.delta_x) + a_y.scaled(grid.delta_y)


def dense_laplacian(grid: GridSpec, bc: BoundarySpec) -> np.ndarray:
    bx, by = bc.kinds(grid)
    return oracle.laplacian_dense(grid, bx, by)


# --- right-hand-side assembly -------------------------------------------------


def _check_length(grid: GridSpec, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.size,):
        raise ValueError(f"expected {grid.size} grid values, got shape {u.shape}")
    return u


def assemble_ie(grid: GridSpec, bc: BoundarySpec, u_k, t_next: float, source=None):
    """``A = I + L`` and ``b = u^k + bnd(t^{k+1}) (+ dt f)``."""
    u_k = _check_length(grid, u_k)
    A = DecomposedOperator.identity(grid.n_qubits) + diffusion_operator(grid, bc)
    b = u_k + bc.boundary_sum(grid, t_next)
    if source is not None:
        b = b + grid.dt * np.asarray(source, dtype=float)
    return A, b


def assemble_cn(grid: GridSpec, bc: BoundarySpec, u_k, b_prev, t_k: float, t_next: float):
    """``A = 2I + L`` and the Crank-Nicolson right-hand side.

    Eliminating ``L u^k`` with ``(2I + L) u^k = b^{k-1}`` gives
    ``b^k = 4 u^k - b^{k-1} + bnd(t^{k+1}) + bnd(t^k)``. Without ``b_prev``
    (first step only) the right side ``(2I - L) u^0 + ...`` is built directly.
    """
    u_k = _check_length(grid, u_k)
    A = DecomposedOperator.identity(grid.n_qubits, 2.0) + diffusion_operator(grid, bc)
    bnd = bc.boundary_sum(grid, t_next) + bc.boundary_sum(grid, t_k)
    if b_prev is None:
        if not np.isclose(t_k, grid.times[0]):
            raise StateError("Crank-Nicolson step needs the previous right-hand side")
        b = 4.0 * u_k - A.apply(u_k) + bnd
    else:
        b = 4.0 * u_k - np.asarray(b_prev, dtype=float) + bnd
    return A, b


# --- per-step linear solvers ------------------------------------------------


@dataclass
class StepSolve:
    solution: np.ndarray
    cost: float = 0.0
    n_function_evals: int = 0
    n_iterations: int = 0
    converged: bool = True
    n_terms: int = 0
    n_optimizer_calls: int = 0


class VariationalSolver:
    """Carries ansatz angles from one solve to the next.

    ``b`` is normalized before encoding and its norm multiplied back into the
    returned solution. With ``warm_start=False`` every solve after the first
    starts from fresh random angles.
    """

    def __init__(
        self, n_qubits: int, layers: int, tol: float = DEFAULT_TOL,
        max_evals: int = DEFAULT_MAX_EVALS, seed=None, warm_start: bool = True,
    ):
        if layers < 1:
            raise ValueError("layers must be >= 1")
        if layers < min_layers(n_qubits):
            log.warning("%d layers is below the 2^n/n heuristic (%.1f) for %d qubits",
                        layers, min_layers(n_qubits), n_qubits)
        self.n_qubits = n_qubits
        self.layers = layers
        self.tol = tol
        self.max_evals = max_evals
        self.warm_start = warm_start
        self.rng = np.random.default_rng(seed)
        self.params = AnsatzParams.random(n_qubits, layers, self.rng)
        self._used = False

    def solve(self, A: DecomposedOperator, b) -> StepSolve:
        if self._used and not self.warm_start:
            self.params = AnsatzParams.random(self.n_qubits, self.layers, self.rng)
        self._used = True
        try:
            enc = encode(b)
        except DegenerateInputError:
            return StepSolve(np.zeros(len(b)), n_terms=A.n_terms)
        if A.is_scalar and A.identity_coefficient != 0:
            # A = c I: the solution is b / c, nothing to optimize
            return StepSolve(np.asarray(b, float) / A.identity_coefficient,
                             -0.5 / A.identity_coefficient, n_terms=A.n_terms)
        res = vqls_solve(A, enc.state, self.params, tol=self.tol, max_evals=self.max_evals)
        self.params = res.theta_opt
        return StepSolve(
            enc.norm * res.solution, res.cost, res.n_function_evals,
            res.n_iterations, res.converged, A.n_terms, res.n_optimizer_calls,
        )


class DenseSolver:
    """Drop-in replacement that solves the assembled matrix by LU."""

    def solve(self, A: DecomposedOperator, b) -> StepSolve:
        b = np.asarray(b, dtype=float)
        if not np.any(b):
            return StepSolve(np.zeros(len(b)), n_terms=A.n_terms)
        x = oracle.lu_solve(A.dense(), b)
        bn = np.linalg.norm(b)
        with np.errstate(over="ignore", invalid="ignore"):
            # a blown-up step is caught by the caller's finiteness check
            cost = -0.5 * float(x @ b) / bn**2
        return StepSolve(x, cost, n_terms=A.n_terms)


def make_solver(mode: str, n_qubits: int, layers: int, tol=DEFAULT_TOL,
                max_evals=DEFAULT_MAX_EVALS, seed=None, warm_start=True):
    if mode == "quantum":
        return VariationalSolver(n_qubits, layers, tol, max_evals, seed, warm_start)
    if mode == "oracle":
        return DenseSolver()
    raise ValueError(f"unknown mode {mode!r}; use 'quantum' or 'oracle'")


# --- metrics ------------------------------------------------------------------


def trace_error(psi, u_ref) -> float:
    """``sqrt(1 - |<psi|u_hat>|^2)`` for a state (or any nonzero vector) ``psi``."""
    u_ref = np.asarray(u_ref, dtype=float)
    nref = np.linalg.norm(u_ref)
    if nref == 0:
        raise DegenerateInputError("reference vector is zero")
    amps = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
    npsi = np.linalg.norm(amps)
    if npsi == 0:
        raise DegenerateInputError("state vector is zero")
    a, r = amps / npsi, u_ref / nref
    # sin of the angle via the rejection norm; 1 - ov**2 cancels near zero
    return float(min(np.linalg.norm(a - np.vdot(r, a) * r), 1.0))


def _pair_error(u, ref) -> float:
    # two zero vectors agree; one zero vector is maximally wrong
    if not np.any(ref):
        return 0.0 if not np.any(u) else 1.0
    if not np.any(u):
        return 1.0
    return trace_error(u, ref)


def exact_heat(x, t, D, L=1.0):
    """``sin(pi x / L) exp(-D t (pi / L)^2)``."""
    return np.sin(np.pi * np.asarray(x) / L) * np.exp(-D * t * (np.pi / L) ** 2)


@dataclass
class StepMetrics:
    step: int
    cost: float
    n_function_evals: int
    n_iterations: int
    trace_error: float = float("nan")
    local_trace_error: float = float("nan")
    converged: bool = True
    n_terms: int = 0
    n_optimizer_calls: int = 0


@dataclass
class TimeSeries:
    scheme: str
    times: np.ndarray
    snapshots: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    oracle_snapshots: Optional[list] = None
    n_params: int = 0

    @property
    def n_t(self) -> int:
        return len(self.metrics)

    @property
    def flagged_steps(self) -> list[int]:
        return [m.step for m in self.metrics if not m.converged]

    @property
    def mean_trace_error(self) -> float:
        return float(np.mean([m.trace_error for m in self.metrics]))

    @property
    def mean_local_trace_error(self) -> float:
        return float(np.mean([m.local_trace_error for m in self.metrics]))

    @property
    def mean_function_evals(self) -> float:
        """Total optimizer evaluations divided by the number of steps."""
        return float(sum(m.n_function_evals for m in self.metrics)) / max(self.n_t, 1)

    @property
    def mean_iterations(self) -> float:
        return float(np.mean([m.n_iterations for m in self.metrics]))

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]


def step_metrics(step_index: int, step: StepSolve) -> StepMetrics:
    return StepMetrics(
        step_index, step.cost, step.n_function_evals, step.n_iterations,
        converged=step.converged, n_terms=step.n_terms, n_optimizer_calls=step.n_optimizer_calls,
    )


# --- time loop ----------------------------------------------------------------


def _march(grid, bc, u0, scheme, solver, with_oracle):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    u = _check_length(grid, u0).copy()
    times = grid.times
    ref_run = None
    if with_oracle:
        ref_run = oracle.classical_evolve(scheme, grid, bc, u, laplacian=dense_laplacian(grid, bc))
    series = TimeSeries(scheme, times.copy(), [u.copy()], [], None if ref_run is None else ref_run.snapshots)
    dense_step = DenseSolver()
    b_prev = None
    for k in range(grid.n_t):
        if scheme == "IE":
            A, b = assemble_ie(grid, bc, u, times[k + 1])
        else:
            A, b = assemble_cn(grid, bc, u, b_prev, times[k], times[k + 1])
            b_prev = b
        step = solver.solve(A, b)
        metrics = step_metrics(k + 1, step)
        if ref_run is not None:
            metrics.trace_error = _pair_error(step.solution, ref_run.snapshots[k + 1])
            metrics.local_trace_error = _pair_error(step.solution, dense_step.solve(A, b).solution)
        if not step.converged:
            log.warning("step %d: variational solve did not converge", k + 1)
        u = step.solution
        series.snapshots.append(u.copy())
        series.metrics.append(metrics)
    return series


def evolve(
    grid: GridSpec, bc: BoundarySpec, u0, scheme: str = "IE", layers: int = 3,
    tol: float = DEFAULT_TOL, seed=None, warm_start: bool = True, mode: str = "quantum",
    max_evals: int = DEFAULT_MAX_EVALS, with_oracle: bool = True,
) -> TimeSeries:
    """Time-march ``u0`` with variational (or dense, ``mode="oracle"``) solves.

    Trace errors are measured against the classically propagated dense
    solution (cumulative) and against a dense solve of the same step
    (local). Steps whose solve did not converge are listed in
    ``TimeSeries.flagged_steps``.
    """
    solver = make_solver(mode, grid.n_qubits, layers, tol, max_evals, seed, warm_start)
    series = _march(grid, bc, u0, scheme, solver, with_oracle)
    series.n_params = grid.n_qubits * layers if mode == "quantum" else 0
    return series


def evolve_2d(
    grid: GridSpec, bc: BoundarySpec, u0, layers: int = 6, tol: float = DEFAULT_TOL,
    seed=None, warm_start: bool = True, mode: str = "quantum",
    max_evals: int = DEFAULT_MAX_EVALS, with_oracle: bool = True,
) -> TimeSeries:
    """Implicit Euler on a 2D grid with the combined ``A_x``/``A_y`` operator."""
    if grid.dims != 2:
        raise ValueError("evolve_2d needs a 2D grid")
    if bc.y is None:
        raise ValueError("evolve_2d needs boundary data for both axes")
    return evolve(grid, bc, u0, "IE", layers, tol, seed, warm_start, mode, max_evals, with_oracle)
