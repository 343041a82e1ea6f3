"""Classical dense reference solvers.

Everything here is built from the tridiagonal/central-difference matrices
directly, never from the Hamiltonian decompositions, so it can be used to
check them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .operators import Boundary, divergence_dense, laplacian_1d_dense

SCHEME_THETA = {"explicit": 0.0, "IE": 1.0, "CN": 0.5}


class StabilityError(ValueError):
    """Explicit stepping requested outside its stability bound."""


def lu_solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting; raise on a singular ``A``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    with warnings.catch_warnings():
        # singularity is reported below as LinAlgError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() <= np.finfo(float).eps * max(diag.max(), 1.0) * A.shape[0]:
        raise np.linalg.LinAlgError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), b)


def laplacian_dense(grid, boundary_x="D", boundary_y="D") -> np.ndarray:
    """Scaled operator ``delta_x (I (x) A_x) + delta_y (A_y (x) I)`` for a grid."""
    bx, by = Boundary.parse(boundary_x), Boundary.parse(boundary_y)
    if grid.dims == 1:
        return grid.delta_x * laplacian_1d_dense(grid.mx, bx)
    nx, ny = 2**grid.mx, 2**grid.my
    return grid.delta_x * np.kron(np.eye(ny), laplacian_1d_dense(grid.mx, bx)) + grid.delta_y * np.kron(
        laplacian_1d_dense(grid.my, by), np.eye(nx)
    )


@dataclass
class OracleRun:
    scheme: str
    times: np.ndarray
    snapshots: list = field(default_factory=list)
    matrices: dict = field(default_factory=dict)
    residuals: list = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]


def classical_evolve(scheme: str, grid, bc, u0, source=None, laplacian=None) -> OracleRun:
    """Dense theta-scheme marching ``(I + th L) u' = (I - (1-th) L) u + bnd + dt f``.

    ``bc.boundary_sum(grid, t)`` supplies the scaled Dirichlet data
    ``delta_x u_xD + delta_y u_yD``; ``source(u, t)`` (optional) is evaluated
    explicitly at the old time level.
    """
    if scheme not in SCHEME_THETA:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEME_THETA)}")
    th = SCHEME_THETA[scheme]
    if laplacian is None:
        kinds = bc.kinds(grid) if hasattr(bc, "kinds") else ("D", "D")
        L = laplacian_dense(grid, *kinds)
    else:
        L = np.asarray(laplacian)
    if scheme == "explicit":
        total = grid.delta_x + (grid.delta_y if grid.dims == 2 else 0.0)
        if total > 0.5 + 1e-12:
            raise StabilityError(
                f"explicit stepping needs diffusion parameter <= 1/2, got {total}"
            )
    eye = np.eye(L.shape[0])
    lhs = eye + th * L
    rhs_op = eye - (1.0 - th) * L
    u = np.asarray(u0, dtype=float).copy()
    run = OracleRun(scheme, grid.times.copy(), [u.copy()], {"lhs": lhs, "rhs": rhs_op})
    for k in range(grid.n_t):
        t0, t1 = grid.times[k], grid.times[k + 1]
        bnd = th * bc.boundary_sum(grid, t1) + (1.0 - th) * bc.boundary_sum(grid, t0)
        rhs = rhs_op @ u + bnd
        if source is not None:
            rhs = rhs + grid.dt * np.asarray(source(u, t0))
        if th == 0.0:
            u = rhs
        else:
            u = lu_solve(lhs, rhs)
            run.residuals.append(float(np.linalg.norm(lhs @ u - rhs) / max(np.linalg.norm(rhs), 1e-300)))
        run.snapshots.append(u.copy())
    return run


def heat_mode_decay(n: int, D: float, dx: float) -> float:
    """Decay rate of ``sin(pi x)`` under the Dirichlet second-difference operator.

    With nodes ``x_i = (i + 1) dx`` and ``(2**n + 1) dx = L`` the sampled sine
    is an exact eigenvector; the rate replaces ``D (pi/L)^2`` of the PDE.
    """
    N = 2**n
    return 4.0 * D / dx**2 * np.sin(np.pi / (2 * (N + 1))) ** 2


def semidiscrete_heat(x, t, D, n, dx, L=1.0) -> np.ndarray:
    """Time-exact solution of the spatially discretized heat equation for sine data."""
    return np.sin(np.pi * np.asarray(x) / L) * np.exp(-heat_mode_decay(n, D, dx) * t)


def semi_implicit_rd(u0_pair, deltas, boundary_vectors, source, dt, n_t, laplacians) -> list:
    """Dense semi-implicit two-component reaction-diffusion marching.

    ``(I + d_i L_i) u_i' = u_i + d_i g_i + dt f_i(u_1, u_2)`` with the source
    frozen at the old level. Returns a list of ``(u1, u2)`` snapshots.
    """
    u1, u2 = (np.asarray(u, dtype=float).copy() for u in u0_pair)
    lhs = [np.eye(len(u1)) + d * Lm for d, Lm in zip(deltas, laplacians)]
    out = [(u1.copy(), u2.copy())]
    for k in range(n_t):
        with np.errstate(over="ignore", invalid="ignore"):
            f1, f2 = source(u1, u2)
        if not (np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
            raise FloatingPointError(f"reaction source is not finite at step {k + 1}")
        r1 = u1 + deltas[0] * boundary_vectors[0] + dt * f1
        r2 = u2 + deltas[1] * boundary_vectors[1] + dt * f2
        u1, u2 = lu_solve(lhs[0], r1), lu_solve(lhs[1], r2)
        out.append((u1.copy(), u2.copy()))
    return out


def fully_implicit_linear_rd(u0_pair, K, delta, dt, n_t, laplacian, boundary_vectors=(None, None)) -> list:
    """Dense ``(I + delta I (x) L - dt K (x) I) u' = u + delta g`` on stacked components."""
    K = np.asarray(K, dtype=float)
    N = laplacian.shape[0]
    lhs = np.eye(2 * N) + delta * np.kron(np.eye(2), laplacian) - dt * np.kron(K, np.eye(N))
    g = np.concatenate([np.zeros(N) if v is None else np.asarray(v, float) for v in boundary_vectors])
    u = np.concatenate([np.asarray(c, dtype=float) for c in u0_pair])
    out = [u.copy()]
    for _ in range(n_t):
        u = lu_solve(lhs, u + delta * g)
        out.append(u.copy())
    return out


# --- projection method ---------------------------------------------------------


def flow_matrices(mx: int, my: int, dx: float, dy: float) -> dict:
    """Dense 2D Laplacians and central-difference matrices (x in the low bits)."""
    ix, iy = np.eye(2**mx), np.eye(2**my)
    return {
        "Ax_D": np.kron(iy, laplacian_1d_dense(mx, "D")),
        "Ay_D": np.kron(laplacian_1d_dense(my, "D"), ix),
        "Ax_N": np.kron(iy, laplacian_1d_dense(mx, "N")),
        "Ay_N": np.kron(laplacian_1d_dense(my, "N"), ix),
        "Bx_D": np.kron(iy, divergence_dense(mx, "D", dx)),
        "By_D": np.kron(divergence_dense(my, "D", dy), ix),
        "Bx_N": np.kron(iy, divergence_dense(mx, "N", dx)),
        "By_N": np.kron(divergence_dense(my, "N", dy), ix),
    }


def pressure_matrix(mats: dict, dt: float, dx: float, dy: float, regularize: bool = True) -> np.ndarray:
    dim = mats["Ax_N"].shape[0]
    pin = np.zeros((dim, dim))
    if regularize:
        pin[0, 0] = 0.5
    return dt / dx**2 * (mats["Ax_N"] + pin) + dt / dy**2 * (mats["Ay_N"] + pin)


def divergence_norm(u, v, mats: dict) -> float:
    return float(np.linalg.norm(mats["Bx_D"] @ u + mats["By_D"] @ v))


def classical_projection_step(state, return_intermediate: bool = False):
    """One dense predictor/corrector step for a flow state.

    ``state`` needs ``u, v, p, Re, lid_velocity`` and a 2D ``grid`` with
    ``mx, my, dx, dy, dt``. Returns a new state (and the intermediate
    velocities if requested).
    """
    g = state.grid
    mats = flow_matrices(g.mx, g.my, g.dx, g.dy)
    nx, ny = 2**g.mx, 2**g.my
    dim = nx * ny
    dlx = g.dt / (state.Re * g.dx**2)
    dly = g.dt / (state.Re * g.dy**2)
    A_u = np.eye(dim) + dlx * mats["Ax_D"] + dly * mats["Ay_D"]
    F = np.diag(state.u) @ mats["Bx_D"] + np.diag(state.v) @ mats["By_D"]
    lid = np.zeros((ny, nx))
    lid[0, :] = state.lid_velocity
    b_u = (np.eye(dim) - g.dt * F) @ state.u + dly * lid.ravel()
    b_v = (np.eye(dim) - g.dt * F) @ state.v
    u_star = lu_solve(A_u, b_u)
    v_star = lu_solve(A_u, b_v)
    A_p = pressure_matrix(mats, g.dt, g.dx, g.dy)
    b_p = -(mats["Bx_D"] @ u_star + mats["By_D"] @ v_star)
    p = lu_solve(A_p, b_p)
    u_new = u_star - g.dt * mats["Bx_N"] @ p
    v_new = v_star - g.dt * mats["By_N"] @ p
    new = replace(state, u=u_new, v=v_new, p=p)
    if return_intermediate:
        return new, (u_star, v_star)
    return new
