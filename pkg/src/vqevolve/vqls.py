"""Variational linear solve over a hardware-efficient RY/CX ansatz.

For ``A x = b`` with ``A`` positive definite the cost

    E(theta) = -1/2 |<psi(theta)|b>|^2 / <psi(theta)|A|psi(theta)>

is minimized; at the optimum ``r * A |psi> = |b>`` with
``r = |<psi|b>| / <psi|A|psi>``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .operators import DecomposedOperator, NonPositiveExpectationError, expect_operator
from .state import StateVector, apply_cx, apply_ry, inner, overlap_via_superposition

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_EVALS = 10_000
DEFAULT_MEMORY = 20
_FTOL = 0.0


class SingularCostError(NonPositiveExpectationError):
    """The cost denominator ``<psi|A|psi>`` is not positive."""


@dataclass(frozen=True)
class AnsatzParams:
    n_qubits: int
    layers: int
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(self.layers, self.n_qubits)
        if not np.all(np.isfinite(theta)):
            raise ValueError("ansatz angles must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def zeros(cls, n_qubits: int, layers: int) -> "AnsatzParams":
        return cls(n_qubits, layers, np.zeros((layers, n_qubits)))

    @classmethod
    def random(cls, n_qubits: int, layers: int, rng=None) -> "AnsatzParams":
        """Angles drawn uniformly from ``[0, 2 pi)``."""
        rng = np.random.default_rng(rng)
        return cls(n_qubits, layers, rng.uniform(0.0, 2 * np.pi, size=(layers, n_qubits)))

    @property
    def n_params(self) -> int:
        return self.layers * self.n_qubits

    def with_theta(self, theta) -> "AnsatzParams":
        return AnsatzParams(self.n_qubits, self.layers, theta)


@dataclass(frozen=True)
class SolveResult:
    theta_opt: AnsatzParams
    r_opt: float
    solution: np.ndarray = field(repr=False)
    cost: float
    n_function_evals: int
    n_iterations: int
    converged: bool
    grad_norm: float = float("nan")
    n_terms: int = 0
    n_optimizer_calls: int = 0

    @property
    def state(self) -> np.ndarray:
        return _kernels.ansatz_state(self.theta_opt.theta, self.theta_opt.n_qubits)


def min_layers(n_qubits: int) -> float:
    """Layer count below which the ansatz cannot span the solution space."""
    return 2**n_qubits / n_qubits


def prepare_ansatz(params: AnsatzParams) -> StateVector:
    """Gate-by-gate ``U(theta)|0..0>``: per layer RY on every qubit, then a CX chain."""
    state = StateVector.zero(params.n_qubits)
    for layer in params.theta:
        for q, angle in enumerate(layer):
            state = apply_ry(state, q, angle)
        for q in range(params.n_qubits - 1):
            state = apply_cx(state, q, q + 1)
    return state


def _check(params: AnsatzParams, A: DecomposedOperator, b: StateVector):
    if not (params.n_qubits == A.n_qubits == b.n_qubits):
        raise ValueError(
            f"qubit counts differ: ansatz {params.n_qubits}, A {A.n_qubits}, b {b.n_qubits}"
        )


def cost(params: AnsatzParams, A: DecomposedOperator, b: StateVector) -> float:
    _check(params, A, b)
    psi = prepare_ansatz(params)
    denom = expect_operator(psi, A)
    if denom <= 0:
        raise SingularCostError(f"<psi|A|psi> = {denom} is not positive")
    return -0.5 * abs(inner(psi, b)) ** 2 / denom


def norm_r(params: AnsatzParams, A: DecomposedOperator, b: StateVector, method: str = "inner") -> float:
    """``|<psi|b>| / <psi|A|psi>``; ``method="superposition"`` uses the ancilla route."""
    _check(params, A, b)
    psi = prepare_ansatz(params)
    denom = expect_operator(psi, A)
    if denom <= 0:
        raise SingularCostError(f"<psi|A|psi> = {denom} is not positive")
    if method == "inner":
        overlap = abs(inner(psi, b))
    elif method == "superposition":
        overlap = overlap_via_superposition(psi, b)
    else:
        raise ValueError(f"unknown overlap method {method!r}")
    return overlap / denom


def _stencil_args(A: DecomposedOperator):
    src, coef, weights = A.stencil
    return A.identity_coefficient, src, coef * weights[:, None]


def gradient(params: AnsatzParams, A: DecomposedOperator, b: StateVector, method: str = "adjoint") -> np.ndarray:
    """``dE/dtheta`` with the same shape as ``params.theta``.

    ``adjoint`` differentiates the statevector exactly; ``parameter_shift``
    only uses cost-type evaluations at shifted angles, as a device would.
    """
    _check(params, A, b)
    bvec = np.ascontiguousarray(b.real)
    if method == "adjoint":
        c, src, wcoef = _stencil_args(A)
        value, grad, _, denom, _ = _kernels.cost_and_gradient(
            params.theta, params.n_qubits, c, src, wcoef, bvec
        )
        if denom <= 0:
            raise SingularCostError(f"<psi|A|psi> = {denom} is not positive")
        return grad
    if method == "parameter_shift":
        return _parameter_shift_gradient(params, A, bvec)
    raise ValueError(f"unknown gradient method {method!r}")


def _parameter_shift_gradient(params, A, bvec):
    # numerator |<psi|b>|^2 and denominator <psi|A|psi> are both expectation
    # values of fixed observables, so each obeys the two-term pi/2 shift rule
    def parts(theta):
        psi = _kernels.ansatz_state(theta, params.n_qubits)
        return float(psi @ bvec) ** 2, float(psi @ A.apply(psi))

    num, den = parts(params.theta)
    if den <= 0:
        raise SingularCostError(f"<psi|A|psi> = {den} is not positive")
    grad = np.zeros_like(params.theta)
    for idx in np.ndindex(params.theta.shape):
        plus = params.theta.copy()
        minus = params.theta.copy()
        plus[idx] += np.pi / 2
        minus[idx] -= np.pi / 2
        (np_, dp), (nm, dm) = parts(plus), parts(minus)
        dnum = 0.5 * (np_ - nm)
        dden = 0.5 * (dp - dm)
        grad[idx] = -0.5 * (dnum * den - num * dden) / den**2
    return grad


class _Objective:
    """Counting wrapper handing ``(E, dE/dtheta)`` to the optimizer."""

    def __init__(self, A: DecomposedOperator, b: np.ndarray, params: AnsatzParams):
        self.n = params.n_qubits
        self.shape = params.theta.shape
        self.c, self.src, self.wcoef = _stencil_args(A)
        self.b = np.ascontiguousarray(b, dtype=float)
        self.count = 0
        self.first_value = float("nan")

    def evaluate(self, x):
        theta = np.ascontiguousarray(x, dtype=float).reshape(self.shape)
        return _kernels.cost_and_gradient(theta, self.n, self.c, self.src, self.wcoef, self.b)

    def __call__(self, x):
        self.count += 1
        value, grad, _, denom, _ = self.evaluate(x)
        if denom <= 0:
            raise SingularCostError(f"<psi|A|psi> = {denom} is not positive")
        if self.count == 1:
            self.first_value = value
        return value, grad.ravel()


def function_evals(optimizer_calls: int, n_params: int) -> int:
    """Cost evaluations a device would run: one value plus ``2 n_params``
    parameter-shifted values per value-and-gradient request."""
    return optimizer_calls * (1 + 2 * n_params)


def vqls_solve(
    A: DecomposedOperator,
    b: StateVector,
    theta0: AnsatzParams,
    tol: float = DEFAULT_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
    memory: int = DEFAULT_MEMORY,
) -> SolveResult:
    """Minimize the cost with limited-memory BFGS from ``theta0``.

    Converged means the last accepted step changed the cost by less than
    ``tol`` and the gradient max-norm is below ``tol``. Running out of
    evaluations yields ``converged=False`` rather than an exception.
    """
    _check(theta0, A, b)
    if tol <= 0:
        raise ValueError("tol must be positive")
    objective = _Objective(A, b.real, theta0)
    history: list[float] = []

    def record(intermediate_result):
        history.append(float(intermediate_result.fun))

    # ftol = 0: near the optimum the cost stops resolving decreases before
    # the gradient reaches tol, so only the gradient test may stop early
    res = minimize(
        objective,
        theta0.theta.ravel().copy(),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={
            "ftol": _FTOL,
            "gtol": tol,
            "maxfun": max_evals,
            "maxiter": max_evals,
            "maxcor": memory,
        },
    )
    n_iter = int(res.nit)
    x = res.x

    value, grad, overlap, denom, _ = objective.evaluate(x)
    if denom <= 0:
        raise SingularCostError(f"<psi|A|psi> = {denom} is not positive")
    gmax = float(np.max(np.abs(grad)))
    if len(history) >= 2:
        delta = abs(history[-1] - history[-2])
    elif history:
        delta = abs(history[-1] - objective.first_value)
    else:
        # no accepted step: theta0 already met the gradient test
        delta = 0.0
    converged = gmax < tol and delta < tol

    theta = x.reshape(theta0.theta.shape).copy()
    if overlap < 0:
        # RY(a + 2 pi) = -RY(a): flip the global sign so <psi|b> >= 0
        theta[0, 0] += -2 * np.pi if theta[0, 0] >= 0 else 2 * np.pi
        overlap = -overlap
    params = theta0.with_theta(theta)
    psi = _kernels.ansatz_state(params.theta, params.n_qubits)
    r = overlap / denom
    if not converged:
        log.debug("vqls did not converge: |grad|=%.2e, |dE|=%.2e, evals=%d", gmax, delta, objective.count)
    return SolveResult(
        theta_opt=params,
        r_opt=float(r),
        solution=r * psi,
        cost=float(value),
        n_function_evals=function_evals(objective.count, theta0.n_params),
        n_iterations=n_iter,
        converged=converged,
        grad_norm=gmax,
        n_terms=A.n_terms,
        n_optimizer_calls=objective.count,
    )


def zero_solution(theta0: AnsatzParams) -> SolveResult:
    """Result for a zero right-hand side: no optimization is run."""
    return SolveResult(
        theta_opt=theta0,
        r_opt=0.0,
        solution=np.zeros(2**theta0.n_qubits),
        cost=0.0,
        n_function_evals=0,
        n_iterations=0,
        converged=True,
        grad_norm=0.0,
    )


def residual(A_dense: np.ndarray, result: SolveResult, b_vector) -> float:
    """Relative residual ``||A x - b|| / ||b||`` of a solve (dense check)."""
    b_vector = np.asarray(b_vector, dtype=float)
    return float(np.linalg.norm(A_dense @ result.solution - b_vector) / np.linalg.norm(b_vector))


__all__ = [
    "AnsatzParams",
    "SolveResult",
    "SingularCostError",
    "prepare_ansatz",
    "cost",
    "norm_r",
    "gradient",
    "vqls_solve",
    "zero_solution",
    "min_layers",
    "function_evals",
    "residual",
]
