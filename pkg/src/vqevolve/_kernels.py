"""Compiled real-amplitude kernels for the hardware-efficient ansatz.

The RY/CX ansatz keeps amplitudes real, so these work on float64 arrays.
Gradients use the adjoint method: one forward pass, then the state and the
cost co-vector are walked back through the inverse gates together.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _ry(psi, qubit, angle):
    c = np.cos(0.5 * angle)
    s = np.sin(0.5 * angle)
    bit = 1 << qubit
    for i in range(psi.shape[0]):
        if i & bit == 0:
            j = i | bit
            a0 = psi[i]
            a1 = psi[j]
            psi[i] = c * a0 - s * a1
            psi[j] = s * a0 + c * a1


@njit(cache=True)
def _cx(psi, control, target):
    cbit = 1 << control
    tbit = 1 << target
    for i in range(psi.shape[0]):
        if (i & cbit) and not (i & tbit):
            j = i | tbit
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def ansatz_state(theta, n):
    """Amplitudes of ``U(theta)|0..0>``; ``theta`` has shape ``(layers, n)``."""
    psi = np.zeros(1 << n)
    psi[0] = 1.0
    for layer in range(theta.shape[0]):
        for q in range(n):
            _ry(psi, q, theta[layer, q])
        for q in range(n - 1):
            _cx(psi, q, q + 1)
    return psi


@njit(cache=True)
def ansatz_vjp(theta, n, psi, cotangent):
    """``d(cotangent . psi(theta)) / d theta`` given the forward state ``psi``."""
    phi = psi.copy()
    lam = cotangent.copy()
    grad = np.zeros_like(theta)
    dim = 1 << n
    for layer in range(theta.shape[0] - 1, -1, -1):
        for q in range(n - 2, -1, -1):
            _cx(phi, q, q + 1)
            _cx(lam, q, q + 1)
        # RY(a) = exp(-i a Y / 2): d/da acts as J/2 with J = [[0, -1], [1, 0]]
        for q in range(n):
            bit = 1 << q
            acc = 0.0
            for i in range(dim):
                if i & bit == 0:
                    j = i | bit
                    acc += lam[j] * phi[i] - lam[i] * phi[j]
            grad[layer, q] = 0.5 * acc
        for q in range(n):
            _ry(phi, q, -theta[layer, q])
            _ry(lam, q, -theta[layer, q])
    return grad


@njit(cache=True)
def apply_stencil(v, identity_coefficient, src, wcoef):
    """``A v`` for an operator stored as stacked weighted gathers."""
    out = identity_coefficient * v
    for t in range(src.shape[0]):
        for i in range(v.shape[0]):
            out[i] += wcoef[t, i] * v[src[t, i]]
    return out


@njit(cache=True)
def cost_and_gradient(theta, n, identity_coefficient, src, wcoef, b):
    """Cost ``-1/2 <psi|b>^2 / <psi|A|psi>`` and its gradient.

    Returns ``(cost, grad, overlap, denominator, psi)``; the caller must
    reject non-positive denominators.
    """
    psi = ansatz_state(theta, n)
    a_psi = apply_stencil(psi, identity_coefficient, src, wcoef)
    overlap = 0.0
    denom = 0.0
    for i in range(psi.shape[0]):
        overlap += psi[i] * b[i]
        denom += psi[i] * a_psi[i]
    if denom <= 0.0:
        return np.inf, np.zeros_like(theta), overlap, denom, psi
    cost = -0.5 * overlap * overlap / denom
    # dE/dpsi for real psi and symmetric A
    cot = (-overlap / denom) * b + (overlap * overlap / (denom * denom)) * a_psi
    grad = ansatz_vjp(theta, n, psi, cot)
    return cost, grad, overlap, denom, psi
