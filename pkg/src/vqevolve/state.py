"""Minimal statevector simulator.

Qubit ordering is little-endian: qubit ``q`` is bit ``q`` of the basis index,
so qubit 0 is the least-significant bit. Tensor-product factor lists elsewhere
in the package are written most-significant factor first, i.e. the last factor
acts on qubit 0. This matches ``np.kron(f[0], np.kron(f[1], ...))``.

States are immutable; every gate returns a new :class:`StateVector`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_ATOL = 1e-12


class DegenerateInputError(ValueError):
    """Raised when an input vector carries no information (e.g. all zeros)."""


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_real(cls, vector) -> "StateVector":
        """Wrap an already-normalized real vector."""
        vector = np.asarray(vector, dtype=float)
        return cls(_n_qubits_for(len(vector)), vector)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def real(self) -> np.ndarray:
        """Real part of the amplitudes (the physical solution space here)."""
        return self.amplitudes.real.copy()

    def is_real(self, atol: float = NORM_ATOL) -> bool:
        return bool(np.max(np.abs(self.amplitudes.imag)) <= atol)


@dataclass(frozen=True)
class EncodedState:
    state: StateVector
    norm: float
    phase_correction: complex = 1.0 + 0.0j

    def decode(self) -> np.ndarray:
        """Rebuild the original (unnormalized) real vector."""
        return self.norm * (self.phase_correction * self.state.amplitudes).real


def _n_qubits_for(length: int) -> int:
    if length < 2 or length & (length - 1):
        raise ValueError(f"length must be a power of two >= 2, got {length}")
    return length.bit_length() - 1


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubits")


def _as_tensor(state: StateVector) -> np.ndarray:
    # axis 0 is the most-significant qubit
    return state.amplitudes.reshape((2,) * state.n_qubits)


def apply_ry(state: StateVector, qubit: int, angle: float) -> StateVector:
    """Apply ``RY(angle) = [[cos a/2, -sin a/2], [sin a/2, cos a/2]]`` to ``qubit``."""
    _check_qubit(state, qubit)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    psi = _as_tensor(state)
    axis = state.n_qubits - 1 - qubit
    a0 = np.take(psi, 0, axis=axis)
    a1 = np.take(psi, 1, axis=axis)
    out = np.stack([c * a0 - s * a1, s * a0 + c * a1], axis=axis)
    return StateVector(state.n_qubits, out.reshape(-1))


def apply_cx(state: StateVector, control: int, target: int) -> StateVector:
    """Flip ``target`` on every basis state whose ``control`` bit is set."""
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise ValueError("control and target must differ")
    idx = np.arange(state.dim)
    src = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    return StateVector(state.n_qubits, state.amplitudes[src])


def shift_permutation(n_qubits: int, lo: int, hi: int, inverse: bool = False) -> np.ndarray:
    """Index map ``i -> S(i)`` of the cyclic shift on the bit-field ``[lo, hi)``.

    The field value is incremented (decremented if ``inverse``) modulo
    ``2**(hi - lo)``; bits outside the field are untouched.
    """
    if not 0 <= lo < hi <= n_qubits:
        raise ValueError(f"invalid qubit range [{lo}, {hi}) for {n_qubits} qubits")
    idx = np.arange(2**n_qubits)
    mask = (1 << (hi - lo)) - 1
    field_ = (idx >> lo) & mask
    step = -1 if inverse else 1
    return (idx & ~(mask << lo)) | (((field_ + step) & mask) << lo)


def apply_shift(state: StateVector, qubit_range, inverse: bool = False) -> StateVector:
    lo, hi = qubit_range
    dest = shift_permutation(state.n_qubits, lo, hi, inverse)
    out = np.empty_like(state.amplitudes)
    out[dest] = state.amplitudes
    return StateVector(state.n_qubits, out)


def encode(vector) -> EncodedState:
    """Amplitude-encode a real vector.

    Amplitudes are injected directly (exact statevector mode), so there is no
    circuit-induced global phase to undo: ``phase_correction`` is 1 and the
    signs of the input survive in the real amplitudes.
    """
    vector = np.asarray(vector, dtype=float)
    if vector.ndim != 1:
        raise ValueError("expected a 1-D vector")
    n = _n_qubits_for(len(vector))
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise DegenerateInputError("cannot encode an all-zero vector")
    return EncodedState(state=StateVector(n, vector / norm), norm=norm)


def remove_global_phase(amplitudes, reference) -> tuple[np.ndarray, complex]:
    """Rotate complex ``amplitudes`` onto the real axis.

    The phase is taken from the complex argument of the overlap with a real
    ``reference`` vector, which fixes the sign that the state alone cannot.
    Returns the real amplitudes and the unit factor that was applied.
    """
    amplitudes = np.asarray(amplitudes, dtype=complex)
    ov = np.vdot(amplitudes, np.asarray(reference, dtype=float))
    if ov == 0:
        raise DegenerateInputError("state is orthogonal to the reference")
    phase = ov / abs(ov)
    return (phase * amplitudes).real, complex(phase)


def inner(a: StateVector, b: StateVector) -> complex:
    """Return ``<a|b>``."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def overlap_via_superposition(psi: StateVector, b: StateVector) -> float:
    """``|<psi|b>|`` from X-expectations on an ancilla-extended register.

    Builds ``(|0>|psi> + |1>|b>)/sqrt(2)`` and ``(|0>|psi> + i|1>|b>)/sqrt(2)``
    with the ancilla as the most-significant qubit and combines
    ``<X (x) I>`` of both into the complex overlap.
    """
    if psi.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {psi.n_qubits} vs {b.n_qubits}")
    n = psi.n_qubits

    def x_on_ancilla(lower, upper):
        joint = StateVector(n + 1, np.concatenate([lower, upper]) / np.sqrt(2.0))
        amps = joint.amplitudes
        half = 2**n
        flipped = np.concatenate([amps[half:], amps[:half]])
        return float(np.vdot(amps, flipped).real)

    # <X> is Re<psi|b> for the first register and -Im<psi|b> for the i|b> one
    x_b = x_on_ancilla(psi.amplitudes, b.amplitudes)
    x_ib = x_on_ancilla(psi.amplitudes, 1j * b.amplitudes)
    return abs(x_b - 1j * x_ib)
