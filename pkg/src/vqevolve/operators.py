"""Operator decompositions into shifted simple Hamiltonians.

A :class:`DecomposedOperator` is ``c * I + sum_t w_t * S_t^dag H_t S_t`` where
each ``H_t`` is a tensor product over ``{I, X, I0, I1}`` and ``S_t`` is either
the identity or a cyclic shift on a qubit range. Every such term has at most
one nonzero entry per row, so it is applied to a vector with a gather and a
mask; no dense matrix is formed on the evaluation path. Dense assembly exists
for oracles and tests.

Factor lists are written most-significant qubit first (see :mod:`.state`).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from .state import StateVector, shift_permutation

FACTORS = ("I", "X", "I0", "I1")

_FACTOR_MATRICES = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "I0": np.array([[1.0, 0.0], [0.0, 0.0]]),
    "I1": np.array([[0.0, 0.0], [0.0, 1.0]]),
}


class Boundary(str, enum.Enum):
    DIRICHLET = "D"
    NEUMANN = "N"

    @classmethod
    def parse(cls, value) -> "Boundary":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        for member in cls:
            if key in (member.value, member.name):
                return member
        raise ValueError(f"unknown boundary type {value!r}")

    @property
    def laplacian_corner(self) -> float:
        """Corner offset in the tridiagonal Laplacian (1 + this on the diagonal)."""
        return 1.0 if self is Boundary.DIRICHLET else 0.0

    @property
    def projector_weight(self) -> float:
        """Weight of the boundary projector term removed under the shift."""
        return 0.0 if self is Boundary.DIRICHLET else 1.0

    @property
    def divergence_corners(self) -> tuple[float, float]:
        """First and last diagonal entries of the central-difference matrix.

        Neumann mirrors the ghost node (``u_{-1} = u_0``, ``u_N = u_{N-1}``),
        so a constant field has zero gradient on every row.
        """
        return (0.0, 0.0) if self is Boundary.DIRICHLET else (-1.0, 1.0)


@dataclass(frozen=True)
class HamiltonianTerm:
    weight: float
    factors: tuple[str, ...]
    shift_range: tuple[int, int] | None = None

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("a term needs at least one factor")
        bad = [f for f in factors if f not in FACTORS]
        if bad:
            raise ValueError(f"unknown factors {bad}; allowed {FACTORS}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "weight", float(self.weight))
        if self.shift_range is not None:
            lo, hi = (int(v) for v in self.shift_range)
            if not 0 <= lo < hi <= len(factors):
                raise ValueError(f"invalid shift range {self.shift_range}")
            object.__setattr__(self, "shift_range", (lo, hi))

    @property
    def n_qubits(self) -> int:
        return len(self.factors)

    @property
    def key(self):
        return self.factors, self.shift_range

    def masks(self) -> tuple[int, int, int]:
        """Bit masks ``(x_mask, proj_mask, proj_value)`` on little-endian indices."""
        x_mask = proj_mask = proj_value = 0
        for pos, f in enumerate(self.factors):
            bit = 1 << (self.n_qubits - 1 - pos)
            if f == "X":
                x_mask |= bit
            elif f == "I0":
                proj_mask |= bit
            elif f == "I1":
                proj_mask |= bit
                proj_value |= bit
        return x_mask, proj_mask, proj_value

    def gather(self) -> tuple[np.ndarray, np.ndarray]:
        """``(src, coef)`` such that ``(S^dag H S v)[i] = coef[i] * v[src[i]]``.

        Unit weight; the term's own weight is applied by the caller.
        """
        n = self.n_qubits
        x_mask, proj_mask, proj_value = self.masks()
        idx = np.arange(2**n)
        if self.shift_range is None:
            fwd = idx
            back = idx
        else:
            fwd = shift_permutation(n, *self.shift_range)
            back = np.argsort(fwd)
        m = fwd
        coef = ((m & proj_mask) == proj_value).astype(float)
        src = back[m ^ x_mask]
        return src, coef

    def dense(self) -> np.ndarray:
        """Dense ``S^dag H S`` (unit weight), built by Kronecker products."""
        h = reduce(np.kron, (_FACTOR_MATRICES[f] for f in self.factors))
        if self.shift_range is None:
            return h
        s = shift_matrix(self.n_qubits, self.shift_range)
        return s.T @ h @ s

    def scaled(self, factor: float) -> "HamiltonianTerm":
        return HamiltonianTerm(self.weight * factor, self.factors, self.shift_range)


def shift_matrix(n_qubits: int, qubit_range=None) -> np.ndarray:
    """Dense cyclic shift permutation matrix (columns map ``i -> S(i)``)."""
    lo, hi = qubit_range if qubit_range is not None else (0, n_qubits)
    dest = shift_permutation(n_qubits, lo, hi)
    s = np.zeros((2**n_qubits, 2**n_qubits))
    s[dest, np.arange(2**n_qubits)] = 1.0
    return s


@dataclass(frozen=True)
class DecomposedOperator:
    n_qubits: int
    identity_coefficient: float
    terms: tuple[HamiltonianTerm, ...] = ()
    boundary: tuple[Boundary, ...] = ()

    def __post_init__(self):
        terms = tuple(self.terms)
        for t in terms:
            if t.n_qubits != self.n_qubits:
                raise ValueError(
                    f"term acts on {t.n_qubits} qubits, operator on {self.n_qubits}"
                )
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "identity_coefficient", float(self.identity_coefficient))
        object.__setattr__(self, "boundary", tuple(Boundary.parse(b) for b in self.boundary))

    @classmethod
    def identity(cls, n_qubits: int, coefficient: float = 1.0) -> "DecomposedOperator":
        return cls(n_qubits, coefficient)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def n_terms(self) -> int:
        """Number of distinct non-identity expectation terms."""
        return len(self.terms)

    @property
    def is_scalar(self) -> bool:
        """True when every term has zero weight, so ``A = c I``."""
        return all(t.weight == 0 for t in self.terms)

    def scaled(self, factor: float) -> "DecomposedOperator":
        return DecomposedOperator(
            self.n_qubits,
            self.identity_coefficient * factor,
            tuple(t.scaled(factor) for t in self.terms),
            self.boundary,
        )

    def __add__(self, other: "DecomposedOperator") -> "DecomposedOperator":
        if not isinstance(other, DecomposedOperator):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot add operators on different qubit counts")
        merged: dict = {}
        for t in self.terms + other.terms:
            if t.key in merged:
                merged[t.key] = merged[t.key] + t.weight
            else:
                merged[t.key] = t.weight
        terms = tuple(HamiltonianTerm(w, f, s) for (f, s), w in merged.items())
        return DecomposedOperator(
            self.n_qubits,
            self.identity_coefficient + other.identity_coefficient,
            terms,
            self.boundary + other.boundary,
        )

    def __mul__(self, factor: float) -> "DecomposedOperator":
        return self.scaled(factor)

    __rmul__ = __mul__

    def with_terms(self, *extra: HamiltonianTerm) -> "DecomposedOperator":
        return self + DecomposedOperator(self.n_qubits, 0.0, extra)

    @cached_property
    def stencil(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stacked unit gathers ``(src[t, i], coef[t, i])`` and term weights."""
        if not self.terms:
            empty = np.zeros((0, self.dim))
            return empty.astype(np.int64), empty, np.zeros(0)
        srcs, coefs = zip(*(t.gather() for t in self.terms))
        weights = np.array([t.weight for t in self.terms])
        return np.array(srcs, dtype=np.int64), np.array(coefs), weights

    def apply(self, vector) -> np.ndarray:
        """``A @ vector`` evaluated term by term."""
        v = np.asarray(vector)
        src, coef, weights = self.stencil
        out = self.identity_coefficient * v
        if len(src):
            out = out + weights @ (coef * v[src])
        return out

    def term_expectations(self, vector) -> np.ndarray:
        """``<v| S^dag H_t S |v>`` per term, unweighted."""
        v = np.asarray(vector)
        src, coef, _ = self.stencil
        return np.real(np.sum(np.conj(v) * coef * v[src], axis=1))

    def expectation(self, vector) -> float:
        """``<v|A|v>`` from the identity offset and the term expectations."""
        _, _, weights = self.stencil
        return float(self.identity_coefficient * np.vdot(vector, vector).real
                     + weights @ self.term_expectations(vector))

    def dense(self) -> np.ndarray:
        """Dense assembly; for oracles and tests only."""
        out = self.identity_coefficient * np.eye(self.dim)
        for t in self.terms:
            out = out + t.weight * t.dense()
        return out


def expect_term(state: StateVector, term: HamiltonianTerm) -> float:
    """``<phi'|H|phi'>`` with ``phi' = S phi`` when the term carries a shift."""
    if term.n_qubits != state.n_qubits:
        raise ValueError(
            f"term acts on {term.n_qubits} qubits, state has {state.n_qubits}"
        )
    src, coef = term.gather()
    v = state.amplitudes
    return float(np.real(np.vdot(v, coef * v[src])))


class NonPositiveExpectationError(ArithmeticError):
    """``<psi|A|psi>`` is not positive, so the variational cost is undefined."""


def expect_operator(state: StateVector, A: DecomposedOperator, require_positive=False) -> float:
    if A.n_qubits != state.n_qubits:
        raise ValueError(f"operator acts on {A.n_qubits} qubits, state has {state.n_qubits}")
    value = A.identity_coefficient + sum(
        t.weight * expect_term(state, t) for t in A.terms
    )
    if require_positive and value <= 0:
        raise NonPositiveExpectationError(f"<psi|A|psi> = {value} is not positive")
    return float(value)


# --- Laplacians --------------------------------------------------------------


def laplacian_1d_dense(n: int, boundary) -> np.ndarray:
    """Tridiagonal second-difference matrix of size ``2**n``.

    Diagonal 2, off-diagonals -1, both corners ``1 + alpha`` with alpha = 1
    for Dirichlet and 0 for Neumann.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bc = Boundary.parse(boundary)
    N = 2**n
    a = 2.0 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)
    a[0, 0] = a[-1, -1] = 1.0 + bc.laplacian_corner
    return a


def _laplacian_terms(n_total: int, lo: int, hi: int, boundary: Boundary) -> list[HamiltonianTerm]:
    """The H1..H4 terms for the register occupying qubits ``[lo, hi)``."""
    width = hi - lo

    def factors(inside):
        # inside: factors for qubits hi-1 .. lo (most significant first)
        return ("I",) * (n_total - hi) + tuple(inside) + ("I",) * lo

    x_low = factors(("I",) * (width - 1) + ("X",))
    x_proj = factors(("I0",) * (width - 1) + ("X",))
    i_proj = factors(("I0",) * (width - 1) + ("I",))
    shift = (lo, hi)
    terms = [
        HamiltonianTerm(-1.0, x_low),
        HamiltonianTerm(-1.0, x_low, shift),
        HamiltonianTerm(1.0, x_proj, shift),
    ]
    if boundary.projector_weight:
        terms.append(HamiltonianTerm(-boundary.projector_weight, i_proj, shift))
    return terms


def decompose_laplacian_1d(n: int, boundary) -> DecomposedOperator:
    """``2 I - H1 + S^dag [-H2 + H3 - b H4] S`` on ``n`` qubits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bc = Boundary.parse(boundary)
    return DecomposedOperator(n, 2.0, tuple(_laplacian_terms(n, 0, n, bc)), (bc,))


def decompose_laplacian_2d(mx: int, my: int, boundary_x, boundary_y):
    """``(A_x, A_y)`` on ``mx + my`` qubits; x lives in the low ``mx`` bits."""
    if mx < 1 or my < 1:
        raise ValueError("mx and my must be >= 1")
    n = mx + my
    bx, by = Boundary.parse(boundary_x), Boundary.parse(boundary_y)
    a_x = DecomposedOperator(n, 2.0, tuple(_laplacian_terms(n, 0, mx, bx)), (bx,))
    a_y = DecomposedOperator(n, 2.0, tuple(_laplacian_terms(n, mx, n, by)), (by,))
    return a_x, a_y


def projector_zero(n: int, weight: float = 1.0) -> HamiltonianTerm:
    """``weight * |0..0><0..0|``, used to pin the pressure gauge."""
    return HamiltonianTerm(weight, ("I0",) * n)


def divergence_dense(n: int, boundary, dx: float) -> np.ndarray:
    """Central-difference first-derivative matrix ``(1/2dx) * tridiag(-1, 0, 1)``.

    Corners are 0 (Dirichlet) or -1 / +1 (Neumann, first / last row).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if dx <= 0:
        raise ValueError("dx must be positive")
    bc = Boundary.parse(boundary)
    N = 2**n
    b = np.eye(N, k=1) - np.eye(N, k=-1)
    b[0, 0], b[-1, -1] = bc.divergence_corners
    return b / (2.0 * dx)


# --- reaction-coupled operator ---------------------------------------------


def reaction_implicit_operator(n: int, K, dt: float, delta_x: float, boundary) -> DecomposedOperator:
    """Fully implicit two-component operator on ``n + 1`` qubits.

    ``I + delta_x * I (x) A_x - dt * (k11 I0 + k22 I1 + k12 X) (x) I^n``; the
    component qubit is the most significant one.
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (2, 2):
        raise ValueError("K must be 2x2")
    if not np.isclose(K[0, 1], K[1, 0], rtol=0, atol=1e-14):
        raise ValueError("K must be symmetric for the fully implicit scheme")
    bc = Boundary.parse(boundary)
    lap = _laplacian_terms(n + 1, 0, n, bc)
    diffusion = DecomposedOperator(n + 1, 2.0, tuple(lap), (bc,)).scaled(delta_x)
    rest = ("I",) * n
    source = DecomposedOperator(
        n + 1,
        1.0,
        (
            HamiltonianTerm(-dt * K[0, 0], ("I0",) + rest),
            HamiltonianTerm(-dt * K[1, 1], ("I1",) + rest),
            HamiltonianTerm(-dt * K[0, 1], ("X",) + rest),
        ),
    )
    return diffusion + source


# --- Pauli diagnostic ---------------------------------------------------------

_PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_coefficients_diagnostic(A, max_qubits: int = 6) -> dict[str, float]:
    """Coefficients ``tr(P A) / 2**n`` over all Pauli strings (dense, small n)."""
    A = np.asarray(A)
    dim = A.shape[0]
    if A.ndim != 2 or A.shape[1] != dim or dim < 2 or dim & (dim - 1):
        raise ValueError("A must be square with power-of-two dimension")
    n = dim.bit_length() - 1
    if n > max_qubits:
        raise ValueError(f"diagnostic limited to {max_qubits} qubits")
    out = {}
    for labels in itertools.product("IXYZ", repeat=n):
        p = reduce(np.kron, (_PAULIS[c] for c in labels))
        out["".join(labels)] = float(np.real(np.trace(p @ A)) / dim)
    return out


def pauli_reconstruct(coefficients: dict[str, float]) -> np.ndarray:
    return sum(c * reduce(np.kron, (_PAULIS[ch] for ch in label)) for label, c in coefficients.items())
