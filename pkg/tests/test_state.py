import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vqevolve.state import (
    DegenerateInputError,
    StateVector,
    apply_cx,
    apply_ry,
    apply_shift,
    encode,
    inner,
    overlap_via_superposition,
    remove_global_phase,
    shift_permutation,
)

SQ2 = 1 / np.sqrt(2)


def ry_dense(n, q, a):
    c, s = np.cos(a / 2), np.sin(a / 2)
    r = np.array([[c, -s], [s, c]])
    mats = [np.eye(2)] * n
    mats[n - 1 - q] = r  # kron order: most significant first
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def unit_vectors(n):
    return st.lists(
        st.floats(-1, 1, allow_nan=False), min_size=2**n, max_size=2**n
    ).filter(lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: np.array(v) / np.linalg.norm(v))


class TestStateVector:
    def test_zero_state(self):
        s = StateVector.zero(3)
        assert s.amplitudes[0] == 1 and np.count_nonzero(s.amplitudes) == 1

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError, match="normalized"):
            StateVector(1, [1.0, 1.0])

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            StateVector(2, [1.0, 0.0])

    def test_immutable(self):
        s = StateVector.zero(2)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0


class TestRY:
    def test_zero_angle_is_identity(self, rng):
        v = rng.normal(size=8)
        s = StateVector.from_real(v / np.linalg.norm(v))
        assert np.array_equal(apply_ry(s, 1, 0.0).amplitudes, s.amplitudes)

    def test_pi_maps_zero_to_plus_one(self):
        out = apply_ry(StateVector.zero(1), 0, np.pi).amplitudes
        assert np.allclose(out, [0, 1], atol=1e-12)

    def test_half_pi(self):
        out = apply_ry(StateVector.zero(1), 0, np.pi / 2).amplitudes
        assert np.allclose(out, [SQ2, SQ2], atol=1e-12)

    @given(st.integers(1, 4).flatmap(lambda n: st.tuples(
        st.just(n), st.integers(0, n - 1), st.floats(-7, 7), unit_vectors(n))))
    def test_matches_dense_kron(self, args):
        n, q, a, v = args
        out = apply_ry(StateVector.from_real(v), q, a).amplitudes
        assert np.allclose(out, ry_dense(n, q, a) @ v, atol=1e-12)

    def test_bad_qubit(self):
        with pytest.raises(ValueError):
            apply_ry(StateVector.zero(2), 2, 0.1)


class TestCX:
    def test_control_set_flips_target(self):
        # |10> with the control on the high bit (qubit 1)
        out = apply_cx(StateVector.basis(2, 0b10), 1, 0)
        assert out.amplitudes[0b11] == 1

    def test_control_unset(self):
        out = apply_cx(StateVector.zero(2), 1, 0)
        assert out.amplitudes[0] == 1

    @given(st.integers(2, 4).flatmap(lambda n: st.tuples(
        st.just(n), st.permutations(range(n)).map(lambda p: p[:2]), unit_vectors(n))))
    def test_involution(self, args):
        n, (c, t), v = args
        s = StateVector.from_real(v)
        assert np.allclose(apply_cx(apply_cx(s, c, t), c, t).amplitudes, v)

    def test_same_qubit_rejected(self):
        with pytest.raises(ValueError):
            apply_cx(StateVector.zero(2), 0, 0)


class TestShift:
    def test_full_range_map(self):
        assert apply_shift(StateVector.basis(3, 5), (0, 3)).amplitudes[6] == 1
        assert apply_shift(StateVector.basis(3, 7), (0, 3)).amplitudes[0] == 1

    def test_partial_range(self):
        out = apply_shift(StateVector.basis(4, 0b0111), (0, 2))
        assert out.amplitudes[0b0100] == 1

    def test_partial_range_matches_subregister_matrix(self):
        # cyclic shift on the low 2 bits = I_4 (x) S_2 with S_2 the 4x4 cycle
        s2 = np.roll(np.eye(4), 1, axis=0)
        dense = np.kron(np.eye(4), s2)
        perm = shift_permutation(4, 0, 2)
        built = np.zeros((16, 16))
        built[perm, np.arange(16)] = 1
        assert np.array_equal(built, dense)

    @given(st.integers(1, 4).flatmap(lambda n: st.tuples(
        st.just(n), st.integers(0, n - 1), unit_vectors(n))))
    def test_inverse_roundtrip(self, args):
        n, lo, v = args
        s = StateVector.from_real(v)
        back = apply_shift(apply_shift(s, (lo, n)), (lo, n), inverse=True)
        assert np.array_equal(back.amplitudes, s.amplitudes)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            shift_permutation(3, 2, 2)


class TestEncode:
    def test_basis(self):
        e = encode([1, 0, 0, 0])
        assert e.norm == 1 and e.state.amplitudes[0] == 1

    def test_pythagorean(self):
        e = encode([3, 4])
        assert np.allclose(e.state.real, [0.6, 0.8]) and e.norm == 5

    def test_sign_kept(self):
        e = encode([-1, 0])
        assert np.allclose(e.state.real, [-1, 0])
        assert np.allclose(e.decode(), [-1, 0])

    def test_zero_vector(self):
        with pytest.raises(DegenerateInputError):
            encode(np.zeros(4))

    def test_not_power_of_two(self):
        with pytest.raises(ValueError):
            encode([1, 2, 3])

    @given(st.integers(1, 5).flatmap(lambda n: st.lists(
        st.floats(-1e3, 1e3), min_size=2**n, max_size=2**n)))
    def test_roundtrip_and_norm(self, v):
        v = np.array(v)
        if np.linalg.norm(v) < 1e-6:
            return
        e = encode(v)
        assert abs(np.linalg.norm(e.state.amplitudes) - 1) < 1e-12
        assert np.allclose(e.decode(), v, rtol=1e-12, atol=1e-9)

    def test_remove_global_phase(self):
        v = np.array([0.6, -0.8])
        amps, phase = remove_global_phase(np.exp(0.7j) * v, v)
        assert np.allclose(amps, v) and abs(abs(phase) - 1) < 1e-15


class TestInner:
    def test_self(self, rng):
        v = rng.normal(size=8)
        s = StateVector.from_real(v / np.linalg.norm(v))
        assert abs(inner(s, s) - 1) < 1e-12

    def test_orthogonal(self):
        assert inner(StateVector.zero(1), StateVector.basis(1, 1)) == 0

    @given(unit_vectors(3), unit_vectors(3))
    def test_real_dot(self, a, b):
        assert abs(inner(StateVector.from_real(a), StateVector.from_real(b)) - a @ b) < 1e-12

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            inner(StateVector.zero(1), StateVector.zero(2))


class TestSuperpositionOverlap:
    def test_equal(self):
        s = StateVector.zero(2)
        assert abs(overlap_via_superposition(s, s) - 1) < 1e-12

    def test_orthogonal(self):
        assert overlap_via_superposition(StateVector.zero(2), StateVector.basis(2, 3)) < 1e-12

    @given(unit_vectors(3), unit_vectors(3))
    def test_matches_dot(self, a, b):
        got = overlap_via_superposition(StateVector.from_real(a), StateVector.from_real(b))
        assert abs(got - abs(a @ b)) < 1e-10
