import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wernerwit.operators import (
    CapacityError,
    HermitianOperator,
    PureState,
    SubsystemSplit,
    bipartite_tensor,
    eig_hermitian,
    eigvalsh,
    haar_unitary,
    haar_vectors,
    identity,
    is_psd,
    lambda_min,
    partial_trace,
    partial_transpose,
    rng_stream,
    tensor,
)


def random_hermitian(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def random_state(dims, rng):
    dim = int(np.prod(dims))
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return HermitianOperator(rho / np.trace(rho).real, dims)


class TestHermitianOperator:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_symmetrizes_roundoff(self):
        m = np.array([[1.0, 1e-12j], [0.0, 1.0]])
        op = HermitianOperator(m)
        np.testing.assert_allclose(op.matrix, op.matrix.conj().T)

    def test_dims_must_multiply_to_size(self):
        with pytest.raises(ValueError):
            HermitianOperator(np.eye(4), (3, 2))

    def test_immutable(self):
        op = identity((2,))
        with pytest.raises(AttributeError):
            op.matrix = np.eye(2)

    def test_arithmetic_and_trace(self):
        a = identity((2, 2))
        b = (a * 2.0 - a) / 4.0
        assert b.trace() == pytest.approx(1.0)
        assert (-b).trace() == pytest.approx(-1.0)
        assert a.inner(b) == pytest.approx(1.0)

    def test_mismatched_spaces(self):
        with pytest.raises(ValueError):
            identity((2, 2)) + identity((4,))


class TestPureState:
    def test_normalized(self):
        s = PureState.normalized([3.0, 4.0])
        assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0)
        assert s.projector().trace() == pytest.approx(1.0)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            PureState(np.array([1.0, 1.0]))


class TestTensorAndTraces:
    @pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3), (2, 2, 3)])
    def test_partial_trace_of_product(self, dims):
        rng = np.random.default_rng(1)
        parts = [random_state((d,), rng) for d in dims]
        prod = tensor(*parts)
        assert prod.dims == tuple(dims)
        for k in range(len(dims)):
            red = partial_trace(prod, [k])
            np.testing.assert_allclose(red.matrix, parts[k].matrix, atol=1e-12)

    def test_partial_trace_keeps_order(self):
        rng = np.random.default_rng(2)
        a, b, c = (random_state((d,), rng) for d in (2, 3, 2))
        red = partial_trace(tensor(a, b, c), [0, 2])
        np.testing.assert_allclose(red.matrix, tensor(a, c).matrix, atol=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_partial_transpose_of_swap(self, d):
        # F^{T_A} = d P_d, which has eigenvalues d and 0.
        swap = np.zeros((d * d, d * d))
        for i in range(d):
            for j in range(d):
                swap[i * d + j, j * d + i] = 1.0
        pt = partial_transpose(HermitianOperator(swap, (d, d)), SubsystemSplit.of([0], 2))
        vals = eigvalsh(pt)
        np.testing.assert_allclose(vals[-1], d, atol=1e-12)
        np.testing.assert_allclose(vals[:-1], 0.0, atol=1e-12)

    def test_partial_transpose_involution(self):
        rng = np.random.default_rng(3)
        rho = random_state((2, 3, 2, 3), rng)
        split = SubsystemSplit.interleaved(4)
        back = partial_transpose(partial_transpose(rho, split), split)
        np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-14)

    def test_product_state_is_ppt(self):
        rng = np.random.default_rng(4)
        prod = tensor(random_state((3,), rng), random_state((3,), rng))
        assert is_psd(partial_transpose(prod, SubsystemSplit.of([0], 2)))

    def test_bipartite_tensor_expectation(self):
        rng = np.random.default_rng(5)
        op = HermitianOperator(random_hermitian(12, rng), (2, 3, 2))
        split = SubsystemSplit.of([0, 2], 3)
        t = bipartite_tensor(op, split)
        assert t.shape == (4, 3, 4, 3)
        a = haar_vectors(4, 1, rng)[0]
        b = haar_vectors(3, 1, rng)[0]
        ab = np.einsum("a,b->ab", a, b)
        via_tensor = np.einsum("ab,abcd,cd->", ab.conj(), t, ab).real
        # Rebuild the full vector in the original factor order.
        full = np.einsum("xz,y->xyz", a.reshape(2, 2), b).ravel()
        direct = np.vdot(full, op.matrix @ full).real
        assert via_tensor == pytest.approx(direct, abs=1e-12)


class TestSplits:
    def test_interleaved(self):
        s = SubsystemSplit.interleaved(4)
        assert s.party_a == (0, 2) and s.party_b == (1, 3)

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            SubsystemSplit((0, 1), (1,))

    def test_side_dims(self):
        assert SubsystemSplit.interleaved(4).side_dims((2, 2, 3, 3)) == (6, 6)


class TestEigen:
    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    @pytest.mark.parametrize("dim", [1, 4, 9])
    def test_decomposition(self, method, dim):
        rng = np.random.default_rng(dim)
        op = HermitianOperator(random_hermitian(dim, rng))
        w, v = eig_hermitian(op, method)
        np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, op.matrix, atol=1e-10)
        assert np.all(np.diff(w) >= -1e-12)

    def test_methods_agree(self):
        rng = np.random.default_rng(7)
        op = HermitianOperator(random_hermitian(12, rng))
        np.testing.assert_allclose(eig_hermitian(op, "jacobi")[0], eig_hermitian(op, "lapack")[0], atol=1e-10)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            eig_hermitian(identity((2,)), "qr")

    def test_lambda_min(self):
        op = HermitianOperator(np.diag([3.0, -1.0, 2.0]))
        assert lambda_min(op) == pytest.approx(-1.0)
        assert not is_psd(op)


class TestRandomness:
    def test_streams_reproducible(self):
        a = rng_stream(5, 1, 2).normal(size=4)
        b = rng_stream(5, 1, 2).normal(size=4)
        c = rng_stream(5, 1, 3).normal(size=4)
        np.testing.assert_array_equal(a, b)
        assert not np.allclose(a, c)

    def test_haar_vectors_unit(self):
        v = haar_vectors(6, 10, rng_stream(0))
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0)

    def test_haar_unitary(self):
        u = haar_unitary(5, rng_stream(0))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(5), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), da=st.integers(1, 3), db=st.integers(1, 3))
def test_partial_trace_is_trace_preserving(seed, da, db):
    rho = random_state((da, db), np.random.default_rng(seed))
    assert partial_trace(rho, [0]).trace() == pytest.approx(1.0, abs=1e-12)
    assert partial_trace(rho, [1]).trace() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_partial_transpose_preserves_trace_and_hermiticity(seed):
    rho = random_state((2, 3), np.random.default_rng(seed))
    pt = partial_transpose(rho, SubsystemSplit.of([0], 2))
    assert pt.trace() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(pt.matrix, pt.matrix.conj().T, atol=1e-14)


def test_capacity_error_is_value_error():
    assert issubclass(CapacityError, ValueError)
