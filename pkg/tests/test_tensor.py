import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prefbasis import states as S
from prefbasis.errors import DimensionMismatch, IndexOutOfRange
from prefbasis.tensor import (
    DenseOperator, DensityMatrix, Observable, PureState, apply_unitary, degeneracy_groups,
    devectorize, eig_hermitian, matricize, partial_trace, random_state, random_unitary, svd,
    tensor_product,
)

dims_strategy = st.lists(st.integers(2, 3), min_size=2, max_size=4)
seeds = st.integers(0, 2**32 - 1)


def trace_oracle(amps, dims, keep):
    """Partial trace by explicit loops over every index tuple."""
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    kd = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(kd)),) * 2, complex)
    t = amps.reshape(dims)
    for ki in itertools.product(*[range(d) for d in kd]):
        for kj in itertools.product(*[range(d) for d in kd]):
            acc = 0
            for tr in itertools.product(*[range(dims[i]) for i in traced]):
                idx_i, idx_j = [0] * n, [0] * n
                for p, i in enumerate(keep):
                    idx_i[i], idx_j[i] = ki[p], kj[p]
                for p, i in enumerate(traced):
                    idx_i[i] = idx_j[i] = tr[p]
                acc += t[tuple(idx_i)] * np.conj(t[tuple(idx_j)])
            out[np.ravel_multi_index(ki, kd), np.ravel_multi_index(kj, kd)] = acc
    return out


class TestPureState:
    def test_normalization_enforced(self):
        with pytest.raises(ValueError):
            PureState((2,), [1, 1])
        s = PureState.from_amplitudes((2,), [1, 1])
        assert np.isclose(np.linalg.norm(s.amps), 1)

    def test_dims_mismatch(self):
        with pytest.raises(DimensionMismatch):
            PureState((2, 2), [1, 0])

    def test_amps_read_only(self):
        s = S.bell()
        with pytest.raises(ValueError):
            s.amps[0] = 0

    def test_basis(self):
        s = PureState.basis((2, 3), (1, 2))
        assert s.amps[5] == 1


class TestTensorProduct:
    def test_basis_case(self):
        z = PureState((2,), S.Z_PLUS)
        np.testing.assert_array_equal(tensor_product(z, z).amps, [1, 0, 0, 0])

    def test_superposition(self):
        a = PureState((2,), S.X_PLUS)
        b = PureState((2,), S.Z_MINUS)
        out = tensor_product(a, b)
        assert out.dims == (2, 2)
        np.testing.assert_allclose(out.amps, [0, S.SQRT1_2, 0, S.SQRT1_2])

    @given(seeds)
    def test_norm(self, seed):
        rng = np.random.default_rng(seed)
        out = tensor_product(random_state((2, 3), rng), random_state((3,), rng))
        assert abs(np.linalg.norm(out.amps) - 1) <= 1e-12


class TestApplyUnitary:
    def test_identity(self, rng):
        s = random_state((2, 3, 2), rng)
        out = apply_unitary(s, DenseOperator.identity(3), [1])
        np.testing.assert_array_equal(out.amps, s.amps)

    def test_bit_flip(self):
        out = apply_unitary(PureState.basis((2, 2), (0, 0)), DenseOperator(S.PAULI_X, "unitary"), [0])
        np.testing.assert_array_equal(out.amps, PureState.basis((2, 2), (1, 0)).amps)

    def test_non_adjacent_targets_match_kron(self, rng):
        s = random_state((2, 3, 2), rng)
        u = random_unitary(4, rng)
        out = apply_unitary(s, DenseOperator(u, "unitary"), [2, 0])
        # oracle: permute to (2, 0, 1), apply kron(u, I3), permute back
        t = s.tensor().transpose(2, 0, 1).reshape(4, 3)
        ref = (u @ t).reshape(2, 2, 3).transpose(1, 2, 0).reshape(-1)
        np.testing.assert_allclose(out.amps, ref, atol=1e-13)

    @given(seeds)
    def test_disjoint_supports_commute(self, seed):
        rng = np.random.default_rng(seed)
        s = random_state((2, 3), rng)
        u = DenseOperator(random_unitary(2, rng), "unitary")
        v = DenseOperator(random_unitary(3, rng), "unitary")
        a = apply_unitary(apply_unitary(s, u, [0]), v, [1])
        b = apply_unitary(apply_unitary(s, v, [1]), u, [0])
        assert np.linalg.norm(a.amps - b.amps) <= 1e-12

    def test_errors(self, rng):
        s = random_state((2, 2), rng)
        with pytest.raises(ValueError):
            apply_unitary(s, DenseOperator([[1, 1], [0, 1]], "unitary"), [0])
        with pytest.raises(DimensionMismatch):
            apply_unitary(s, DenseOperator.identity(3), [0])
        with pytest.raises(IndexOutOfRange):
            apply_unitary(s, DenseOperator.identity(2), [5])

    def test_norm_drift_over_many_ops(self, rng):
        s = random_state((2, 2, 2), rng)
        us = [DenseOperator(random_unitary(4, rng), "unitary") for _ in range(10)]
        for k in range(1000):
            s = apply_unitary(s, us[k % 10], [k % 3, (k + 1) % 3])
        assert abs(np.linalg.norm(s.amps) - 1) <= 1e-8


class TestPartialTrace:
    def test_product(self):
        rho = partial_trace(PureState.basis((2, 2), (0, 1)), [0])
        np.testing.assert_allclose(rho.entries, [[1, 0], [0, 0]])

    def test_bell(self):
        np.testing.assert_allclose(partial_trace(S.bell(), [0]).entries, np.eye(2) / 2, atol=1e-15)

    def test_ghz_against_index_contraction(self):
        g = S.ghz(3)
        oracle = trace_oracle(g.amps, g.dims, [0, 1])
        expected = np.zeros((4, 4))
        expected[0, 0] = expected[3, 3] = 0.5
        np.testing.assert_allclose(oracle, expected, atol=1e-15)
        np.testing.assert_allclose(partial_trace(g, [0, 1]).entries, oracle, atol=1e-15)

    @given(dims_strategy, seeds, st.data())
    def test_matches_oracle(self, dims, seed, data):
        s = random_state(dims, np.random.default_rng(seed))
        keep = data.draw(st.lists(st.sampled_from(range(len(dims))), min_size=1, unique=True))
        rho = partial_trace(s, keep)
        np.testing.assert_allclose(rho.entries, trace_oracle(s.amps, s.dims, keep), atol=1e-12)
        assert abs(np.trace(rho.entries) - 1) <= 1e-10

    @given(dims_strategy, seeds)
    def test_keep_all_is_projector(self, dims, seed):
        s = random_state(dims, np.random.default_rng(seed))
        rho = partial_trace(s, range(len(dims)))
        assert np.abs(rho.entries - np.outer(s.amps, s.amps.conj())).max() <= 1e-12

    def test_errors(self):
        with pytest.raises(IndexOutOfRange):
            partial_trace(S.bell(), [2])
        with pytest.raises(IndexOutOfRange):
            partial_trace(S.bell(), [])


class TestMatricize:
    def test_row_major(self, rng):
        s = random_state((2, 2), rng)
        m = matricize(s, [0])
        for i, j in itertools.product(range(2), range(2)):
            assert m[i, j] == s.amps[2 * i + j]

    def test_bell(self):
        np.testing.assert_allclose(matricize(S.bell(), [0]), np.eye(2) * S.SQRT1_2)

    @given(dims_strategy, seeds, st.data())
    def test_round_trip(self, dims, seed, data):
        s = random_state(dims, np.random.default_rng(seed))
        n = len(dims)
        left = data.draw(st.lists(st.sampled_from(range(n)), min_size=1, max_size=n - 1, unique=True))
        m = matricize(s, left)
        assert m.shape == (int(np.prod([dims[i] for i in left])), s.dim // m.shape[0])
        assert abs(np.linalg.norm(m) - 1) <= 1e-10
        np.testing.assert_array_equal(devectorize(m, dims, left), s.amps)

    def test_requires_proper_subset(self):
        with pytest.raises(IndexOutOfRange):
            matricize(S.bell(), [0, 1])
        with pytest.raises(IndexOutOfRange):
            matricize(S.bell(), [])

    @given(seeds)
    def test_schmidt_spectrum_swap_invariant(self, seed):
        s = random_state((2, 3, 2), np.random.default_rng(seed))
        a = svd(matricize(s, [0, 2]))[1]
        b = svd(matricize(s, [1]))[1]
        np.testing.assert_allclose(a[:b.size], b, atol=1e-12)


class TestLinalg:
    def test_diag(self):
        u, sv, vh = svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(sv, [3, 1])
        np.testing.assert_allclose(np.abs(u), np.eye(2))
        np.testing.assert_allclose(np.abs(vh), np.eye(2))

    @given(seeds, st.integers(1, 8), st.integers(1, 8))
    def test_svd_contract(self, seed, r, c):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))
        u, sv, vh = svd(m)
        assert np.linalg.norm(m - (u * sv) @ vh) <= 1e-10 * np.linalg.norm(m)
        assert np.all(np.diff(sv) <= 0) and np.all(sv >= 0)
        assert np.abs(u.conj().T @ u - np.eye(sv.size)).max() <= 1e-10
        assert np.abs(vh @ vh.conj().T - np.eye(sv.size)).max() <= 1e-10
        np.testing.assert_allclose(svd(m.conj().T)[1], sv, atol=1e-10)

    def test_svd_full(self, rng):
        m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        u, sv, vh = svd(m, full_matrices=True)
        assert np.linalg.norm(m - (u * sv) @ vh) <= 1e-10 * np.linalg.norm(m)

    def test_eig_hermitian(self, rng):
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        h = a + a.conj().T
        w, v = eig_hermitian(h)
        assert np.all(np.diff(w) >= 0)
        assert np.linalg.norm(h @ v - v * w) <= 1e-10 * np.linalg.norm(h)

    def test_eig_requires_hermitian(self):
        with pytest.raises(ValueError):
            eig_hermitian([[0, 1], [0, 0]])

    def test_degeneracy_groups(self):
        assert degeneracy_groups([1.0, 1.0 + 1e-10, 0.5]) == [[0, 1], [2]]
        assert degeneracy_groups([0.8, 0.6]) == [[0], [1]]


class TestOperators:
    def test_kinds_validated(self):
        with pytest.raises(ValueError):
            DenseOperator([[1, 1], [0, 1]], "hermitian")
        with pytest.raises(ValueError):
            DenseOperator(np.eye(2) * 2, "projector")
        with pytest.raises(ValueError):
            DenseOperator(np.eye(2), "mystery")

    def test_commutator(self):
        x = DenseOperator(S.PAULI_X, "hermitian")
        z = DenseOperator(S.PAULI_Z, "hermitian")
        assert np.isclose(x.commutator_norm(z), np.linalg.norm(2j * S.PAULI_Y))

    def test_density_matrix_invariants(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([0.6, 0.6]))
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.5, -0.5]))
        rho = DensityMatrix(np.eye(2) / 2)
        assert np.isclose(rho.purity(), 0.5)
        assert np.isclose(rho.fidelity(S.Z_MINUS), 0.5)

    def test_observable(self):
        obs = Observable.from_basis([S.X_PLUS, S.X_MINUS], (1, -1))
        np.testing.assert_allclose(obs.operator().entries, S.PAULI_X, atol=1e-15)
        with pytest.raises(ValueError):
            Observable((1,), (np.diag([1.0, 0.0]),))
        with pytest.raises(ValueError):
            Observable((1, -1), (np.diag([1.0, 0.0]), np.outer(S.X_PLUS, S.X_PLUS)))
