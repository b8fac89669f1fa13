import numpy as np
import pytest

from schmidtkit.errors import DimensionMismatchError, InvalidStateError
from schmidtkit.hilbert import (
    BipartiteDims,
    BipartitePureState,
    DensityOperator,
    Ensemble,
    Observable,
    expectation,
    partial_trace,
    partial_transpose,
    phase_align,
    phi_r,
    random_density,
    random_pure,
    random_separable_density,
    schmidt_decompose,
    schmidt_reconstruct,
    swap_witness_V,
)

from conftest import schmidt_diagonal_state, singlet


class TestValidation:
    def test_dims(self):
        d = BipartiteDims(2, 3)
        assert d.total == 6 and d.rank_limit == 2
        with pytest.raises(InvalidStateError):
            BipartiteDims(0, 3)

    def test_pure_norm_enforced(self):
        with pytest.raises(InvalidStateError, match="norm"):
            BipartitePureState(BipartiteDims(2, 2), [1, 0, 0, 1])

    def test_density_invariants(self):
        d = BipartiteDims(2, 2)
        skew = np.diag([0.25] * 4).astype(complex)
        skew[0, 1] = 0.3
        with pytest.raises(InvalidStateError, match="Hermitian"):
            DensityOperator(d, skew)
        with pytest.raises(InvalidStateError, match="trace"):
            DensityOperator(d, np.eye(4))
        with pytest.raises(InvalidStateError, match="negative eigenvalue"):
            DensityOperator(d, np.diag([1.5, -0.5, 0, 0]).astype(complex))

    def test_observable_shape(self):
        with pytest.raises(DimensionMismatchError):
            Observable(BipartiteDims(2, 2), np.eye(3))


class TestSchmidtDecompose:
    def test_phi2(self):
        dec = schmidt_decompose(phi_r(2, (2, 2)))
        assert dec.rank == 2
        np.testing.assert_allclose(dec.coefficients, [1 / np.sqrt(2)] * 2, atol=1e-12)

    def test_product_state(self):
        dec = schmidt_decompose(phi_r(1, (2, 2)))
        assert dec.rank == 1
        np.testing.assert_allclose(dec.coefficients, [1.0], atol=1e-12)

    def test_random_matches_singular_values(self):
        state = random_pure((3, 3), seed=5)
        dec = schmidt_decompose(state)
        # independent oracle: singular values of the reshaped matrix
        sv = np.linalg.svd(state.amplitudes.reshape(3, 3), compute_uv=False)
        np.testing.assert_allclose(dec.coefficients, sv[sv > 1e-10], atol=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_reconstruction_roundtrip(self, seed):
        state = random_pure((2, 3), seed=seed)
        dec = schmidt_decompose(state)
        rebuilt = schmidt_reconstruct(dec, state.dims)
        np.testing.assert_allclose(
            phase_align(rebuilt), phase_align(state.amplitudes), atol=1e-10
        )

    def test_bases_orthonormal(self):
        dec = schmidt_decompose(random_pure((3, 4), seed=1))
        np.testing.assert_allclose(
            dec.left_basis.conj() @ dec.left_basis.T, np.eye(dec.rank), atol=1e-10
        )
        np.testing.assert_allclose(
            dec.right_basis.conj() @ dec.right_basis.T, np.eye(dec.rank), atol=1e-10
        )

    def test_rank_invariant_under_local_unitaries(self):
        from schmidtkit.locc import apply_to_pure, sample_operation

        state = schmidt_diagonal_state([0.9, 0.4, 0.2], (3, 3))
        op = sample_operation("LU", state.dims, seed=3)
        assert schmidt_decompose(apply_to_pure(op, state)).rank == 3


class TestPartialTranspose:
    def test_involution(self):
        rho = random_density((2, 3), seed=2)
        twice = partial_transpose(partial_transpose(rho, rho.dims), rho.dims)
        np.testing.assert_array_equal(twice, rho.matrix)

    def test_bell_min_eigenvalue(self):
        # oracle: build the PT by explicit index bookkeeping, then decompose
        rho = phi_r(2, (2, 2)).projector()
        manual = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    for l in range(2):
                        manual[i * 2 + j, k * 2 + l] = rho.matrix[i * 2 + l, k * 2 + j]
        np.testing.assert_allclose(partial_transpose(rho), manual, atol=0)
        assert abs(np.linalg.eigvalsh(manual).min() + 0.5) < 1e-12

    def test_product_state_invariant(self):
        rho = phi_r(1, (2, 2)).projector()
        np.testing.assert_allclose(partial_transpose(rho), rho.matrix, atol=0)

    def test_trace_and_hermiticity_preserved(self):
        rho = random_density((2, 2), seed=7)
        pt = partial_transpose(rho)
        assert abs(np.trace(pt) - 1) < 1e-12
        np.testing.assert_allclose(pt, pt.conj().T, atol=1e-12)

    @pytest.mark.parametrize("seed", range(8))
    def test_separable_states_stay_ppt(self, seed):
        rho = random_separable_density((2, 2), seed)
        assert np.linalg.eigvalsh(partial_transpose(rho)).min() >= -1e-10


class TestPartialTrace:
    def test_maximally_mixed_marginal(self):
        rho = phi_r(2, (2, 2)).projector()
        np.testing.assert_allclose(partial_trace(rho, 2, rho.dims), np.eye(2) / 2, atol=1e-12)

    def test_factorized_operator(self):
        a = np.array([[1, 2j], [-2j, 0]], dtype=complex)
        b = np.array([[0.5, 0], [0, 2.0]], dtype=complex)
        np.testing.assert_allclose(
            partial_trace(np.kron(a, b), 2, (2, 2)), a * np.trace(b), atol=1e-12
        )
        np.testing.assert_allclose(
            partial_trace(np.kron(a, b), 1, (2, 2)), b * np.trace(a), atol=1e-12
        )

    def test_marginal_against_loop_oracle(self):
        rho = random_density((2, 3), seed=4)
        t = rho.matrix.reshape(2, 3, 2, 3)
        manual = np.zeros((2, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                for j in range(3):
                    manual[a, b] += t[a, j, b, j]
        got = partial_trace(rho, 2, rho.dims)
        np.testing.assert_allclose(got, manual, atol=1e-14)
        assert abs(np.trace(got) - 1) < 1e-10
        assert np.linalg.eigvalsh(got).min() >= -1e-10


class TestCanonicalStates:
    def test_phi_r_amplitudes(self):
        state = phi_r(2, (2, 2))
        expected = np.zeros(4)
        expected[0] = expected[3] = 1 / np.sqrt(2)
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-15)

    def test_phi_rect_dims(self):
        state = phi_r(3, (3, 4))
        assert abs(np.linalg.norm(state.amplitudes) - 1) < 1e-12
        dec = schmidt_decompose(state)
        assert dec.rank == 3
        np.testing.assert_allclose(dec.coefficients, [1 / np.sqrt(3)] * 3, atol=1e-12)

    def test_phi_out_of_range(self):
        with pytest.raises(InvalidStateError):
            phi_r(3, (2, 4))

    def test_swap_witness_eigenvalues(self):
        v = swap_witness_V(2, (2, 2))
        np.testing.assert_allclose(
            np.linalg.eigvalsh(v.matrix), [-0.5, 0.5, 0.5, 0.5], atol=1e-12
        )

    def test_swap_witness_phi_expectation(self):
        for r, dims in ((2, (2, 2)), (3, (3, 3)), (2, (3, 4))):
            v = swap_witness_V(r, dims)
            rho = phi_r(r, dims).projector()
            assert abs(expectation(rho, v) - 1 / r) < 1e-12

    def test_swap_witness_singlet(self):
        v = swap_witness_V(2, (2, 2))
        assert abs(expectation(singlet().projector(), v) + 0.5) < 1e-12

    def test_pt_of_phi_projector(self):
        for r, dims in ((2, (2, 2)), (3, (3, 3))):
            v = swap_witness_V(r, dims)
            pt = partial_transpose(phi_r(r, dims).projector())
            np.testing.assert_allclose(v.matrix, pt, atol=1e-14)


class TestExpectation:
    def test_identity(self):
        rho = random_density((2, 2), seed=1)
        assert abs(expectation(rho, np.eye(4)) - 1) < 1e-12

    def test_projector_on_own_state(self):
        rho = phi_r(2, (2, 2)).projector()
        assert abs(expectation(rho, Observable(rho.dims, rho.matrix)) - 1) < 1e-12

    def test_mixed_against_projector(self):
        d = BipartiteDims(2, 2)
        rho = DensityOperator(d, np.eye(4) / 4)
        proj = Observable(d, phi_r(2, d).projector().matrix)
        assert abs(expectation(rho, proj) - 0.25) < 1e-12

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            expectation(random_density((2, 2), 0), np.eye(6))


class TestRandomStates:
    def test_determinism(self):
        a = random_pure((3, 3), seed=9).amplitudes
        b = random_pure((3, 3), seed=9).amplitudes
        np.testing.assert_array_equal(a, b)
        c = random_density((2, 2), seed=9, mix_count=3).matrix
        d = random_density((2, 2), seed=9, mix_count=3).matrix
        np.testing.assert_array_equal(c, d)

    def test_pure_norm(self):
        assert abs(np.linalg.norm(random_pure((4, 4), 3).amplitudes) - 1) < 1e-12

    def test_density_spectrum(self):
        rho = random_density((2, 3), seed=8, mix_count=5)
        w = np.linalg.eigvalsh(rho.matrix)
        assert w.min() >= -1e-12
        assert abs(w.sum() - 1) < 1e-10


class TestEnsemble:
    def test_mix_reconstructs(self):
        members = (phi_r(1, (2, 2)), phi_r(2, (2, 2)))
        ens = Ensemble([0.25, 0.75], members)
        rho = ens.mix()
        expected = 0.25 * members[0].projector().matrix + 0.75 * members[1].projector().matrix
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)

    def test_weight_validation(self):
        with pytest.raises(InvalidStateError):
            Ensemble([0.5, 0.6], (phi_r(1, (2, 2)), phi_r(2, (2, 2))))
