import numpy as np
import pytest

from schmidtkit.errors import ConvergenceError, InvalidStateError
from schmidtkit.hilbert import BipartiteDims, Observable, phi_r, random_pure
from schmidtkit.se_solver import (
    RankRAnsatz,
    SolverConfig,
    assemble_blocks,
    assemble_state,
    f12_r,
    f_max,
    oracle_f12_r,
    se_solve_r1,
    solve_rse,
    solve_rse_detailed,
)

from conftest import random_hermitian, schmidt_diagonal_state


def bell_projector():
    state = phi_r(2, (2, 2))
    return Observable(state.dims, state.projector().matrix)


def phi3_projector():
    state = phi_r(3, (3, 3))
    return Observable(state.dims, state.projector().matrix)


class TestAssembleBlocks:
    def test_r1_normalized_vector(self):
        L = random_hermitian((2, 3), seed=1)
        b = np.array([1.0, 1j, -0.5])
        b /= np.linalg.norm(b)
        block, gram = assemble_blocks(L, b, side=2)
        # single block equals the partial contraction of L with |b><b|
        t = L.matrix.reshape(2, 3, 2, 3)
        manual = np.einsum("c,acbd,d->ab", b.conj(), t, b)
        np.testing.assert_allclose(block, manual, atol=1e-14)
        np.testing.assert_allclose(gram, [[1.0]], atol=1e-12)

    def test_identity_observable_gives_gram_blocks(self):
        d = BipartiteDims(2, 2)
        L = Observable(d, np.eye(4))
        vecs = np.array([[1.0, 0.5j], [0.25, -1.0]])
        block, gram = assemble_blocks(L, vecs, side=2)
        np.testing.assert_allclose(block, np.kron(gram, np.eye(2)), atol=1e-14)

    @pytest.mark.parametrize("side", (1, 2))
    def test_block_hermiticity(self, side):
        L = random_hermitian((3, 3), seed=2)
        rng = np.random.default_rng(3)
        vecs = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        block, _ = assemble_blocks(L, vecs, side=side)
        assert np.max(np.abs(block - block.conj().T)) < 1e-12


class TestSolveRSE:
    def test_product_projector_r1(self, cfg):
        state = phi_r(1, (2, 2))
        L = Observable(state.dims, state.projector().matrix)
        sols = solve_rse(L, 1, cfg)
        assert abs(sols[0].lam - 1.0) < 1e-10
        top = sols[0].state.amplitudes
        assert abs(abs(np.vdot(top, state.amplitudes)) - 1) < 1e-8

    def test_bell_r1_max(self, cfg):
        # oracle value: brute-force product-state maximum
        oracle = oracle_f12_r(bell_projector(), 1, samples=4000, seed=0)
        got = f12_r(bell_projector(), 1, cfg)
        assert abs(got - 0.5) < 1e-8
        assert got >= oracle - 1e-8

    def test_full_rank_equals_fmax(self, cfg):
        L = random_hermitian((2, 3), seed=4)
        assert abs(f12_r(L, 2, cfg) - f_max(L)) < 1e-8

    def test_residuals_and_normalization(self, cfg):
        L = random_hermitian((3, 3), seed=5)
        report = solve_rse_detailed(L, 2, cfg)
        for sol in report.solutions:
            assert sol.residual <= cfg.tol_residual
            amps = assemble_state(sol.ansatz.x_vectors, sol.ansatz.y_vectors)
            assert abs(np.linalg.norm(amps) - 1) < 1e-10
            # lam is the expectation in the assembled state
            val = np.real(amps.conj() @ L.matrix @ amps)
            assert abs(val - sol.lam) < 1e-8
            # gram matrices are Hermitian PSD
            for g in (sol.gram_x, sol.gram_y):
                np.testing.assert_allclose(g, g.conj().T, atol=1e-10)
                assert np.linalg.eigvalsh(g).min() >= -1e-10

    def test_ascent_traces_monotone(self, cfg):
        L = random_hermitian((2, 3), seed=6)
        report = solve_rse_detailed(L, 2, cfg)
        checked = 0
        for mode, trace in report.traces:
            if mode == "ascent" and len(trace) > 1:
                assert np.all(np.diff(trace) >= -1e-12)
                checked += 1
        assert checked > 0

    def test_monotone_in_rank(self, cfg):
        L = random_hermitian((3, 3), seed=7)
        vals = [f12_r(L, r, cfg) for r in (1, 2, 3)]
        assert vals[0] <= vals[1] + 1e-9
        assert vals[1] <= vals[2] + 1e-9
        assert abs(vals[2] - f_max(L)) < 1e-8

    def test_rank_out_of_range(self, cfg):
        with pytest.raises(InvalidStateError):
            solve_rse(random_hermitian((2, 2), 0), 3, cfg)

    def test_deduplication_keys_on_state(self, cfg):
        # the Bell projector has a continuum of rank-1 solutions; every kept
        # pair of solutions must be genuinely distinct
        sols = solve_rse(bell_projector(), 1, cfg)
        amps = np.stack([s.state.amplitudes for s in sols])
        overlap = np.abs(amps.conj() @ amps.T) ** 2
        np.fill_diagonal(overlap, 0)
        assert overlap.max() < cfg.dedupe_overlap

    def test_sorted_descending(self, cfg):
        sols = solve_rse(random_hermitian((2, 2), 8), 1, cfg)
        lams = [s.lam for s in sols]
        assert lams == sorted(lams, reverse=True)

    def test_solutions_satisfy_both_equations(self, cfg):
        L = random_hermitian((2, 3), seed=9)
        for sol in solve_rse(L, 2, cfg)[:6]:
            x, y = sol.ansatz.x_vectors, sol.ansatz.y_vectors
            block_y, gram_y = assemble_blocks(L, y, side=2)
            r1 = block_y @ x.reshape(-1) - sol.lam * np.kron(gram_y, np.eye(2)) @ x.reshape(-1)
            block_x, gram_x = assemble_blocks(L, x, side=1)
            r2 = block_x @ y.reshape(-1) - sol.lam * np.kron(gram_x, np.eye(3)) @ y.reshape(-1)
            assert max(np.linalg.norm(r1), np.linalg.norm(r2)) <= cfg.tol_residual


class TestF12Values:
    def test_phi3_thresholds(self, cfg):
        L = phi3_projector()
        assert abs(f12_r(L, 1, cfg) - 1 / 3) < 1e-8
        assert abs(f12_r(L, 2, cfg) - 2 / 3) < 1e-8
        assert abs(f12_r(L, 3, cfg) - 1.0) < 1e-8

    def test_identity_all_ranks(self, cfg):
        d = BipartiteDims(2, 3)
        L = Observable(d, np.eye(6))
        for r in (1, 2):
            assert abs(f12_r(L, r, cfg) - 1.0) < 1e-10


class TestFMax:
    def test_projector(self):
        assert abs(f_max(bell_projector()) - 1.0) < 1e-12

    def test_swap_witness(self):
        from schmidtkit.hilbert import swap_witness_V

        for r, dims in ((2, (2, 2)), (3, (3, 3))):
            assert abs(f_max(swap_witness_V(r, dims)) - 1 / r) < 1e-12

    def test_dominates_f12(self, cfg):
        L = random_hermitian((2, 2), 10)
        assert f_max(L) >= f12_r(L, 1, cfg) - 1e-10


class TestR1Specialization:
    def test_product_of_positive_factors(self, cfg):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        a = a @ a.conj().T + 0.5 * np.eye(2)  # positive
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        b = b @ b.conj().T + 0.5 * np.eye(3)
        L = Observable(BipartiteDims(2, 3), np.kron(a, b))
        sols = se_solve_r1(L, cfg)
        expected = np.linalg.eigvalsh(a)[-1] * np.linalg.eigvalsh(b)[-1]
        assert abs(sols[0].lam - expected) < 1e-8

    def test_identity(self, cfg):
        L = Observable(BipartiteDims(2, 2), np.eye(4))
        sols = se_solve_r1(L, cfg)
        assert abs(sols[0].lam - 1.0) < 1e-10

    def test_bell_maximum_conjugate_pair(self, cfg):
        sols = se_solve_r1(bell_projector(), cfg)
        assert abs(sols[0].lam - 0.5) < 1e-8
        a = sols[0].ansatz.x_vectors[0]
        b = sols[0].ansatz.y_vectors[0]
        # maximizers come in conjugate pairs: b is a-conjugate up to phase
        assert abs(abs(np.vdot(b, a.conj())) - 1) < 1e-6

    @pytest.mark.parametrize("seed", range(4))
    def test_agrees_with_general_solver(self, seed, cfg):
        L = random_hermitian((2, 3), seed=20 + seed)
        assert abs(se_solve_r1(L, cfg)[0].lam - f12_r(L, 1, cfg)) < 1e-8


class TestOracle:
    def test_bounded_by_fmax(self):
        L = random_hermitian((2, 3), seed=12)
        assert oracle_f12_r(L, 1, samples=500, seed=0) <= f_max(L) + 1e-10

    def test_bell_value(self):
        val = oracle_f12_r(bell_projector(), 1, samples=10000, seed=0)
        assert 0.5 - 1e-4 <= val <= 0.5 + 1e-12

    def test_nondecreasing_in_rank(self):
        L = phi3_projector()
        v1 = oracle_f12_r(L, 1, samples=800, seed=1)
        v2 = oracle_f12_r(L, 2, samples=800, seed=1)
        v3 = oracle_f12_r(L, 3, samples=800, seed=1)
        assert v1 <= v2 + 1e-9 and v2 <= v3 + 1e-9

    def test_consistency_with_solver(self, cfg):
        for seed in range(3):
            L = random_hermitian((2, 2), seed=30 + seed)
            assert f12_r(L, 1, cfg) >= oracle_f12_r(L, 1, samples=2000, seed=0) - 1e-8

    def test_requires_samples(self):
        with pytest.raises(InvalidStateError):
            oracle_f12_r(bell_projector(), 1, samples=0)


class TestAnsatzValidation:
    def test_norm_enforced(self):
        with pytest.raises(InvalidStateError):
            RankRAnsatz(1, np.array([[2.0, 0.0]]), np.array([[1.0, 0.0]]))

    def test_ok(self):
        a = RankRAnsatz(1, np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]))
        assert a.r == 1


class TestConvergenceFailure:
    def test_zero_budget(self):
        cfg = SolverConfig(restarts=1, max_iter=1, tol_residual=1e-300,
                           collect_candidates=False, seed=0)
        with pytest.raises(ConvergenceError) as err:
            solve_rse(random_hermitian((3, 3), 13), 2, cfg)
        assert err.value.best_residual is not None
