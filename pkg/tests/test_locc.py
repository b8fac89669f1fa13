import numpy as np
import pytest

from schmidtkit import locc
from schmidtkit.errors import (
    AnnihilationError,
    ClassTagError,
    IllConditionedError,
    InvalidStateError,
    RankError,
)
from schmidtkit.hilbert import (
    BipartiteDims,
    Ensemble,
    expectation,
    partial_transpose,
    phase_align,
    phi_r,
    random_density,
    random_pure,
    random_separable_density,
    schmidt_decompose,
)

from conftest import schmidt_diagonal_state


class TestClassValidation:
    def test_lu_enforced(self):
        d = BipartiteDims(2, 2)
        with pytest.raises(ClassTagError, match="unitary"):
            locc.SeparableOperation(
                (locc.LocalOperatorPair(2 * np.eye(2), np.eye(2)),), locc.LU, d
            )

    def test_li_singular_rejected(self):
        d = BipartiteDims(2, 2)
        with pytest.raises(ClassTagError, match="singular"):
            locc.SeparableOperation(
                (locc.LocalOperatorPair(np.diag([1.0, 0.0]), np.eye(2)),), locc.LI, d
            )

    def test_lp_idempotent_required(self):
        d = BipartiteDims(2, 2)
        with pytest.raises(ClassTagError, match="projector"):
            locc.SeparableOperation(
                (locc.LocalOperatorPair(0.5 * np.eye(2), np.eye(2)),), locc.LP, d
            )

    def test_single_pair_classes(self):
        d = BipartiteDims(2, 2)
        pair = locc.LocalOperatorPair(np.eye(2), np.eye(2))
        with pytest.raises(ClassTagError, match="single pair"):
            locc.SeparableOperation((pair, pair), locc.LU, d)


class TestApply:
    def test_identity(self):
        rho = random_density((2, 2), seed=0)
        out = locc.apply(locc.identity_operation(rho.dims), rho)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-14)

    def test_truncation_maps_phi3_to_phi2(self):
        rho = phi_r(3, (3, 3)).projector()
        op = locc.truncation_projection(2, rho.dims)
        out = locc.apply(op, rho)
        np.testing.assert_allclose(out.matrix, phi_r(2, (3, 3)).projector().matrix, atol=1e-12)

    def test_lu_preserves_schmidt_coefficients(self):
        state = schmidt_diagonal_state([0.8, 0.5, 0.2], (3, 3))
        op = locc.sample_operation(locc.LU, state.dims, seed=5)
        out = locc.apply_to_pure(op, state)
        np.testing.assert_allclose(
            schmidt_decompose(out).coefficients,
            schmidt_decompose(state).coefficients,
            atol=1e-10,
        )

    def test_annihilation(self):
        d = BipartiteDims(2, 2)
        p0 = np.diag([1.0, 0.0]).astype(complex)
        op = locc.SeparableOperation((locc.LocalOperatorPair(p0, np.eye(2)),), locc.LP, d)
        rho = schmidt_diagonal_state([0, 1], (2, 2)).projector()
        # project onto |0> on side 1 annihilates |1,1>
        with pytest.raises(AnnihilationError):
            locc.apply(op, rho)


class TestCompose:
    def test_identity_neutral(self):
        d = BipartiteDims(2, 2)
        op = locc.sample_operation(locc.GENERAL, d, seed=1)
        comp = locc.compose(op, locc.identity_operation(d))
        for seed in range(10):
            rho = random_density(d, seed)
            np.testing.assert_allclose(
                locc.apply(comp, rho).matrix, locc.apply(op, rho).matrix, atol=1e-10
            )

    def test_li_compose_stays_li(self):
        d = BipartiteDims(2, 3)
        a = locc.sample_operation(locc.LI, d, seed=2)
        b = locc.sample_operation(locc.LI, d, seed=3)
        comp = locc.compose(a, b)
        assert comp.class_tag == locc.LI
        for m in (comp.pairs[0].A, comp.pairs[0].B):
            assert np.linalg.svd(m, compute_uv=False).min() > 1e-10

    def test_tag_join(self):
        d = BipartiteDims(2, 2)
        lu = locc.sample_operation(locc.LU, d, 0)
        li = locc.sample_operation(locc.LI, d, 1)
        lp = locc.sample_operation(locc.LP, d, 2)
        assert locc.compose(lu, lu).class_tag == locc.LU
        assert locc.compose(lu, li).class_tag == locc.LI
        assert locc.compose(lp, lp).class_tag == locc.GENERAL
        assert locc.compose(li, lp).class_tag == locc.GENERAL

    @pytest.mark.parametrize("seed", range(5))
    def test_apply_respects_composition(self, seed):
        d = BipartiteDims(2, 2)
        op1 = locc.sample_operation(locc.GENERAL, d, seed=seed)
        op2 = locc.sample_operation(locc.GENERAL, d, seed=seed + 100)
        rho = random_density(d, seed + 200)
        try:
            sequential = locc.apply(op1, locc.apply(op2, rho))
        except AnnihilationError:
            return
        composed = locc.apply(locc.compose(op1, op2), rho)
        np.testing.assert_allclose(composed.matrix, sequential.matrix, atol=1e-10)


class TestInvert:
    def test_identity(self):
        d = BipartiteDims(2, 2)
        inv = locc.invert(locc.identity_operation(d))
        np.testing.assert_allclose(inv.pairs[0].A, np.eye(2), atol=1e-14)

    def test_involution(self):
        op = locc.sample_operation(locc.LI, BipartiteDims(2, 3), seed=4)
        twice = locc.invert(locc.invert(op))
        np.testing.assert_allclose(twice.pairs[0].A, op.pairs[0].A, atol=1e-8)
        np.testing.assert_allclose(twice.pairs[0].B, op.pairs[0].B, atol=1e-8)

    @pytest.mark.parametrize("seed", range(10))
    def test_round_trip_on_random_densities(self, seed):
        d = BipartiteDims(2, 2)
        op = locc.sample_operation(locc.LI, d, seed=seed)
        rho = random_density(d, seed + 50)
        back = locc.apply(locc.invert(op), locc.apply(op, rho))
        assert np.max(np.abs(back.matrix - rho.matrix)) < 1e-8

    def test_class_error(self):
        op = locc.sample_operation(locc.LP, BipartiteDims(2, 2), seed=1)
        with pytest.raises(ClassTagError):
            locc.invert(op)

    def test_ill_conditioned(self):
        d = BipartiteDims(2, 2)
        t = np.diag([1.0, 1e-9]).astype(complex)
        op = locc.SeparableOperation((locc.LocalOperatorPair(t, np.eye(2)),), locc.GENERAL, d)
        object.__setattr__(op, "class_tag", locc.LI)  # bypass construction gate
        with pytest.raises(IllConditionedError):
            locc.invert(op)


class TestLocalFilter:
    def test_identity_coefficients(self):
        d = BipartiteDims(2, 2)
        op = locc.local_filter_T(np.eye(2), np.eye(2), [1 / np.sqrt(2)] * 2, 2, d)
        out = locc.apply_to_pure(op, phi_r(2, d))
        np.testing.assert_allclose(
            phase_align(out.amplitudes), phi_r(2, d).amplitudes, atol=1e-12
        )

    def test_prescribed_coefficients(self):
        d = BipartiteDims(2, 2)
        lam = np.array([np.sqrt(0.9), np.sqrt(0.1)])
        op = locc.local_filter_T(np.eye(2), np.eye(2), lam, 2, d)
        out = locc.apply_to_pure(op, phi_r(2, d))
        np.testing.assert_allclose(schmidt_decompose(out).coefficients, lam, atol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_rank_preserved(self, seed):
        d = BipartiteDims(3, 3)
        rng = np.random.default_rng(seed)
        lam = rng.random(3) + 0.1
        lam /= np.linalg.norm(lam)
        op = locc.local_filter_T(
            locc.haar_unitary(3, rng), locc.haar_unitary(3, rng), lam, 3, d
        )
        assert op.class_tag == locc.LI
        out = locc.apply_to_pure(op, phi_r(3, d))
        assert schmidt_decompose(out).rank == 3

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidStateError):
            locc.local_filter_T(np.eye(2), np.eye(2), [1.0, 0.0], 2, (2, 2))


class TestTruncationProjection:
    def test_chain_value(self):
        d = BipartiteDims(3, 3)
        out = locc.apply_to_pure(locc.truncation_projection(2, d), phi_r(3, d))
        np.testing.assert_allclose(
            phase_align(out.amplitudes), phi_r(2, d).amplitudes, atol=1e-12
        )

    def test_full_rank_is_identity(self):
        d = BipartiteDims(2, 3)
        rho = random_density(d, 3)
        out = locc.apply(locc.truncation_projection(2, d), rho)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-12)

    def test_unnormalized_trace(self):
        # projecting phi_r with a rank r-1 projector keeps (r-1)/r of the mass
        d = BipartiteDims(3, 3)
        op = locc.truncation_projection(2, d)
        raw = locc.apply_raw(op, phi_r(3, d).projector().matrix)
        assert abs(np.trace(raw).real - 2 / 3) < 1e-12

    def test_idempotent(self):
        d = BipartiteDims(3, 2)
        p = locc.truncation_projection(2, d).pairs[0].A
        np.testing.assert_allclose(p @ p, p, atol=1e-14)


class TestGeneratorKraus:
    def test_phi2_to_product(self):
        d = BipartiteDims(2, 2)
        gen = phi_r(2, d)
        ens = Ensemble([1.0], (phi_r(1, d),))
        op = locc.generator_kraus(gen, ens)
        mapped = (
            np.kron(op.pairs[0].A, op.pairs[0].B) @ gen.amplitudes
        )
        np.testing.assert_allclose(mapped, phi_r(1, d).amplitudes, atol=1e-10)

    def test_generator_is_own_ensemble(self):
        d = BipartiteDims(2, 2)
        gen = schmidt_diagonal_state([0.8, 0.6], d)
        op = locc.generator_kraus(gen, Ensemble([1.0], (gen,)))
        mapped = np.kron(op.pairs[0].A, op.pairs[0].B) @ gen.amplitudes
        np.testing.assert_allclose(phase_align(mapped), phase_align(gen.amplitudes), atol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_ensemble_reconstruction(self, seed):
        d = BipartiteDims(3, 3)
        rng = np.random.default_rng(seed)
        gen = schmidt_diagonal_state(rng.random(2) + 0.3, d)
        members = []
        for k in range(3):
            m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            u, s, vh = np.linalg.svd(m)
            s[2:] = 0  # force rank <= 2
            vec = (u @ np.diag(s / np.linalg.norm(s[:2])) @ vh).reshape(-1)
            from schmidtkit.hilbert import BipartitePureState

            members.append(BipartitePureState(d, vec / np.linalg.norm(vec)))
        weights = rng.dirichlet(np.ones(3))
        ens = Ensemble(weights, tuple(members))
        op = locc.generator_kraus(gen, ens)
        target = ens.mix()
        for pair, p_k, member in zip(op.pairs, ens.weights, ens.members):
            mapped = np.kron(pair.A, pair.B) @ gen.amplitudes
            np.testing.assert_allclose(mapped, np.sqrt(p_k) * member.amplitudes, atol=1e-8)
        out = locc.apply(op, gen.projector())
        assert np.max(np.abs(out.matrix - target.matrix)) < 1e-8

    def test_rank_error(self):
        d = BipartiteDims(3, 3)
        gen = schmidt_diagonal_state([1.0, 1.0], d)  # rank 2
        with pytest.raises(RankError):
            locc.generator_kraus(gen, Ensemble([1.0], (phi_r(3, d),)))


class TestSampling:
    def test_deterministic(self):
        a = locc.sample_operation(locc.GENERAL, (2, 2), seed=6)
        b = locc.sample_operation(locc.GENERAL, (2, 2), seed=6)
        assert len(a.pairs) == len(b.pairs)
        for pa, pb in zip(a.pairs, b.pairs):
            np.testing.assert_array_equal(pa.A, pb.A)

    @pytest.mark.parametrize("tag", locc.CLASS_TAGS)
    def test_sampled_classes_validate(self, tag):
        for seed in range(5):
            op = locc.sample_operation(tag, (2, 3), seed=seed)
            assert op.class_tag == tag  # construction re-validates invariants

    @pytest.mark.parametrize("seed", range(10))
    def test_general_preserves_separability_pt(self, seed):
        rho = random_separable_density((2, 2), seed)
        op = locc.sample_operation(locc.GENERAL, (2, 2), seed=seed + 1000)
        try:
            out = locc.apply(op, rho)
        except AnnihilationError:
            return
        assert np.linalg.eigvalsh(partial_transpose(out)).min() >= -1e-10


class TestOperationIO:
    def test_round_trip(self, tmp_path):
        op = locc.sample_operation(locc.LI, (2, 3), seed=2)
        path = tmp_path / "op.json"
        locc.save_operation(op, path)
        loaded = locc.load_operation(path)
        assert loaded.class_tag == locc.LI
        np.testing.assert_allclose(loaded.pairs[0].A, op.pairs[0].A, atol=0)

    def test_loader_enforces_class(self, tmp_path):
        doc = {
            "class": "LU",
            "pairs": [{"A": [[[2.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]]],
                        "B": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}],
        }
        with pytest.raises(ClassTagError):
            locc.parse_operation_document(doc)
