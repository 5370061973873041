"""Functional-map estimation, pointwise conversion, and the losses.

The regularized solver is checked against an augmented-least-squares oracle
(QR route instead of the normal equations), nearest-row conversion against a
brute-force double loop, the soft map against an unstabilized softmax, and
the analytic gradients against central finite differences.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as orc
from fmapkit.errors import LengthMismatch, ParseError, RankDeficient
from fmapkit.fmap import (
    FunctionalMap,
    PointMap,
    convert_adjoint,
    convert_feature_nn,
    grad_unsupervised,
    load_fmap,
    loss_properness,
    loss_supervised,
    loss_unsupervised,
    nearest_rows,
    properness_project,
    save_fmap,
    soft_map,
    solve_fmap,
)


class TestSolve:
    def test_matches_augmented_lstsq(self):
        rng = np.random.default_rng(0)
        A1 = rng.standard_normal((6, 10))
        A2 = rng.standard_normal((7, 10))
        lam1 = np.sort(rng.uniform(0, 5, 6))
        lam2 = np.sort(rng.uniform(0, 5, 7))
        C = solve_fmap(A1, A2, lam1, lam2, mu=0.5)
        ref = orc.solve_fmap_ref(A1, A2, lam1, lam2, mu=0.5)
        assert C == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_mu_zero_full_rank(self):
        rng = np.random.default_rng(1)
        A1 = rng.standard_normal((5, 12))
        A2 = rng.standard_normal((5, 12))
        C = solve_fmap(A1, A2, mu=0.0)
        ref = orc.solve_fmap_ref(A1, A2, mu=0.0)
        assert C == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_mu_zero_consistent_system_solved_exactly(self):
        rng = np.random.default_rng(1)
        A1 = rng.standard_normal((5, 12))
        C_true = rng.standard_normal((6, 5))
        A2 = C_true @ A1
        C = solve_fmap(A1, A2, mu=0.0)
        assert C == pytest.approx(C_true, rel=1e-9, abs=1e-11)
        assert C @ A1 == pytest.approx(A2, abs=1e-9)

    def test_mu_zero_rank_deficient_raises(self):
        rng = np.random.default_rng(2)
        A1 = rng.standard_normal((4, 2))  # rank 2 < k1 = 4
        A2 = rng.standard_normal((4, 2))
        with pytest.raises(RankDeficient):
            solve_fmap(A1, A2, mu=0.0)

    def test_square_identity_recovery(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((6, 6))
        lam = np.arange(6.0)
        C = solve_fmap(A, A, lam, lam, mu=1e-3)
        assert C == pytest.approx(np.eye(6), abs=1e-10)

    def test_exact_recovery_on_permuted_pair(self, pair, complete_features):
        F1, F2 = complete_features
        A1 = pair.basis1.project(F1)
        A2 = pair.basis2.project(F2)
        C = solve_fmap(A1, A2, pair.basis1.lam, pair.basis2.lam, mu=1e-3)
        assert np.linalg.norm(C - pair.C_gt) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(LengthMismatch):
            solve_fmap(np.zeros((3, 4)), np.zeros((3, 5)))

    def test_mu_needs_eigenvalues(self):
        with pytest.raises(ValueError):
            solve_fmap(np.zeros((3, 4)), np.zeros((3, 4)), mu=0.1)

    def test_right_mixing_invariance_square(self):
        # with d == k the solution is A2 A1^{-1}: invariant to invertible
        # right-mixing of the descriptor columns
        rng = np.random.default_rng(4)
        A1 = rng.standard_normal((5, 5))
        A2 = rng.standard_normal((5, 5))
        X = rng.standard_normal((5, 5)) + 5 * np.eye(5)
        C = solve_fmap(A1, A2, mu=0.0)
        CX = solve_fmap(A1 @ X, A2 @ X, mu=0.0)
        assert CX == pytest.approx(C, rel=1e-8, abs=1e-10)


class TestNearestRows:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        points = rng.standard_normal((200, 5))
        queries = rng.standard_normal((300, 5))
        assert np.array_equal(nearest_rows(queries, points),
                              orc.brute_nn(queries, points))

    def test_tie_takes_first_index(self):
        points = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        queries = np.array([[1.0, 0.0]])
        assert nearest_rows(queries, points)[0] == 0

    def test_blockwise_consistency(self):
        # more queries than one processing block
        rng = np.random.default_rng(6)
        points = rng.standard_normal((50, 3))
        queries = rng.standard_normal((5000, 3))
        assert np.array_equal(nearest_rows(queries, points),
                              orc.brute_nn(queries, points))


class TestPointMap:
    def test_hard_apply(self):
        pm = PointMap("hard", n_source=4, indices=[2, 0, 3])
        vals = np.arange(8.0).reshape(4, 2)
        assert np.array_equal(pm.apply(vals), vals[[2, 0, 3]])
        assert pm.n_target == 3

    def test_soft_apply(self):
        m = np.array([[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
        pm = PointMap("soft", n_source=3, matrix=m)
        vals = np.array([[0.0], [2.0], [4.0]])
        assert pm.apply(vals) == pytest.approx(np.array([[1.0], [4.0]]))

    def test_hard_validation(self):
        with pytest.raises(LengthMismatch):
            PointMap("hard", n_source=3, indices=[0, 3])
        with pytest.raises(LengthMismatch):
            PointMap("hard", n_source=3, indices=[-1])
        with pytest.raises(LengthMismatch):
            PointMap("hard", n_source=3)

    def test_soft_validation(self):
        with pytest.raises(LengthMismatch):
            PointMap("soft", n_source=2, matrix=np.array([[0.7, 0.7]]))
        with pytest.raises(LengthMismatch):
            PointMap("soft", n_source=2, matrix=np.array([[-0.5, 1.5]]))
        with pytest.raises(LengthMismatch):
            PointMap("soft", n_source=3, matrix=np.ones((2, 2)) / 2)

    def test_unknown_kind(self):
        with pytest.raises(LengthMismatch):
            PointMap("fuzzy", n_source=2, indices=[0])

    def test_apply_size_check(self):
        pm = PointMap("hard", n_source=4, indices=[0])
        with pytest.raises(LengthMismatch):
            pm.apply(np.zeros((5, 2)))


class TestConversions:
    def test_adjoint_recovers_permutation(self, pair):
        pm = convert_adjoint(pair.C_gt, pair.basis1.phi, pair.basis2.phi)
        assert np.array_equal(pm.indices, pair.perm)

    def test_adjoint_matches_brute_force(self, pair):
        C = pair.C_gt[:10, :10]
        phi1 = pair.basis1.phi[:, :10]
        phi2 = pair.basis2.phi[:, :10]
        pm = convert_adjoint(C, phi1, phi2)
        assert np.array_equal(pm.indices, orc.brute_nn(phi2 @ C, phi1))

    def test_feature_nn_recovers_permutation(self, pair, complete_features):
        F1, F2 = complete_features
        pm = convert_feature_nn(F1, F2)
        assert np.array_equal(pm.indices, pair.perm)

    def test_feature_nn_matches_brute_force(self):
        rng = np.random.default_rng(7)
        F1 = rng.standard_normal((150, 6))
        F2 = rng.standard_normal((80, 6))
        pm = convert_feature_nn(F1, F2)
        assert np.array_equal(pm.indices, orc.brute_nn(F2, F1))
        assert pm.n_source == 150 and pm.n_target == 80


class TestSoftMap:
    def test_matches_unstabilized_softmax(self):
        rng = np.random.default_rng(8)
        G1 = rng.standard_normal((40, 4))
        G2 = rng.standard_normal((30, 4))
        pm = soft_map(G1, G2, tau=0.5)
        ref = orc.softmax_map_ref(G1, G2, 0.5)
        assert pm.matrix == pytest.approx(ref, rel=1e-12)

    def test_rows_stochastic(self):
        rng = np.random.default_rng(9)
        pm = soft_map(rng.standard_normal((25, 3)), rng.standard_normal((35, 3)))
        assert pm.matrix.sum(axis=1) == pytest.approx(np.ones(35), abs=1e-12)
        assert np.all(pm.matrix >= 0)

    def test_huge_similarities_stay_finite(self):
        G1 = 1e4 * np.eye(3)
        G2 = 1e4 * np.eye(3)[[2, 0]]
        pm = soft_map(G1, G2, tau=0.07)
        assert np.isfinite(pm.matrix).all()
        assert np.array_equal(pm.matrix.argmax(axis=1), [2, 0])

    def test_tau_validation(self):
        with pytest.raises(ValueError):
            soft_map(np.ones((2, 2)), np.ones((2, 2)), tau=0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(LengthMismatch):
            soft_map(np.ones((2, 3)), np.ones((2, 2)))

    @settings(deadline=None, max_examples=20)
    @given(st.floats(1e-3, 10.0))
    def test_argmax_is_tau_invariant(self, tau):
        rng = np.random.default_rng(10)
        G1 = rng.standard_normal((30, 4))
        G2 = rng.standard_normal((20, 4))
        pm = soft_map(G1, G2, tau=tau)
        assert np.array_equal(pm.matrix.argmax(axis=1), (G2 @ G1.T).argmax(axis=1))


class TestPropernessProjection:
    def test_hard_map_formula(self, pair):
        pm = PointMap("hard", n_source=642,
                      indices=np.random.default_rng(11).integers(0, 642, 642))
        C = properness_project(pm, pair.basis1.phi, pair.basis2.phi, pair.lap2.mass)
        manual = pair.basis2.phi.T @ (pair.lap2.mass[:, None]
                                      * pair.basis1.phi[pm.indices])
        assert np.array_equal(C, manual)

    def test_ground_truth_is_fixed_point(self, pair):
        pm = PointMap("hard", n_source=642, indices=pair.perm)
        C = properness_project(pm, pair.basis1.phi, pair.basis2.phi, pair.lap2.mass)
        assert C == pytest.approx(pair.C_gt, abs=1e-14)

    def test_soft_limit_equals_hard(self, pair):
        pm_hard = convert_adjoint(pair.C_gt, pair.basis1.phi, pair.basis2.phi)
        C_hard = properness_project(pm_hard, pair.basis1.phi, pair.basis2.phi,
                                    pair.lap2.mass)
        pm_soft = soft_map(pair.basis1.phi, pair.basis2.phi @ pair.C_gt, tau=1e-4)
        C_soft = properness_project(pm_soft, pair.basis1.phi, pair.basis2.phi,
                                    pair.lap2.mass)
        assert C_soft == pytest.approx(C_hard, abs=1e-12)

    def test_size_mismatch(self, pair):
        pm = PointMap("hard", n_source=642, indices=np.zeros(10, dtype=int))
        with pytest.raises(LengthMismatch):
            properness_project(pm, pair.basis1.phi, pair.basis2.phi, pair.lap2.mass)


class TestLosses:
    def test_supervised_zero_at_truth(self, pair):
        assert loss_supervised(pair.C_gt, pair.C_gt) == 0.0

    def test_supervised_is_squared_frobenius(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.zeros((2, 2))
        assert loss_supervised(a, b) == pytest.approx(30.0)

    def test_properness_matches_supervised_form(self):
        rng = np.random.default_rng(12)
        a, b = rng.standard_normal((2, 5, 5))
        assert loss_properness(a, b) == pytest.approx(
            float(np.linalg.norm(a - b) ** 2), rel=1e-12
        )

    def test_unsupervised_zero_at_orthogonal_inverse_pair(self):
        rng = np.random.default_rng(13)
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        assert loss_unsupervised(q, q.T) == pytest.approx(0.0, abs=1e-25)

    def test_unsupervised_positive_elsewhere(self):
        assert loss_unsupervised(2 * np.eye(3), np.eye(3)) > 0

    def test_gradient_zero_at_minimum(self):
        g12, g21 = grad_unsupervised(np.eye(4), np.eye(4))
        assert np.abs(g12).max() == 0.0
        assert np.abs(g21).max() == 0.0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(100 + seed)
        C12 = rng.standard_normal((5, 5))
        C21 = rng.standard_normal((5, 5))
        g12, g21 = grad_unsupervised(C12, C21)
        f12 = orc.fd_gradient(lambda x: loss_unsupervised(x, C21), C12)
        f21 = orc.fd_gradient(lambda x: loss_unsupervised(C12, x), C21)
        assert g12 == pytest.approx(f12, rel=1e-6, abs=1e-7)
        assert g21 == pytest.approx(f21, rel=1e-6, abs=1e-7)


class TestFmapIO:
    def test_round_trip_exact(self, tmp_path):
        C = np.random.default_rng(14).standard_normal((4, 6))
        path = tmp_path / "c.txt"
        save_fmap(C, path)
        assert np.array_equal(load_fmap(path), C)

    def test_header_is_k2_k1(self, tmp_path):
        path = tmp_path / "c.txt"
        save_fmap(np.zeros((4, 6)), path)
        assert path.read_text().splitlines()[0] == "FMAP 4 6"

    def test_functional_map_wrapper(self, pair):
        fm = FunctionalMap(pair.C_gt, source_id="s", target_id="d")
        assert fm.C.shape == (30, 30)
        assert fm.k1 == 30 and fm.k2 == 30
        with pytest.raises(LengthMismatch):
            FunctionalMap(np.zeros(3))

    def test_bad_header(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("CMAP 2 2\n1 0\n0 1\n")
        with pytest.raises(ParseError):
            load_fmap(path)

    def test_shape_mismatch(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("FMAP 3 2\n1 0\n0 1\n")
        with pytest.raises(ParseError):
            load_fmap(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_fmap(tmp_path / "nope.txt")
