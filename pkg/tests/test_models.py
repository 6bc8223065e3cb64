"""Twin-plane trainers against dense linear-algebra and enumeration oracles.

The dual assembly is rebuilt here with plain ``np.linalg.inv``; trained
coefficients are checked against the exhaustive active-set oracle from
test_qp (the multiplier vector need not be unique when the dual Hessian is
rank deficient, but V'x — and hence the plane — is, so the comparison is on
the recovered planes and the objective).
"""

import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from test_qp import active_set_oracle

from gbutsvm import (
    DataFormatError,
    Hyperparams,
    ModelFormatError,
    QPSolution,
    SolverError,
    TrainInputs,
    TrainedModel,
    assemble_dual_negative,
    assemble_dual_positive,
    classify,
    decision_values,
    kernel_ball_radius,
    load_model,
    rbf_kernel,
    rbf_kernel_matrix,
    save_model,
    train_gbutsvm,
    train_tsvm,
    train_utsvm,
    universum_hinge,
)


def random_inputs(rng, m1=5, m2=6, n_univ=3, n_features=3, radii=True):
    A = rng.normal(size=(m1, n_features))
    B = rng.normal(size=(m2, n_features)) + 2.0
    scale = 1.0 if radii else 0.0
    U = rng.normal(size=(n_univ, n_features)) + 1.0 if n_univ else None
    ru = scale * rng.uniform(0, 0.5, size=n_univ) if n_univ else None
    return TrainInputs(
        A, B,
        scale * rng.uniform(0, 0.5, size=m1),
        scale * rng.uniform(0, 0.5, size=m2),
        U, ru,
    )


def oracle_ridge(M):
    return 1e-6 * (1.0 + np.trace(M.T @ M) / M.shape[1])


def oracle_dual(M, V, lin, upper):
    """Dense rebuild of one dual: Q, q, bounds."""
    delta = oracle_ridge(M)
    K = np.linalg.inv(M.T @ M + delta * np.eye(M.shape[1]))
    Q = V @ K @ V.T
    Q = 0.5 * (Q + Q.T)
    return Q, -lin, np.zeros(lin.size), upper, delta, K


def aug(M):
    return np.hstack([M, np.ones((M.shape[0], 1))])


class TestDualAssembly:
    def test_positive_dual_matches_dense_oracle(self):
        rng = np.random.default_rng(50)
        for trial in range(6):
            t = random_inputs(rng)
            h = Hyperparams(c1=0.8, c2=1.3, cu=0.6, epsilon=0.3)
            V = np.vstack([aug(t.B), -aug(t.U)])
            lin = np.concatenate([1.0 - t.r_minus, (h.epsilon - 1.0) - t.r_univ])
            upper = np.concatenate(
                [np.full(t.B.shape[0], h.c1), np.full(t.U.shape[0], h.cu)]
            )
            Q, q, lo, hi, _, _ = oracle_dual(aug(t.A), V, lin, upper)
            qp = assemble_dual_positive(t, h)
            assert_allclose(qp.Q, Q, rtol=1e-8, atol=1e-10)
            assert_array_equal(qp.q, q)
            assert_array_equal(qp.lower, lo)
            assert_array_equal(qp.upper, hi)

    def test_negative_dual_matches_dense_oracle(self):
        rng = np.random.default_rng(51)
        t = random_inputs(rng)
        h = Hyperparams(c1=0.8, c2=1.3, cu=0.6, epsilon=0.3)
        V = np.vstack([aug(t.A), -aug(t.U)])
        lin = np.concatenate([1.0 - t.r_plus, (h.epsilon - 1.0) - t.r_univ])
        upper = np.concatenate(
            [np.full(t.A.shape[0], h.c2), np.full(t.U.shape[0], h.cu)]
        )
        Q, q, lo, hi, _, _ = oracle_dual(aug(t.B), V, lin, upper)
        qp = assemble_dual_negative(t, h)
        assert_allclose(qp.Q, Q, rtol=1e-8, atol=1e-10)
        assert_array_equal(qp.q, q)
        assert_array_equal(qp.upper, hi)

    def test_cu_zero_drops_universum_block(self):
        rng = np.random.default_rng(52)
        t = random_inputs(rng)
        h = Hyperparams(cu=0.0)
        assert assemble_dual_positive(t, h).n == t.B.shape[0]
        assert assemble_dual_negative(t, h).n == t.A.shape[0]

    def test_no_universum_block_without_rows(self):
        rng = np.random.default_rng(53)
        t = random_inputs(rng, n_univ=0)
        h = Hyperparams(cu=5.0)
        assert assemble_dual_positive(t, h).n == t.B.shape[0]


class TestTrainedPlanes:
    def test_theta_matches_enumeration_oracle(self):
        rng = np.random.default_rng(54)
        for trial in range(4):
            t = random_inputs(rng, m1=3, m2=3, n_univ=2, n_features=2)
            h = Hyperparams(c1=0.9, c2=1.1, cu=0.7, epsilon=0.2)
            model = train_gbutsvm(t, h)

            for side in ("positive", "negative"):
                if side == "positive":
                    qp = assemble_dual_positive(t, h)
                    M = aug(t.A)
                    V = np.vstack([aug(t.B), -aug(t.U)])
                    theta = model.theta_plus
                else:
                    qp = assemble_dual_negative(t, h)
                    M = aug(t.B)
                    V = np.vstack([aug(t.A), -aug(t.U)])
                    theta = model.theta_minus
                x_star, f_star = active_set_oracle(qp)
                delta = oracle_ridge(M)
                gram = M.T @ M + delta * np.eye(M.shape[1])
                theta_star = -np.linalg.solve(gram, V.T @ x_star)
                assert_allclose(theta, theta_star, atol=1e-5)
                assert model.diagnostics[f"objective_{side}"] == pytest.approx(
                    f_star, abs=1e-7
                )

    def test_dual_variables_feasible(self):
        rng = np.random.default_rng(55)
        t = random_inputs(rng, m1=8, m2=7, n_univ=5)
        h = Hyperparams(c1=0.4, c2=0.9, cu=0.3, epsilon=0.25)
        model = train_gbutsvm(t, h)
        assert model.alpha.shape == (7,)
        assert model.lam.shape == (8,)
        assert model.mu.shape == (5,) and model.nu.shape == (5,)
        assert np.all(model.alpha >= 0) and np.all(model.alpha <= h.c1)
        assert np.all(model.lam >= 0) and np.all(model.lam <= h.c2)
        for v in (model.mu, model.nu):
            assert np.all(v >= 0) and np.all(v <= h.cu)

    def test_stationarity_of_planes(self):
        rng = np.random.default_rng(56)
        t = random_inputs(rng, m1=10, m2=9, n_univ=4)
        h = Hyperparams(c1=1.2, c2=0.8, cu=0.5, epsilon=0.1)
        model = train_gbutsvm(t, h)
        H, G, O = aug(t.A), aug(t.B), aug(t.U)

        d_pos = model.diagnostics["ridge_positive"]
        res = (H.T @ H + d_pos * np.eye(H.shape[1])) @ model.theta_plus \
            + G.T @ model.alpha - O.T @ model.mu
        assert np.max(np.abs(res)) <= 1e-5 * (1.0 + np.max(np.abs(model.theta_plus)))

        d_neg = model.diagnostics["ridge_negative"]
        res = (G.T @ G + d_neg * np.eye(G.shape[1])) @ model.theta_minus \
            + H.T @ model.lam - O.T @ model.nu
        assert np.max(np.abs(res)) <= 1e-5 * (1.0 + np.max(np.abs(model.theta_minus)))

    def test_diagnostics_present(self):
        rng = np.random.default_rng(57)
        t = random_inputs(rng, n_univ=0)
        model = train_gbutsvm(t, Hyperparams())
        for key in (
            "train_seconds", "kkt_positive", "kkt_negative",
            "iterations_positive", "ridge_positive", "objective_negative",
            "solve_seconds_positive",
        ):
            assert key in model.diagnostics
        assert model.diagnostics["train_seconds"] >= 0


class TestReductions:
    def test_zero_radii_no_universum_reduces_to_tsvm(self):
        rng = np.random.default_rng(58)
        X = rng.normal(size=(24, 3))
        y = np.where(rng.random(24) < 0.5, 1, -1)
        y[:2] = [1, -1]
        X[y == 1] += 1.5
        h = Hyperparams(c1=0.7, c2=1.4, cu=0.0)
        gb = train_gbutsvm(TrainInputs.from_points(X, y), h)
        ts = train_tsvm(X, y, h)
        assert_allclose(gb.theta_plus, ts.theta_plus, atol=1e-10)
        assert_allclose(gb.theta_minus, ts.theta_minus, atol=1e-10)
        Z = rng.normal(size=(40, 3))
        assert_allclose(decision_values(gb, Z), decision_values(ts, Z), atol=1e-10)

    def test_zero_radii_with_universum_reduces_to_utsvm(self):
        rng = np.random.default_rng(59)
        X = rng.normal(size=(20, 2))
        y = np.where(rng.random(20) < 0.5, 1, -1)
        y[:2] = [1, -1]
        X[y == 1] += 2.0
        Uv = rng.normal(size=(6, 2)) + 1.0
        h = Hyperparams(c1=1.0, c2=1.0, cu=0.6, epsilon=0.3)
        gb = train_gbutsvm(TrainInputs.from_points(X, y, Uv), h)
        ut = train_utsvm(X, y, Uv, h)
        assert_allclose(gb.theta_plus, ut.theta_plus, atol=1e-10)
        assert_allclose(gb.theta_minus, ut.theta_minus, atol=1e-10)
        Z = rng.normal(size=(40, 2))
        assert_allclose(decision_values(gb, Z), decision_values(ut, Z), atol=1e-10)

    def test_kinds_recorded(self):
        rng = np.random.default_rng(60)
        X = np.vstack([rng.normal(size=(8, 2)), rng.normal(size=(8, 2)) + 3.0])
        y = np.repeat([1, -1], 8)
        assert train_tsvm(X, y).kind == "tsvm"
        assert train_utsvm(X, y, rng.normal(size=(4, 2))).kind == "utsvm"
        assert train_gbutsvm(TrainInputs.from_points(X, y)).kind == "gbutsvm"


class TestSymmetry:
    def test_mirrored_data_gives_mirrored_planes(self):
        rng = np.random.default_rng(61)
        A = rng.normal(size=(7, 3)) + 1.0
        r = rng.uniform(0, 0.4, size=7)
        t = TrainInputs(A, -A, r, r)
        model = train_gbutsvm(t, Hyperparams(c1=0.8, c2=0.8, cu=0.0))
        assert_allclose(model.w_minus, -model.w_plus, atol=1e-7)
        assert model.b_minus == pytest.approx(model.b_plus, abs=1e-7)

    def test_classification_antisymmetric_under_negation(self):
        rng = np.random.default_rng(62)
        A = rng.normal(size=(9, 2)) + 1.0
        r = rng.uniform(0, 0.3, size=9)
        model = train_gbutsvm(TrainInputs(A, -A, r, r), Hyperparams(c1=1.1, c2=1.1, cu=0.0))
        Z = rng.normal(size=(200, 2)) * 3.0
        assert_array_equal(classify(model, Z), -classify(model, -Z))

    def test_tie_rule_flip(self):
        # Swapping the two planes and using the strict comparison must
        # negate every prediction, including exact ties.
        theta_plus = np.array([1.0, 0.0, 0.0])
        theta_minus = np.array([0.0, 1.0, 0.0])
        model = TrainedModel(
            "tsvm", Hyperparams(), 2, theta_plus, theta_minus, None,
            np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0),
        )
        rng = np.random.default_rng(63)
        Z = np.vstack([
            rng.normal(size=(50, 2)),
            [[1.0, 1.0], [2.0, -2.0], [0.0, 0.0]],  # exact ties
        ])
        original = classify(model, Z)
        ties = np.isclose(
            decision_values(model, Z)[:, 0], decision_values(model, Z)[:, 1]
        )
        assert original[-3:].tolist() == [1, 1, 1]  # ties go positive
        swapped = dataclasses.replace(
            model, theta_plus=theta_minus, theta_minus=theta_plus
        )
        d = decision_values(swapped, Z)
        strict = np.where(d[:, 0] < d[:, 1], 1, -1)
        assert_array_equal(strict, -original)
        assert np.any(ties)


class TestDecisionRule:
    def _hand_model(self, theta_plus, theta_minus):
        return TrainedModel(
            "tsvm", Hyperparams(), 2,
            np.asarray(theta_plus, dtype=float),
            np.asarray(theta_minus, dtype=float),
            None, np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0),
        )

    def test_hand_computed_distances(self):
        model = self._hand_model([1.0, 0.0, -1.0], [0.0, 1.0, 2.0])
        d = decision_values(model, [[3.0, 4.0]])
        assert_allclose(d, [[2.0, 6.0]])
        assert classify(model, [[3.0, 4.0]]).tolist() == [1]

    def test_normalized_divides_by_plane_norm(self):
        model = self._hand_model([3.0, 4.0, 0.0], [0.0, 2.0, 1.0])
        d = decision_values(model, [[1.0, 1.0]], normalized=True)
        assert_allclose(d, [[7.0 / 5.0, 3.0 / 2.0]])

    def test_normalized_zero_plane_uses_unit_norm(self):
        model = self._hand_model([0.0, 0.0, 0.5], [1.0, 0.0, 0.0])
        d = decision_values(model, [[2.0, 3.0]], normalized=True)
        assert_allclose(d, [[0.5, 2.0]])

    def test_feature_count_checked(self):
        model = self._hand_model([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        with pytest.raises(DataFormatError):
            decision_values(model, [[1.0, 2.0, 3.0]])


class TestUniversumHinge:
    @staticmethod
    def _oracle(f, r, eps, side):
        # two explicit branches of the piecewise definition
        if side == "plus":
            v = -1.0 + eps + -f - r
        else:
            v = -1.0 + eps + f - r
        return v if v > 0 else 0.0

    def test_matches_two_branch_oracle_on_random_grid(self):
        rng = np.random.default_rng(64)
        for _ in range(1000):
            f = float(rng.uniform(-3, 3))
            r = float(rng.uniform(0, 2))
            eps = float(rng.uniform(0, 1.5))
            for side in ("plus", "minus"):
                assert universum_hinge(f, r, eps, side) == self._oracle(f, r, eps, side)

    def test_vectorized_and_scalar_types(self):
        f = np.array([-2.0, 0.0, 2.0])
        out = universum_hinge(f, 0.1, 0.4, "plus")
        assert isinstance(out, np.ndarray)
        assert_allclose(out, [np.maximum(0, -1 + 0.4 + 2.0 - 0.1), 0.0, 0.0])
        scalar = universum_hinge(-2.0, 0.1, 0.4, "plus")
        assert isinstance(scalar, float)
        assert scalar == out[0]

    def test_validation(self):
        with pytest.raises(ValueError):
            universum_hinge(0.0, 0.1, 0.4, "sideways")
        with pytest.raises(ValueError):
            universum_hinge(0.0, -0.1, 0.4, "plus")
        with pytest.raises(ValueError):
            universum_hinge(0.0, 0.1, -0.4, "plus")


class TestKernels:
    def test_rbf_hand_value(self):
        # ||(1,2)-(2,4)||^2 = 5, sigma=2 -> exp(-5/8)
        assert rbf_kernel([1.0, 2.0], [2.0, 4.0], 2.0) == pytest.approx(np.exp(-5.0 / 8.0))
        assert rbf_kernel([1.0, 2.0], [1.0, 2.0], 0.7) == 1.0

    def test_matrix_matches_pairwise(self):
        rng = np.random.default_rng(65)
        X = rng.normal(size=(6, 3))
        Y = rng.normal(size=(4, 3))
        K = rbf_kernel_matrix(X, Y, 1.3)
        for i in range(6):
            for j in range(4):
                assert K[i, j] == pytest.approx(rbf_kernel(X[i], Y[j], 1.3), rel=1e-12)

    def test_gram_symmetric_psd(self):
        rng = np.random.default_rng(66)
        X = rng.normal(size=(12, 4))
        K = rbf_kernel_matrix(X, X, 0.9)
        assert_allclose(K, K.T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(0.5 * (K + K.T))) >= -1e-8

    def test_kernel_ball_radius_double_loop_oracle(self):
        rng = np.random.default_rng(67)
        members = rng.normal(size=(7, 3))
        sigma = 1.1
        k = 7
        dists = []
        for i in range(k):
            total = rbf_kernel(members[i], members[i], sigma)
            cross = sum(rbf_kernel(members[i], members[j], sigma) for j in range(k))
            pair = sum(
                rbf_kernel(members[a], members[b], sigma)
                for a in range(k) for b in range(k)
            )
            sq = total - 2.0 * cross / k + pair / (k * k)
            dists.append(np.sqrt(max(sq, 0.0)))
        assert kernel_ball_radius(members, sigma, "average") == pytest.approx(
            np.mean(dists), rel=1e-10
        )
        assert kernel_ball_radius(members, sigma, "maximum") == pytest.approx(
            np.max(dists), rel=1e-10
        )

    def test_singleton_kernel_radius_zero(self):
        assert kernel_ball_radius(np.array([[1.0, 2.0]]), 1.0) == pytest.approx(0.0, abs=1e-8)

    def test_validation(self):
        with pytest.raises(ValueError):
            rbf_kernel([0.0], [1.0], 0.0)
        with pytest.raises(ValueError):
            kernel_ball_radius(np.eye(2), 1.0, "median")


class TestRbfTraining:
    def test_rbf_model_separates_ring_data(self):
        rng = np.random.default_rng(68)
        angles = rng.uniform(0, 2 * np.pi, size=60)
        inner = np.column_stack([0.5 * np.cos(angles[:30]), 0.5 * np.sin(angles[:30])])
        outer = np.column_stack([3.0 * np.cos(angles[30:]), 3.0 * np.sin(angles[30:])])
        X = np.vstack([inner, outer]) + rng.normal(scale=0.05, size=(60, 2))
        y = np.repeat([1, -1], 30)
        h = Hyperparams(kernel="rbf", sigma=1.0)
        model = train_tsvm(X, y, h)
        assert model.reference is not None and model.reference.shape == (60, 2)
        assert np.mean(classify(model, X) == y) == 1.0

    def test_linear_model_has_no_reference(self):
        rng = np.random.default_rng(69)
        X = np.vstack([rng.normal(size=(8, 2)), rng.normal(size=(8, 2)) + 4.0])
        y = np.repeat([1, -1], 8)
        assert train_tsvm(X, y).reference is None


class TestValidation:
    def test_hyperparams_rejnamed(self):
        for kwargs in (
            {"c1": 0.0}, {"c2": -1.0}, {"cu": -0.5}, {"epsilon": -0.1},
            {"kernel": "poly"}, {"kernel": "rbf", "sigma": 0.0},
        ):
            with pytest.raises(ValueError):
                Hyperparams(**kwargs)

    def test_epsilon_above_one_warns(self):
        with pytest.warns(UserWarning, match="epsilon"):
            Hyperparams(epsilon=1.5)

    def test_train_inputs_validation(self):
        with pytest.raises(DataFormatError):
            TrainInputs(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros(2), np.zeros(2))
        with pytest.raises(DataFormatError):
            TrainInputs(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(3), np.zeros(2))
        with pytest.raises(DataFormatError):
            TrainInputs(np.zeros((2, 2)), np.zeros((2, 2)), -np.ones(2), np.zeros(2))
        with pytest.raises(DataFormatError):
            TrainInputs(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2), np.zeros(2),
                        U=np.zeros((2, 2)), r_univ=None)

    def test_from_points_single_class_rejected(self):
        with pytest.raises(DataFormatError):
            TrainInputs.from_points(np.zeros((3, 2)), np.ones(3))

    def test_from_points_empty_universum_dropped(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        t = TrainInputs.from_points(X, [1, -1], universum=np.zeros((0, 2)))
        assert t.U is None and t.r_univ is None

    def test_train_utsvm_requires_universum(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(DataFormatError):
            train_utsvm(X, [1, -1], np.zeros((0, 2)))

    def test_solver_failure_surfaces_as_solver_error(self, monkeypatch):
        import gbutsvm.models as models_mod

        def never_converges(problem, tol=1e-8, max_iter=10000, x0=None):
            return QPSolution(np.zeros(problem.n), 0.0, 1.0, max_iter, False)

        monkeypatch.setattr(models_mod, "solve_box_qp", never_converges)
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [3.0, 1.0]])
        with pytest.raises(SolverError) as info:
            train_tsvm(X, [1, 1, -1, -1])
        assert info.value.diagnostics["side"] == "positive"


class TestModelIO:
    def test_roundtrip_linear_bit_exact(self, tmp_path):
        rng = np.random.default_rng(70)
        X = np.vstack([rng.normal(size=(10, 3)), rng.normal(size=(10, 3)) + 2.5])
        y = np.repeat([1, -1], 10)
        Uv = rng.normal(size=(5, 3)) + 1.2
        model = train_utsvm(X, y, Uv, Hyperparams(c1=0.9, cu=0.4, epsilon=0.2))
        path = tmp_path / "model.txt"
        save_model(model, path)
        back = load_model(path)
        assert back.kind == model.kind
        assert back.params == model.params
        assert back.n_features == model.n_features
        assert_array_equal(back.theta_plus, model.theta_plus)
        assert_array_equal(back.theta_minus, model.theta_minus)
        assert_array_equal(back.alpha, model.alpha)
        assert_array_equal(back.mu, model.mu)
        assert_array_equal(back.lam, model.lam)
        assert_array_equal(back.nu, model.nu)
        assert back.reference is None
        assert back.diagnostics == {}
        Z = rng.normal(size=(30, 3))
        assert_array_equal(classify(back, Z), classify(model, Z))

    def test_roundtrip_rbf_keeps_reference(self, tmp_path):
        rng = np.random.default_rng(71)
        X = np.vstack([rng.normal(size=(8, 2)), rng.normal(size=(8, 2)) + 3.0])
        y = np.repeat([1, -1], 8)
        model = train_tsvm(X, y, Hyperparams(kernel="rbf", sigma=1.4))
        path = tmp_path / "rbf.txt"
        save_model(model, path)
        back = load_model(path)
        assert_array_equal(back.reference, model.reference)
        Z = rng.normal(size=(25, 2))
        assert_array_equal(classify(back, Z), classify(model, Z))
        assert_allclose(decision_values(back, Z), decision_values(model, Z),
                        rtol=0, atol=0)

    def test_load_rejects_corruption(self, tmp_path):
        rng = np.random.default_rng(72)
        X = np.vstack([rng.normal(size=(6, 2)), rng.normal(size=(6, 2)) + 3.0])
        model = train_tsvm(X, np.repeat([1, -1], 6))
        path = tmp_path / "m.txt"
        save_model(model, path)
        good = path.read_text()

        bad = tmp_path / "bad.txt"
        bad.write_text("")
        with pytest.raises(ModelFormatError, match="empty"):
            load_model(bad)

        bad.write_text(good.replace("gbutsvm-model 1", "other-format 1"))
        with pytest.raises(ModelFormatError):
            load_model(bad)

        bad.write_text(good.replace("gbutsvm-model 1", "gbutsvm-model 9"))
        with pytest.raises(ModelFormatError, match="version"):
            load_model(bad)

        bad.write_text(good.replace("kind tsvm", "kind banana"))
        with pytest.raises(ModelFormatError, match="kind"):
            load_model(bad)

        lines = [ln for ln in good.splitlines() if not ln.startswith("theta_plus")]
        bad.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError, match="missing"):
            load_model(bad)

        bad.write_text(good.replace("theta_plus ", "theta_plus oops,"))
        with pytest.raises(ModelFormatError):
            load_model(bad)

    def test_load_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_model(tmp_path / "absent.txt")
