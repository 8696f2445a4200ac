"""Trainers, saddle solver, duality gaps, Rademacher estimates.

Core claims:
    - both stock losses satisfy Fenchel-Young against their conjugates
    - duality_gap reproduces hand values at alpha = 0 and degenerate kernels
    - pegasos hits the 1-d closed-form optimum, collapses under huge
      regularization, decouples across layers, is bit-reproducible, and
      tracks an independent feature-space primal oracle within 2%
    - the layer MKL solver certifies saddles (tiny gaps), keeps a monotone
      best-so-far trace, reduces to a fixed-kernel SVM on one vertex, and
      its outer objective is convex along simplex segments
    - mkl_train decomposes across layers and uses lambda = eps/(n B^2)
    - the Rademacher estimator matches closed forms and sits below the
      analytic bound
"""

import math

import numpy as np
import pytest

from conftest import layer_points

from cubekern import kernels, learners
from cubekern.kernels import HypercubePoint
from cubekern.learners import ABSOLUTE, HINGE, MklLayerProblem


def pts_from_tuples(rows):
    return [HypercubePoint.from_array(np.array(r)) for r in rows]


def feature_space_primal(k_mat, y, lam, loss, iters=150_000):
    """Independent primal oracle: deterministic subgradient descent on w in an
    explicit feature space obtained from a square-root factor of the Gram."""
    w_eig, v_eig = np.linalg.eigh(np.asarray(k_mat, dtype=float))
    feats = v_eig * np.sqrt(np.clip(w_eig, 0.0, None))
    m = feats.shape[0]
    v = np.zeros(feats.shape[1])
    v_bar = np.zeros_like(v)
    for t in range(1, iters + 1):
        z = feats @ v
        grad = lam * v + feats.T @ loss.subgradient(z, y) / m
        v -= grad / (lam * t)
        v_bar += (v - v_bar) / t
    z = feats @ v_bar
    return 0.5 * lam * float(v_bar @ v_bar) + float(np.mean(loss.value(z, y)))


def scalar_grid_optimum(k_xx, y, lam, loss):
    """1-d grid oracle for a single-point training set: minimize over a."""
    grid = np.linspace(-5.0, 5.0, 200001)
    obj = 0.5 * lam * grid**2 * k_xx + loss.value(grid * k_xx, np.full_like(grid, y))
    i = int(np.argmin(obj))
    return grid[i], obj[i]


class TestLosses:
    def test_hinge_values(self):
        assert HINGE.value(np.array(0.0), np.array(1.0)) == 1.0
        assert HINGE.value(np.array(2.0), np.array(1.0)) == 0.0
        assert HINGE.subgradient(np.array(0.5), np.array(1.0)) == -1.0
        assert HINGE.subgradient(np.array(2.0), np.array(1.0)) == 0.0

    def test_absolute_values(self):
        assert ABSOLUTE.value(np.array(0.5), np.array(-1.0)) == 1.5
        assert ABSOLUTE.subgradient(np.array(0.5), np.array(-1.0)) == 1.0

    def test_bounded_at_zero(self):
        for loss in (HINGE, ABSOLUTE):
            for y in (-1.0, 1.0):
                assert loss.value(np.array(0.0), np.array(y)) <= 1.0

    @pytest.mark.parametrize("loss", [HINGE, ABSOLUTE], ids=lambda l: l.name)
    @pytest.mark.parametrize("y", [-1.0, 1.0])
    def test_fenchel_young(self, loss, y):
        lo, hi = loss.conjugate_domain(np.array([y]))
        grid = np.linspace(float(lo[0]), float(hi[0]), 4001)
        for z in np.linspace(-3.0, 3.0, 121):
            direct = float(loss.value(np.array(z), np.array(y)))
            via = float(np.max(grid * z - loss.conjugate(grid, y)))
            assert abs(direct - via) <= 1e-6

    def test_get_loss(self):
        assert learners.get_loss("abs") is ABSOLUTE
        with pytest.raises(ValueError):
            learners.get_loss("squared")


def two_point_problem(lam=0.1, loss=HINGE):
    pts = [HypercubePoint.from_string("1100"), HypercubePoint.from_string("0011")]
    grams = learners.layer_vertex_grams(pts, 2)
    return MklLayerProblem(grams, np.array([1.0, -1.0]), lam=lam, loss=loss)


class TestDualityGap:
    def test_origin_hand_value(self):
        problem = two_point_problem()
        gap = learners.duality_gap(problem, np.full(3, 1 / 3), np.zeros(2))
        assert gap == pytest.approx(1.0)  # F = 1 (hinge at 0), G = 0

    def test_zero_kernel_loss_only(self):
        pts = [HypercubePoint.from_string("1100"), HypercubePoint.from_string("0011")]
        grams = [g * 0.0 for g in learners.layer_vertex_grams(pts, 2)]
        y = np.array([1.0, -1.0])
        problem = MklLayerProblem(grams, y, lam=0.1, loss=HINGE)
        alpha = np.array([2.0, -2.0])  # feasible: alpha_i y_i in [0, 1/(lam m)] = [0, 5]
        gap = learners.duality_gap(problem, np.full(3, 1 / 3), alpha)
        assert gap == pytest.approx(abs(1.0 - 0.1 * float(y @ alpha)))

    def test_infeasible_alpha_flagged(self):
        problem = two_point_problem()
        assert learners.duality_gap(problem, np.full(3, 1 / 3), np.array([100.0, 0.0])) == math.inf


class TestPegasos:
    def test_single_point_near_closed_form(self):
        spec = kernels.universal_kernel(4)
        x = HypercubePoint.from_string("1100")
        model = learners.pegasos_train(spec, [x], np.array([1.0]), lam=1.0, epochs=5000, seed=0)
        a_star, _ = scalar_grid_optimum(1.0, 1.0, 1.0, HINGE)
        assert a_star == pytest.approx(1.0, abs=1e-4)  # the grid oracle itself
        assert 0.9 <= model.predict(x) <= 1.1

    def test_huge_lambda_collapses(self):
        spec = kernels.universal_kernel(4)
        pts = pts_from_tuples(layer_points(4, 2))
        y = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
        model = learners.pegasos_train(spec, pts, y, lam=1e6, epochs=50, seed=1)
        assert np.abs(model.alphas).max() <= 1e-4
        assert np.abs(model.predict_many(pts)).max() <= 1e-3

    def test_antipodal_layers_decouple(self):
        spec = kernels.universal_kernel(6)
        pts = [HypercubePoint.from_string("110000"), HypercubePoint.from_string("001111")]
        y = np.array([1.0, -1.0])
        model = learners.pegasos_train(spec, pts, y, lam=0.01, epochs=3000, seed=0)
        preds = model.predict_many(pts)
        hinge = np.maximum(0.0, 1.0 - y * preds).mean()
        assert hinge < 0.05

    def test_seed_determinism_bitwise(self):
        spec = kernels.universal_kernel(5)
        pts = pts_from_tuples(layer_points(5, 2))[:8]
        y = np.array([1.0, -1.0] * 4)
        m1 = learners.pegasos_train(spec, pts, y, lam=0.1, epochs=40, seed=7)
        m2 = learners.pegasos_train(spec, pts, y, lam=0.1, epochs=40, seed=7)
        assert np.array_equal(m1.alphas, m2.alphas)
        m3 = learners.pegasos_train(spec, pts, y, lam=0.1, epochs=40, seed=8)
        assert not np.array_equal(m1.alphas, m3.alphas)

    @pytest.mark.parametrize("loss", [HINGE, ABSOLUTE], ids=lambda l: l.name)
    def test_matches_feature_space_oracle(self, rng, loss):
        spec = kernels.universal_kernel(6)
        rows = layer_points(6, 2)
        pts = pts_from_tuples([rows[i] for i in rng.integers(0, len(rows), size=8)])
        y = rng.integers(0, 2, size=8) * 2.0 - 1.0
        lam = 0.5
        model = learners.pegasos_train(spec, pts, y, lam=lam, epochs=4000, seed=3, loss=loss)
        oracle = feature_space_primal(kernels.gram(spec, pts), y, lam, loss)
        assert model.report["objective"] <= oracle * 1.02 + 1e-9
        assert model.report["objective"] >= oracle * 0.98 - 1e-9

    def test_empty_dataset(self):
        with pytest.raises(ValueError, match="empty"):
            learners.pegasos_train(kernels.universal_kernel(4), [], np.array([]), lam=1.0)


class TestMklLayerSolve:
    def test_two_point_example_gap(self):
        sol = learners.mkl_layer_solve(two_point_problem(lam=0.1), outer_iters=300)
        assert sol.gap <= 1e-4 * (1.0 + abs(sol.objective))
        assert sol.inner_converged

    def test_all_positive_labels_bounded_by_zero_classifier(self):
        pts = pts_from_tuples(layer_points(4, 2))
        problem = MklLayerProblem(
            learners.layer_vertex_grams(pts, 2), np.ones(len(pts)), lam=0.2, loss=HINGE
        )
        sol = learners.mkl_layer_solve(problem, outer_iters=150)
        assert sol.objective <= 1.0 + 1e-9

    def test_monotone_best_so_far(self, rng):
        pts = pts_from_tuples(layer_points(6, 3))[:14]
        y = rng.integers(0, 2, size=14) * 2.0 - 1.0
        problem = MklLayerProblem(learners.layer_vertex_grams(pts, 3), y, lam=0.05)
        sol = learners.mkl_layer_solve(problem, outer_iters=200)
        assert np.all(np.diff(sol.trace) <= 1e-12)

    def test_single_vertex_reduces_to_fixed_kernel_svm(self):
        # weight-n points live on the single-point layer: one vertex, beta in [0,1]
        n = 6
        pts = [HypercubePoint.from_string("1" * n)] * 8
        y = np.array([1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0])
        lam = 0.5
        problem = MklLayerProblem(learners.layer_vertex_grams(pts, n), y, lam=lam)
        sol = learners.mkl_layer_solve(problem, outer_iters=100)
        spec = kernels.universal_kernel(n)
        model = learners.pegasos_train(spec, pts, y, lam=lam, epochs=5000, seed=0)
        assert sol.objective == pytest.approx(model.report["objective"], rel=0.02)

    @pytest.mark.parametrize("loss", [HINGE, ABSOLUTE], ids=lambda l: l.name)
    def test_outer_objective_convex_on_segments(self, rng, loss):
        pts = pts_from_tuples(layer_points(6, 2))[:10]
        y = rng.integers(0, 2, size=10) * 2.0 - 1.0
        problem = MklLayerProblem(learners.layer_vertex_grams(pts, 2), y, lam=0.1, loss=loss)
        for _ in range(5):
            b1 = learners.project_capped_simplex(rng.random(3))
            b2 = learners.project_capped_simplex(rng.random(3))
            g1 = learners.layer_dual_objective(problem, b1)
            g2 = learners.layer_dual_objective(problem, b2)
            for theta in (0.25, 0.5, 0.75):
                mid = learners.layer_dual_objective(problem, theta * b1 + (1 - theta) * b2)
                assert mid <= theta * g1 + (1 - theta) * g2 + 1e-6

    def test_gap_level_matches_duality_gap_fn(self):
        problem = two_point_problem(lam=0.3, loss=ABSOLUTE)
        sol = learners.mkl_layer_solve(problem, outer_iters=200)
        assert learners.duality_gap(problem, sol.beta, sol.alphas) == pytest.approx(sol.gap, abs=1e-12)

    def test_objective_matches_feature_space_oracle(self, rng):
        # at the returned beta, the saddle objective must equal the primal
        # optimum of the fixed-kernel problem, recomputed independently
        pts = pts_from_tuples(layer_points(6, 2))[:10]
        y = rng.integers(0, 2, size=10) * 2.0 - 1.0
        lam = 0.2
        problem = MklLayerProblem(learners.layer_vertex_grams(pts, 2), y, lam=lam)
        sol = learners.mkl_layer_solve(problem, outer_iters=150)
        k_beta = problem.combine(sol.beta)
        oracle = feature_space_primal(k_beta, y, lam, HINGE)
        assert sol.objective == pytest.approx(oracle, rel=0.01)

    def test_inner_nonconvergence_flagged(self):
        problem = two_point_problem(lam=0.01)
        sol = learners.mkl_layer_solve(problem, outer_iters=3, inner_tol=0.0, inner_max_iter=5)
        assert sol.inner_converged is False


class TestProjection:
    def test_inside_untouched(self):
        v = np.array([0.2, 0.3, 0.1])
        assert np.array_equal(learners.project_capped_simplex(v), v)

    def test_negative_clipped(self):
        assert np.array_equal(
            learners.project_capped_simplex(np.array([-0.5, 0.4, 0.2])), [0.0, 0.4, 0.2]
        )

    def test_oversum_projects_to_simplex(self, rng):
        for _ in range(50):
            v = rng.normal(size=6) * 2
            p = learners.project_capped_simplex(v)
            assert p.min() >= 0
            assert p.sum() <= 1.0 + 1e-12
            # projection optimality: no feasible point is closer (spot check)
            for _ in range(10):
                q = learners.project_capped_simplex(rng.normal(size=6))
                assert np.linalg.norm(v - p) <= np.linalg.norm(v - q) + 1e-12


class TestMklTrain:
    def test_lambda_formula(self):
        pts = pts_from_tuples(layer_points(4, 2))[:4]
        y = np.array([1.0, -1.0, 1.0, -1.0])
        r1 = learners.mkl_train(pts, y, B=1.0, epsilon=0.1, outer_iters=30)
        r2 = learners.mkl_train(pts, y, B=2.0, epsilon=0.1, outer_iters=30)
        assert r1.lam == pytest.approx(0.1 / 4)
        assert r2.lam == pytest.approx(r1.lam / 4)  # B doubled -> lambda quartered

    def test_single_layer_matches_layer_solve(self):
        pts = pts_from_tuples(layer_points(4, 2))
        y = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
        result = learners.mkl_train(pts, y, B=1.0, epsilon=0.4, outer_iters=200)
        problem = MklLayerProblem(
            learners.layer_vertex_grams(pts, 2), y, lam=result.lam, loss=HINGE
        )
        direct = learners.mkl_layer_solve(problem, outer_iters=200)
        assert result.objective == pytest.approx(direct.objective, rel=1e-6)
        assert list(result.per_layer) == [2]

    def test_two_separable_layers(self, rng):
        # each layer separable by its top vertex kernel (distinct intersections)
        n = 8
        rows2 = layer_points(n, 2)
        rows6 = layer_points(n, 6)
        pts = pts_from_tuples([rows2[i] for i in rng.integers(0, len(rows2), size=10)])
        pts += pts_from_tuples([rows6[i] for i in rng.integers(0, len(rows6), size=10)])
        c = HypercubePoint.from_string("11000000")
        y = np.array([1.0 if p.inner(c) == min(2, p.weight) else -1.0 for p in pts])
        result = learners.mkl_train(pts, y, B=4.0, epsilon=0.05, outer_iters=300)
        preds = result.model.predict_many(pts)
        hinge = np.maximum(0.0, 1.0 - y * preds).mean()
        assert hinge <= 0.1
        assert result.objective == pytest.approx(
            sum(s.objective for s in result.per_layer.values())
        )

    def test_deterministic(self):
        pts = pts_from_tuples(layer_points(5, 2))[:6]
        y = np.array([1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
        r1 = learners.mkl_train(pts, y, B=1.0, epsilon=0.2, outer_iters=60)
        r2 = learners.mkl_train(pts, y, B=1.0, epsilon=0.2, outer_iters=60)
        assert np.array_equal(r1.model.alphas, r2.model.alphas)
        for w in r1.per_layer:
            assert np.array_equal(r1.per_layer[w].beta, r2.per_layer[w].beta)


class TestRademacher:
    def test_single_point_equals_B(self):
        est = learners.rademacher_estimate([HypercubePoint.from_string("1100")], B=2.5, trials=40, seed=0)
        assert est.mean == pytest.approx(2.5, abs=1e-12)
        assert est.stderr == pytest.approx(0.0, abs=1e-12)

    def test_identical_points_closed_form(self):
        m, trials, B = 12, 300, 1.0
        pts = [HypercubePoint.from_string("110000")] * m
        est = learners.rademacher_estimate(pts, B=B, trials=trials, seed=5)
        rng = np.random.default_rng(5)
        direct = np.empty(trials)
        for i in range(trials):
            sigma = rng.integers(0, 2, size=m) * 2.0 - 1.0
            direct[i] = (B / m) * abs(sigma.sum())
        assert est.mean == pytest.approx(direct.mean(), abs=1e-12)

    def test_bound_dominance_small(self, rng):
        n, m = 8, 100
        pts = [HypercubePoint(n, int(rng.integers(0, 1 << n))) for _ in range(m)]
        est = learners.rademacher_estimate(pts, B=1.0, trials=100, seed=2)
        assert est.bound == pytest.approx(math.sqrt(2 * math.e * math.log(n) / m))
        assert est.mean + 2 * est.stderr <= est.bound

    def test_trials_validation(self):
        with pytest.raises(ValueError):
            learners.rademacher_estimate([HypercubePoint.from_string("10")], B=1.0, trials=0)
