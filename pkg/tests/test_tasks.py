import numpy as np
import pytest

from oracles import brute_force_assignment
from relunmd.io import synth_blobs
from relunmd.model import build_observed
from relunmd.solvers import SolveOptions
from relunmd.tasks import (cluster_pipeline, clustering_accuracy,
                           compress_pipeline, hungarian, kmeans,
                           knn_graph_laplacian, nnls, tol_nmf)


class TestKnnGraphLaplacian:
    def test_row_sums_zero(self, rng):
        lap = knn_graph_laplacian(rng.standard_normal((15, 4)), 3)
        assert np.abs(lap.sum(axis=1)).max() < 1e-12
        assert np.array_equal(lap, lap.T)

    def test_two_samples(self):
        lap = knn_graph_laplacian(np.array([[0.0, 0.0], [1.0, 1.0]]), 1)
        assert lap.tolist() == [[1.0, -1.0], [-1.0, 1.0]]

    def test_psd_on_random_quadratic_forms(self, rng):
        lap = knn_graph_laplacian(rng.standard_normal((20, 5)), 5)
        for _ in range(100):
            x = rng.standard_normal(20)
            assert x @ lap @ x >= -1e-10

    def test_neighbor_count_validated(self, rng):
        x = rng.standard_normal((5, 2))
        with pytest.raises(ValueError):
            knn_graph_laplacian(x, 0)
        with pytest.raises(ValueError):
            knn_graph_laplacian(x, 5)


class TestKmeans:
    def test_single_cluster(self, rng):
        labels = kmeans(rng.standard_normal((10, 2)), 1)
        assert (labels == 0).all()

    def test_one_point_per_cluster(self, rng):
        x = rng.standard_normal((6, 2)) * 10
        labels = kmeans(x, 6, seed=1)
        assert sorted(labels.tolist()) == list(range(6))

    def test_separated_blobs_recovered(self):
        m, truth = synth_blobs(90, 3, 8, separation=30.0, seed=0)
        labels = kmeans(m, 3, seed=0)
        assert clustering_accuracy(labels, truth) == 100.0

    def test_deterministic(self, rng):
        x = rng.standard_normal((30, 3))
        a = kmeans(x, 4, seed=9)
        b = kmeans(x, 4, seed=9)
        assert np.array_equal(a, b)

    def test_k_validated(self, rng):
        with pytest.raises(ValueError):
            kmeans(rng.standard_normal((5, 2)), 0)
        with pytest.raises(ValueError):
            kmeans(rng.standard_normal((5, 2)), 6)


class TestHungarian:
    def test_identity_favoring_cost(self):
        cost = np.ones((3, 3)) - np.eye(3)
        assert hungarian(cost).tolist() == [0, 1, 2]

    def test_swap(self):
        perm = hungarian(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert perm.tolist() == [1, 0]

    def test_matches_brute_force(self, rng):
        for _ in range(5):
            cost = rng.standard_normal((6, 6))
            perm = hungarian(cost)
            _, best = brute_force_assignment(cost)
            total = sum(cost[i, perm[i]] for i in range(6))
            assert total == pytest.approx(best, abs=1e-12)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            hungarian(np.zeros((2, 3)))


class TestClusteringAccuracy:
    def test_exact_match(self):
        labels = np.array([0, 1, 2, 0, 1])
        assert clustering_accuracy(labels, labels) == 100.0

    def test_relabeling_invariance(self, rng):
        truth = rng.integers(0, 4, size=50)
        perm = np.array([2, 3, 0, 1])
        assert clustering_accuracy(perm[truth], truth) == 100.0

    def test_partial_agreement(self):
        truth = np.array([0] * 5 + [1] * 5)
        pred = truth.copy()
        pred[[0, 1, 7]] = 1 - pred[[0, 1, 7]]
        assert clustering_accuracy(pred, truth) == pytest.approx(70.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            clustering_accuracy(np.zeros(3), np.zeros(4))


class TestNnls:
    def test_exact_nonnegative_solution(self, rng):
        a = rng.standard_normal((20, 5))
        v_true = np.abs(rng.standard_normal((5, 3)))
        b = a @ v_true
        v = nnls(a, b)
        assert np.linalg.norm(b - a @ v) <= 1e-8 * np.linalg.norm(b)

    def test_identity_projects(self, rng):
        b = rng.standard_normal((4, 3))
        v = nnls(np.eye(4), b)
        assert np.allclose(v, np.maximum(b, 0.0), atol=1e-10)

    def test_output_nonnegative_and_kkt(self, rng):
        a = rng.standard_normal((20, 5))
        b = rng.standard_normal((20, 8))
        v = nnls(a, b)
        assert (v >= 0).all()
        grad = a.T @ (a @ v - b)
        assert np.abs(np.minimum(v, grad)).max() <= 1e-6

    def test_long_run_oracle(self, rng):
        a = rng.standard_normal((20, 5))
        b = rng.standard_normal((20, 8))
        v = nnls(a, b)
        v_ref = nnls(a, b, max_iter=100000, tol=1e-14)
        obj = np.linalg.norm(b - a @ v) ** 2
        ref = np.linalg.norm(b - a @ v_ref) ** 2
        assert obj <= ref * (1 + 1e-6) + 1e-12

    def test_zero_operator(self):
        v = nnls(np.zeros((3, 2)), np.ones((3, 4)))
        assert not v.any()

    def test_vector_rhs(self, rng):
        a = rng.standard_normal((6, 3))
        v = nnls(a, a @ np.array([1.0, 2.0, 0.5]))
        assert v.shape == (3, 1)


class TestTolNmf:
    def test_exact_reconstruction(self, rng):
        u = rng.standard_normal((40, 4))
        v = rng.standard_normal((4, 6))
        basis = np.maximum(u @ v, 0.0)
        m = basis @ np.abs(rng.standard_normal((6, 12)))
        assert tol_nmf(m, u, v) <= 1e-6

    def test_zero_factors_give_one(self, rng):
        m = np.abs(rng.standard_normal((5, 7))) + 0.1
        assert tol_nmf(m, np.zeros((5, 2)), np.zeros((2, 4))) == pytest.approx(1.0)

    def test_zero_data_rejected(self):
        with pytest.raises(ValueError):
            tol_nmf(np.zeros((3, 3)), np.ones((3, 2)), np.ones((2, 3)))


class TestClusterPipeline:
    def test_blobs_high_accuracy(self):
        m, truth = synth_blobs(120, 3, 25, separation=6.0, seed=3)
        obs = build_observed(m)
        opts = SolveOptions(rank=3, max_iter=60, tol=0.0, seed=0)
        result = cluster_pipeline(obs, truth, 3, opts=opts)
        assert result.accuracy_percent >= 95.0
        assert result.labels.shape == (120,)

    def test_single_class_trivial(self):
        m, truth = synth_blobs(20, 1, 5, separation=3.0, seed=1)
        obs = build_observed(m + 0.01)  # keep a positive support everywhere
        result = cluster_pipeline(obs, truth, 1,
                                  opts=SolveOptions(rank=1, max_iter=20, tol=0.0))
        assert result.accuracy_percent == 100.0

    def test_truth_length_validated(self):
        m, truth = synth_blobs(30, 2, 5, separation=5.0, seed=1)
        with pytest.raises(ValueError):
            cluster_pipeline(build_observed(m), truth[:-1], 2)


class TestCompressPipeline:
    def test_identity_compression_near_lossless(self, rng):
        basis = np.maximum(rng.standard_normal((60, 8)) - 0.4, 0.0)
        opts = SolveOptions(rank=8, max_iter=800, tol=0.0, seed=1)
        result = compress_pipeline(basis, 8, 8, opts=opts)
        assert result.tol_nmd <= 1e-3
        assert result.tol_nmf is None

    def test_s2_zero_kills_mixing(self, rng):
        basis = np.maximum(rng.standard_normal((30, 6)), 0.0) + 0.01
        result = compress_pipeline(basis, 4, 0,
                                   opts=SolveOptions(rank=4, max_iter=10, tol=0.0))
        assert not result.factor.v.any()
        assert result.tol_nmd == pytest.approx(1.0)

    def test_inner_rank_validated(self, rng):
        basis = np.abs(rng.standard_normal((20, 5)))
        with pytest.raises(ValueError):
            compress_pipeline(basis, 6, 2)

    def test_budget_enforced_every_iteration(self, rng):
        basis = np.maximum(rng.standard_normal((40, 10)) - 0.3, 0.0)
        budgets = []
        opts = SolveOptions(rank=5, max_iter=30, tol=0.0, seed=2)
        compress_pipeline(basis, 5, 2, opts=opts,
                          callback=lambda k, pr: budgets.append(
                              int(np.count_nonzero(pr.v, axis=0).max())))
        assert budgets and max(budgets) <= 2

    def test_reports_tol_nmf_with_data(self, rng):
        basis = np.maximum(rng.standard_normal((30, 6)), 0.0) + 0.05
        data = basis @ np.abs(rng.standard_normal((6, 9)))
        result = compress_pipeline(basis, 5, 6, data=data,
                                   opts=SolveOptions(rank=5, max_iter=150, tol=0.0))
        assert result.tol_nmf is not None and result.tol_nmf >= 0.0
