import math

import mpmath
import numpy as np
import pytest
from scipy import stats

import bcp
from bcp import _kernels_numpy
from bcp._rng import epoch_seed, next_u64
from bcp.dense import (
    TrainingDiverged,
    grad_step,
    init_factors,
    logistic_loss,
    sample_negatives,
    score,
    sigmoid,
    train,
)
from bcp.model import ModelKind, TrainConfig

from _util import store_from


def _factors(rng, ne, nr, dim, kind=ModelKind.CP):
    cfg = TrainConfig(dim=dim, kind="distmult" if kind is ModelKind.DISTMULT else "cp")
    return init_factors(cfg, ne, nr, rng)


class TestInit:
    def test_bound_at_d200(self, rng):
        cfg = TrainConfig(dim=200)
        f = init_factors(cfg, 50, 20, rng)
        bound = math.sqrt(6) / 20
        assert abs(bound - 0.12247448) < 1e-7
        for m in (f.A, f.B, f.C):
            assert np.abs(m).max() <= bound

    def test_bound_at_d2_many_draws(self):
        cfg = TrainConfig(dim=2)
        f = init_factors(cfg, 25_000, 25_000, np.random.default_rng(0))
        bound = math.sqrt(6) / 2
        assert f.A.size + f.C.size >= 10**5
        assert np.abs(f.A).max() <= bound
        assert np.abs(f.C).max() <= bound

    def test_deterministic(self):
        cfg = TrainConfig(dim=16, seed=5)
        f1 = init_factors(cfg, 7, 3, np.random.default_rng(5))
        f2 = init_factors(cfg, 7, 3, np.random.default_rng(5))
        assert np.array_equal(f1.A, f2.A)
        assert np.array_equal(f1.B, f2.B)
        assert np.array_equal(f1.C, f2.C)

    def test_distmult_ties_storage(self, rng):
        f = _factors(rng, 4, 2, 8, ModelKind.DISTMULT)
        assert f.B is f.A
        f.A[0, 0] = 123.0
        assert f.B[0, 0] == 123.0


class TestScore:
    def test_all_ones(self):
        f = bcp.DenseFactors(A=np.ones((1, 2)), B=np.ones((1, 2)),
                             C=np.ones((1, 2)), kind=ModelKind.CP)
        assert score(f, 0, 0, 0) == 2.0

    def test_cancellation(self):
        f = bcp.DenseFactors(A=np.array([[1.0, -1.0]]), B=np.ones((1, 2)),
                             C=np.ones((1, 2)), kind=ModelKind.CP)
        assert score(f, 0, 0, 0) == 0.0

    def test_matches_naive_triple_loop(self, rng):
        f = _factors(rng, 5, 3, 64)
        for i, j, k in [(0, 1, 0), (4, 4, 2), (2, 0, 1)]:
            naive = 0.0
            for d in range(64):
                naive += f.A[i, d] * f.B[j, d] * f.C[k, d]
            got = score(f, i, j, k)
            assert abs(got - naive) <= 1e-12 * max(1.0, abs(naive))

    def test_out_of_bounds(self, rng):
        f = _factors(rng, 3, 2, 4)
        with pytest.raises(IndexError):
            score(f, 3, 0, 0)
        with pytest.raises(IndexError):
            f.score_one(0, 0, 2)

    def test_distmult_symmetry_exact(self, rng):
        f = _factors(rng, 5, 3, 16, ModelKind.DISTMULT)
        for i in range(5):
            for j in range(5):
                for k in range(3):
                    assert score(f, i, j, k) == score(f, j, i, k)


class TestLoss:
    def test_theta_zero(self):
        assert abs(logistic_loss(1, 0.0) - math.log(2)) < 1e-15
        assert abs(logistic_loss(0, 0.0) - math.log(2)) < 1e-15

    def test_saturated_negative_theta_no_overflow(self):
        got = logistic_loss(1, -50.0)
        want = float(mpmath.log(1 + mpmath.exp(mpmath.mpf(50))))
        assert abs(got - want) <= 1e-12 * want

    @pytest.mark.parametrize("theta", [-745.0, -100.0, -30.0, 0.0, 30.0, 100.0, 745.0])
    def test_matches_extended_precision(self, theta):
        for x in (0, 1):
            got = logistic_loss(x, theta)
            z = mpmath.mpf(-theta if x else theta)
            want = float(mpmath.log(1 + mpmath.exp(z)))
            assert math.isfinite(got)
            assert abs(got - want) <= 1e-12 * max(1.0, want)

    def test_gradient_identity(self):
        # exp(-t) * sigma(t) == 1 - sigma(t), the bridge between the
        # printed gradient and the implemented (sigma - x) form
        for t in np.linspace(-30, 30, 601):
            lhs = math.exp(-t) * sigmoid(t)
            rhs = 1.0 - sigmoid(t)
            assert abs(lhs - rhs) <= 1e-12


def _total_objective(A, B, C, i, j, k, x, la, lb, lc):
    theta = float(np.dot(A[i] * B[j], C[k]))
    reg = la * np.dot(A[i], A[i]) + lb * np.dot(B[j], B[j]) + lc * np.dot(C[k], C[k])
    return logistic_loss(x, theta) + reg


class TestGradStep:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(42)
        h = 1e-6
        cfg = TrainConfig(dim=8, eta=1.0, lambda_a=0.01, lambda_b=0.02, lambda_c=0.005)
        for trial in range(100):
            dim = int(rng.integers(2, 17))
            cfg = TrainConfig(dim=dim, eta=1.0, lambda_a=0.01, lambda_b=0.02,
                              lambda_c=0.005)
            f = init_factors(cfg, 4, 3, rng)
            i, j, k = rng.integers(0, [4, 4, 3])
            x = int(rng.integers(0, 2))
            before = f.copy()
            grad_step(f, i, j, k, x, cfg)
            analytic = {
                "a": (before.A[i] - f.A[i]) / cfg.eta,
                "b": (before.B[j] - f.B[j]) / cfg.eta,
                "c": (before.C[k] - f.C[k]) / cfg.eta,
            }
            for name, mat, row in (("a", before.A, i), ("b", before.B, j),
                                   ("c", before.C, k)):
                fd = np.empty(dim)
                for d in range(dim):
                    orig = mat[row, d]
                    mat[row, d] = orig + h
                    up = _total_objective(before.A, before.B, before.C, i, j, k, x,
                                          cfg.lambda_a, cfg.lambda_b, cfg.lambda_c)
                    mat[row, d] = orig - h
                    dn = _total_objective(before.A, before.B, before.C, i, j, k, x,
                                          cfg.lambda_a, cfg.lambda_b, cfg.lambda_c)
                    mat[row, d] = orig
                    fd[d] = (up - dn) / (2 * h)
                denom = max(np.linalg.norm(fd), 1e-12)
                assert np.linalg.norm(analytic[name] - fd) / denom < 1e-5

    def test_distmult_grad_matches_central_differences(self):
        # i == j with tied storage: both row gradients accumulate on one row
        rng = np.random.default_rng(3)
        h = 1e-6
        cfg = TrainConfig(dim=6, eta=1.0, lambda_a=0.01, lambda_b=0.01,
                          lambda_c=0.0, kind="distmult")
        for trial in range(20):
            f = init_factors(cfg, 3, 2, rng)
            i = j = int(rng.integers(0, 3))
            k = int(rng.integers(0, 2))
            x = int(rng.integers(0, 2))
            before = f.copy()
            grad_step(f, i, j, k, x, cfg)
            analytic = (before.A[i] - f.A[i]) / cfg.eta
            fd = np.empty(6)
            work = before.copy()
            for d in range(6):
                orig = work.A[i, d]
                work.A[i, d] = orig + h
                up = _total_objective(work.A, work.B, work.C, i, j, k, x,
                                      cfg.lambda_a, cfg.lambda_b, cfg.lambda_c)
                work.A[i, d] = orig - h
                dn = _total_objective(work.A, work.B, work.C, i, j, k, x,
                                      cfg.lambda_a, cfg.lambda_b, cfg.lambda_c)
                work.A[i, d] = orig
                fd[d] = (up - dn) / (2 * h)
            assert np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-12) < 1e-5

    def test_saturated_correct_prediction_barely_moves(self, rng):
        cfg = TrainConfig(dim=4, eta=0.5)
        f = _factors(rng, 2, 1, 4)
        f.A[0] = 10.0
        f.B[1] = 10.0
        f.C[0] = 1.0
        theta = score(f, 0, 1, 0)
        before = f.copy()
        grad_step(f, 0, 1, 0, 1, cfg)
        bound = cfg.eta * (1 - sigmoid(theta)) * np.linalg.norm(before.B[1] * before.C[0])
        assert np.linalg.norm(f.A[0] - before.A[0]) <= bound + 1e-15

    def test_regularizer_only_contraction(self, rng):
        cfg = TrainConfig(dim=4, eta=0.1, lambda_a=0.05)
        f = _factors(rng, 2, 1, 4)
        # saturate the data term: x=1 with theta = +100
        f.A[0] = np.array([100.0, 100.0, -100.0, -100.0])
        f.B[1] = np.array([1.0, 1.0, -1.0, -1.0])
        f.C[0] = np.array([0.25, 0.25, 0.25, 0.25])
        ratio = 1 - 2 * cfg.eta * cfg.lambda_a
        prev = f.A[0].copy()
        for _ in range(5):
            grad_step(f, 0, 1, 0, 1, cfg)
            assert np.allclose(f.A[0], ratio * prev, rtol=1e-9)
            prev = f.A[0].copy()


class TestSampleNegatives:
    def test_two_entity_case(self):
        store = store_from([(0, 1, 0)], ne=2, nr=1)
        out = sample_negatives(store, (0, 1, 0), 1, np.random.default_rng(0))
        assert out == [(0, 0, 0)]

    def test_shape_and_fixed_slots(self, rng):
        store = store_from([(0, 1, 0), (2, 3, 1)], ne=5, nr=2)
        out = sample_negatives(store, (2, 3, 1), 5, rng)
        assert len(out) == 5
        assert all(i == 2 and k == 1 for i, _, k in out)

    def test_uniformity_chi_squared(self):
        # relation 1 has no facts, so no draw is ever rejected
        store = store_from([(0, 1, 0)], ne=100, nr=2)
        rng = np.random.default_rng(99)
        draws = [j for _, j, _ in sample_negatives(store, (0, 1, 1), 100_000, rng)]
        counts = np.bincount(draws, minlength=100)
        assert stats.chisquare(counts).pvalue > 0.001


class TestTrain:
    def test_one_epoch_one_triple_is_two_steps(self):
        # the epoch must replay as exactly one positive and one negative step
        store = store_from([(0, 1, 0)], ne=3, nr=1)
        cfg = TrainConfig(dim=4, eta=0.1, epochs=1, neg_per_pos=1, seed=11)
        got = train(store, cfg)

        expect = init_factors(cfg, 3, 1, np.random.default_rng(cfg.seed))
        seed = epoch_seed(cfg.seed, 0)
        assert _kernels_numpy.shuffle_indices(1, seed).tolist() == [0]
        state, _ = next_u64(seed)
        _kernels_numpy._dense_step(expect.A, expect.B, expect.C, 0, 1, 0, 1.0,
                                   cfg.eta, 0.0, 0.0, 0.0)
        state, negs = _kernels_numpy.draw_negatives(state, 0, 0, 3, 1,
                                                    store.train_keys, 1)
        _kernels_numpy._dense_step(expect.A, expect.B, expect.C, 0, int(negs[0]), 0,
                                   0.0, cfg.eta, 0.0, 0.0, 0.0)
        assert np.allclose(got.A, expect.A, rtol=1e-9, atol=1e-12)
        assert np.allclose(got.B, expect.B, rtol=1e-9, atol=1e-12)
        assert np.allclose(got.C, expect.C, rtol=1e-9, atol=1e-12)

    def test_toy_graph_loss_decreases(self):
        store = store_from([(0, 1, 0), (1, 2, 0)], ne=3, nr=1)
        cfg = TrainConfig(dim=4, eta=0.05, epochs=200, neg_per_pos=1, seed=0)
        losses = []
        train(store, cfg, callback=lambda e, l, v: losses.append(l))
        assert len(losses) == 200
        assert losses[-1] < losses[0]

    def test_epoch_cap_honored(self):
        store = store_from([(0, 1, 0)], ne=2, nr=1)
        cfg = TrainConfig(dim=2, epochs=7, seed=0)
        count = []
        train(store, cfg, callback=lambda e, l, v: count.append(e))
        assert count == list(range(7))

    def test_deterministic_bitwise(self, nations):
        _, store = nations
        cfg = TrainConfig(dim=8, eta=0.05, epochs=3, neg_per_pos=2, seed=21)
        f1 = train(store, cfg)
        f2 = train(store, cfg)
        assert np.array_equal(f1.A, f2.A)
        assert np.array_equal(f1.B, f2.B)
        assert np.array_equal(f1.C, f2.C)

    def test_empty_train_rejected(self):
        store = store_from([], ne=2, nr=1)
        with pytest.raises(ValueError, match="empty"):
            train(store, TrainConfig(dim=2))

    def test_divergence_detected(self):
        store = store_from([(0, 1, 0), (1, 2, 0), (2, 0, 0), (0, 2, 0)], ne=3, nr=1)
        cfg = TrainConfig(dim=16, eta=20.0, epochs=200, neg_per_pos=2, seed=1)
        with pytest.raises(TrainingDiverged):
            train(store, cfg)

    def test_factors_all_finite_after_training(self, nations):
        _, store = nations
        cfg = TrainConfig(dim=8, eta=0.05, epochs=2, seed=3)
        assert train(store, cfg).all_finite()

    def test_float32_supported(self, nations):
        _, store = nations
        cfg = TrainConfig(dim=8, eta=0.05, epochs=2, seed=3, dtype="float32")
        f = train(store, cfg)
        assert f.A.dtype == np.float32
        assert f.all_finite()
