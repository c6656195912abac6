import itertools

import numpy as np
import pytest

import bcp
from bcp.binarize import score_bitwise
from bcp.dense import init_factors, score
from bcp.model import ModelKind, TrainConfig
from bcp.vq import vq_apply, vq_quantize, vq_reconstruct


def _brute_force_error(X, n_alpha=1000):
    """Best Frobenius error over all sign matrices and a dense alpha grid."""
    X = np.asarray(X, dtype=np.float64)
    cells = X.size
    alphas = np.linspace(0.0, 2.0 * np.abs(X).max() + 1e-9, n_alpha)
    best = np.inf
    for mask in range(1 << cells):
        signs = np.array([1.0 if (mask >> c) & 1 else -1.0 for c in range(cells)])
        signs = signs.reshape(X.shape)
        # ||X - a S||^2 = ||X||^2 - 2 a <X, S> + a^2 cells
        inner = float((X * signs).sum())
        errs = (X**2).sum() - 2 * alphas * inner + alphas**2 * cells
        best = min(best, float(errs.min()))
    return best


class TestVqQuantize:
    def test_already_binary_is_exact(self):
        X = np.array([[1.0, -1.0], [1.0, -1.0]])
        m = vq_quantize(X)
        assert m.alpha == 1.0
        assert np.array_equal(vq_reconstruct(m), X)

    def test_mean_absolute_alpha(self):
        m = vq_quantize(np.array([[0.5, -1.5]]))
        assert m.alpha == 1.0
        assert np.array_equal(vq_reconstruct(m), np.array([[1.0, -1.0]]))

    def test_sign_zero_is_positive(self):
        m = vq_quantize(np.array([[0.0, -1.0]]))
        assert vq_reconstruct(m)[0, 0] > 0

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            vq_quantize(np.array([[np.nan]]))

    def test_all_zero_degenerate(self):
        m = vq_quantize(np.zeros((2, 2)))
        assert m.alpha == 0.0

    def test_closed_form_beats_brute_force(self, rng):
        for _ in range(40):
            X = rng.normal(size=(2, 3))
            m = vq_quantize(X)
            err = float(((X - vq_reconstruct(m)) ** 2).sum())
            assert err <= _brute_force_error(X) + 1e-12

    def test_closed_form_on_small_grid_entries(self):
        vals = (-1.0, -0.5, 0.0, 0.5, 1.0)
        rng = np.random.default_rng(0)
        for _ in range(60):
            X = rng.choice(vals, size=(2, 3))
            if not X.any():
                continue
            m = vq_quantize(X)
            err = float(((X - vq_reconstruct(m)) ** 2).sum())
            assert err <= _brute_force_error(X) + 1e-12

    def test_scale_equivariance(self, rng):
        X = rng.normal(size=(3, 4))
        m = vq_quantize(X)
        for c in (0.5, 2.0, 7.25):
            mc = vq_quantize(c * X)
            assert np.isclose(mc.alpha, c * m.alpha)
            assert np.array_equal(mc.sign_words, m.sign_words)


class TestVqApply:
    def test_exactly_representable_model(self):
        c = 0.75
        rng = np.random.default_rng(3)
        A = c * np.sign(rng.normal(size=(4, 8)))
        B = c * np.sign(rng.normal(size=(4, 8)))
        C = c * np.sign(rng.normal(size=(3, 8)))
        f = bcp.DenseFactors(A=A, B=B, C=C, kind=ModelKind.CP)
        v = vq_apply(f)
        assert v.scales == (c, c, c)
        for i in range(4):
            for j in range(4):
                for k in range(3):
                    assert score_bitwise(v, i, j, k) == score(f, i, j, k)

    def test_ranking_matches_delta_parameterized_kernel(self, rng):
        cfg = TrainConfig(dim=24)
        f = init_factors(cfg, 5, 3, rng)
        v = vq_apply(f)
        ref = bcp.BinaryFactors(
            a_words=v.a_words, b_words=v.b_words, c_words=v.c_words,
            dim=v.dim, delta=0.5, kind=v.kind,
        )
        for i in range(5):
            for k in range(3):
                assert np.array_equal(np.argsort(-v.score_objects(i, k)),
                                      np.argsort(-ref.score_objects(i, k)))

    def test_tied_model_stays_tied(self, rng):
        cfg = TrainConfig(dim=8, kind="distmult")
        f = init_factors(cfg, 4, 2, rng)
        v = vq_apply(f)
        assert v.b_words is v.a_words
        assert v.scales[0] == v.scales[1]

    def test_quality_drop_direction_on_trained_model(self, nations):
        # quantizing a trained dense model should not beat the dense model
        _, store = nations
        cfg = TrainConfig(dim=32, eta=0.025, epochs=60, neg_per_pos=5,
                          lambda_a=1e-4, lambda_b=1e-4, lambda_c=1e-4, seed=7)
        f = bcp.train(store, cfg)
        dense_mrr = bcp.evaluate_ranking(f, store).mrr
        vq_mrr = bcp.evaluate_ranking(vq_apply(f), store).mrr
        assert vq_mrr <= dense_mrr
