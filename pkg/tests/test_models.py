import numpy as np
import pytest

from gradcheck import finite_difference, max_relative_error
from triad_drop.errors import Diverged, NoSignal, WidthMismatch
from triad_drop.models import (
    LogisticModel,
    MlpConfig,
    MlpModel,
    _init_layers,
    logistic_loss_grad,
    mlp_loss_grad,
    predict_proba,
    softmax,
    train_logistic,
    train_mlp,
)


def two_blob_data(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-2.0, 0.4, size=(n // 2, 2)),
                   rng.normal(2.0, 0.4, size=(n // 2, 2))])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    return X, y


class TestLogistic:
    def test_separable_reaches_full_accuracy(self):
        X, y = two_blob_data()
        model = train_logistic(X, y, l2=0.0, epochs=400, lr=1.0, seed=0)
        assert (predict_proba(model, X).argmax(axis=1) == y).mean() == 1.0

    def test_constant_labels_loss_tends_to_zero(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 3))
        y = np.zeros(40, dtype=int)
        model = train_logistic(X, y, l2=0.0, epochs=500, lr=1.0, seed=0)
        loss, _, _ = logistic_loss_grad(model, X, y)
        assert loss < 0.05  # entropy of a one-class prior is 0

    def test_monotone_loss_under_halving(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 3, size=50)
        model = LogisticModel(np.zeros((3, 4)), np.zeros(3), l2=1e-3)
        losses = [logistic_loss_grad(model, X, y)[0]]
        trained = train_logistic(X, y, l2=1e-3, epochs=50, lr=2.0, seed=0)
        losses.append(logistic_loss_grad(trained, X, y)[0])
        assert losses[1] <= losses[0] + 1e-12

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(4, 5))
        y = np.array([0, 1, 2, 1])
        model = LogisticModel(rng.normal(size=(3, 5)) * 0.3, rng.normal(size=3) * 0.1, l2=0.01)
        _, dW, db = logistic_loss_grad(model, X, y)
        fd_W = finite_difference(lambda: logistic_loss_grad(model, X, y)[0], model.weights)
        fd_b = finite_difference(lambda: logistic_loss_grad(model, X, y)[0], model.bias)
        assert max_relative_error(dW, fd_W) < 1e-4
        assert max_relative_error(db, fd_b) < 1e-4

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError):
            train_logistic(np.zeros((3, 2)), np.array([0, 1, 5]))


class TestMlp:
    def test_xor_within_2000_epochs(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 1, 0])
        cfg = MlpConfig(hidden=(16, 8), dropout=0.0, lr=5e-3, epochs=2000,
                        batch_size=4, early_stopping=False)
        model = train_mlp(X, y, cfg, seed=1)
        assert (predict_proba(model, X).argmax(axis=1) == y).mean() == 1.0
        assert len(model.history["train_loss"]) <= 2000

    def test_dropout_one_rejected(self):
        with pytest.raises(NoSignal):
            train_mlp(np.zeros((4, 2)), np.zeros(4, dtype=int), MlpConfig(dropout=1.0))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(4, 6))
        y = np.array([0, 2, 1, 1])
        cfg = MlpConfig(hidden=(8, 5), dropout=0.0, l2=0.002)
        weights, biases = _init_layers([6, 8, 5, 3], np.random.default_rng(5))
        model = MlpModel(weights, biases, cfg)
        _, _, gW, gb = mlp_loss_grad(model, X, y)
        for i in range(3):
            fd = finite_difference(lambda: mlp_loss_grad(model, X, y)[0], model.weights[i])
            assert max_relative_error(gW[i], fd) < 1e-4
            fd_b = finite_difference(lambda: mlp_loss_grad(model, X, y)[0], model.biases[i])
            assert max_relative_error(gb[i], fd_b) < 1e-4

    def test_seeded_training_reproducible(self):
        X, y = two_blob_data(seed=6)
        cfg = MlpConfig(hidden=(8,), dropout=0.3, epochs=15, batch_size=16)
        a = train_mlp(X, y, cfg, seed=9)
        b = train_mlp(X, y, cfg, seed=9)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_dropout_masks_only_in_training(self):
        X, y = two_blob_data(seed=7)
        cfg = MlpConfig(hidden=(8,), dropout=0.5, epochs=5, batch_size=16)
        model = train_mlp(X, y, cfg, seed=3)
        assert np.array_equal(predict_proba(model, X), predict_proba(model, X))

    def test_zero_hidden_collapses_to_logistic(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(20, 4))
        W = rng.normal(size=(3, 4))
        b = rng.normal(size=3)
        logistic = LogisticModel(W, b)
        mlp = MlpModel(weights=[W.copy()], biases=[b.copy()],
                       config=MlpConfig(hidden=(), dropout=0.0))
        assert np.allclose(predict_proba(logistic, X), predict_proba(mlp, X))


class TestPredictProba:
    def test_zero_weight_logistic_uniform(self):
        model = LogisticModel(np.zeros((3, 4)), np.zeros(3))
        probs = predict_proba(model, np.random.default_rng(0).normal(size=(10, 4)))
        assert np.allclose(probs, 1 / 3)

    def test_rows_sum_to_one(self):
        X, y = two_blob_data(seed=9)
        model = train_logistic(X, y, epochs=50, lr=0.5)
        probs = predict_proba(model, X)
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) < 1e-9

    def test_matches_direct_softmax_evaluation(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(5, 3))
        W = rng.normal(size=(3, 3))
        b = rng.normal(size=3)
        model = LogisticModel(W, b)
        direct = softmax(X @ W.T + b)
        assert np.allclose(predict_proba(model, X), direct, atol=1e-12)

    def test_width_mismatch(self):
        model = LogisticModel(np.zeros((3, 4)), np.zeros(3))
        with pytest.raises(WidthMismatch):
            predict_proba(model, np.zeros((2, 7)))
