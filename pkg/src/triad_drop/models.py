"""Baseline classifiers: multinomial logistic regression and the tabular MLP.

Gradients are computed analytically (they are checked against central
finite differences in the test suite), training is seeded and
single-threaded, and inference is a pure function of (model, X).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Diverged, NoSignal, WidthMismatch

N_CLASSES = 3


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(y: np.ndarray, n_classes: int = N_CLASSES) -> np.ndarray:
    out = np.zeros((len(y), n_classes))
    out[np.arange(len(y)), y] = 1.0
    return out


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs[np.arange(len(y)), y], 1e-12, 1.0)
    return float(-np.log(p).mean())


def _check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=int)
    if y.size and (y.min() < 0 or y.max() >= N_CLASSES):
        raise ValueError("labels must lie in {0, 1, 2}")
    return y


# ---------------------------------------------------------------------------
# logistic regression


@dataclass
class LogisticModel:
    weights: np.ndarray  # 3 x d
    bias: np.ndarray  # 3
    l2: float = 0.0

    @property
    def width(self) -> int:
        return self.weights.shape[1]


def logistic_loss_grad(model: LogisticModel, X: np.ndarray, y: np.ndarray):
    """Softmax cross-entropy with L2 on the weights; returns (loss, dW, db)."""
    n = len(y)
    probs = softmax(X @ model.weights.T + model.bias)
    loss = cross_entropy(probs, y) + 0.5 * model.l2 * float((model.weights**2).sum())
    delta = (probs - one_hot(y)) / n
    dW = delta.T @ X + model.l2 * model.weights
    db = delta.sum(axis=0)
    return loss, dW, db


def train_logistic(X: np.ndarray, y: np.ndarray, l2: float = 1e-4,
                   epochs: int = 300, lr: float = 0.5, seed: int = 0) -> LogisticModel:
    """Full-batch gradient descent with per-step halving on any increase,
    which makes the loss sequence monotone up to 1e-12."""
    X = np.asarray(X, dtype=float)
    y = _check_labels(y)
    model = LogisticModel(weights=np.zeros((N_CLASSES, X.shape[1])), bias=np.zeros(N_CLASSES), l2=l2)

    loss, dW, db = logistic_loss_grad(model, X, y)
    for _ in range(epochs):
        step = lr
        for _halving in range(40):
            cand = LogisticModel(model.weights - step * dW, model.bias - step * db, l2)
            new_loss, new_dW, new_db = logistic_loss_grad(cand, X, y)
            if np.isnan(new_loss):
                raise Diverged("loss is NaN")
            if new_loss <= loss + 1e-12:
                model, loss, dW, db = cand, new_loss, new_dW, new_db
                break
            step /= 2.0
        else:
            break  # no descent step found: converged
    return model


# ---------------------------------------------------------------------------
# multilayer perceptron


@dataclass
class MlpConfig:
    hidden: tuple = (256, 64)
    dropout: float = 0.3
    lr: float = 1e-3
    epochs: int = 60
    batch_size: int = 64
    l2: float = 0.0
    val_fraction: float = 0.1
    patience: int = 10
    early_stopping: bool = True

    def validate(self) -> None:
        if not 0.0 <= self.dropout < 1.0:
            raise NoSignal(f"dropout rate {self.dropout} leaves no signal")


@dataclass
class MlpModel:
    weights: list  # per layer, (out, in)
    biases: list
    config: MlpConfig
    history: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.weights[0].shape[1]


def _init_layers(sizes: list, rng: np.random.Generator):
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def mlp_forward(model: MlpModel, X: np.ndarray, dropout_rng: np.random.Generator | None = None):
    """Returns (probs, cache). Dropout masks are applied to hidden
    activations only when a dropout rng is supplied (training)."""
    rate = model.config.dropout
    activations = [X]
    masks = []
    h = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W.T + b
        if i < last:
            h = np.maximum(z, 0.0)
            if dropout_rng is not None and rate > 0.0:
                mask = (dropout_rng.random(h.shape) >= rate) / (1.0 - rate)
                h = h * mask
            else:
                mask = None
            masks.append((z, mask))
            activations.append(h)
        else:
            probs = softmax(z)
    return probs, (activations, masks)


def mlp_loss_grad(model: MlpModel, X: np.ndarray, y: np.ndarray,
                  dropout_rng: np.random.Generator | None = None):
    n = len(y)
    probs, (activations, masks) = mlp_forward(model, X, dropout_rng)
    loss = cross_entropy(probs, y)
    if model.config.l2:
        loss += 0.5 * model.config.l2 * sum(float((W**2).sum()) for W in model.weights)

    grads_W = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = (probs - one_hot(y)) / n
    for i in range(len(model.weights) - 1, -1, -1):
        grads_W[i] = delta.T @ activations[i] + model.config.l2 * model.weights[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            z, mask = masks[i - 1]
            delta = delta @ model.weights[i]
            if mask is not None:
                delta = delta * mask
            delta = delta * (z > 0)
    return loss, probs, grads_W, grads_b


class Adam:
    """Adaptive moment estimation over a list of parameter arrays."""

    def __init__(self, params: list, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list, grads: list) -> None:
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1**self.t)
            v_hat = self.v[i] / (1 - self.beta2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _val_split(n: int, fraction: float, rng: np.random.Generator):
    idx = rng.permutation(n)
    n_val = max(int(round(n * fraction)), 1) if n > 10 else 0
    return idx[n_val:], idx[:n_val]


def train_mlp(X: np.ndarray, y: np.ndarray, cfg: MlpConfig | None = None,
              seed: int = 0) -> MlpModel:
    """Seeded mini-batch Adam with early stopping on a held-back slice of
    the training fold (patience in epochs, best parameters restored)."""
    cfg = cfg or MlpConfig()
    cfg.validate()
    X = np.asarray(X, dtype=float)
    y = _check_labels(y)

    rng = np.random.default_rng(np.random.PCG64(seed))
    sizes = [X.shape[1]] + list(cfg.hidden) + [N_CLASSES]
    weights, biases = _init_layers(sizes, rng)
    model = MlpModel(weights=weights, biases=biases, config=cfg)

    train_idx, val_idx = _val_split(len(y), cfg.val_fraction if cfg.early_stopping else 0.0, rng)
    if not cfg.early_stopping or len(val_idx) == 0:
        train_idx, val_idx = np.arange(len(y)), np.array([], dtype=int)

    params = model.weights + model.biases
    opt = Adam(params, lr=cfg.lr)
    dropout_rng = np.random.default_rng(np.random.PCG64(seed + 1))

    best_val = np.inf
    best_params = None
    stale = 0
    history = {"train_loss": [], "val_loss": []}

    for _epoch in range(cfg.epochs):
        order = rng.permutation(len(train_idx))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = train_idx[order[start : start + cfg.batch_size]]
            loss, _, gW, gb = mlp_loss_grad(model, X[batch], y[batch], dropout_rng)
            if np.isnan(loss):
                raise Diverged("training loss is NaN")
            opt.step(params, gW + gb)
            epoch_loss += loss * len(batch)
        history["train_loss"].append(epoch_loss / max(len(train_idx), 1))

        if len(val_idx):
            val_probs, _ = mlp_forward(model, X[val_idx])
            val_loss = cross_entropy(val_probs, y[val_idx])
            history["val_loss"].append(val_loss)
            if val_loss < best_val - 1e-9:
                best_val = val_loss
                best_params = [p.copy() for p in params]
                stale = 0
            else:
                stale += 1
                if stale > cfg.patience:
                    break

    if best_params is not None:
        for p, best in zip(params, best_params):
            p[...] = best
    model.history = history
    return model


def predict_proba(model, X: np.ndarray) -> np.ndarray:
    """Deterministic class probabilities for either model kind."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.width:
        raise WidthMismatch(f"model expects width {model.width}, got {X.shape[1]}")
    if isinstance(model, LogisticModel):
        return softmax(X @ model.weights.T + model.bias)
    probs, _ = mlp_forward(model, X)
    return probs
