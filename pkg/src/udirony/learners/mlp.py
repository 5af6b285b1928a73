"""One-hidden-layer perceptron with logistic units, trained by minibatch SGD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._common import TrainingError, check_dim, check_xy, sigmoid


@dataclass
class MlpConfig:
    hidden: int = 30
    learning_rate: float = 0.01
    batch_size: int = 5
    max_epochs: int = 200
    patience: int = 5
    validation_fraction: float = 0.1
    tol: float = 1e-4
    alpha: float = 1e-4  # L2 penalty
    init_scale: float = 0.05


@dataclass
class MlpModel:
    W1: np.ndarray  # (dim, hidden)
    b1: np.ndarray
    w2: np.ndarray  # (hidden,)
    b2: float

    @property
    def dim(self) -> int:
        return self.W1.shape[0]

    def hidden(self, X) -> np.ndarray:
        return sigmoid(X @ self.W1 + self.b1)

    def scores(self, X) -> np.ndarray:
        X = check_dim(X, self.dim)
        return sigmoid(self.hidden(X) @ self.w2 + self.b2)

    threshold = 0.5


def _bce(p, y):
    eps = 1e-12
    p = np.clip(p, eps, 1 - eps)
    return -(y * np.log(p) + (1 - y) * np.log(1 - p))


def mlp_loss_and_grad(model: MlpModel, X, y, alpha: float = 0.0):
    """Mean cross-entropy plus ``alpha / (2 n) * ||weights||^2`` and its gradient.

    Computed on the pre-sigmoid output so the result stays exact for
    saturated probabilities. Returns ``(loss, {"W1", "b1", "w2", "b2"})``.
    """
    n = X.shape[0]
    y = np.asarray(y, dtype=np.float64)
    h = model.hidden(X)
    z = h @ model.w2 + model.b2
    ce = np.logaddexp(0.0, z) - y * z
    loss = ce.mean() + alpha / (2 * n) * (np.sum(model.W1**2) + model.w2 @ model.w2)
    dz = (sigmoid(z) - y) / n
    dh = np.outer(dz, model.w2) * h * (1 - h)
    grads = {
        "W1": np.asarray(X.T @ dh) + alpha / n * model.W1,
        "b1": dh.sum(axis=0),
        "w2": h.T @ dz + alpha / n * model.w2,
        "b2": float(dz.sum()),
    }
    return float(loss), grads


def init_mlp(dim: int, config: MlpConfig, rng) -> MlpModel:
    s = config.init_scale
    W1 = rng.uniform(-s, s, size=(dim, config.hidden))
    b1 = rng.uniform(-s, s, size=config.hidden)
    w2 = rng.uniform(-s, s, size=config.hidden)
    b2 = float(rng.uniform(-s, s))
    return MlpModel(W1, b1, w2, b2)


def _stratified_holdout(y, fraction, rng):
    val = []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        k = max(1, int(round(fraction * idx.size)))
        val.extend(idx[:k].tolist())
    val = np.array(sorted(val), dtype=np.int64)
    train = np.setdiff1d(np.arange(y.size), val)
    return train, val


def train_mlp(X, y, config: MlpConfig = MlpConfig(), seed: int = 0) -> MlpModel:
    """Minibatch SGD with early stopping on a stratified held-out split.

    Training stops once the validation loss has not improved by ``tol`` for
    ``patience`` consecutive epochs; the best parameters seen are returned.
    """
    X, y = check_xy(X, y)
    if X.shape[0] < 10:
        raise TrainingError(f"MLP needs at least 10 examples to carve a validation split, got {X.shape[0]}")
    rng = np.random.default_rng(seed)
    model = init_mlp(X.shape[1], config, rng)
    tr, va = _stratified_holdout(y, config.validation_fraction, rng)
    Xtr, ytr = X[tr], y[tr].astype(np.float64)
    Xva, yva = X[va], y[va].astype(np.float64)
    Xtr.sort_indices()

    # W1 = scale * U, so the L2 shrink of the dense matrix costs O(1) per batch
    U = model.W1.copy()
    scale = 1.0
    b1, w2, b2 = model.b1.copy(), model.w2.copy(), model.b2
    lr, alpha, bs = config.learning_rate, config.alpha, config.batch_size

    def snapshot():
        return MlpModel(U * scale, b1.copy(), w2.copy(), b2)

    best_loss, best, stale = np.inf, snapshot(), 0
    n = Xtr.shape[0]
    for _ in range(config.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            rows = order[start : start + bs]
            Xb = Xtr[rows]
            yb = ytr[rows]
            m = rows.size
            h = sigmoid((Xb @ U) * scale + b1)
            z = h @ w2 + b2
            dz = (sigmoid(z) - yb) / m
            dh = np.outer(dz, w2) * h * (1 - h)
            gw2 = h.T @ dz + alpha / m * w2
            # sparse W1 gradient, touched rows only
            counts = np.diff(Xb.indptr)
            which = np.repeat(np.arange(m), counts)
            cols, inv = np.unique(Xb.indices, return_inverse=True)
            g = np.zeros((cols.size, config.hidden))
            np.add.at(g, inv, Xb.data[:, None] * dh[which])
            scale *= 1.0 - lr * alpha / m
            U[cols] -= (lr / scale) * g
            b1 -= lr * dh.sum(axis=0)
            w2 -= lr * gw2
            b2 -= lr * float(dz.sum())
            if scale < 1e-6:
                U *= scale
                scale = 1.0
        cur = snapshot()
        val_loss = float(_bce(cur.scores(Xva), yva).mean())
        if val_loss < best_loss - config.tol:
            best_loss, best, stale = val_loss, cur, 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return best
