"""Linear classifiers: hinge-loss SVM and logistic regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from ._common import check_dim, check_xy, l2_normalize_rows, log1pexp, sigmoid


@dataclass
class SvmConfig:
    C: float = 1.0
    tol: float = 1e-4
    max_epochs: int = 1000
    normalize: bool = False


@dataclass
class LogRegConfig:
    C: float = 1.0
    max_iter: int = 5
    converge: bool = False
    converge_max_iter: int = 1000
    normalize: bool = False


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    loss: str  # "hinge" or "logistic"
    l2_strength: float
    normalize: bool = False

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X) -> np.ndarray:
        X = check_dim(X, self.dim)
        if self.normalize:
            X = l2_normalize_rows(X)
        return X @ self.weights + self.bias

    def scores(self, X) -> np.ndarray:
        """Margins for the SVM, positive-class probabilities for LR."""
        z = self.decision_function(X)
        return sigmoid(z) if self.loss == "logistic" else z

    @property
    def threshold(self) -> float:
        return 0.5 if self.loss == "logistic" else 0.0


def hinge_objective(w: np.ndarray, b: float, X, y, C: float) -> float:
    """0.5 ||w||^2 + 0.5 b^2 + C sum max(0, 1 - s (w.x + b)); the bias is regularised like a weight."""
    s = 2.0 * np.asarray(y) - 1.0
    margins = s * (X @ w + b)
    return 0.5 * (w @ w + b * b) + C * np.maximum(0.0, 1.0 - margins).sum()


def train_svm(X, y, config: SvmConfig = SvmConfig(), seed: int = 0, callback=None) -> LinearModel:
    """Dual coordinate descent for the L2-regularised hinge loss.

    The bias is handled as an extra constant-1 feature. Stops when the
    projected-gradient spread drops below ``tol`` or after ``max_epochs``.
    ``callback(w, b, alpha)`` runs after every epoch.
    """
    X, y = check_xy(X, y)
    if config.normalize:
        X = l2_normalize_rows(X)
    X.sort_indices()
    n, dim = X.shape
    s = 2.0 * y - 1.0
    C = config.C
    rows = [(X.indices[X.indptr[i] : X.indptr[i + 1]], X.data[X.indptr[i] : X.indptr[i + 1]]) for i in range(n)]
    qii = np.asarray(X.multiply(X).sum(axis=1)).ravel() + 1.0
    alpha = np.zeros(n)
    w = np.zeros(dim)
    b = 0.0
    rng = np.random.default_rng(seed)
    for _ in range(config.max_epochs):
        pg_max, pg_min = -np.inf, np.inf
        for i in rng.permutation(n).tolist():
            idx, val = rows[i]
            g = s[i] * (w[idx] @ val + b) - 1.0
            a = alpha[i]
            if a == 0.0:
                pg = min(g, 0.0)
            elif a == C:
                pg = max(g, 0.0)
            else:
                pg = g
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
            if pg != 0.0:
                new = min(max(a - g / qii[i], 0.0), C)
                delta = (new - a) * s[i]
                alpha[i] = new
                w[idx] += delta * val
                b += delta
        if callback is not None:
            callback(w, b, alpha)
        if pg_max - pg_min < config.tol:
            break
    return LinearModel(w, float(b), "hinge", C, config.normalize)


def logistic_loss_and_grad(params: np.ndarray, X, y, C: float) -> tuple[float, np.ndarray]:
    """0.5 ||w||^2 + C sum log-loss, with an unpenalised bias as the last parameter."""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    # log(1 + e^z) - y z is the per-example negative log-likelihood
    loss = 0.5 * (w @ w) + C * float(np.sum(log1pexp(z) - y * z))
    r = C * (sigmoid(z) - y)
    grad = np.empty_like(params)
    grad[:-1] = w + X.T @ r
    grad[-1] = r.sum()
    return loss, grad


def train_logreg(X, y, config: LogRegConfig = LogRegConfig(), seed: int = 0, callback=None) -> LinearModel:
    """L-BFGS on the regularised logistic loss, capped at ``max_iter`` iterations.

    Every iteration needs at least one full-data gradient (more when the line
    search backtracks), so the cap bounds the number of optimisation passes.
    ``callback(params)`` is called after each iteration.
    """
    X, y = check_xy(X, y)
    if config.normalize:
        X = l2_normalize_rows(X)
    y = y.astype(np.float64)
    x0 = np.zeros(X.shape[1] + 1)
    maxiter = config.converge_max_iter if config.converge else config.max_iter
    res = scipy.optimize.minimize(
        logistic_loss_and_grad,
        x0,
        args=(X, y, config.C),
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={"maxiter": maxiter, "gtol": 1e-8 if config.converge else 1e-5},
    )
    return LinearModel(res.x[:-1].copy(), float(res.x[-1]), "logistic", config.C, config.normalize)
