from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class TrainingError(ValueError):
    pass


def check_xy(X, y, min_rows: int = 1) -> tuple[sp.csr_matrix, np.ndarray]:
    X = sp.csr_matrix(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).ravel()
    if X.shape[0] != y.shape[0]:
        raise TrainingError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    if X.shape[0] < min_rows:
        raise TrainingError(f"need at least {min_rows} training examples, got {X.shape[0]}")
    if not np.isin(y, (0, 1)).all():
        raise TrainingError("labels must be 0 or 1")
    if len(np.unique(y)) < 2:
        raise TrainingError(f"training labels contain a single class ({int(y[0])}); refusing to train")
    return X, y


def check_dim(X, dim: int) -> sp.csr_matrix:
    X = sp.csr_matrix(X, dtype=np.float64)
    if X.shape[1] != dim:
        raise ValueError(f"dimension mismatch: model expects {dim} features, got {X.shape[1]}")
    return X


def l2_normalize_rows(X: sp.csr_matrix) -> sp.csr_matrix:
    X = sp.csr_matrix(X, dtype=np.float64, copy=True)
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    X.data /= np.repeat(norms, np.diff(X.indptr))
    return X


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log1pexp(z):
    """log(1 + exp(z)) without overflow."""
    z = np.asarray(z, dtype=np.float64)
    return np.logaddexp(0.0, z)
