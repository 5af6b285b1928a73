"""Random forest of gini CART trees over sparse count features."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from joblib import Parallel, delayed

from ._common import check_dim, check_xy

LEAF = -1


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_features: str | int | None = "sqrt"  # "sqrt", an int, or None for all
    bootstrap: bool = True
    max_depth: int | None = None
    min_samples_leaf: int = 1
    n_jobs: int = 1


@dataclass
class Tree:
    feature: np.ndarray  # LEAF at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) weighted class counts

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def apply(self, X: sp.csr_matrix) -> np.ndarray:
        """Leaf index reached by every row."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            f = self.feature[node[active]]
            vals = np.asarray(X[active, f]).ravel()
            go_left = vals <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, X: sp.csr_matrix) -> np.ndarray:
        c = self.counts[self.apply(X)]
        # equal leaf counts vote for the negative class
        return (c[:, 1] > c[:, 0]).astype(np.int64)


@dataclass
class ForestModel:
    trees: list[Tree]
    dim: int
    seeds: list[int] = field(default_factory=list)

    def scores(self, X) -> np.ndarray:
        """Fraction of trees voting ironic."""
        X = check_dim(X, self.dim)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += tree.predict(X)
        return votes / len(self.trees)

    threshold = 0.5


def n_candidate_features(max_features, dim: int) -> int:
    if max_features is None:
        return dim
    if max_features == "sqrt":
        return max(1, int(math.isqrt(dim)))
    return max(1, min(int(max_features), dim))


def best_split_on_feature(values: np.ndarray, y: np.ndarray, w: np.ndarray, min_leaf: int = 1):
    """Best gini split of one feature.

    Returns ``(weighted_child_impurity, threshold)`` or ``None`` when the
    feature is constant. The threshold is the midpoint between adjacent
    distinct values; ``x <= threshold`` goes left.
    """
    uniq, inv = np.unique(values, return_inverse=True)
    if uniq.size < 2:
        return None
    w1 = np.bincount(inv, weights=w * y, minlength=uniq.size)
    wt = np.bincount(inv, weights=w, minlength=uniq.size)
    nt = np.bincount(inv, minlength=uniq.size)
    return _scan(uniq, wt - w1, w1, nt, min_leaf)


def _scan(uniq, w0, w1, nt, min_leaf):
    l0 = np.cumsum(w0)[:-1]
    l1 = np.cumsum(w1)[:-1]
    ln = np.cumsum(nt)[:-1]
    t0, t1, tn = w0.sum(), w1.sum(), nt.sum()
    r0, r1 = t0 - l0, t1 - l1
    lw, rw = l0 + l1, r0 + r1
    with np.errstate(invalid="ignore", divide="ignore"):
        gl = np.where(lw > 0, lw - (l0 * l0 + l1 * l1) / lw, 0.0)
        gr = np.where(rw > 0, rw - (r0 * r0 + r1 * r1) / rw, 0.0)
    # gl, gr are impurity times node weight, so their sum is the weighted child impurity
    score = gl + gr
    ok = (ln >= min_leaf) & (tn - ln >= min_leaf)
    if not ok.any():
        return None
    score = np.where(ok, score, np.inf)
    k = int(np.argmin(score))
    return float(score[k]), float((uniq[k] + uniq[k + 1]) / 2.0)


def _score_columns(D: np.ndarray, w0: np.ndarray, w1: np.ndarray, min_leaf: int):
    """Best split of every column of the dense node block ``D`` at once.

    Returns per-column ``(score, threshold)`` arrays; score is ``inf`` when a
    column has no admissible split. Weights are integer bootstrap counts, so
    the cumulative sums are exact and ties break toward the lowest threshold.
    """
    m = D.shape[0]
    order = np.argsort(D, axis=0, kind="stable")
    vs = np.take_along_axis(D, order, axis=0)
    l0 = np.cumsum(w0[order], axis=0)[:-1]
    l1 = np.cumsum(w1[order], axis=0)[:-1]
    t0, t1 = w0.sum(), w1.sum()
    r0, r1 = t0 - l0, t1 - l1
    lw, rw = l0 + l1, r0 + r1
    with np.errstate(invalid="ignore", divide="ignore"):
        gl = np.where(lw > 0, lw - (l0 * l0 + l1 * l1) / lw, 0.0)
        gr = np.where(rw > 0, rw - (r0 * r0 + r1 * r1) / rw, 0.0)
    ln = np.arange(1, m)[:, None]
    ok = (vs[:-1] < vs[1:]) & (ln >= min_leaf) & (m - ln >= min_leaf)
    score = np.where(ok, gl + gr, np.inf)
    k = np.argmin(score, axis=0)
    cols = np.arange(D.shape[1])
    thr = (vs[k, cols] + vs[k + 1, cols]) / 2.0
    return score[k, cols], thr


def _gather_rows(X: sp.csr_matrix, idx: np.ndarray):
    """Nonzeros of rows ``idx`` as (row position, column slot, value) plus the sorted distinct columns."""
    starts = X.indptr[idx]
    lens = X.indptr[idx + 1] - starts
    rowpos = np.repeat(np.arange(idx.size), lens)
    offs = np.arange(int(lens.sum())) - np.repeat(np.cumsum(lens) - lens, lens)
    ent = starts[rowpos] + offs
    cands, inv = np.unique(X.indices[ent], return_inverse=True)
    return rowpos, inv, X.data[ent], cands


def build_tree(X: sp.csr_matrix, y: np.ndarray, sample_weight: np.ndarray, config: ForestConfig, rng) -> Tree:
    n, dim = X.shape
    mtry = n_candidate_features(config.max_features, dim)
    yf = y.astype(np.float64)
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        ww = sample_weight[idx]
        c1 = float(np.sum(ww * yf[idx]))
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append((float(np.sum(ww)) - c1, c1))
        return len(feature) - 1

    root_idx = np.flatnonzero(sample_weight > 0)
    stack = [(new_node(root_idx), root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        c0, c1 = counts[node]
        if c0 == 0 or c1 == 0 or idx.size < 2 * config.min_samples_leaf:
            continue
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        rowpos, inv, vals, cands = _gather_rows(X, idx)
        if cands.size == 0:
            continue
        m, k = idx.size, cands.size
        # a column is constant in the node when every row shares one value
        cnt = np.bincount(inv, minlength=k)
        nonconst = cnt < m
        full = ~nonconst
        if full.any():
            hi = np.full(k, -np.inf)
            lo = np.full(k, np.inf)
            np.maximum.at(hi, inv, vals)
            np.minimum.at(lo, inv, vals)
            nonconst |= full & (hi > lo)
        order = rng.permutation(k)
        order = order[nonconst[order]]
        ww = sample_weight[idx]
        w1 = ww * yf[idx]
        w0 = ww - w1
        mark = np.full(k, -1, dtype=np.int64)
        best = None  # (score, threshold, feature, column values)
        evaluated, start = 0, 0
        # draw candidates in random order until mtry of them admit a split
        while evaluated < mtry and start < order.size:
            batch = order[start:start + mtry - evaluated]
            start += batch.size
            mark[batch] = np.arange(batch.size)
            sel = mark[inv] >= 0
            D = np.zeros((m, batch.size))
            D[rowpos[sel], mark[inv[sel]]] = vals[sel]
            mark[batch] = -1
            score, thr = _score_columns(D, w0, w1, config.min_samples_leaf)
            valid = np.isfinite(score)
            evaluated += int(valid.sum())
            if valid.any():
                b = int(np.argmin(score))
                if best is None or score[b] < best[0]:
                    best = (float(score[b]), float(thr[b]), int(cands[batch[b]]), D[:, b])
        if best is None:
            continue
        _, thr, j, vals = best
        mask = vals <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = j, thr
        lnode = new_node(li)
        rnode = new_node(ri)
        left[node], right[node] = lnode, rnode
        stack.append((rnode, ri, depth + 1))
        stack.append((lnode, li, depth + 1))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.float64).reshape(-1, 2),
    )


def _fit_one(X, y, config, seed):
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    if config.bootstrap:
        weight = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
    else:
        weight = np.ones(n)
    return build_tree(X, y, weight, config, rng)


def tree_seeds(seed: int, n_trees: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(n_trees)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def train_forest(X, y, config: ForestConfig = ForestConfig(), seed: int = 0) -> ForestModel:
    X, y = check_xy(X, y)
    X = X.copy()
    X.eliminate_zeros()
    seeds = tree_seeds(seed, config.n_trees)
    if config.n_jobs == 1:
        trees = [_fit_one(X, y, config, s) for s in seeds]
    else:
        trees = Parallel(n_jobs=config.n_jobs)(delayed(_fit_one)(X, y, config, s) for s in seeds)
    return ForestModel(trees, X.shape[1], seeds)
