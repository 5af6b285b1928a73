import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from udirony.learners import (
    MODELS,
    ForestConfig,
    ForestModel,
    LinearModel,
    LogRegConfig,
    MlpConfig,
    SvmConfig,
    TrainingError,
    make_config,
    predict,
    train,
    train_forest,
    train_logreg,
    train_mlp,
    train_svm,
)
from udirony.learners.forest import LEAF, Tree, best_split_on_feature, build_tree, tree_seeds
from udirony.learners.linear import hinge_objective, logistic_loss_and_grad
from udirony.learners.mlp import MlpModel, init_mlp, mlp_loss_and_grad

FAST = {"rf": {"n_trees": 10}, "mlp": {"max_epochs": 30}}


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)


def central_diff(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = eps
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def random_counts(rng, n, d, density=0.3):
    X = sp.random(n, d, density=density, random_state=rng, data_rvs=lambda k: rng.integers(1, 4, k).astype(float))
    return sp.csr_matrix(X)


def separable(rng, n=200, d=10, margin=0.5):
    w = rng.normal(size=d)
    X = rng.normal(size=(n * 3, d))
    m = X @ w / np.linalg.norm(w)
    X = X[np.abs(m) > margin][:n]
    y = (X @ w > 0).astype(int)
    return sp.csr_matrix(X), y


# ---------------------------------------------------------------- shared behaviour


@pytest.mark.parametrize("kind", MODELS)
def test_single_class_refused(kind):
    X = sp.csr_matrix(np.eye(12))
    with pytest.raises(TrainingError, match="single class"):
        train(kind, X, np.ones(12, dtype=int))


@pytest.mark.parametrize("kind", MODELS)
def test_separable_training_set_is_recovered(kind):
    X = sp.csr_matrix(np.vstack([np.tile([1.0, 0.0], (6, 1)), np.tile([0.0, 1.0], (6, 1))]))
    y = np.array([1] * 6 + [0] * 6)
    cfg = {"mlp": {"learning_rate": 0.5, "max_epochs": 200, "patience": 50}, "logreg": {"converge": True}}.get(kind)
    labels, _ = predict(train(kind, X, y, cfg, seed=1), X)
    assert labels.tolist() == y.tolist()


@pytest.mark.parametrize("kind", MODELS)
def test_dimension_mismatch(kind):
    rng = np.random.default_rng(0)
    X = random_counts(rng, 20, 6)
    y = np.arange(20) % 2
    model = train(kind, X, y, FAST.get(kind), seed=0)
    with pytest.raises(ValueError, match="dimension"):
        predict(model, sp.csr_matrix((3, 7)))


@pytest.mark.parametrize("kind", MODELS)
def test_training_is_deterministic(kind):
    rng = np.random.default_rng(3)
    X = random_counts(rng, 40, 15)
    y = rng.integers(0, 2, 40)
    a = predict(train(kind, X, y, FAST.get(kind), seed=7), X)[1]
    b = predict(train(kind, X, y, FAST.get(kind), seed=7), X)[1]
    assert np.array_equal(a, b)


def test_make_config_coerces_strings():
    assert make_config("rf", {"n_trees": "7", "max_features": "None"}).n_trees == 7
    assert make_config("rf", {"max_features": "None"}).max_features is None
    assert make_config("logreg", {"converge": "true"}).converge is True
    assert make_config("svm", {"C": "0.5"}).C == 0.5
    with pytest.raises(ValueError, match="unknown svm option"):
        make_config("svm", {"gamma": 1})


# ---------------------------------------------------------------- SVM


def test_svm_xor_not_separable():
    X = sp.csr_matrix(np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float))
    y = np.array([0, 0, 1, 1])
    labels, _ = predict(train_svm(X, y), X)
    assert np.mean(labels == y) <= 0.75


def test_svm_matches_primal_subgradient_oracle():
    rng = np.random.default_rng(42)
    X, y = separable(rng)
    model = train_svm(X, y)
    # independent oracle: averaged subgradient descent on the primal objective
    A = X.toarray()
    s = 2.0 * y - 1
    w, b = np.zeros(A.shape[1]), 0.0
    w_avg, b_avg = np.zeros_like(w), 0.0
    T = 20000
    for t in range(1, T + 1):
        active = s * (A @ w + b) < 1
        gw = w - (s[active, None] * A[active]).sum(axis=0)
        gb = b - s[active].sum()
        lr = 0.5 / (t + 10)
        w, b = w - lr * gw, b - lr * gb
        if t > T // 2:
            w_avg += w
            b_avg += b
    w_avg /= T - T // 2
    b_avg /= T - T // 2
    ours = hinge_objective(model.weights, model.bias, X, y, 1.0)
    oracle = hinge_objective(w_avg, b_avg, X, y, 1.0)
    assert ours <= oracle * (1 + 1e-3)
    agree = np.mean(np.sign(A @ w_avg + b_avg) == np.sign(model.decision_function(X)))
    assert agree >= 0.99
    assert np.mean(predict(model, X)[0] == y) == 1.0


def test_svm_dual_objective_never_decreases():
    rng = np.random.default_rng(1)
    X = random_counts(rng, 30, 12)
    y = rng.integers(0, 2, 30)
    dual = []

    def record(w, b, alpha):
        dual.append(alpha.sum() - 0.5 * (w @ w + b * b))

    train_svm(X, y, SvmConfig(max_epochs=50), seed=0, callback=record)
    assert len(dual) > 1
    assert all(b >= a - 1e-12 for a, b in zip(dual, dual[1:]))


def test_svm_zero_model_ties_to_negative():
    m = LinearModel(np.zeros(3), 0.0, "hinge", 1.0)
    labels, scores = predict(m, sp.csr_matrix(np.eye(3)))
    assert labels.tolist() == [0, 0, 0] and scores.tolist() == [0, 0, 0]


def test_svm_normalize_flag():
    rng = np.random.default_rng(2)
    X = random_counts(rng, 30, 8)
    y = rng.integers(0, 2, 30)
    a = train_svm(X, y, SvmConfig(normalize=True))
    b = train_svm(X * 10, y, SvmConfig(normalize=True))
    assert np.allclose(a.decision_function(X), b.decision_function(X * 10))


# ---------------------------------------------------------------- logistic regression


def test_logreg_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    X = random_counts(rng, 25, 8)
    y = rng.integers(0, 2, 25).astype(float)
    for _ in range(10):
        p = rng.normal(scale=0.5, size=9)
        _, g = logistic_loss_and_grad(p, X, y, 1.0)
        fd = central_diff(lambda q: logistic_loss_and_grad(q, X, y, 1.0)[0], p)
        assert rel_err(g, fd) < 1e-4


def test_logreg_zero_inputs_balanced():
    X = sp.csr_matrix((6, 4))
    y = np.array([0, 1] * 3)
    m = train_logreg(X, y)
    labels, scores = predict(m, X)
    assert np.all(m.weights == 0) and abs(m.bias) < 1e-8
    assert np.allclose(scores, 0.5) and labels.tolist() == [0] * 6


def test_logreg_separable_probabilities_move_monotonically():
    X = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    y = np.array([1, 0])
    trace = []
    m = train_logreg(X, y, LogRegConfig(converge=True, C=1e4),
                     callback=lambda p: trace.append(LinearModel(p[:-1], p[-1], "logistic", 1.0).scores(X)))
    p1 = [t[0] for t in trace]
    p0 = [t[1] for t in trace]
    assert all(b >= a - 1e-12 for a, b in zip(p1, p1[1:]))
    assert all(b <= a + 1e-12 for a, b in zip(p0, p0[1:]))
    final = m.scores(X)
    assert final[0] > 0.99 and final[1] < 0.01


def test_logreg_iteration_cap_and_loss_monotone():
    rng = np.random.default_rng(4)
    X = random_counts(rng, 60, 20)
    y = rng.integers(0, 2, 60)
    losses = []
    train_logreg(X, y, callback=lambda p: losses.append(logistic_loss_and_grad(p, X, y.astype(float), 1.0)[0]))
    assert 1 <= len(losses) <= 5
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    longer = []
    train_logreg(X, y, LogRegConfig(converge=True), callback=lambda p: longer.append(p))
    assert len(longer) > 5


# ---------------------------------------------------------------- random forest


def test_forest_pure_split_feature():
    rng = np.random.default_rng(0)
    n = 60
    y = np.arange(n) % 2
    noise = (rng.random((n, 8)) < 0.3).astype(float)
    X = sp.csr_matrix(np.column_stack([y.astype(float), noise]))
    model = train_forest(X, y, ForestConfig(n_trees=20), seed=3)
    assert np.mean(predict(model, X)[0] == y) == 1.0
    assert any(t.feature[0] == 0 for t in model.trees)


def test_forest_seeded_predictions_repeat():
    rng = np.random.default_rng(5)
    X = random_counts(rng, 50, 30)
    y = rng.integers(0, 2, 50)
    held = random_counts(rng, 20, 30)
    a = train_forest(X, y, ForestConfig(n_trees=15), seed=9)
    b = train_forest(X, y, ForestConfig(n_trees=15), seed=9)
    assert np.array_equal(a.scores(held), b.scores(held))
    assert a.seeds == tree_seeds(9, 15)
    assert len(set(a.seeds)) == 15


def test_depth_one_tree_matches_exhaustive_gini():
    X = np.array([[1.0, 0.0, 2.0], [2.0, 1.0, 0.0], [3.0, 1.0, 1.0], [4.0, 0.0, 3.0]])
    y = np.array([0, 0, 1, 1])
    cfg = ForestConfig(n_trees=1, max_features=None, bootstrap=False, max_depth=1)
    tree = build_tree(sp.csr_matrix(X), y, np.ones(4), cfg, np.random.default_rng(0))
    best = min((oracles.gini_best_split(X[:, j].tolist(), y.tolist(), [1] * 4) + (j,) for j in range(3)),
               key=lambda r: r[0])
    assert tree.feature[0] == best[2] == 0
    assert tree.threshold[0] == best[1] == 2.5


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 1), st.integers(1, 3)), min_size=2, max_size=12))
def test_split_scan_matches_oracle(rows):
    x = np.array([r[0] for r in rows], dtype=float)
    y = np.array([r[1] for r in rows], dtype=float)
    w = np.array([r[2] for r in rows], dtype=float)
    ours = best_split_on_feature(x, y, w)
    ref = oracles.gini_best_split(x.tolist(), y.tolist(), w.tolist())
    if ref is None:
        assert ours is None
    else:
        assert ours[1] == ref[1]
        assert abs(ours[0] - ref[0]) < 1e-9


def test_forest_split_search_matches_single_feature_scan():
    # the batched column scorer must pick the same split as scanning one feature at a time
    rng = np.random.default_rng(8)
    X = random_counts(rng, 40, 12, density=0.5)
    y = rng.integers(0, 2, 40)
    w = rng.integers(0, 3, 40).astype(float)
    cfg = ForestConfig(n_trees=1, max_features=None, bootstrap=False, max_depth=1)
    tree = build_tree(X, y, w, cfg, np.random.default_rng(0))
    idx = np.flatnonzero(w > 0)
    dense = X.toarray()[idx]
    scans = [best_split_on_feature(dense[:, j], y[idx].astype(float), w[idx]) for j in range(12)]
    best = min(s[0] for s in scans if s is not None)
    j = int(tree.feature[0])
    assert abs(scans[j][0] - best) < 1e-9 and scans[j][1] == tree.threshold[0]


def test_forest_tie_votes_negative():
    leaf = lambda c0, c1: Tree(np.array([LEAF]), np.zeros(1), np.array([LEAF]), np.array([LEAF]), np.array([[c0, c1]], float))
    forest = ForestModel([leaf(3, 1), leaf(1, 3)], dim=2)
    labels, scores = predict(forest, sp.csr_matrix((2, 2)))
    assert scores.tolist() == [0.5, 0.5] and labels.tolist() == [0, 0]
    # a leaf with equal class counts also votes negative
    assert predict(ForestModel([leaf(2, 2)], dim=2), sp.csr_matrix((1, 2)))[0].tolist() == [0]


def test_forest_duplicate_does_not_flip_own_prediction():
    rng = np.random.default_rng(12)
    X = random_counts(rng, 30, 10, density=0.5).toarray()
    y = rng.integers(0, 2, 30)
    cfg = ForestConfig(n_trees=5, bootstrap=False)
    base = predict(train_forest(sp.csr_matrix(X), y, cfg, seed=0), sp.csr_matrix(X))[0]
    for i in range(0, 30, 3):
        X2 = np.vstack([X, X[i]])
        y2 = np.append(y, y[i])
        after = predict(train_forest(sp.csr_matrix(X2), y2, cfg, seed=0), sp.csr_matrix(X[i:i + 1]))[0]
        if base[i] == y[i]:
            assert after[0] == base[i]


# ---------------------------------------------------------------- MLP


def test_mlp_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    X = random_counts(rng, 12, 6)
    y = rng.integers(0, 2, 12)
    cfg = MlpConfig(hidden=4, init_scale=0.8)
    for point in range(10):
        m = init_mlp(6, cfg, np.random.default_rng(point))
        _, g = mlp_loss_and_grad(m, X, y, alpha=0.01)
        shapes = {k: np.shape(getattr(m, k)) for k in ("W1", "b1", "w2")}
        flat0 = np.concatenate([m.W1.ravel(), m.b1, m.w2, [m.b2]])

        def unflat(v):
            i = 0
            parts = {}
            for k in ("W1", "b1", "w2"):
                size = int(np.prod(shapes[k]))
                parts[k] = v[i:i + size].reshape(shapes[k])
                i += size
            return MlpModel(parts["W1"], parts["b1"], parts["w2"], float(v[i]))

        fd = central_diff(lambda v: mlp_loss_and_grad(unflat(v), X, y, alpha=0.01)[0], flat0)
        analytic = np.concatenate([g["W1"].ravel(), g["b1"], g["w2"], [g["b2"]]])
        assert rel_err(analytic, fd) < 1e-4


def test_mlp_zero_inputs_constant_output():
    m = init_mlp(5, MlpConfig(), np.random.default_rng(1))
    out = m.scores(sp.csr_matrix((4, 5)))
    expected = 1 / (1 + np.exp(-(m.w2 @ (1 / (1 + np.exp(-m.b1))) + m.b2)))
    assert np.allclose(out, expected) and np.ptp(out) == 0
    # with the hidden-to-output weights at zero the output is the sigmoid of the output bias alone
    m0 = MlpModel(m.W1, m.b1, np.zeros_like(m.w2), 0.3)
    assert np.allclose(m0.scores(sp.csr_matrix((2, 5))), 1 / (1 + np.exp(-0.3)))


def test_mlp_blobs_held_out_accuracy():
    rng = np.random.default_rng(7)

    def blobs(n):
        y = np.arange(n) % 2
        centre = np.where(y[:, None] == 1, [1.5, 1.5], [-1.5, -1.5])
        return sp.csr_matrix(centre + rng.normal(scale=0.6, size=(n, 2))), y

    Xtr, ytr = blobs(400)
    Xte, yte = blobs(200)
    mlp_acc = np.mean(predict(train_mlp(Xtr, ytr, seed=0), Xte)[0] == yte)
    lr_acc = np.mean(predict(train_logreg(Xtr, ytr), Xte)[0] == yte)
    assert mlp_acc >= 0.95
    assert mlp_acc >= lr_acc - 0.02


def test_mlp_needs_ten_examples():
    X = sp.csr_matrix(np.eye(9))
    with pytest.raises(TrainingError, match="at least 10"):
        train_mlp(X, np.arange(9) % 2)


def test_mlp_init_range_and_finite():
    m = init_mlp(50, MlpConfig(), np.random.default_rng(0))
    assert m.W1.shape == (50, 30) and m.w2.shape == (30,)
    assert np.abs(m.W1).max() <= 0.05
    rng = np.random.default_rng(1)
    X = random_counts(rng, 40, 50)
    trained = train_mlp(X, rng.integers(0, 2, 40), MlpConfig(max_epochs=20), seed=0)
    assert all(np.isfinite(a).all() for a in (trained.W1, trained.b1, trained.w2)) and np.isfinite(trained.b2)
    s = trained.scores(X)
    assert np.all((s > 0) & (s < 1))
