from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import make_sentence
from udirony.corpus import CorpusItem, LabeledCorpus
from udirony.evaluation import (
    EvalReport,
    error_distribution_report,
    macro_f1,
    run_baseline_svc_unigrams,
    search_best_features,
    stratified_folds,
    train_artifact,
)
from udirony.features import FeatureSpec
from udirony.synthetic import planted_deprel_corpus, planted_unigram_corpus

FAST = {"rf": {"n_trees": 5}, "mlp": {"max_epochs": 5}}
THREE = ("ngrams", "deprel", "sidorovdeprel")


def test_perfect_prediction():
    assert macro_f1([1, 0, 1, 1], [1, 0, 1, 1]).macro_f1 == 1.0


def test_all_negative_prediction():
    r = macro_f1([0, 0, 0, 0], [1, 1, 0, 0])
    assert r.f1_ironic == 0 and r.f1_not == pytest.approx(2 / 3)
    assert r.macro_f1 == float(Fraction(1, 3))


def test_fully_wrong():
    assert macro_f1([0, 1], [1, 0]).macro_f1 == 0.0


def test_zero_denominator_convention():
    # an absent class scores 0 even when every prediction is right
    r = macro_f1([0, 0], [0, 0])
    assert r.f1_ironic == 0.0 and r.f1_not == 1.0 and r.macro_f1 == 0.5


@pytest.mark.parametrize("pred, gold", [([1], [1, 0]), ([], [])])
def test_bad_inputs(pred, gold):
    with pytest.raises(ValueError):
        macro_f1(pred, gold)


def test_non_binary_labels():
    with pytest.raises(ValueError, match="0 or 1"):
        macro_f1([2], [1])


labels = st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40)


@settings(max_examples=300)
@given(labels)
def test_macro_f1_properties(pairs):
    pred = [p for p, _ in pairs]
    gold = [g for _, g in pairs]
    r = macro_f1(pred, gold)
    assert r.tp + r.fp + r.fn + r.tn == len(pairs)
    assert 0.0 <= r.macro_f1 <= 1.0
    assert r.macro_f1 == float(oracles.macro_f1_fraction(r.tp, r.fp, r.fn, r.tn))
    assert r.macro_f1 == pytest.approx((r.f1_ironic + r.f1_not) / 2)
    if len(set(gold)) == 2:
        assert (r.macro_f1 == 1.0) == (pred == gold)
    swapped = macro_f1([1 - p for p in pred], [1 - g for g in gold])
    assert swapped.macro_f1 == r.macro_f1
    assert swapped.f1_ironic == r.f1_not


def test_report_formats():
    r = EvalReport(3, 1, 2, 4)
    assert r.to_text().splitlines()[-1] == f"macro-F1={r.macro_f1:.4f}"
    head, row = r.to_tsv().splitlines()
    assert head.split("\t")[:4] == ["tp", "fp", "fn", "tn"] and row.split("\t")[:4] == ["3", "1", "2", "4"]


def test_stratified_folds_partition():
    y = np.array([1] * 23 + [0] * 17)
    folds = stratified_folds(y, 5, seed=0)
    assert sorted(np.concatenate(folds).tolist()) == list(range(40))
    for f in folds:
        assert abs(int(y[f].sum()) - 23 / 5) <= 1
    assert all(np.array_equal(a, b) for a, b in zip(folds, stratified_folds(y, 5, seed=0)))


def test_search_one_model_three_namespaces():
    corpus = planted_deprel_corpus(120, seed=2)
    res = search_best_features(corpus, models=["logreg"], namespaces=THREE, protocol="paper")
    assert len(res.rows) == 7
    assert [r.mask for r in res.rows] == list(range(1, 8))
    assert "sidorovdeprel" in res.best.namespaces
    # four-token tweets have no relation 5-grams: recorded, not fatal
    errs = [r for r in res.rows if r.error]
    assert [r.namespaces for r in errs] == [("deprel",)]


def test_search_table_layout_and_argmax():
    corpus = planted_deprel_corpus(60, seed=1)
    res = search_best_features(corpus, models=["svm", "logreg"], namespaces=THREE, protocol="cv",
                               header=["run=1"])
    lines = res.to_tsv().splitlines()
    assert lines[0] == "# run=1"
    assert lines[1] == "model\tsubset_bitmask\tnamespaces\tmacro_f1\tf1_ironic\tf1_not\tseed"
    assert len([l for l in lines if not l.startswith("#")]) == 1 + 14
    assert lines[-1].startswith("# argmax\t")
    scored = [r for r in res.rows if r.report]
    top = max(r.macro_f1 for r in scored)
    assert res.best is next(r for r in scored if r.macro_f1 == top)
    assert set(res.best_per_model()) == {"svm", "logreg"}
    assert "NA\tNA\tNA" in res.to_tsv()


def test_search_reproducible_and_parallel_order():
    corpus = planted_deprel_corpus(60, seed=4)
    kw = dict(models=["svm", "rf"], namespaces=THREE, protocol="cv", configs=FAST, seed=3)
    a = search_best_features(corpus, jobs=1, **kw).to_tsv()
    b = search_best_features(corpus, jobs=1, **kw).to_tsv()
    c = search_best_features(corpus, jobs=2, **kw).to_tsv()
    assert a == b == c


def test_search_paper_protocol_needs_test_split():
    corpus = LabeledCorpus(it for it in planted_deprel_corpus(40) if it.split == "train")
    with pytest.raises(ValueError, match="test split"):
        search_best_features(corpus, models=["svm"], namespaces=THREE, protocol="paper")
    with pytest.raises(ValueError, match="protocol"):
        search_best_features(corpus, models=["svm"], namespaces=THREE, protocol="holdout")


def test_baseline_on_lexical_signal():
    corpus = planted_unigram_corpus(400, seed=0)
    assert run_baseline_svc_unigrams(corpus).macro_f1 >= 0.95


def test_train_artifact_records_training():
    corpus = planted_deprel_corpus(80, seed=0)
    art = train_artifact("svm", corpus.train, FeatureSpec(("sidorovdeprel",)), seed=1)
    assert art.train_accuracy == 1.0 and len(art.train_digest) == 64
    assert art.config["C"] == 1.0


def tweet(sid, upos, label):
    n = len(upos)
    return CorpusItem(make_sentence(["w"] * n, upos, [0] + [1] * (n - 1), ["root"] + ["dep"] * (n - 1), sent_id=sid), label, "test")


def test_error_report_sym_ranks_first():
    items = [
        tweet("a", ["NOUN", "VERB", "SYM"], 1),
        tweet("b", ["NOUN", "VERB", "NOUN"], 0),
        tweet("c", ["PRON", "VERB", "ADJ"], 1),
        tweet("d", ["NOUN", "ADJ", "NOUN"], 0),
    ]
    rep = error_distribution_report(items, [0, 0, 1, 0])
    upos = rep.ranked("upos")
    assert upos[0].category == "SYM" and upos[0].watch
    # SYM: 1/12 over all tokens, 1/3 in the misclassified tweet
    assert rep.delta("upos", "SYM") == pytest.approx((1 / 3 - 1 / 12) / (1 / 12) * 100)
    assert rep.n_misclassified == 1
    deltas = [r.delta_pct for r in upos]
    assert deltas == sorted(deltas, reverse=True)


def test_error_report_without_mistakes():
    items = [tweet("a", ["NOUN", "X"], 1), tweet("b", ["VERB"], 0)]
    rep = error_distribution_report(items, [1, 0])
    assert all(r.delta_pct is None for r in rep.rows)
    assert "\tNA\tNA\t" in rep.to_tsv()
    assert "0 of 2" in rep.to_text()
    with pytest.raises(ValueError):
        error_distribution_report(items, [1])
