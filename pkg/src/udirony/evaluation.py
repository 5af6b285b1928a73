"""Metrics, feature-combination search, baseline and error analysis."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from .features import NAMESPACES, FeatureSpec
from .learners import MODELS, TrainingError, make_config, predict, train
from .learners.artifact import ModelArtifact
from .vectorizer import FeatureMatrix, build_vocab, enumerate_subsets, vectorize_corpus

log = logging.getLogger(__name__)

WATCHLIST = {"upos": ("SYM", "X"), "deprel": ("parataxis", "flat", "expl")}


def _f1(tp: int, fp: int, fn: int) -> Fraction:
    # zero predicted and zero actual members: F1 is 0 by convention
    denom = 2 * tp + fp + fn
    return Fraction(2 * tp, denom) if denom else Fraction(0)


def _ratio(a: int, b: int) -> float:
    return float(Fraction(a, b)) if b else 0.0


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def f1_ironic(self) -> float:
        return float(_f1(self.tp, self.fp, self.fn))

    @property
    def f1_not(self) -> float:
        return float(_f1(self.tn, self.fn, self.fp))

    @property
    def macro_f1(self) -> float:
        return float((_f1(self.tp, self.fp, self.fn) + _f1(self.tn, self.fn, self.fp)) / 2)

    @property
    def precision_ironic(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall_ironic(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def precision_not(self) -> float:
        return _ratio(self.tn, self.tn + self.fn)

    @property
    def recall_not(self) -> float:
        return _ratio(self.tn, self.tn + self.fp)

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.n)

    def to_text(self) -> str:
        return (
            f"N={self.n} tp={self.tp} fp={self.fp} fn={self.fn} tn={self.tn}\n"
            f"ironic  P={self.precision_ironic:.4f} R={self.recall_ironic:.4f} F1={self.f1_ironic:.4f}\n"
            f"not     P={self.precision_not:.4f} R={self.recall_not:.4f} F1={self.f1_not:.4f}\n"
            f"macro-F1={self.macro_f1:.4f}\n"
        )

    def to_tsv(self) -> str:
        head = "tp\tfp\tfn\ttn\tprecision_ironic\trecall_ironic\tf1_ironic\tprecision_not\trecall_not\tf1_not\tmacro_f1"
        vals = [self.tp, self.fp, self.fn, self.tn, self.precision_ironic, self.recall_ironic, self.f1_ironic,
                self.precision_not, self.recall_not, self.f1_not, self.macro_f1]
        return head + "\n" + "\t".join(str(v) if isinstance(v, int) else f"{v:.6f}" for v in vals) + "\n"


def macro_f1(pred: Sequence[int], gold: Sequence[int]) -> EvalReport:
    """Confusion counts with ironic (1) as the positive class."""
    pred = np.asarray(pred, dtype=np.int64).ravel()
    gold = np.asarray(gold, dtype=np.int64).ravel()
    if pred.shape != gold.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions for {gold.size} gold labels")
    if pred.size == 0:
        raise ValueError("cannot evaluate an empty prediction set")
    if not (np.isin(pred, (0, 1)).all() and np.isin(gold, (0, 1)).all()):
        raise ValueError("labels must be 0 or 1")
    tp = int(np.sum((pred == 1) & (gold == 1)))
    fp = int(np.sum((pred == 1) & (gold == 0)))
    fn = int(np.sum((pred == 0) & (gold == 1)))
    tn = int(np.sum((pred == 0) & (gold == 0)))
    return EvalReport(tp, fp, fn, tn)


def evaluate_artifact(artifact: ModelArtifact, items) -> tuple[EvalReport, np.ndarray]:
    X = vectorize_corpus(items, artifact.vocab, artifact.spec)
    labels, _ = predict(artifact.model, X)
    gold = [it.label for it in items]
    return macro_f1(labels, gold), labels


def train_artifact(kind: str, items, spec: FeatureSpec, config=None, seed: int = 0, min_df: int = 1,
                   run_config: dict | None = None) -> ModelArtifact:
    """Build the vocabulary on ``items``, train ``kind`` and wrap it up."""
    cfg = make_config(kind, config) if config is None or isinstance(config, dict) else config
    vocab = build_vocab(items, spec, min_df=min_df)
    X = vectorize_corpus(items, vocab, spec)
    y = np.array([it.label for it in items])
    model = train(kind, X, y, cfg, seed=seed)
    art = ModelArtifact(model, vocab, spec, asdict(cfg), seed, run_config=run_config or {})
    art.record_training(X, y)
    return art


def run_baseline_svc_unigrams(corpus, seed: int = 0, config=None) -> EvalReport:
    """Linear SVM on the token-unigram bag, trained on train and scored on test."""
    spec = FeatureSpec(("ngrams",), ngram_max=1)
    art = train_artifact("svm", corpus.train, spec, config, seed)
    report, _ = evaluate_artifact(art, corpus.test)
    return report


# ---------------------------------------------------------------- search


@dataclass(frozen=True)
class SearchRow:
    model: str
    mask: int
    namespaces: tuple[str, ...]
    report: EvalReport | None
    seed: int
    error: str | None = None

    @property
    def macro_f1(self) -> float:
        return self.report.macro_f1 if self.report else float("nan")

    def to_tsv(self) -> str:
        if self.report is None:
            scores = ["NA", "NA", "NA"]
        else:
            scores = [f"{self.report.macro_f1:.6f}", f"{self.report.f1_ironic:.6f}", f"{self.report.f1_not:.6f}"]
        return "\t".join([self.model, str(self.mask), ",".join(self.namespaces), *scores, str(self.seed)])


@dataclass
class SearchResult:
    rows: list[SearchRow]
    protocol: str
    header: list[str] = field(default_factory=list)

    @property
    def best(self) -> SearchRow | None:
        """Highest macro-F1; ties go to the earliest row (model order, then bitmask)."""
        best = None
        for row in self.rows:
            if row.report is None:
                continue
            if best is None or row.macro_f1 > best.macro_f1:
                best = row
        return best

    def best_per_model(self) -> dict[str, SearchRow]:
        out = {}
        for row in self.rows:
            if row.report is None:
                continue
            cur = out.get(row.model)
            if cur is None or row.macro_f1 > cur.macro_f1:
                out[row.model] = row
        return out

    def to_tsv(self) -> str:
        lines = [f"# {h}" for h in self.header]
        lines.append("model\tsubset_bitmask\tnamespaces\tmacro_f1\tf1_ironic\tf1_not\tseed")
        lines.extend(r.to_tsv() for r in self.rows)
        best = self.best
        if best is not None:
            lines.append(f"# argmax\t{best.to_tsv()}")
        return "\n".join(lines) + "\n"


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Test-fold indices; each class is shuffled and dealt round-robin."""
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        for i, r in enumerate(idx.tolist()):
            folds[i % k].append(r)
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def _eval_cell(fm: FeatureMatrix, y: np.ndarray, splits, kind: str, mask: int, enabled, config, seed: int, min_df: int):
    pred = np.zeros(y.size, dtype=np.int64) - 1
    evaluated = []
    try:
        for tr, te in splits:
            cols = fm.select(tr, enabled, min_df)
            if cols.size == 0:
                raise TrainingError("no features in the training vocabulary")
            X = fm.X[:, cols]
            model = train(kind, X[tr], y[tr], config, seed=seed)
            pred[te], _ = predict(model, X[te])
            evaluated.append(te)
    except (TrainingError, ValueError) as err:
        return SearchRow(kind, mask, tuple(enabled), None, seed, str(err))
    idx = np.concatenate(evaluated)
    return SearchRow(kind, mask, tuple(enabled), macro_f1(pred[idx], y[idx]), seed)


def search_best_features(
    corpus,
    models: Sequence[str] = MODELS,
    protocol: str = "cv",
    seed: int = 0,
    configs: dict | None = None,
    jobs: int = 1,
    namespaces: Sequence[str] = NAMESPACES,
    folds: int = 5,
    min_df: int = 1,
    lowercase_forms: bool = True,
    language: str | None = None,
    header: Sequence[str] = (),
) -> SearchResult:
    """Train and score every (model, non-empty namespace subset) pair.

    ``protocol="paper"`` trains on train and scores on test, selecting on the
    test set. ``protocol="cv"`` runs stratified k-fold cross-validation on
    the training split only and scores pooled out-of-fold predictions.
    """
    for m in models:
        if m not in MODELS:
            raise ValueError(f"unknown model {m!r}")
    train_items = corpus.train
    if protocol == "paper":
        test_items = corpus.test
        items = train_items + test_items
        n_tr = len(train_items)
        splits = [(np.arange(n_tr), np.arange(n_tr, len(items)))]
        if not test_items:
            raise ValueError("paper protocol needs a test split")
    elif protocol == "cv":
        items = train_items
        y_tr = np.array([it.label for it in items])
        fidx = stratified_folds(y_tr, folds, seed)
        splits = [(np.setdiff1d(np.arange(len(items)), te), te) for te in fidx]
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    if not train_items:
        raise ValueError("search needs a non-empty training split")
    y = np.array([it.label for it in items])
    fm = FeatureMatrix(items, FeatureSpec(tuple(namespaces), lowercase_forms=lowercase_forms, language=language))
    configs = configs or {}
    cfgs = {m: make_config(m, configs.get(m)) for m in models}
    subsets = enumerate_subsets(namespaces)
    cells = []
    for m in models:
        for spec in subsets:
            mask = sum(1 << j for j, ns in enumerate(namespaces) if ns in spec.enabled)
            cells.append((m, mask, spec.enabled))
    log.info("search: %d cells (%d models x %d subsets), protocol=%s", len(cells), len(models), len(subsets), protocol)
    job = delayed(_eval_cell)
    if jobs == 1:
        rows = [_eval_cell(fm, y, splits, m, mask, en, cfgs[m], seed, min_df) for m, mask, en in cells]
    else:
        # results come back in submission order, so the table is independent of scheduling
        rows = Parallel(n_jobs=jobs)(job(fm, y, splits, m, mask, en, cfgs[m], seed, min_df) for m, mask, en in cells)
    return SearchResult(list(rows), protocol, list(header))


# ---------------------------------------------------------------- error analysis


@dataclass(frozen=True)
class CategoryDelta:
    kind: str  # "upos" or "deprel"
    category: str
    count_all: int
    count_mis: int
    freq_all: float
    freq_mis: float | None
    delta_pct: float | None  # relative change of freq_mis over freq_all, in percent
    watch: bool


@dataclass
class ErrorReport:
    rows: list[CategoryDelta]
    n_test: int
    n_misclassified: int

    def ranked(self, kind: str) -> list[CategoryDelta]:
        return [r for r in self.rows if r.kind == kind]

    def delta(self, kind: str, category: str) -> float | None:
        for r in self.rows:
            if r.kind == kind and r.category == category:
                return r.delta_pct
        raise KeyError((kind, category))

    def to_tsv(self) -> str:
        lines = ["kind\tcategory\tcount_all\tcount_misclassified\tfreq_all\tfreq_misclassified\tdelta_pct\twatchlist"]
        for r in self.rows:
            fm = "NA" if r.freq_mis is None else f"{r.freq_mis:.6f}"
            dp = "NA" if r.delta_pct is None else f"{r.delta_pct:+.2f}"
            lines.append(f"{r.kind}\t{r.category}\t{r.count_all}\t{r.count_mis}\t{r.freq_all:.6f}\t{fm}\t{dp}\t{int(r.watch)}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        out = [f"{self.n_misclassified} of {self.n_test} test tweets misclassified"]
        for kind in ("upos", "deprel"):
            out.append(f"\n{kind}:")
            for r in self.ranked(kind):
                dp = "n/a" if r.delta_pct is None else f"{r.delta_pct:+.1f}%"
                mark = " *" if r.watch else ""
                out.append(f"  {r.category:<12} all={r.freq_all:.4f} misclassified={r.freq_mis if r.freq_mis is not None else float('nan'):.4f} delta={dp}{mark}")
        return "\n".join(out) + "\n"


def error_distribution_report(test_items, pred: Sequence[int]) -> ErrorReport:
    """Token-level UPOS/deprel frequencies in misclassified tweets versus the whole test set.

    Every token of a misclassified tweet counts. Rows are sorted by delta,
    largest first, within each kind; deltas are None when nothing was
    misclassified.
    """
    pred = list(pred)
    if len(pred) != len(test_items):
        raise ValueError(f"{len(pred)} predictions for {len(test_items)} test items")
    rows = []
    n_mis = sum(int(p != it.label) for p, it in zip(pred, test_items))
    for kind in ("upos", "deprel"):
        all_c, mis_c = Counter(), Counter()
        for p, it in zip(pred, test_items):
            vals = [getattr(t, kind) for t in it.sentence.tokens]
            all_c.update(vals)
            if p != it.label:
                mis_c.update(vals)
        tot_all, tot_mis = sum(all_c.values()), sum(mis_c.values())
        kind_rows = []
        for cat, ca in all_c.items():
            fa = ca / tot_all
            if tot_mis:
                fm_ = mis_c[cat] / tot_mis
                dp = (fm_ - fa) / fa * 100.0
            else:
                fm_, dp = None, None
            kind_rows.append(CategoryDelta(kind, cat, ca, mis_c[cat], fa, fm_, dp, cat in WATCHLIST[kind]))
        kind_rows.sort(key=lambda r: (r.delta_pct is None, -(r.delta_pct or 0.0), r.category))
        rows.extend(kind_rows)
    return ErrorReport(rows, len(test_items), n_mis)
