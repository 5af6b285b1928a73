"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 training error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from ._io import atomic_write_text
from .conllu import ConlluError, read_conllu
from .corpus import SHARED_TASK_MANIFESTS, CorpusError, load_corpus
from .features import NAMESPACES, FeatureSpec, extract
from .learners import MODELS, ModelArtifact, TrainingError, make_config

log = logging.getLogger("udirony")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAIN = 0, 1, 2, 3
JOBS_ENV = "UDIRONY_JOBS"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    language: str = ""
    train: list = field(default_factory=list)
    test: list = field(default_factory=list)
    labels: str | None = None
    output: str | None = None
    lenient: bool = False
    features: list = field(default_factory=lambda: list(NAMESPACES))
    lowercase_forms: bool = True
    binary: bool = False
    min_df: int = 1
    model: str = "svm"
    models: list = field(default_factory=lambda: list(MODELS))
    params: dict = field(default_factory=dict)
    protocol: str = "cv"
    seed: int = 0
    jobs: int = 1

    def header(self) -> str:
        return f"udirony {__version__} config={json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)}"

    def feature_spec(self) -> FeatureSpec:
        return FeatureSpec(tuple(self.features), lowercase_forms=self.lowercase_forms, language=self.language or None)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config_file(path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _split_params(items) -> dict[str, dict[str, str]]:
    """``model.key=value`` (or bare ``key=value``, applied to every model with that option) into per-model dicts."""
    out: dict[str, dict[str, str]] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        model, dot, name = key.strip().rpartition(".")
        if dot:
            targets = [model]
        else:
            targets = [m for m in MODELS if name in {f.name for f in fields(make_config(m))}]
            if not targets:
                raise UsageError(f"no model has an option {name!r}")
        for m in targets:
            if m not in MODELS:
                raise UsageError(f"unknown model {m!r} in --param {item!r}")
            out.setdefault(m, {})[name] = value.strip()
    return out


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).lower() in ("1", "true", "yes", "on")


def build_run_config(args, command: str) -> RunConfig:
    cfg = RunConfig(command=command)
    file_vals = read_config_file(args.config) if getattr(args, "config", None) else {}
    params_file = [f"{k}={v}" for k, v in file_vals.items() if "." in k]
    file_vals = {k: v for k, v in file_vals.items() if "." not in k}
    env_jobs = os.environ.get(JOBS_ENV)
    if env_jobs:
        cfg.jobs = int(env_jobs)
    list_keys = {"train", "test", "features", "models"}
    for key, value in file_vals.items():
        if not hasattr(cfg, key) or key in ("command", "params"):
            raise UsageError(f"unknown config key {key!r}")
        cur = getattr(cfg, key)
        if key in list_keys:
            value = [v.strip() for v in value.split(",") if v.strip()]
        elif isinstance(cur, bool):
            value = _bool(value)
        elif isinstance(cur, int):
            value = int(value)
        setattr(cfg, key, value)
    # flags override the file
    for key in ("language", "labels", "model", "protocol", "seed", "jobs", "min_df"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    for key in ("train", "test"):
        v = getattr(args, key, None)
        if v:
            setattr(cfg, key, list(v))
    if getattr(args, "out", None):
        cfg.output = args.out
    if getattr(args, "features", None):
        cfg.features = [f.strip() for f in args.features.split(",") if f.strip()] if args.features != "all" else list(NAMESPACES)
    if getattr(args, "models", None):
        cfg.models = [m.strip() for m in args.models.split(",") if m.strip()]
    if getattr(args, "lenient", False):
        cfg.lenient = True
    if getattr(args, "binary", False):
        cfg.binary = True
    if getattr(args, "no_lowercase", False):
        cfg.lowercase_forms = False
    if getattr(args, "paper_protocol", False):
        cfg.protocol = "paper"
    params = _split_params(params_file)
    for m, kv in _split_params(getattr(args, "param", None)).items():
        params.setdefault(m, {}).update(kv)
    if getattr(args, "converge", False):
        params.setdefault("logreg", {})["converge"] = "true"
    if getattr(args, "normalize", False):
        for m in ("svm", "logreg"):
            params.setdefault(m, {})["normalize"] = "true"
    cfg.params = params
    unknown = set(cfg.features) - set(NAMESPACES)
    if unknown:
        raise UsageError(f"unknown feature namespace(s): {', '.join(sorted(unknown))}")
    if not cfg.features:
        raise UsageError("no feature namespace enabled")
    for m in [cfg.model, *cfg.models]:
        if m not in MODELS:
            raise UsageError(f"unknown model {m!r}; choose from {', '.join(MODELS)}")
    if cfg.protocol not in ("cv", "paper"):
        raise UsageError(f"unknown protocol {cfg.protocol!r}")
    for m, kv in params.items():
        try:
            make_config(m, kv)
        except (ValueError, TypeError) as err:
            raise UsageError(str(err)) from None
    return cfg


def _load(cfg: RunConfig, need_train=True, need_test=False):
    if need_train and not cfg.train:
        raise UsageError("--train is required")
    if need_test and not cfg.test:
        raise UsageError("--test is required")
    for p in [*cfg.train, *cfg.test, *([cfg.labels] if cfg.labels else [])]:
        if not os.path.exists(p):
            raise FileNotFoundError(f"input not found: {p}")
    corpus = load_corpus(cfg.train, cfg.test, cfg.labels, cfg.language, cfg.lenient)
    log.info("loaded corpus\n%s", corpus.report().rstrip())
    return corpus


def _write(path, text):
    atomic_write_text(path, text)
    log.info("wrote %s", path)


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    if not args.files:
        raise UsageError("validate needs at least one file")
    total = 0
    for path in args.files:
        if not os.path.exists(path):
            raise FileNotFoundError(f"input not found: {path}")
        sents = read_conllu(path, lenient=args.lenient)
        total += len(sents)
        print(f"{path}\t{len(sents)} sentences")
    print(f"OK: {total} valid sentences in {len(args.files)} file(s)")
    return EXIT_OK


def cmd_extract(args) -> int:
    from .vectorizer import build_vocab, to_svmlight, vectorize_corpus

    cfg = build_run_config(args, "extract")
    if not cfg.output:
        raise UsageError("--out is required")
    corpus = _load(cfg)
    spec = cfg.feature_spec()
    vocab = build_vocab(corpus.train, spec, min_df=cfg.min_df)
    header = [cfg.header()]
    os.makedirs(cfg.output, exist_ok=True)
    _write(os.path.join(cfg.output, "vocab.tsv"), "".join(f"# {h}\n" for h in header) + vocab.to_tsv())
    for split in ("train", "test"):
        items = corpus.split(split)
        if not items:
            continue
        X = vectorize_corpus(items, vocab, spec, binary=cfg.binary)
        _write(os.path.join(cfg.output, f"{split}.svm"), to_svmlight(X, [it.label for it in items], header))
    _write(os.path.join(cfg.output, "corpus.tsv"), f"# {cfg.header()}\n" + corpus.report())
    if args.dump_bags:
        lines = [f"# {cfg.header()}\n", "sent_id\tnamespace\tkey\tcount\n"]
        for it in corpus:
            for (ns, key), c in sorted(extract(it.sentence, spec).items()):
                lines.append(f"{it.sent_id}\t{ns}\t{key}\t{c}\n")
        _write(os.path.join(cfg.output, "bags.tsv"), "".join(lines))
    print(f"extracted {len(vocab)} features for {len(corpus)} sentences into {cfg.output}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .evaluation import train_artifact

    cfg = build_run_config(args, "train")
    if not cfg.output:
        raise UsageError("--out is required")
    corpus = _load(cfg)
    items = corpus.train
    if cfg.model == "mlp" and len(items) < 10:
        raise UsageError(f"--model mlp needs at least 10 training sentences, got {len(items)}")
    art = train_artifact(cfg.model, items, cfg.feature_spec(), cfg.params.get(cfg.model), cfg.seed, cfg.min_df,
                         run_config=asdict(cfg) | {"toolkit_version": __version__})
    art.save(cfg.output)
    print(f"trained {cfg.model} on {len(items)} sentences, {len(art.vocab)} features, "
          f"training accuracy {art.train_accuracy:.4f} -> {cfg.output}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluation import evaluate_artifact, run_baseline_svc_unigrams

    cfg = build_run_config(args, "eval")
    if args.baseline:
        corpus = _load(cfg, need_train=True, need_test=True)
        report = run_baseline_svc_unigrams(corpus, seed=cfg.seed, config=cfg.params.get("svm"))
    else:
        if not args.model_file:
            raise UsageError("eval needs --model-file (or --baseline)")
        art = ModelArtifact.load(args.model_file)
        corpus = _load(cfg, need_train=False, need_test=True)
        report, _ = evaluate_artifact(art, corpus.test)
    print(report.to_text(), end="")
    if cfg.output:
        _write(cfg.output, f"# {cfg.header()}\n" + report.to_tsv())
    return EXIT_OK


def cmd_search(args) -> int:
    from .evaluation import search_best_features

    cfg = build_run_config(args, "search")
    if not cfg.output:
        raise UsageError("--out is required")
    corpus = _load(cfg, need_train=True, need_test=cfg.protocol == "paper")
    configs = {m: cfg.params.get(m) for m in cfg.models}
    result = search_best_features(
        corpus, cfg.models, cfg.protocol, cfg.seed, configs, cfg.jobs, NAMESPACES,
        min_df=cfg.min_df, lowercase_forms=cfg.lowercase_forms, language=cfg.language or None,
        header=[cfg.header()],
    )
    _write(cfg.output, result.to_tsv())
    errors = sum(r.report is None for r in result.rows)
    best = result.best
    print(f"{len(result.rows)} cells, {errors} failed")
    if best is not None:
        print(f"best: {best.model} macro-F1={best.macro_f1:.4f} features={','.join(best.namespaces)}")
    return EXIT_OK


def cmd_analyze_errors(args) -> int:
    from .evaluation import error_distribution_report, evaluate_artifact

    cfg = build_run_config(args, "analyze-errors")
    if not args.model_file:
        raise UsageError("analyze-errors needs --model-file")
    art = ModelArtifact.load(args.model_file)
    corpus = _load(cfg, need_train=False, need_test=True)
    _, pred = evaluate_artifact(art, corpus.test)
    report = error_distribution_report(corpus.test, pred)
    print(report.to_text(), end="")
    if cfg.output:
        _write(cfg.output, f"# {cfg.header()}\n" + report.to_tsv())
    return EXIT_OK


def _treebank_files(paths):
    for p in paths:
        if os.path.isdir(p):
            for root, _, files in sorted(os.walk(p)):
                for f in sorted(files):
                    if f.endswith(".conllu"):
                        yield os.path.join(root, f)
        elif os.path.exists(p):
            yield p
        else:
            raise FileNotFoundError(f"treebank not found: {p}")


def cmd_embed(args) -> int:
    from .embeddings import SgnsConfig, extract_contexts, train_sgns

    cfg = build_run_config(args, "embed")
    if not cfg.output:
        raise UsageError("--out is required")
    if not args.treebanks:
        raise UsageError("--treebanks is required")
    sents = []
    for path in _treebank_files(args.treebanks):
        sents.extend(read_conllu(path, lenient=cfg.lenient))
    pairs = extract_contexts(sents, lowercase=cfg.lowercase_forms)
    sg = SgnsConfig(dim=args.dim, negatives=args.negatives, epochs=args.epochs, min_count=args.min_count,
                    learning_rate=args.lr, seed=cfg.seed)
    table = train_sgns(pairs, sg)
    _write(cfg.output, table.to_text())
    meta = {"run_config": asdict(cfg), "sgns": asdict(sg), "toolkit_version": __version__,
            "treebanks": list(args.treebanks), "pairs": len(pairs)}
    _write(cfg.output + ".config.json", json.dumps(meta, sort_keys=True, ensure_ascii=False, indent=1) + "\n")
    print(f"{len(table.words)} word vectors of dimension {sg.dim} from {len(pairs)} context pairs -> {cfg.output}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _data_flags(p, train=True, test=True):
    if train:
        p.add_argument("--train", nargs="+", metavar="CONLLU", help="training CoNLL-U file(s)")
    if test:
        p.add_argument("--test", nargs="+", metavar="CONLLU", help="test CoNLL-U file(s)")
    p.add_argument("--labels", metavar="TSV", help="sidecar 'sent_id<TAB>label' file; default: '# irony' metadata")
    p.add_argument("--lenient", action="store_true", help="drop invalid sentences with a warning instead of failing")
    p.add_argument("--language", help="language tag (en, es, fr, it); selects the negation lexicon")
    p.add_argument("--config", metavar="FILE", help="key = value config file; flags override it")


def _feature_flags(p):
    p.add_argument("--features", help=f"comma-separated namespaces or 'all' (default); choices: {','.join(NAMESPACES)}")
    p.add_argument("--no-lowercase", action="store_true", help="keep FORM casing")
    p.add_argument("--min-df", type=int, help="drop features seen in fewer training sentences (default 1)")


def _model_flags(p):
    p.add_argument("--seed", type=int, help="master random seed (default 0)")
    p.add_argument("--param", action="append", metavar="[MODEL.]KEY=VALUE",
                   help="learner hyperparameter override, e.g. rf.n_trees=50 or C=0.5; repeatable")
    p.add_argument("--converge", action="store_true", help="lift the 5-iteration cap of logistic regression")
    p.add_argument("--normalize", action="store_true", help="L2-normalise rows before SVM / LR")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="udirony", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"udirony {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", help="validate CoNLL-U files")
    p.add_argument("files", nargs="*")
    p.add_argument("--lenient", action="store_true", help="report and skip invalid sentences")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("extract", help="write sparse feature matrices and the vocabulary")
    _data_flags(p)
    _feature_flags(p)
    p.add_argument("--binary", action="store_true", help="presence/absence instead of counts")
    p.add_argument("--dump-bags", action="store_true", help="also write per-sentence bags as TSV")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train one model and save an artifact")
    _data_flags(p, test=False)
    _feature_flags(p)
    _model_flags(p)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--out", metavar="FILE", help="model artifact path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a model artifact (or the SVC+unigrams baseline) on test data")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--model-file", metavar="FILE")
    p.add_argument("--baseline", action="store_true", help="train and score a linear SVM on token unigrams")
    p.add_argument("--out", metavar="FILE", help="TSV report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("search", help="score every model on every namespace subset")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--no-lowercase", action="store_true", help="keep FORM casing")
    p.add_argument("--min-df", type=int)
    p.add_argument("--models", help=f"comma-separated subset of {','.join(MODELS)}")
    p.add_argument("--protocol", choices=("cv", "paper"), help="cv: 5-fold CV on train (default); paper: select on test")
    p.add_argument("--paper-protocol", action="store_true", help="same as --protocol paper")
    p.add_argument("--jobs", type=int, help=f"worker processes (default ${JOBS_ENV} or 1)")
    p.add_argument("--out", metavar="FILE", help="TSV table path")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("analyze-errors", help="UPOS / deprel distribution in misclassified test tweets")
    _data_flags(p, train=False)
    p.add_argument("--model-file", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="TSV report path")
    p.set_defaults(func=cmd_analyze_errors)

    p = sub.add_parser("embed", help="train dependency-context word embeddings")
    p.add_argument("--treebanks", nargs="+", metavar="PATH", help="CoNLL-U files or directories")
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--seed", type=int)
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="word2vec text output; settings go to FILE.config.json")
    p.set_defaults(func=cmd_embed)
    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            raise UsageError("missing command; see --help")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as err:
        print(f"udirony: usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as err:
        print(f"udirony: training error: {err}", file=sys.stderr)
        return EXIT_TRAIN
    except (ConlluError, CorpusError, FileNotFoundError, UnicodeDecodeError, ValueError, OSError) as err:
        print(f"udirony: data error: {err}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
