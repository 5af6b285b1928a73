"""Labeled tweet corpora: text normalisation, loading and split bookkeeping."""

from __future__ import annotations

import os
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .conllu import Sentence, read_conllu

IRONIC, NOT_IRONIC = 1, 0
SPLITS = ("train", "test")

_URL = re.compile(r"https?://\S*|\bwww\.\S*", re.IGNORECASE)

# Tweet counts per (split, label) of the four shared-task datasets.
SHARED_TASK_MANIFESTS = {
    "en": {("train", 1): 1923, ("train", 0): 1911, ("test", 1): 311, ("test", 0): 473},
    "es": {("train", 1): 1600, ("train", 0): 5600, ("test", 1): 599, ("test", 0): 1201},
    "fr": {("train", 1): 1947, ("train", 0): 3906, ("test", 1): 488, ("test", 0): 976},
    "it": {("train", 1): 2023, ("train", 0): 1954, ("test", 1): 435, ("test", 0): 437},
}


class CorpusError(ValueError):
    pass


def _simple_lower(text: str) -> str:
    # str.lower() applies full case mapping; U+0130 is the one BMP letter where
    # that differs in length from the simple mapping.
    return text.replace("İ", "i").lower()


def preprocess_text(raw: str) -> str:
    """Strip URLs, lowercase and collapse whitespace."""
    text = _URL.sub(" ", raw)
    return " ".join(_simple_lower(text).split())


def lower_form(form: str) -> str:
    return _simple_lower(form)


@dataclass(frozen=True)
class CorpusItem:
    sentence: Sentence
    label: int
    split: str
    language: str = ""

    @property
    def sent_id(self) -> str:
        return self.sentence.sent_id or ""


class LabeledCorpus:
    def __init__(self, items: Iterable[CorpusItem]):
        self.items = list(items)
        seen = set()
        for item in self.items:
            if item.label not in (0, 1):
                raise CorpusError(f"label must be 0 or 1, got {item.label!r} for {item.sent_id}")
            if item.split not in SPLITS:
                raise CorpusError(f"unknown split {item.split!r} for {item.sent_id}")
            if item.sent_id and item.sent_id in seen:
                raise CorpusError(f"duplicate sent_id {item.sent_id}")
            seen.add(item.sent_id)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def split(self, name: str) -> list[CorpusItem]:
        return [it for it in self.items if it.split == name]

    @property
    def train(self) -> list[CorpusItem]:
        return self.split("train")

    @property
    def test(self) -> list[CorpusItem]:
        return self.split("test")

    def counts(self) -> Counter:
        """Items per (split, label)."""
        return Counter((it.split, it.label) for it in self.items)

    def check_manifest(self, manifest: dict) -> None:
        counts = self.counts()
        bad = []
        for key, expected in sorted(manifest.items()):
            if counts.get(key, 0) != expected:
                bad.append(f"{key[0]}/{key[1]}: expected {expected}, found {counts.get(key, 0)}")
        if bad:
            raise CorpusError("corpus does not match manifest: " + "; ".join(bad))

    def report(self) -> str:
        """TSV table of counts per split and class."""
        counts = self.counts()
        rows = ["split\tironic\tnot\ttotal"]
        for split in SPLITS:
            iro, nots = counts.get((split, 1), 0), counts.get((split, 0), 0)
            rows.append(f"{split}\t{iro}\t{nots}\t{iro + nots}")
        return "\n".join(rows) + "\n"


def read_labels(path) -> dict[str, int]:
    """Read a ``sent_id<TAB>label`` sidecar file."""
    labels = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(f"{path}:{lineno}: expected 'sent_id<TAB>label'")
            sid, value = parts
            if sid in labels:
                raise CorpusError(f"{path}:{lineno}: duplicate sent_id {sid}")
            labels[sid] = _parse_label(value, sid)
    return labels


def _parse_label(value: str, sid: str) -> int:
    value = value.strip()
    if value not in ("0", "1"):
        raise CorpusError(f"label for {sid} must be 0 or 1, got {value!r}")
    return int(value)


def label_sentences(
    sentences: Sequence[Sentence],
    split: str,
    labels: dict[str, int] | None = None,
    language: str = "",
    source: str = "",
) -> list[CorpusItem]:
    """Attach labels from the sidecar map, else from ``# irony`` metadata."""
    items = []
    for k, sent in enumerate(sentences, start=1):
        sid = sent.sent_id
        if sid is None:
            sid = f"{os.path.basename(source) or 'sent'}#{k}"
            sent = sent.with_metadata("sent_id", sid)
        if labels is not None and sid in labels:
            label = labels[sid]
        elif "irony" in sent.metadata:
            label = _parse_label(sent.metadata["irony"], sid)
        else:
            raise CorpusError(f"no label for sentence {sid}")
        items.append(CorpusItem(sent, label, split, language))
    return items


def load_corpus(
    train: Sequence = (),
    test: Sequence = (),
    labels=None,
    language: str = "",
    lenient: bool = False,
    manifest: dict | None = None,
) -> LabeledCorpus:
    """Load CoNLL-U files into a labeled corpus.

    ``train`` and ``test`` are lists of file paths; ``labels`` is an optional
    sidecar TSV path or an already-read ``{sent_id: label}`` mapping.
    """
    if isinstance(labels, (str, os.PathLike)):
        labels = read_labels(labels)
    items = []
    for split, paths in (("train", train), ("test", test)):
        if isinstance(paths, (str, os.PathLike)):
            paths = [paths]
        for path in paths:
            sents = read_conllu(path, lenient=lenient)
            items.extend(label_sentences(sents, split, labels, language, str(path)))
    corpus = LabeledCorpus(items)
    if manifest is not None:
        corpus.check_manifest(manifest)
    return corpus
