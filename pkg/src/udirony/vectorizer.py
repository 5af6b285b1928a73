"""Vocabulary building and sparse count vectors."""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .conllu import Sentence
from .features import NAMESPACES, FeatureBag, FeatureSpec, extract


def _sentences(items) -> list[Sentence]:
    return [getattr(it, "sentence", it) for it in items]


@dataclass
class Vocabulary:
    entries: list[tuple[str, str]]
    namespaces: tuple[str, ...]
    index: dict[tuple[str, str], int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {e: i for i, e in enumerate(self.entries)}

    def __len__(self):
        return len(self.entries)

    def __contains__(self, item):
        return item in self.index

    def column_namespaces(self) -> np.ndarray:
        """Namespace position (in NAMESPACES) of every column."""
        pos = {ns: i for i, ns in enumerate(NAMESPACES)}
        return np.array([pos[ns] for ns, _ in self.entries], dtype=np.int64)

    def digest(self) -> str:
        h = hashlib.sha256()
        for ns, key in self.entries:
            h.update(f"{ns}\t{key}\n".encode("utf-8"))
        return h.hexdigest()

    def to_tsv(self) -> str:
        return "".join(f"{i}\t{ns}\t{key}\n" for i, (ns, key) in enumerate(self.entries))

    @classmethod
    def from_tsv(cls, text: str, namespaces: Sequence[str] | None = None) -> Vocabulary:
        entries = []
        for lineno, line in enumerate(text.split("\n"), start=1):
            if not line or line.startswith("#"):
                continue
            idx, ns, key = line.split("\t", 2)
            if int(idx) != len(entries):
                raise ValueError(f"vocabulary line {lineno}: expected index {len(entries)}, got {idx}")
            entries.append((ns, key))
        if namespaces is None:
            namespaces = tuple(ns for ns in NAMESPACES if any(e[0] == ns for e in entries))
        return cls(entries, tuple(namespaces))


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray

    @property
    def l1(self) -> float:
        return float(np.abs(self.values).sum())

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))


def build_vocab_from_bags(bags: Iterable[FeatureBag], spec: FeatureSpec, min_df: int = 1) -> Vocabulary:
    enabled = set(spec.enabled)
    df = Counter()
    n = 0
    for bag in bags:
        n += 1
        df.update(k for k in bag if k[0] in enabled)
    if n == 0:
        raise ValueError("cannot build a vocabulary from an empty training split")
    return Vocabulary(sorted(k for k, c in df.items() if c >= min_df), spec.enabled)


def build_vocab(train, spec: FeatureSpec, min_df: int = 1) -> Vocabulary:
    """Vocabulary over the enabled namespaces of the training sentences, sorted by (namespace, key)."""
    if not spec.enabled:
        raise ValueError("feature spec enables no namespace")
    return build_vocab_from_bags((extract(s, spec) for s in _sentences(train)), spec, min_df)


def _check_spec(vocab: Vocabulary, spec: FeatureSpec) -> None:
    missing = set(spec.enabled) - set(vocab.namespaces)
    if missing:
        raise ValueError(f"namespace(s) not in vocabulary: {', '.join(sorted(missing))}")


def bag_to_vector(bag: FeatureBag, vocab: Vocabulary, spec: FeatureSpec, binary: bool = False) -> SparseVector:
    enabled = set(spec.enabled)
    cols = {}
    for key, count in bag.items():
        if key[0] not in enabled:
            continue
        j = vocab.index.get(key)
        if j is not None:
            cols[j] = 1.0 if binary else float(count)
    idx = np.array(sorted(cols), dtype=np.int64)
    return SparseVector(idx, np.array([cols[j] for j in idx.tolist()], dtype=np.float64))


def vectorize(s: Sentence, vocab: Vocabulary, spec: FeatureSpec, binary: bool = False) -> SparseVector:
    """Count vector of ``s``; out-of-vocabulary features are dropped."""
    _check_spec(vocab, spec)
    return bag_to_vector(extract(getattr(s, "sentence", s), spec), vocab, spec, binary)


def vectors_to_csr(vectors: Sequence[SparseVector], dim: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + len(v.indices)
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def vectorize_corpus(items, vocab: Vocabulary, spec: FeatureSpec, binary: bool = False) -> sp.csr_matrix:
    _check_spec(vocab, spec)
    vecs = [bag_to_vector(extract(s, spec), vocab, spec, binary) for s in _sentences(items)]
    return vectors_to_csr(vecs, len(vocab))


def enumerate_subsets(namespaces: Sequence[str] = NAMESPACES, **spec_kw) -> list[FeatureSpec]:
    """All non-empty subsets in binary-counting order (bit j = namespaces[j])."""
    out = []
    for mask in range(1, 1 << len(namespaces)):
        out.append(FeatureSpec(tuple(ns for j, ns in enumerate(namespaces) if mask >> j & 1), **spec_kw))
    return out


class FeatureMatrix:
    """Bags for a fixed sentence list, vectorized once over all namespaces.

    Column selection then yields, for any namespace subset and any row
    subset, exactly the matrix that ``build_vocab`` + ``vectorize_corpus``
    would produce on those rows, because sorted (namespace, key) order is
    preserved under restriction.
    """

    def __init__(self, sentences, spec: FeatureSpec = FeatureSpec()):
        self.spec = spec
        bags = [extract(s, spec) for s in _sentences(sentences)]
        self.vocab = build_vocab_from_bags(bags, spec)
        self.X = vectorize_corpus(sentences, self.vocab, spec) if bags else None
        self.col_ns = self.vocab.column_namespaces()

    def select(self, rows: np.ndarray, enabled: Sequence[str], min_df: int = 1) -> np.ndarray:
        """Columns of the vocabulary that ``rows`` would build for ``enabled``."""
        allowed = np.zeros(len(NAMESPACES), dtype=bool)
        for ns in enabled:
            allowed[NAMESPACES.index(ns)] = True
        df = np.asarray((self.X[rows] > 0).sum(axis=0)).ravel()
        return np.flatnonzero(allowed[self.col_ns] & (df >= min_df))


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def to_svmlight(X: sp.csr_matrix, y: Sequence[int], header: Sequence[str] = ()) -> str:
    """``label index:value ...`` lines with ascending indices."""
    X = sp.csr_matrix(X)
    X.sort_indices()
    lines = [f"# {h}" for h in header]
    for i in range(X.shape[0]):
        lo, hi = X.indptr[i], X.indptr[i + 1]
        parts = [str(int(y[i]))]
        parts.extend(f"{j}:{_fmt(v)}" for j, v in zip(X.indices[lo:hi].tolist(), X.data[lo:hi].tolist()) if v != 0)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n" if lines else ""


def from_svmlight(text: str, dim: int | None = None) -> tuple[sp.csr_matrix, np.ndarray]:
    labels, indptr, indices, data = [], [0], [], []
    for line in text.split("\n"):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        labels.append(int(float(parts[0])))
        prev = -1
        for item in parts[1:]:
            j, v = item.split(":")
            j = int(j)
            if j <= prev:
                raise ValueError("svmlight indices must be strictly increasing")
            prev = j
            indices.append(j)
            data.append(float(v))
        indptr.append(len(indices))
    if dim is None:
        dim = max(indices) + 1 if indices else 0
    X = sp.csr_matrix((np.array(data), np.array(indices, dtype=np.int64), np.array(indptr)), shape=(len(labels), dim))
    return X, np.array(labels, dtype=np.int64)
