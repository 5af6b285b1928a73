"""Word embeddings trained on dependency contexts with skip-gram negative sampling.

Each tree edge ``head -rel-> dependent`` yields two training pairs: the head
sees ``dependent/rel`` and the dependent sees ``head/rel⁻¹``. UD already
attaches content words directly, so relations are used as they are.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .conllu import Sentence
from .corpus import lower_form
from .learners._common import sigmoid

INVERSE = "⁻¹"


class ContextPair(NamedTuple):
    word: str
    context: str


def extract_contexts(treebank: Iterable[Sentence], lowercase: bool = True) -> list[ContextPair]:
    pairs = []
    for s in treebank:
        forms = [""] + [lower_form(t.form) if lowercase else t.form for t in s.tokens]
        for h, d in s.tree.edges():
            rel = s[d].deprel
            pairs.append(ContextPair(forms[h], f"{forms[d]}/{rel}"))
            pairs.append(ContextPair(forms[d], f"{forms[h]}/{rel}{INVERSE}"))
    return pairs


@dataclass
class SgnsConfig:
    dim: int = 300
    negatives: int = 5
    epochs: int = 5
    min_count: int = 2
    learning_rate: float = 0.025
    min_lr_fraction: float = 1e-4
    seed: int = 0


@dataclass
class EmbeddingTable:
    words: list[str]
    contexts: list[str]
    word_vectors: np.ndarray
    context_vectors: np.ndarray
    config: SgnsConfig
    word_counts: list[int] = field(default_factory=list)
    context_counts: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.context_index = {c: i for i, c in enumerate(self.contexts)}

    def __contains__(self, word):
        return word in self.word_index

    def vector(self, word: str) -> np.ndarray:
        return self.word_vectors[self.word_index[word]]

    def to_text(self) -> str:
        """word2vec text format: ``size dim`` header, then one ``word v1 .. vd`` line per word."""
        lines = [f"{len(self.words)} {self.word_vectors.shape[1]}"]
        for w, vec in zip(self.words, self.word_vectors):
            # the format is space-delimited, so whitespace inside a form would split the line
            token = "_".join(w.split()) or "_"
            lines.append(token + " " + " ".join(f"{v:.6f}" for v in vec.tolist()))
        return "\n".join(lines) + "\n"

    def config_json(self) -> str:
        return json.dumps(self.config.__dict__, sort_keys=True) + "\n"


def read_word2vec_text(text: str) -> dict[str, np.ndarray]:
    lines = text.rstrip("\n").split("\n")
    n, d = map(int, lines[0].split())
    out = {}
    for line in lines[1 : n + 1]:
        parts = line.split(" ")
        out[parts[0]] = np.array([float(x) for x in parts[1 : d + 1]])
    return out


def _vocab(counter: Counter, min_count: int) -> list[str]:
    kept = [(c, w) for w, c in counter.items() if c >= min_count]
    kept.sort(key=lambda cw: (-cw[0], cw[1]))
    return [w for _, w in kept]


def sgns_pair_objective(w: np.ndarray, c: np.ndarray, negs: np.ndarray) -> float:
    """log s(w.c) + sum_k log s(-w.n_k) for one observed pair and its negatives."""
    return float(-np.logaddexp(0.0, -(w @ c)) - np.logaddexp(0.0, negs @ w).sum())


def sgns_pair_grad(w: np.ndarray, c: np.ndarray, negs: np.ndarray):
    """Gradient of :func:`sgns_pair_objective` w.r.t. the word, context and negative vectors."""
    gpos = 1.0 - sigmoid(w @ c)
    gneg = -sigmoid(negs @ w)
    dw = gpos * c + gneg @ negs
    dc = gpos * w
    dn = np.outer(gneg, w)
    return dw, dc, dn


def unigram_table(counts: Sequence[int], power: float = 0.75) -> np.ndarray:
    """Cumulative distribution of the smoothed context unigram distribution."""
    p = np.asarray(counts, dtype=np.float64) ** power
    cdf = np.cumsum(p / p.sum())
    cdf[-1] = 1.0
    return cdf


def train_sgns(pairs: Sequence[ContextPair], config: SgnsConfig = SgnsConfig(), callback=None, **overrides) -> EmbeddingTable:
    """Stochastic gradient ascent on the negative-sampling objective.

    Pairs are reshuffled every epoch and negatives drawn from the context
    unigram distribution raised to 3/4; the learning rate decays linearly.
    Sequential and fully determined by ``config.seed``. ``callback(W, C)``
    sees the word and context matrices after every epoch.
    """
    if overrides:
        config = SgnsConfig(**{**config.__dict__, **overrides})
    wc = Counter(p.word for p in pairs)
    cc = Counter(p.context for p in pairs)
    words = _vocab(wc, config.min_count)
    contexts = _vocab(cc, config.min_count)
    if not words or not contexts:
        raise ValueError(f"empty vocabulary after min_count={config.min_count} filtering")
    wi = {w: i for i, w in enumerate(words)}
    ci = {c: i for i, c in enumerate(contexts)}
    data = np.array([(wi[p.word], ci[p.context]) for p in pairs if p.word in wi and p.context in ci], dtype=np.int64)
    if data.size == 0:
        raise ValueError("no training pairs survive min_count filtering")

    rng = np.random.default_rng(config.seed)
    d = config.dim
    W = (rng.random((len(words), d)) - 0.5) / d
    C = np.zeros((len(contexts), d))
    cdf = unigram_table([cc[c] for c in contexts])
    total = config.epochs * len(data)
    step = 0
    k = config.negatives
    for _ in range(config.epochs):
        order = rng.permutation(len(data))
        negs_all = np.searchsorted(cdf, rng.random((len(data), k)), side="right")
        np.minimum(negs_all, len(contexts) - 1, out=negs_all)
        for row, negs in zip(data[order], negs_all):
            lr = config.learning_rate * max(config.min_lr_fraction, 1.0 - step / total)
            step += 1
            w_i, c_i = row
            negs = negs[negs != c_i]
            wv = W[w_i]
            dw, dc, dn = sgns_pair_grad(wv, C[c_i], C[negs])
            C[c_i] += lr * dc
            np.add.at(C, negs, lr * dn)
            W[w_i] += lr * dw
        if callback is not None:
            callback(W, C)
    return EmbeddingTable(words, contexts, W, C, config, [wc[w] for w in words], [cc[c] for c in contexts])


def sgns_objective(table: EmbeddingTable, triples: Sequence[tuple[int, int, np.ndarray]]) -> float:
    """Mean pair objective over fixed ``(word_idx, context_idx, negative_idxs)`` triples."""
    W, C = table.word_vectors, table.context_vectors
    return float(np.mean([sgns_pair_objective(W[w], C[c], C[n]) for w, c, n in triples]))


def nearest_neighbors(table: EmbeddingTable, word: str, topk: int = 10) -> list[tuple[str, float]]:
    """Other vocabulary words by cosine similarity, ties broken alphabetically."""
    if word not in table.word_index:
        raise KeyError(f"{word!r} is not in the embedding vocabulary")
    V = table.word_vectors
    norms = np.linalg.norm(V, axis=1)
    q = V[table.word_index[word]]
    qn = np.linalg.norm(q)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where((norms > 0) & (qn > 0), V @ q / (norms * qn), 0.0)
    ranked = sorted(
        ((table.words[i], float(cos[i])) for i in range(len(table.words)) if table.words[i] != word),
        key=lambda wc: (-wc[1], wc[0]),
    )
    return ranked[: max(0, topk)]
