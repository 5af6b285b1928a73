"""Generated corpora with a known, planted signal.

Used for end-to-end checks where the right answer is fixed by construction.
"""

from __future__ import annotations

import numpy as np

from .conllu import Sentence, Token
from .corpus import CorpusItem, LabeledCorpus

WORDS = (
    "time day way thing man world life hand part child eye woman place work week case point "
    "government company number group problem fact bus train phone coffee monday rain traffic "
    "music game team city school car house party book movie dog cat food night"
).split()
TAGS = ("NOUN", "VERB", "ADJ", "PRON", "PROPN", "ADV", "DET", "INTJ")
FILLER_RELS = ("nsubj", "mark", "discourse", "vocative")


def _sentence(forms, upos, heads, rels, sent_id, label) -> Sentence:
    tokens = tuple(
        Token(i + 1, f, f, u, None, (), h, r) for i, (f, u, h, r) in enumerate(zip(forms, upos, heads, rels))
    )
    return Sentence(tokens, (f"# sent_id = {sent_id}", f"# irony = {label}"))


def planted_deprel_corpus(n: int = 1000, seed: int = 0, test_fraction: float = 0.2, language: str = "xx") -> LabeledCorpus:
    """Four-token tweets whose class shows only in one head-dependent relation pair.

    Every tweet has the tree ``1 -> 2 <- 3 <- 4`` rooted at token 2. Ironic
    tweets label the 3 -> 4 edge ``obj`` / ``advmod``; non-ironic ones use
    ``obj`` / ``det`` or ``nmod`` / ``advmod``, so each relation on its own is
    shared by both classes. Forms and tags are drawn independently of the
    label, and four tokens are too few for relation 5-grams.
    """
    rng = np.random.default_rng(seed)
    heads = (2, 0, 2, 3)
    items = []
    n_test = int(round(n * test_fraction))
    for k in range(n):
        label = int(k % 2 == 0)
        if label:
            r3, r4 = "obj", "advmod"
        else:
            r3, r4 = ("obj", "det") if rng.random() < 0.5 else ("nmod", "advmod")
        rels = (FILLER_RELS[rng.integers(len(FILLER_RELS))], "root", r3, r4)
        forms = [WORDS[i] for i in rng.integers(len(WORDS), size=4)]
        upos = [TAGS[i] for i in rng.integers(len(TAGS), size=4)]
        sent = _sentence(forms, upos, heads, rels, f"planted-{k}", label)
        items.append((sent, label))
    order = rng.permutation(n)
    test_ids = set(order[:n_test].tolist())
    return LabeledCorpus(
        CorpusItem(s, y, "test" if i in test_ids else "train", language) for i, (s, y) in enumerate(items)
    )


def planted_unigram_corpus(n: int = 400, seed: int = 0, test_fraction: float = 0.25, cue: str = "yeahright",
                           language: str = "xx") -> LabeledCorpus:
    """Flat tweets where every ironic one, and no other, contains ``cue``."""
    rng = np.random.default_rng(seed)
    items = []
    n_test = int(round(n * test_fraction))
    for k in range(n):
        label = int(k % 2 == 0)
        length = int(rng.integers(4, 9))
        forms = [WORDS[i] for i in rng.integers(len(WORDS), size=length)]
        if label:
            forms[int(rng.integers(length))] = cue
        upos = [TAGS[i] for i in rng.integers(len(TAGS), size=length)]
        heads = [0] + [1] * (length - 1)
        rels = ["root"] + ["dep"] * (length - 1)
        items.append((_sentence(forms, upos, heads, rels, f"lex-{k}", label), label))
    order = rng.permutation(n)
    test_ids = set(order[:n_test].tolist())
    return LabeledCorpus(
        CorpusItem(s, y, "test" if i in test_ids else "train", language) for i, (s, y) in enumerate(items)
    )


RANDOM_RELS = ("nsubj", "obj", "advmod", "amod", "det", "case", "punct", "conj")
RANDOM_TAGS = ("NOUN", "VERB", "ADJ", "PRON", "ADV", "DET", "PUNCT", "SYM")


def random_tree(rng, n: int) -> list[int]:
    """Heads of a random recursive tree over a shuffled token order (0 marks the root)."""
    order = rng.permutation(n) + 1
    heads = [0] * (n + 1)
    for pos in range(1, n):
        heads[order[pos]] = int(order[rng.integers(pos)])
    return heads[1:]


def random_sentence(rng, n: int, sent_id: str = "rand", label: int = 0) -> Sentence:
    heads = random_tree(rng, n)
    rels = ["root" if h == 0 else RANDOM_RELS[rng.integers(len(RANDOM_RELS))] for h in heads]
    upos = [RANDOM_TAGS[rng.integers(len(RANDOM_TAGS))] for _ in range(n)]
    forms = [WORDS[rng.integers(len(WORDS))] for _ in range(n)]
    return _sentence(forms, upos, heads, rels, sent_id, label)
