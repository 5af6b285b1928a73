"""Morpho-syntactic feature extractors over UD dependency trees.

Every extractor is a pure function ``Sentence -> FeatureBag``. Keys live in
one of ten namespaces so bags from different extractors can be merged and
selectively enabled.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from itertools import combinations
from typing import Iterable

from .conllu import Sentence
from .corpus import lower_form

NAMESPACES = (
    "ngrams",
    "chargrams",
    "deprelneg",
    "deprel",
    "relformVERB",
    "relformNOUN",
    "relformADJ",
    "sidorovform",
    "sidorovupostag",
    "sidorovdeprel",
)
PIVOT_CLASSES = ("VERB", "NOUN", "ADJ")
SIDOROV_CHANNELS = ("form", "upostag", "deprel")
LANGUAGES = ("en", "es", "fr", "it")


class FeatureBag(Counter):
    """Multiset of ``(namespace, key)`` pairs."""

    def namespace(self, ns: str) -> Counter:
        return Counter({k: c for (n, k), c in self.items() if n == ns})

    def keys_in(self, ns: str) -> set[str]:
        return {k for (n, k) in self if n == ns}

    def to_tsv(self) -> str:
        """``namespace<TAB>key<TAB>count`` lines, sorted."""
        return "".join(f"{ns}\t{key}\t{c}\n" for (ns, key), c in sorted(self.items()))


@dataclass(frozen=True)
class FeatureSpec:
    enabled: tuple[str, ...] = NAMESPACES
    lowercase_forms: bool = True
    ngram_max: int = 3
    language: str | None = None

    def __post_init__(self):
        unknown = set(self.enabled) - set(NAMESPACES)
        if unknown:
            raise ValueError(f"unknown feature namespace(s): {', '.join(sorted(unknown))}")
        # canonical order, no duplicates
        object.__setattr__(self, "enabled", tuple(ns for ns in NAMESPACES if ns in self.enabled))

    @classmethod
    def parse(cls, names: str, **kw) -> FeatureSpec:
        names = names.strip()
        enabled = NAMESPACES if names in ("", "all") else tuple(n.strip() for n in names.split(",") if n.strip())
        return cls(enabled, **kw)

    @property
    def bitmask(self) -> int:
        return sum(1 << i for i, ns in enumerate(NAMESPACES) if ns in self.enabled)


@lru_cache(maxsize=None)
def negation_lexicon(language: str | None = None) -> frozenset[str]:
    """Negation cue words for one language, or all shipped languages when None."""
    langs = LANGUAGES if language is None else (language,)
    words = set()
    for lang in langs:
        try:
            text = resources.files("udirony").joinpath(f"data/negation/{lang}.txt").read_text(encoding="utf-8")
        except FileNotFoundError:
            continue
        words.update(w.strip() for w in text.splitlines() if w.strip())
    return frozenset(words)


def _forms(s: Sentence, lowercase: bool) -> list[str]:
    return [lower_form(t.form) if lowercase else t.form for t in s.tokens]


def _windows(seq: list[str], sizes: Iterable[int]) -> Iterable[str]:
    for k in sizes:
        for i in range(len(seq) - k + 1):
            yield " ".join(seq[i : i + k])


def extract_token_ngrams(s: Sentence, lowercase: bool = True, max_n: int = 3) -> FeatureBag:
    forms = _forms(s, lowercase)
    return FeatureBag(("ngrams", g) for g in _windows(forms, range(1, max_n + 1)))


def extract_chargrams(s: Sentence, lowercase: bool = True) -> FeatureBag:
    # forms are glued without separators, so grams cross token boundaries
    text = "".join(_forms(s, lowercase))
    bag = FeatureBag()
    for k in range(2, 6):
        for i in range(len(text) - k + 1):
            bag["chargrams", text[i : i + k]] += 1
    return bag


def is_negation(token, lexicon: frozenset[str]) -> bool:
    return token.feat("Polarity") == "Neg" or lower_form(token.form) in lexicon


def extract_neg_deprel(s: Sentence, language: str | None = None) -> FeatureBag:
    lexicon = negation_lexicon(language)
    return FeatureBag(("deprelneg", t.deprel) for t in s.tokens if is_negation(t, lexicon))


def extract_deprel_ngrams(s: Sentence) -> FeatureBag:
    rels = [t.deprel for t in s.tokens]
    return FeatureBag(("deprel", g) for g in _windows(rels, (5, 6, 7)))


def extract_relation_tuples(s: Sentence, pos_class: str, lowercase: bool = True) -> FeatureBag:
    """Pairs of a pivot's dependency neighbours with the pivot blanked to its tag.

    Neighbours are the pivot's dependents plus its head; each unordered pair
    is emitted once, left member first in sentence order.
    """
    if pos_class not in PIVOT_CLASSES:
        raise ValueError(f"pos_class must be one of {PIVOT_CLASSES}")
    forms = [""] + _forms(s, lowercase)
    tree = s.tree
    ns = "relform" + pos_class
    bag = FeatureBag()
    for tok in s.tokens:
        if tok.upos != pos_class:
            continue
        for a, b in combinations(tree.neighbors(tok.id), 2):
            bag[ns, forms[a] + pos_class + forms[b]] += 1
    return bag


def extract_sidorov_bigrams(s: Sentence, channel: str, lowercase: bool = True) -> FeatureBag:
    """Head-dependent bigrams read along tree edges.

    For the deprel channel the head slot carries the head's own relation to
    its governor, so the root contributes ``root``.
    """
    if channel == "form":
        attr = [""] + _forms(s, lowercase)
    elif channel == "upostag":
        attr = [""] + [t.upos for t in s.tokens]
    elif channel == "deprel":
        attr = [""] + [t.deprel for t in s.tokens]
    else:
        raise ValueError(f"channel must be one of {SIDOROV_CHANNELS}")
    ns = "sidorov" + channel
    return FeatureBag((ns, attr[h] + " " + attr[d]) for h, d in s.tree.edges())


def extract_namespace(s: Sentence, ns: str, spec: FeatureSpec = FeatureSpec()) -> FeatureBag:
    low = spec.lowercase_forms
    if ns == "ngrams":
        return extract_token_ngrams(s, low, spec.ngram_max)
    if ns == "chargrams":
        return extract_chargrams(s, low)
    if ns == "deprelneg":
        return extract_neg_deprel(s, spec.language)
    if ns == "deprel":
        return extract_deprel_ngrams(s)
    if ns.startswith("relform"):
        return extract_relation_tuples(s, ns[len("relform") :], low)
    if ns.startswith("sidorov"):
        return extract_sidorov_bigrams(s, ns[len("sidorov") :], low)
    raise ValueError(f"unknown namespace {ns!r}")


def extract(s: Sentence, spec: FeatureSpec = FeatureSpec()) -> FeatureBag:
    """Merged bag over every namespace enabled in ``spec``."""
    bag = FeatureBag()
    for ns in spec.enabled:
        bag.update(extract_namespace(s, ns, spec))
    return bag
