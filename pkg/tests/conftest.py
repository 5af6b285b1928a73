from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from udirony.conllu import Sentence, Token, read_conllu
from udirony.synthetic import RANDOM_RELS, RANDOM_TAGS, WORDS, random_sentence

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def blind_tweet() -> Sentence:
    return read_conllu(FIXTURES / "blind_tweet.conllu")[0]


@pytest.fixture(scope="session")
def copula_sentence() -> Sentence:
    return read_conllu(FIXTURES / "copula.conllu")[0]


def make_sentence(forms, upos, heads, rels, feats=None, sent_id="s") -> Sentence:
    feats = feats or [()] * len(forms)
    toks = tuple(Token(i + 1, f, f, u, None, fe, h, r) for i, (f, u, h, r, fe) in enumerate(zip(forms, upos, heads, rels, feats)))
    return Sentence(toks, (f"# sent_id = {sent_id}",))


def random_sentences(count: int, max_len: int, seed: int) -> list[Sentence]:
    rng = np.random.default_rng(seed)
    return [random_sentence(rng, int(rng.integers(1, max_len + 1)), f"r{i}") for i in range(count)]


@st.composite
def sentences(draw, max_len: int = 12):
    """Random valid dependency trees with random forms, tags and relations."""
    n = draw(st.integers(1, max_len))
    order = draw(st.permutations(list(range(1, n + 1))))
    heads = [0] * (n + 1)
    for pos in range(1, n):
        heads[order[pos]] = order[draw(st.integers(0, pos - 1))]
    forms = draw(st.lists(st.sampled_from(WORDS + ["not", "If", "ÉTÉ", "n't"]), min_size=n, max_size=n))
    upos = draw(st.lists(st.sampled_from(RANDOM_TAGS + ("VERB", "NOUN", "ADJ")), min_size=n, max_size=n))
    rels = [("root" if heads[i] == 0 else draw(st.sampled_from(RANDOM_RELS))) for i in range(1, n + 1)]
    neg = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    feats = [("Polarity=Neg",) if b else () for b in neg]
    return make_sentence(forms, upos, heads[1:], rels, feats)


# ---------------------------------------------------------------- acceptance summary

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): an acceptance criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    rep = outcome.get_result()
    number, title = mark.args
    if rep.when == "call" or rep.outcome != "passed":
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        if rep.when == "call" or number not in _ACCEPTANCE:
            _ACCEPTANCE[number] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}  {status}  {title}")
