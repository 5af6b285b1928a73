"""Reading, validating and writing CoNLL-U dependency trees."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

COLUMNS = ("id", "form", "lemma", "upos", "xpos", "feats", "head", "deprel", "deps", "misc")


class ConlluError(ValueError):
    """Malformed or structurally invalid CoNLL-U input."""

    def __init__(self, message: str, line: int | None = None, sent_id: str | None = None):
        self.line = line
        self.sent_id = sent_id
        where = []
        if line is not None:
            where.append(f"line {line}")
        if sent_id is not None:
            where.append(f"sentence {sent_id}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str
    upos: str
    xpos: str | None
    feats: tuple[str, ...]
    head: int
    deprel: str
    deps: str | None = None
    misc: str | None = None

    def feat(self, key: str) -> str | None:
        for item in self.feats:
            k, _, v = item.partition("=")
            if k == key:
                return v
        return None

    def to_line(self) -> str:
        cols = [
            str(self.id),
            self.form,
            self.lemma,
            self.upos,
            self.xpos if self.xpos is not None else "_",
            "|".join(self.feats) if self.feats else "_",
            str(self.head),
            self.deprel,
            self.deps if self.deps is not None else "_",
            self.misc if self.misc is not None else "_",
        ]
        return "\t".join(cols)


@dataclass(frozen=True)
class DepTree:
    """Adjacency view of a validated sentence.

    ``children[i]`` lists the dependents of token ``i`` in linear order;
    index 0 is the virtual root.
    """

    heads: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    root_id: int

    def dependents(self, tid: int) -> tuple[int, ...]:
        return self.children[tid]

    def head(self, tid: int) -> int:
        return self.heads[tid]

    def neighbors(self, tid: int) -> list[int]:
        """Tokens at dependency distance 1, in linear order."""
        out = list(self.children[tid])
        h = self.heads[tid]
        if h != 0:
            out.append(h)
        return sorted(out)

    def edges(self) -> list[tuple[int, int]]:
        """(head, dependent) pairs, breadth-first from the root, siblings left to right.

        The virtual root edge is not included, so there are exactly n - 1 edges.
        """
        out = []
        queue = deque([self.root_id])
        while queue:
            h = queue.popleft()
            for d in self.children[h]:
                out.append((h, d))
                queue.append(d)
        return out

    def distance(self, a: int, b: int) -> int:
        """Number of edges on the tree path between two tokens."""
        if a == b:
            return 0
        seen = {a: 0}
        queue = deque([a])
        while queue:
            t = queue.popleft()
            for u in self.neighbors(t):
                if u not in seen:
                    seen[u] = seen[t] + 1
                    if u == b:
                        return seen[u]
                    queue.append(u)
        raise ValueError(f"token {b} unreachable from {a}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()
    mwt_lines: tuple[str, ...] = ()
    empty_node_lines: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, tid: int) -> Token:
        """1-based token access, matching CoNLL-U ids."""
        if tid < 1:
            raise IndexError(tid)
        return self.tokens[tid - 1]

    @cached_property
    def metadata(self) -> dict[str, str]:
        meta = {}
        for line in self.comments:
            body = line[1:].strip()
            key, sep, value = body.partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            elif body:
                meta[body] = ""
        return meta

    @property
    def sent_id(self) -> str | None:
        return self.metadata.get("sent_id")

    @property
    def mwt_spans(self) -> list[tuple[int, int]]:
        spans = []
        for line in self.mwt_lines:
            start, end = line.split("\t", 1)[0].split("-")
            spans.append((int(start), int(end)))
        return spans

    @property
    def empty_nodes(self) -> int:
        return len(self.empty_node_lines)

    @cached_property
    def tree(self) -> DepTree:
        n = len(self.tokens)
        heads = [0] * (n + 1)
        children: list[list[int]] = [[] for _ in range(n + 1)]
        root = 0
        for tok in self.tokens:
            heads[tok.id] = tok.head
            children[tok.head].append(tok.id)
            if tok.head == 0:
                root = tok.id
        return DepTree(tuple(heads), tuple(tuple(c) for c in children), root)

    def with_metadata(self, key: str, value: str) -> Sentence:
        """Copy with ``# key = value`` set (replaced in place if present)."""
        new = f"# {key} = {value}"
        comments = list(self.comments)
        for i, line in enumerate(comments):
            k, sep, _ = line[1:].strip().partition("=")
            if sep and k.strip() == key:
                comments[i] = new
                break
        else:
            comments.append(new)
        return Sentence(self.tokens, tuple(comments), self.mwt_lines, self.empty_node_lines)

    def to_conllu(self) -> str:
        mwt = {}
        for line in self.mwt_lines:
            mwt.setdefault(int(line.split("-", 1)[0]), []).append(line)
        empty = {}
        for line in self.empty_node_lines:
            empty.setdefault(int(line.split(".", 1)[0]), []).append(line)
        out = list(self.comments)
        out.extend(empty.get(0, []))
        for tok in self.tokens:
            out.extend(mwt.get(tok.id, []))
            out.append(tok.to_line())
            out.extend(empty.get(tok.id, []))
        return "\n".join(out) + "\n"


def _opt(value: str) -> str | None:
    return None if value == "_" else value


def validate_tokens(tokens: list[Token], lines: dict[int, int] | None = None, sent_id: str | None = None) -> None:
    """Check contiguous ids, head range, single root and acyclicity.

    ``lines`` maps token ids to file line numbers for error reporting.
    """
    lines = lines or {}
    first = min(lines.values()) if lines else None

    def fail(msg, tid=None):
        raise ConlluError(msg, lines.get(tid, first), sent_id)

    n = len(tokens)
    if n == 0:
        fail("sentence has no tokens")
    seen = set()
    for i, tok in enumerate(tokens, start=1):
        if tok.id in seen:
            fail(f"duplicate token id {tok.id}", tok.id)
        seen.add(tok.id)
        if tok.id != i:
            fail(f"token ids must be 1..n in order, got {tok.id} at position {i}", tok.id)
    roots = []
    for tok in tokens:
        if not 0 <= tok.head <= n:
            fail(f"head {tok.head} of token {tok.id} out of range 0..{n}", tok.id)
        if tok.head == tok.id:
            fail(f"token {tok.id} is its own head", tok.id)
        if not tok.deprel:
            fail(f"token {tok.id} has empty deprel", tok.id)
        if tok.head == 0:
            roots.append(tok.id)
            if tok.deprel != "root":
                fail(f"root token {tok.id} has deprel {tok.deprel!r}", tok.id)
        elif tok.deprel == "root":
            fail(f"non-root token {tok.id} has deprel 'root'", tok.id)
    if len(roots) != 1:
        fail(f"expected exactly one root, found {len(roots)}", roots[1] if len(roots) > 1 else None)
    heads = {tok.id: tok.head for tok in tokens}
    state = {}  # 1 = on current path, 2 = known to reach the root
    for start in heads:
        path = []
        t = start
        while t != 0 and state.get(t) != 2:
            if state.get(t) == 1:
                fail(f"cycle through token {t}", t)
            state[t] = 1
            path.append(t)
            t = heads[t]
        for t in path:
            state[t] = 2


def _parse_block(lines: list[tuple[int, str]]) -> Sentence:
    comments = []
    tokens = []
    mwt_lines = []
    empty_lines = []
    sent_id = None
    for lineno, line in lines:
        if line.startswith("#"):
            comments.append(line)
            body = line[1:].strip()
            if body.startswith("sent_id"):
                k, sep, v = body.partition("=")
                if sep and k.strip() == "sent_id":
                    sent_id = v.strip()
    line_of = {}
    for lineno, line in lines:
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 tab-separated columns, found {len(cols)}", lineno, sent_id)
        tid = cols[0]
        if "-" in tid:
            start, _, end = tid.partition("-")
            if not (start.isdigit() and end.isdigit()) or int(start) > int(end):
                raise ConlluError(f"bad multi-word token range {tid!r}", lineno, sent_id)
            mwt_lines.append(line)
            continue
        if "." in tid:
            whole, _, frac = tid.partition(".")
            if not (whole.isdigit() and frac.isdigit()):
                raise ConlluError(f"bad empty node id {tid!r}", lineno, sent_id)
            empty_lines.append(line)
            continue
        try:
            num = int(tid)
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"non-integer id or head: {tid!r}, {cols[6]!r}", lineno, sent_id) from None
        if num < 1:
            raise ConlluError(f"token id must be positive, got {num}", lineno, sent_id)
        feats = () if cols[5] == "_" else tuple(cols[5].split("|"))
        line_of[num] = lineno
        tokens.append(Token(num, cols[1], cols[2], cols[3], _opt(cols[4]), feats, head, cols[7], _opt(cols[8]), _opt(cols[9])))
    validate_tokens(tokens, line_of or {0: lines[0][0]}, sent_id)
    if empty_lines:
        log.debug("sentence %s: skipped %d empty node(s)", sent_id, len(empty_lines))
    return Sentence(tuple(tokens), tuple(comments), tuple(mwt_lines), tuple(empty_lines))


def _blocks(text: str) -> Iterator[list[tuple[int, str]]]:
    block: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if line.strip() == "":
            if block:
                yield block
                block = []
        else:
            block.append((lineno, line))
    if block:
        yield block


def parse_conllu(text: str, lenient: bool = False) -> list[Sentence]:
    """Parse CoNLL-U text into validated sentences.

    In lenient mode an invalid sentence is logged and dropped instead of
    aborting the whole parse.
    """
    sentences = []
    for block in _blocks(text):
        try:
            sentences.append(_parse_block(block))
        except ConlluError as err:
            if not lenient:
                raise
            log.warning("dropping invalid sentence: %s", err)
    return sentences


def read_conllu(path, lenient: bool = False) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        return parse_conllu(text, lenient=lenient)
    except ConlluError as err:
        raise ConlluError(f"{path}: {err}") from None


def serialize_conllu(sentences: Iterable[Sentence]) -> str:
    # UD convention: every sentence, including the last, is followed by a blank line
    return "".join(s.to_conllu() + "\n" for s in sentences)
