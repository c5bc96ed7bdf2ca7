"""Reading, validating and writing CoNLL-U files.

Handles the full 10-column format including empty nodes ("3.1" ids),
multiword token ranges ("2-3") and the enhanced-dependency DEPS column.
Parsing and writing are field-faithful: comments and MISC pass through
verbatim, and ``parse_conllu(write_conllu(s)) == s`` for any sentence
satisfying the type invariants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

COLUMNS = ("ID", "FORM", "LEMMA", "UPOS", "XPOS", "FEATS", "HEAD", "DEPREL", "DEPS", "MISC")

_ID_RE = re.compile(r"^(0|[1-9]\d*)(?:\.([1-9]\d*))?$")
_MWT_RE = re.compile(r"^([1-9]\d*)-([1-9]\d*)$")


class ConlluError(Exception):
    """Base class for CoNLL-U handling failures."""


class ParseError(ConlluError):
    """A line could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class StructureError(ConlluError):
    """Token ids do not follow the required progression."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SerializeError(ConlluError):
    """A sentence violates invariants and cannot be written."""


@dataclass(frozen=True, order=True)
class NodeId:
    """Identifier of a node: ``major`` word index, ``minor`` > 0 for empty nodes."""

    major: int
    minor: int = 0

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}" if self.minor else str(self.major)

    @property
    def is_empty(self) -> bool:
        return self.minor > 0

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        m = _ID_RE.match(text)
        if m is None:
            raise ValueError(f"bad node id {text!r}")
        return cls(int(m.group(1)), int(m.group(2)) if m.group(2) else 0)


ROOT = NodeId(0, 0)


@dataclass(frozen=True)
class Token:
    id: NodeId
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    head: Optional[NodeId] = None
    deprel: str = "_"
    deps: tuple[tuple[NodeId, str], ...] = ()
    misc: str = "_"

    @property
    def is_empty(self) -> bool:
        return self.id.is_empty


@dataclass(frozen=True)
class MwtRange:
    """Multiword-token line: surface form spanning token ids start..end."""

    start: int
    end: int
    form: str
    feats: str = "_"
    misc: str = "_"


@dataclass(frozen=True)
class Sentence:
    comments: tuple[str, ...] = ()
    tokens: tuple[Token, ...] = ()
    mwt_ranges: tuple[MwtRange, ...] = ()

    @property
    def regular_tokens(self) -> tuple[Token, ...]:
        return tuple(t for t in self.tokens if not t.is_empty)

    @property
    def n_tokens(self) -> int:
        return sum(1 for t in self.tokens if not t.is_empty)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    node: Optional[NodeId] = None


def _parse_deps(text: str, line: int) -> tuple[tuple[NodeId, str], ...]:
    if text == "_":
        return ()
    out = []
    for part in text.split("|"):
        head_str, sep, label = part.partition(":")
        if not sep or not label:
            raise ParseError(f"DEPS entry {part!r} is not head:label", line)
        try:
            head = NodeId.parse(head_str)
        except ValueError:
            raise ParseError(f"DEPS head {head_str!r} is not a valid id", line) from None
        out.append((head, label))
    return tuple(out)


def iter_blocks(lines: Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    """Yield (first_line_number, lines) for each blank-line-separated block."""
    block: list[str] = []
    start = 1
    for no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if line == "":
            if block:
                yield start, block
            block = []
            start = no + 1
        else:
            if not block:
                start = no
            block.append(line)
    if block:
        yield start, block


def parse_sentence(lines: list[str], first_line: int = 1) -> Sentence:
    """Parse one sentence block (comments + token/MWT lines, no blank lines)."""
    comments: list[str] = []
    tokens: list[Token] = []
    mwts: list[MwtRange] = []
    last = ROOT
    pending_mwt = None
    for offset, line in enumerate(lines):
        no = first_line + offset
        if line.startswith("#"):
            if tokens or mwts:
                raise ParseError("comment after first token line", no)
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(f"expected 10 tab-separated fields, got {len(cols)}", no)
        mwt_match = _MWT_RE.match(cols[0])
        if mwt_match:
            if pending_mwt is not None:
                raise StructureError(f"MWT range {cols[0]} follows another MWT line", no)
            start, end = int(mwt_match.group(1)), int(mwt_match.group(2))
            if start != last.major + 1:
                raise StructureError(f"MWT range {cols[0]} does not start at next token id", no)
            for i, col in enumerate(cols[2:9], start=2):
                if col != "_" and not (i == 5 and col == "Typo=Yes"):
                    raise ParseError(f"MWT line must have '_' in {COLUMNS[i]}", no)
            mwts.append(MwtRange(start, end, cols[1], feats=cols[5], misc=cols[9]))
            pending_mwt = start
            continue
        try:
            nid = NodeId.parse(cols[0])
        except ValueError:
            raise ParseError(f"bad ID field {cols[0]!r}", no) from None
        expected = (NodeId(last.major, last.minor + 1), NodeId(last.major + 1, 0))
        if nid not in expected:
            raise StructureError(f"id {nid} does not follow {last}", no)
        if pending_mwt is not None:
            if nid != NodeId(pending_mwt):
                raise StructureError(f"MWT range starting at {pending_mwt} is not followed by its first token", no)
            pending_mwt = None
        if nid.is_empty:
            if cols[6] != "_" or cols[7] != "_":
                raise ParseError("empty node must have '_' HEAD and DEPREL", no)
            head = None
            deprel = "_"
        else:
            if cols[6] == "_":
                head = None
            else:
                try:
                    head = NodeId(int(cols[6]))
                except ValueError:
                    raise ParseError(f"bad HEAD field {cols[6]!r}", no) from None
            deprel = cols[7]
        tokens.append(
            Token(
                id=nid,
                form=cols[1],
                lemma=cols[2],
                upos=cols[3],
                xpos=cols[4],
                feats=cols[5],
                head=head,
                deprel=deprel,
                deps=_parse_deps(cols[8], no),
                misc=cols[9],
            )
        )
        last = nid
    if not tokens:
        raise ParseError("sentence block contains no token lines", first_line)
    return Sentence(comments=tuple(comments), tokens=tuple(tokens), mwt_ranges=tuple(mwts))


def parse_conllu(source: Union[str, Iterable[str]]) -> list[Sentence]:
    """Parse CoNLL-U text (a string or an iterable of lines) into sentences."""
    lines = source.splitlines() if isinstance(source, str) else source
    return [parse_sentence(block, start) for start, block in iter_blocks(lines)]


def read_conllu(path: Union[str, Path]) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f)


def _check_field(value: str, what: str, index: int) -> str:
    if value == "" or "\t" in value or "\n" in value:
        raise SerializeError(f"sentence {index}: {what} {value!r} is empty or contains tab/newline")
    return value


def deps_field(deps: Iterable[tuple[NodeId, str]]) -> str:
    entries = sorted(deps, key=lambda hl: (hl[0].major, hl[0].minor, hl[1]))
    return "|".join(f"{h}:{label}" for h, label in entries) if entries else "_"


def sentence_lines(sentence: Sentence, index: int = 0) -> list[str]:
    """Serialize one sentence to its CoNLL-U lines (without the trailing blank)."""
    mwt_at = {}
    for mwt in sentence.mwt_ranges:
        if mwt.end <= mwt.start:
            raise SerializeError(f"sentence {index}: MWT span {mwt.start}-{mwt.end} not longer than one")
        if mwt.start in mwt_at:
            raise SerializeError(f"sentence {index}: two MWT ranges start at token {mwt.start}")
        mwt_at[mwt.start] = mwt
    lines = list(sentence.comments)
    last = ROOT
    for tok in sentence.tokens:
        expected = (NodeId(last.major, last.minor + 1), NodeId(last.major + 1, 0))
        if tok.id not in expected:
            raise SerializeError(f"sentence {index}: id {tok.id} does not follow {last}")
        if not tok.is_empty and tok.id.major in mwt_at:
            mwt = mwt_at.pop(tok.id.major)
            lines.append(
                "\t".join(
                    (f"{mwt.start}-{mwt.end}", _check_field(mwt.form, "MWT form", index),
                     "_", "_", "_", mwt.feats, "_", "_", "_", mwt.misc)
                )
            )
        if tok.is_empty and tok.head is not None:
            raise SerializeError(f"sentence {index}: empty node {tok.id} has a basic head")
        if tok.head is not None and tok.head.minor != 0:
            raise SerializeError(f"sentence {index}: basic head {tok.head} is not a regular id")
        seen_pairs = set()
        for h, label in tok.deps:
            _check_field(label, "DEPS label", index)
            if (h, label) in seen_pairs:
                raise SerializeError(f"sentence {index}: duplicate DEPS entry {h}:{label} on {tok.id}")
            seen_pairs.add((h, label))
        lines.append(
            "\t".join(
                (str(tok.id),
                 _check_field(tok.form, "FORM", index),
                 _check_field(tok.lemma, "LEMMA", index),
                 _check_field(tok.upos, "UPOS", index),
                 _check_field(tok.xpos, "XPOS", index),
                 _check_field(tok.feats, "FEATS", index),
                 "_" if tok.head is None else str(tok.head.major),
                 _check_field(tok.deprel, "DEPREL", index),
                 deps_field(tok.deps),
                 _check_field(tok.misc, "MISC", index))
            )
        )
        last = tok.id
    if mwt_at:
        leftover = next(iter(mwt_at.values()))
        raise SerializeError(f"sentence {index}: MWT range {leftover.start}-{leftover.end} has no starting token")
    return lines


def write_conllu(sentences: Iterable[Sentence]) -> str:
    """Serialize sentences to CoNLL-U text (LF endings, blank line after each)."""
    chunks = []
    for i, sent in enumerate(sentences):
        chunks.append("\n".join(sentence_lines(sent, i)))
        chunks.append("\n\n")
    return "".join(chunks)


def write_conllu_file(sentences: Iterable[Sentence], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(write_conllu(sentences))


def validate_level2(sentence: Sentence) -> list[Violation]:
    """Structural validity checks; an empty result means the sentence is valid.

    Checks: id consecutiveness (including empty-node placement), DEPS heads
    referring to existing nodes or ROOT, presence of at least one ROOT-headed
    enhanced edge, absence of self-loops, absence of duplicate (head, label)
    pairs, and MWT span lengths greater than one.
    """
    violations: list[Violation] = []
    last = ROOT
    for tok in sentence.tokens:
        expected = (NodeId(last.major, last.minor + 1), NodeId(last.major + 1, 0))
        if tok.id not in expected:
            violations.append(Violation("nonconsecutive-ids", f"id {tok.id} does not follow {last}", tok.id))
        last = tok.id
        if tok.is_empty and tok.head is not None:
            violations.append(Violation("empty-node-head", f"empty node {tok.id} has a basic head", tok.id))
    node_ids = {t.id for t in sentence.tokens}
    has_root_edge = False
    for tok in sentence.tokens:
        seen_pairs = set()
        for h, label in tok.deps:
            if h == ROOT:
                has_root_edge = True
            elif h not in node_ids:
                violations.append(Violation("dangling-head", f"DEPS head {h} of {tok.id} does not exist", tok.id))
            if h == tok.id:
                violations.append(Violation("self-loop", f"node {tok.id} depends on itself", tok.id))
            if (h, label) in seen_pairs:
                violations.append(Violation("duplicate-dep", f"duplicate DEPS entry {h}:{label} on {tok.id}", tok.id))
            seen_pairs.add((h, label))
    if not has_root_edge:
        violations.append(Violation("no-root-edge", "no node has ROOT in DEPS"))
    for mwt in sentence.mwt_ranges:
        if mwt.end <= mwt.start:
            violations.append(Violation("mwt-span", f"MWT span {mwt.start}-{mwt.end} not longer than one"))
    return violations


def strip_enhanced(sentence: Sentence) -> Sentence:
    """Return a copy with all DEPS cleared (used to build un-annotated inputs)."""
    return replace(sentence, tokens=tuple(replace(t, deps=()) for t in sentence.tokens))
