"""CoNLL-U / SUD treebank parsing into an immutable in-memory model.

Multiword-token range lines (``3-4``) and empty-node lines (``3.1``) are
skipped: agreement triples are defined over single-token head/dependent
pairs. Only HEAD/DEPREL define edges; the DEPS column is kept verbatim but
never interpreted.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import (
    EncodingError,
    InvalidHeadError,
    InvalidIdError,
    MalformedFeatsError,
    MalformedLineError,
)

N_COLUMNS = 10


@dataclass(frozen=True)
class Token:
    """One syntactic word: a simple (non-range, non-empty) CoNLL-U line."""

    id: int
    form: str
    lemma: str
    upos: str
    xpos: str | None
    feats: dict[str, str]
    head: int
    deprel: str
    deps: str | None = None
    misc: str | None = None


@dataclass(frozen=True)
class Sentence:
    sent_id: str
    tokens: tuple[Token, ...]
    text: str | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def token_by_id(self, token_id: int) -> Token:
        return self.tokens[token_id - 1]


@dataclass(frozen=True)
class Treebank:
    sentences: tuple[Sentence, ...]
    source_path: str = "<stream>"

    @property
    def sentence_count(self) -> int:
        return len(self.sentences)

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)


def parse_feats(raw: str) -> dict[str, str]:
    """Parse a FEATS column value into a name->value map.

    ``_`` yields the empty map. Pairs split on the first ``=``; multi-valued
    entries like ``Case=Nom,Acc`` keep the verbatim value string. Feature
    names are case-sensitive.
    """
    if raw == "_":
        return {}
    feats: dict[str, str] = {}
    for pair in raw.split("|"):
        name, sep, value = pair.partition("=")
        if not sep:
            raise MalformedFeatsError(f"feature entry without '=': {pair!r}")
        if not name or not value:
            raise MalformedFeatsError(f"empty feature name or value: {pair!r}")
        if name in feats:
            raise MalformedFeatsError(f"duplicate feature name: {name!r}")
        feats[name] = value
    return feats


def feats_to_string(feats: dict[str, str]) -> str:
    """Serialize a feature map in sorted-name ``|`` form (``_`` when empty)."""
    if not feats:
        return "_"
    return "|".join(f"{k}={feats[k]}" for k in sorted(feats))


def _is_range_id(col: str) -> bool:
    return "-" in col


def _is_empty_node_id(col: str) -> bool:
    return "." in col


def _parse_token_line(line: str, line_no: int) -> Token | None:
    cols = line.split("\t")
    if len(cols) != N_COLUMNS:
        raise MalformedLineError(
            f"line {line_no}: expected {N_COLUMNS} columns, got {len(cols)}"
        )
    if _is_range_id(cols[0]) or _is_empty_node_id(cols[0]):
        return None
    if not cols[0].isdigit() or int(cols[0]) < 1:
        raise InvalidIdError(f"line {line_no}: bad token id {cols[0]!r}")
    token_id = int(cols[0])
    try:
        head = int(cols[6])
    except ValueError:
        raise InvalidHeadError(f"line {line_no}: bad head {cols[6]!r}") from None
    if head < 0 or head == token_id:
        raise InvalidHeadError(f"line {line_no}: head {head} invalid for token {token_id}")
    try:
        feats = parse_feats(cols[5])
    except MalformedFeatsError as exc:
        raise MalformedFeatsError(f"line {line_no}: {exc}") from None
    return Token(
        id=token_id,
        form=cols[1],
        lemma=cols[2],
        upos=cols[3],
        xpos=None if cols[4] == "_" else cols[4],
        feats=feats,
        head=head,
        deprel=cols[7],
        deps=None if cols[8] == "_" else cols[8],
        misc=None if cols[9] == "_" else cols[9],
    )


def _finish_sentence(
    tokens: list[Token], sent_id: str | None, text: str | None, ordinal: int
) -> Sentence:
    ids = [t.id for t in tokens]
    if ids != list(range(1, len(ids) + 1)):
        raise InvalidIdError(
            f"sentence {sent_id or ordinal}: token ids are not consecutive 1..n: {ids}"
        )
    valid = set(ids)
    for t in tokens:
        if t.head != 0 and t.head not in valid:
            raise InvalidHeadError(
                f"sentence {sent_id or ordinal}: token {t.id} points to missing head {t.head}"
            )
    return Sentence(sent_id=sent_id or str(ordinal), tokens=tuple(tokens), text=text)


def _iter_lines(stream: IO | Iterable[str]) -> Iterator[str]:
    # Byte streams yield bytes lines; \n is unambiguous in UTF-8, so
    # per-line decoding is safe.
    for raw in stream:
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise EncodingError(str(exc)) from None
        yield raw.rstrip("\n").rstrip("\r")


def parse_conllu(stream: IO | Iterable[str], source_path: str = "<stream>") -> Treebank:
    """Parse a CoNLL-U text (or UTF-8 byte) stream into a Treebank.

    Comment ``# sent_id = X`` populates the sentence id; sentences without
    one get their 1-based ordinal as a string. Parsing is deterministic and
    order-preserving.
    """
    sentences: list[Sentence] = []
    tokens: list[Token] = []
    sent_id: str | None = None
    text: str | None = None
    try:
        for line_no, line in enumerate(_iter_lines(stream), start=1):
            if not line:
                if tokens:
                    sentences.append(
                        _finish_sentence(tokens, sent_id, text, len(sentences) + 1)
                    )
                tokens, sent_id, text = [], None, None
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    if key.strip() == "sent_id":
                        sent_id = value.strip()
                    elif key.strip() == "text":
                        text = value.strip()
                continue
            token = _parse_token_line(line, line_no)
            if token is not None:
                tokens.append(token)
    except UnicodeDecodeError as exc:
        raise EncodingError(str(exc)) from None
    if tokens:
        sentences.append(_finish_sentence(tokens, sent_id, text, len(sentences) + 1))
    return Treebank(sentences=tuple(sentences), source_path=source_path)


def parse_conllu_file(path: str | Path) -> Treebank:
    """Parse a CoNLL-U file (UTF-8, LF or CRLF line endings)."""
    path = Path(path)
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path}: {exc}") from None
    return parse_conllu(io.StringIO(text), source_path=str(path))
