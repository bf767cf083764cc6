"""Definition text preparation: CoNLL-U ingestion, a heuristic fallback
tagger, and first-noun extraction with stoplist filtering."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, TextIO

from .errors import ParseError
from .model import Token

log = logging.getLogger(__name__)

# Tags accepted as nominal: proper nouns matter for organization/person terms.
NOMINAL_TAGS = frozenset({"NOUN", "PROPN"})

# Period-terminated short token, e.g. "plur." or "lat.".
_ABBREV_PATTERN = re.compile(r"^\S{1,5}\.$")

_WORD_OR_PUNCT = re.compile(r"\w+(?:-\w+)*|[^\w\s]+")

_SENT_ID_COMMENT = re.compile(r"^#\s*sent_id\s*=\s*(\S+)\s*$")


@dataclass(frozen=True)
class StopConfig:
    """Filters applied before picking a definition's first noun."""

    stop_nouns: frozenset[str] = frozenset()
    stop_phrases: frozenset[str] = frozenset()
    abbreviations: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for name in ("stop_nouns", "stop_phrases", "abbreviations"):
            value = getattr(self, name)
            if not isinstance(value, frozenset):
                object.__setattr__(self, name, frozenset(value))
        for item in self.stop_nouns | self.stop_phrases | self.abbreviations:
            if item != item.lower():
                raise ValueError(f"stoplist entries must be lowercase: {item!r}")
        for phrase in self.stop_phrases:
            if len(phrase.split()) != 2:
                raise ValueError(
                    f"stop phrase must be exactly two tokens (noun, preposition): {phrase!r}"
                )


def parse_stoplist(lines: Iterable[str], path: str | None = None) -> StopConfig:
    """Build a StopConfig from a one-item-per-line listing.

    Items are classified by shape: two-token lines are noun+preposition
    stop phrases, period-terminated tokens are abbreviations, anything
    else is a stop noun. Lines starting with ``#`` are comments.
    """
    nouns: set[str] = set()
    phrases: set[str] = set()
    abbrevs: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        item = raw.strip()
        if not item or item.startswith("#"):
            continue
        item = " ".join(item.lower().split())
        parts = item.split(" ")
        if len(parts) == 2:
            phrases.add(item)
        elif len(parts) > 2:
            raise ParseError(
                f"stop phrases take exactly two tokens, got {item!r}", path, lineno
            )
        elif item.endswith("."):
            abbrevs.add(item)
        else:
            nouns.add(item)
    return StopConfig(frozenset(nouns), frozenset(phrases), frozenset(abbrevs))


def load_stoplist(path: str | Path) -> StopConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read stoplist: {exc}", str(p)) from exc
    return parse_stoplist(text.splitlines(), str(p))


def load_wordlist(path: str | Path) -> frozenset[str]:
    """Plain word list, one item per line, ``#`` comments, lowercased."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read word list: {exc}", str(p)) from exc
    return parse_wordlist(text.splitlines())


def parse_wordlist(lines: Iterable[str]) -> frozenset[str]:
    words = set()
    for raw in lines:
        item = raw.strip()
        if item and not item.startswith("#"):
            words.add(item.lower())
    return frozenset(words)


def ingest_conllu(
    stream: TextIO | Iterable[str],
    id_map: Mapping[str, str] | None = None,
    path: str | None = None,
) -> dict[str, list[Token]]:
    """Read CoNLL-U sentences into per-entry token lists.

    The ``# sent_id`` comment carries the entry id; ``id_map``, when
    given, translates sent_ids to entry ids and any sent_id missing from
    it is skipped with a warning. Multiword-token ranges (id "3-4") and
    empty nodes (id "3.1") are dropped in favor of their parts. Token
    offsets refer to the single-space-joined surface reconstruction; use
    :func:`align_tokens_to_text` to rebase them onto a definition.
    """
    results: dict[str, list[Token]] = {}
    seen_ids: set[str] = set()
    sent_id: str | None = None
    forms: list[tuple[str, str]] = []
    sent_start_line = 0

    def flush(lineno: int) -> None:
        nonlocal sent_id, forms
        if not forms and sent_id is None:
            return
        if sent_id is None:
            raise ParseError("sentence without a # sent_id comment", path, sent_start_line)
        if sent_id in seen_ids:
            raise ParseError(f"duplicate sent_id {sent_id!r}", path, sent_start_line)
        seen_ids.add(sent_id)
        entry_id = sent_id
        if id_map is not None:
            if sent_id not in id_map:
                log.warning("sent_id %r matches no entry; sentence skipped", sent_id)
                sent_id, forms = None, []
                return
            entry_id = id_map[sent_id]
        tokens: list[Token] = []
        pos = 0
        for surface, upos in forms:
            tokens.append(Token(surface, upos, pos, pos + len(surface)))
            pos += len(surface) + 1
        results[entry_id] = tokens
        sent_id, forms = None, []

    lineno = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line:
            flush(lineno)
            continue
        if line.startswith("#"):
            m = _SENT_ID_COMMENT.match(line)
            if m:
                if sent_id is None and not forms:
                    sent_start_line = lineno
                sent_id = m.group(1)
            continue
        if not forms and sent_id is None:
            sent_start_line = lineno
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(
                f"expected 10 tab-separated columns, got {len(cols)}", path, lineno
            )
        token_id = cols[0]
        if "-" in token_id or "." in token_id:
            continue
        forms.append((cols[1], cols[3]))
    flush(lineno + 1)
    return results


def heuristic_tag(text: str, function_words: frozenset[str] | set[str]) -> list[Token]:
    """Fallback tokenizer/tagger used when no CoNLL-U annotation is supplied.

    Whitespace and punctuation tokenization; short period-terminated
    tokens stay whole. Function words, abbreviation-shaped tokens and
    bare punctuation get tag X, everything else NOUN. Callers must flag
    downstream output as heuristically tagged.
    """
    tokens: list[Token] = []
    for chunk in re.finditer(r"\S+", text):
        piece = chunk.group()
        base = chunk.start()
        if _ABBREV_PATTERN.match(piece):
            tokens.append(Token(piece, "X", base, base + len(piece)))
            continue
        for m in _WORD_OR_PUNCT.finditer(piece):
            surface = m.group()
            if not any(ch.isalnum() for ch in surface):
                upos = "X"
            elif surface.lower() in function_words:
                upos = "X"
            else:
                upos = "NOUN"
            tokens.append(Token(surface, upos, base + m.start(), base + m.end()))
    return tokens


def align_tokens_to_text(text: str, tokens: Iterable[Token]) -> list[Token]:
    """Rebase token offsets onto ``text``, ignoring whitespace differences.

    Raises ValueError when the token surfaces do not occur in order in
    the text.
    """
    out: list[Token] = []
    cursor = 0
    for tok in tokens:
        while cursor < len(text) and text[cursor].isspace():
            cursor += 1
        if not text.startswith(tok.surface, cursor):
            raise ValueError(
                f"token {tok.surface!r} does not align with text at offset {cursor}"
            )
        out.append(Token(tok.surface, tok.upos, cursor, cursor + len(tok.surface)))
        cursor += len(tok.surface)
    return out


def extract_first_noun(tokens: Iterable[Token], stops: StopConfig) -> str | None:
    """First semantically loaded noun of a definition, lowercased.

    Scans left to right skipping configured abbreviations, stop nouns
    and nouns heading a stop phrase; absence of a noun is a valid
    outcome, not an error.
    """
    toks = list(tokens)
    for i, tok in enumerate(toks):
        surface = tok.surface.lower()
        if surface in stops.abbreviations:
            continue
        if tok.upos not in NOMINAL_TAGS:
            continue
        if surface in stops.stop_nouns:
            continue
        if i + 1 < len(toks):
            pair = f"{surface} {toks[i + 1].surface.lower()}"
            if pair in stops.stop_phrases:
                continue
        return surface
    return None
