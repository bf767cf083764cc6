"""Domain types and normalization shared by the whole toolkit.

Everything here is an immutable value: safe to share across threads
and to use as dict keys where hashable.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass, field


class Category(enum.Enum):
    """The twelve assignable entity types plus the gold-only OTHER label."""

    ABBREV = "ABBREV"
    ANAT_LOC = "ANAT_LOC"
    CONDITION = "CONDITION"
    DISCIPLINE = "DISCIPLINE"
    MICROORG = "MICROORG"
    ORGANIZATION = "ORGANIZATION"
    PERSON = "PERSON"
    PHYSIOLOGY = "PHYSIOLOGY"
    PROCEDURE = "PROCEDURE"
    SERVICE = "SERVICE"
    SUBSTANCE = "SUBSTANCE"
    TOOL = "TOOL"
    # Accepted in gold-label files only; never produced by mapping.
    OTHER = "OTHER"

    def __str__(self) -> str:
        return self.value


ASSIGNABLE_CATEGORIES: tuple[Category, ...] = tuple(
    c for c in Category if c is not Category.OTHER
)

# Alternate spellings tolerated on input (hyphenated table form, long form).
_CATEGORY_ALIASES = {
    "MICROORGANISM": Category.MICROORG,
}


def parse_category(label: str, allow_other: bool = False) -> Category:
    """Parse a category label; hyphen and underscore forms are equivalent.

    Raises ValueError for anything outside the scheme, or for OTHER
    unless ``allow_other`` is set.
    """
    key = label.strip().upper().replace("-", "_")
    cat = _CATEGORY_ALIASES.get(key)
    if cat is None:
        try:
            cat = Category[key]
        except KeyError:
            raise ValueError(f"unknown category label: {label!r}") from None
    if cat is Category.OTHER and not allow_other:
        raise ValueError("OTHER is a gold-only label, not assignable")
    return cat


class Strategy(enum.Enum):
    """Vote-producing strategies."""

    SUFF = "SUFF"
    KW_E = "KW_E"
    KW_1N = "KW_1N"

    def __str__(self) -> str:
        return self.value


class Provenance(enum.Enum):
    """How a mapping outcome got its category."""

    SUFF = "SUFF"
    KW_E = "KW_E"
    KW_1N = "KW_1N"
    MULTI = "MULTI"
    ITER = "ITER"
    UNMAPPED = "UNMAPPED"

    def __str__(self) -> str:
        return self.value


# Priority order used to resolve disagreeing votes.
STRATEGY_PRIORITY: tuple[Strategy, ...] = (Strategy.SUFF, Strategy.KW_E, Strategy.KW_1N)


_WS_RUN = re.compile(r"\s+")


def normalize_term(raw: str, lowercase: bool = True) -> str:
    """Canonical form of a term: NFC, trimmed, inner whitespace collapsed.

    Lowercasing is unicode-aware and applied only when ``lowercase`` is on.
    Raises ValueError if nothing is left after trimming.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _WS_RUN.sub(" ", text).strip()
    if not text:
        raise ValueError("empty term")
    if lowercase:
        text = text.lower()
    return text


@dataclass(frozen=True)
class Token:
    """One token of a definition with its universal POS tag."""

    surface: str
    upos: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(
                f"bad token offsets [{self.start}, {self.end}) for {self.surface!r}"
            )


@dataclass(frozen=True)
class Definition:
    """Definition text, optionally with token/POS annotation attached.

    Token offsets must index into ``text`` in order without overlaps;
    CoNLL-U tokens need re-alignment (textprep.align_tokens_to_text)
    before they can be attached.
    """

    text: str
    tokens: tuple[Token, ...] | None = None

    def __post_init__(self) -> None:
        if self.tokens is None:
            return
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        prev_end = 0
        for tok in self.tokens:
            if tok.start < prev_end:
                raise ValueError(f"tokens overlap or are unordered at {tok.surface!r}")
            if self.text[tok.start : tok.end] != tok.surface:
                raise ValueError(
                    f"token {tok.surface!r} does not match text at "
                    f"[{tok.start}, {tok.end})"
                )
            prev_end = tok.end


@dataclass(frozen=True)
class Entry:
    """A dictionary headword with its senses.

    Synonyms are standalone entries that share a definition with the
    entry they point to via ``synonym_of``.
    """

    id: str
    term: str
    senses: tuple[Definition, ...] = ()
    synonym_of: str | None = None

    def __post_init__(self) -> None:
        if not self.term.strip():
            raise ValueError(f"entry {self.id}: empty term")
        if not isinstance(self.senses, tuple):
            object.__setattr__(self, "senses", tuple(self.senses))

    def first_sense(self) -> Definition | None:
        """Only the first sense is ever consulted by the mapping."""
        return self.senses[0] if self.senses else None


@dataclass(frozen=True)
class Vote:
    """One strategy's category proposal for an entry.

    ``position`` is the character index of a containment match; it is
    None for suffix matches and exact keyword matches.
    """

    strategy: Strategy
    category: Category
    trigger: str
    position: int | None = None


@dataclass(frozen=True)
class MappingOutcome:
    """Resolved category with provenance for one entry."""

    entry_id: str
    term: str
    category: Category | None
    provenance: Provenance
    votes: tuple[Vote, ...] = ()
    corrected_by: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.votes, tuple):
            object.__setattr__(self, "votes", tuple(self.votes))

    def validate(self) -> None:
        """Check the provenance/vote consistency rules; raise on violation."""
        if (self.category is None) != (self.provenance is Provenance.UNMAPPED):
            raise ValueError(
                f"{self.entry_id}: category must be absent iff provenance is UNMAPPED"
            )
        if self.provenance is Provenance.MULTI:
            if len(self.votes) < 2:
                raise ValueError(f"{self.entry_id}: MULTI needs at least two votes")
            if any(v.category is not self.category for v in self.votes):
                raise ValueError(f"{self.entry_id}: MULTI votes must all agree")
        if self.provenance.value in Strategy.__members__:
            strat = Strategy[self.provenance.value]
            match = [v for v in self.votes if v.strategy is strat]
            if not match or match[0].category is not self.category:
                raise ValueError(
                    f"{self.entry_id}: winning strategy {strat} missing from votes "
                    "or category mismatch"
                )
        if self.provenance is Provenance.ITER and self.votes:
            raise ValueError(f"{self.entry_id}: ITER outcomes carry no votes")


@dataclass(frozen=True)
class LexiconRecord:
    """One merged, deduplicated row of the final lexicon."""

    term: str
    normalized_term: str
    category: Category
    sources: frozenset[str] = field(default_factory=frozenset)
    provenance: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.sources, frozenset):
            object.__setattr__(self, "sources", frozenset(self.sources))
