"""Orchestration: runs the voting strategies over a dictionary, resolves
votes with the fixed precedence, applies the iterative second pass, and
serializes outcomes."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ParseError
from .model import (
    STRATEGY_PRIORITY,
    Category,
    Definition,
    Entry,
    MappingOutcome,
    Provenance,
    Strategy,
    Token,
    Vote,
    normalize_term,
    parse_category,
)
from .strategies import KeywordTable, SuffixTable, kw_entry_vote, kw_firstnoun_vote, suffix_vote
from .textprep import StopConfig, align_tokens_to_text, extract_first_noun, heuristic_tag

log = logging.getLogger(__name__)

OUTCOME_HEADER = ("id", "term", "category", "provenance", "votes")


def resolve_votes(votes: Sequence[Vote]) -> tuple[Category | None, Provenance]:
    """Resolve per-strategy votes into one category with provenance.

    Unanimous multi-strategy agreement becomes MULTI; any disagreement
    falls back to the highest-priority voter (SUFF > KW_E > KW_1N).
    """
    strategies = [v.strategy for v in votes]
    if len(set(strategies)) != len(strategies):
        raise ValueError("more than one vote from the same strategy")
    if not votes:
        return None, Provenance.UNMAPPED
    if len(votes) == 1:
        only = votes[0]
        return only.category, Provenance[only.strategy.value]
    if len({v.category for v in votes}) == 1:
        return votes[0].category, Provenance.MULTI
    by_strategy = {v.strategy: v for v in votes}
    for strategy in STRATEGY_PRIORITY:
        winner = by_strategy.get(strategy)
        if winner is not None:
            return winner.category, Provenance[strategy.value]
    raise AssertionError("unreachable: votes carry unknown strategies")


def entry_votes(
    entry: Entry,
    suffixes: SuffixTable,
    keywords: KeywordTable,
    stops: StopConfig,
) -> list[Vote]:
    """All strategy votes for one entry, in priority order."""
    term = normalize_term(entry.term)
    votes = []
    vote = suffix_vote(term, suffixes)
    if vote is not None:
        votes.append(vote)
    vote = kw_entry_vote(term, keywords)
    if vote is not None:
        votes.append(vote)
    vote = kw_firstnoun_vote(_first_noun(entry, stops), keywords)
    if vote is not None:
        votes.append(vote)
    return votes


def _first_noun(entry: Entry, stops: StopConfig) -> str | None:
    sense = entry.first_sense()
    if sense is None or sense.tokens is None:
        return None
    return extract_first_noun(sense.tokens, stops)


def map_dictionary(
    entries: Sequence[Entry],
    suffixes: SuffixTable,
    keywords: KeywordTable,
    stops: StopConfig,
    iter_rounds: int = 1,
) -> list[MappingOutcome]:
    """Run the full mapping over a dictionary, in input order.

    Pass 0 resolves strategy votes per entry; each of the following
    ``iter_rounds`` passes assigns a still-unmapped entry the category of
    an already-mapped entry whose term equals the definition's first
    noun (provenance ITER). Passes are barriers: an assignment becomes
    visible to lookups only in the next round.
    """
    if iter_rounds < 0:
        raise ValueError("iter_rounds must be >= 0")
    seen_ids: set[str] = set()
    for entry in entries:
        if entry.id in seen_ids:
            raise ValueError(f"duplicate entry id {entry.id!r}")
        seen_ids.add(entry.id)

    outcomes: list[MappingOutcome] = []
    first_nouns: list[str | None] = []
    for entry in entries:
        votes = entry_votes(entry, suffixes, keywords, stops)
        category, provenance = resolve_votes(votes)
        outcomes.append(
            MappingOutcome(entry.id, entry.term, category, provenance, tuple(votes))
        )
        first_nouns.append(_first_noun(entry, stops))

    warned: set[str] = set()
    for _ in range(iter_rounds):
        index: dict[str, Category] = {}
        for entry, outcome in zip(entries, outcomes):
            if outcome.category is None:
                continue
            key = normalize_term(entry.term)
            if key not in index:
                index[key] = outcome.category
            elif index[key] is not outcome.category and key not in warned:
                log.warning(
                    "term %r mapped to both %s and %s; ITER uses the earliest",
                    key,
                    index[key],
                    outcome.category,
                )
                warned.add(key)
        changed = False
        for i, outcome in enumerate(outcomes):
            if outcome.category is not None or first_nouns[i] is None:
                continue
            category = index.get(normalize_term(first_nouns[i]))
            if category is not None:
                outcomes[i] = MappingOutcome(
                    outcome.entry_id, outcome.term, category, Provenance.ITER
                )
                changed = True
        if not changed:
            break

    for outcome in outcomes:
        outcome.validate()
    return outcomes


@dataclass(frozen=True)
class MappingStats:
    """Frequency tables over a mapping run."""

    category_counts: dict[str, int]
    provenance_counts: dict[str, int]
    disagreements: int
    mapped: int
    unmapped: int

    @property
    def total(self) -> int:
        return self.mapped + self.unmapped


def mapping_stats(outcomes: Iterable[MappingOutcome]) -> MappingStats:
    category_counts: dict[str, int] = {}
    provenance_counts: dict[str, int] = {}
    disagreements = 0
    mapped = unmapped = 0
    for outcome in outcomes:
        provenance_counts[str(outcome.provenance)] = (
            provenance_counts.get(str(outcome.provenance), 0) + 1
        )
        if outcome.category is None:
            unmapped += 1
        else:
            mapped += 1
            category_counts[str(outcome.category)] = (
                category_counts.get(str(outcome.category), 0) + 1
            )
        if len({v.category for v in outcome.votes}) > 1:
            disagreements += 1
    return MappingStats(category_counts, provenance_counts, disagreements, mapped, unmapped)


def format_stats(stats: MappingStats, heuristic_tagging: bool = False) -> str:
    """Render the two frequency tables the map command prints."""

    def table(title: str, counts: dict[str, int], footer: list[tuple[str, int]]) -> list[str]:
        rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        width = max([len(title)] + [len(k) for k, _ in rows] + [len(k) for k, _ in footer])
        lines = [f"{title.ljust(width)}  entries"]
        for name, n in rows:
            lines.append(f"{name.ljust(width)}  {n}")
        for name, n in footer:
            lines.append(f"{name.ljust(width)}  {n}")
        return lines

    lines = table(
        "category",
        stats.category_counts,
        [("total mapped", stats.mapped), ("not mapped", stats.unmapped), ("total", stats.total)],
    )
    lines.append("")
    lines += table(
        "strategy",
        stats.provenance_counts,
        [("disagreements", stats.disagreements)],
    )
    if heuristic_tagging:
        lines.append("")
        lines.append("tagging: heuristic (no CoNLL-U annotation supplied)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# dictionary and outcome I/O


def _sniff_format(path: str | Path, fmt: str | None) -> str:
    if fmt:
        return fmt
    suffix = Path(path).suffix.lower()
    return "jsonl" if suffix in (".jsonl", ".json", ".ndjson") else "tsv"


def _check_term_chars(term: str, path: str | None, lineno: int) -> None:
    if "\t" in term or "\n" in term or "\r" in term:
        raise ParseError("terms must not contain tabs or newlines", path, lineno)


def read_dictionary(path: str | Path, fmt: str | None = None) -> list[Entry]:
    """Load dictionary entries from TSV (id, term, definition[, synonym_of])
    or JSON-lines with the same fields (plus multi-sense ``definitions``)."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read dictionary: {exc}", str(p)) from exc
    entries: list[Entry] = []
    seen: set[str] = set()
    use = _sniff_format(p, fmt)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if use == "jsonl":
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", str(p), lineno) from None
            entry_id = str(obj.get("id", "")).strip()
            term = str(obj.get("term", ""))
            if "definitions" in obj:
                defs = [str(d) for d in obj["definitions"]]
            else:
                one = str(obj.get("definition", "") or "")
                defs = [one] if one else []
            synonym_of = obj.get("synonym_of") or None
        else:
            cols = raw.split("\t")
            if len(cols) not in (3, 4):
                raise ParseError(
                    f"expected id<TAB>term<TAB>definition[<TAB>synonym_of], got "
                    f"{len(cols)} columns",
                    str(p),
                    lineno,
                )
            entry_id, term = cols[0].strip(), cols[1]
            defs = [cols[2]] if cols[2].strip() else []
            synonym_of = cols[3].strip() or None if len(cols) == 4 else None
        if not entry_id:
            raise ParseError("missing entry id", str(p), lineno)
        if entry_id in seen:
            raise ParseError(f"duplicate entry id {entry_id!r}", str(p), lineno)
        seen.add(entry_id)
        _check_term_chars(term, str(p), lineno)
        if not term.strip():
            raise ParseError("empty term", str(p), lineno)
        senses = tuple(Definition(d) for d in defs)
        entries.append(Entry(entry_id, term.strip(), senses, synonym_of))
    return entries


def attach_tokens(
    entries: Sequence[Entry],
    conllu_tokens: Mapping[str, list[Token]] | None = None,
    function_words: frozenset[str] | None = None,
) -> tuple[list[Entry], bool]:
    """Attach tokens to each entry's first sense.

    CoNLL-U tokens win when present for an entry (offsets are re-aligned
    to the definition text); otherwise the heuristic tagger fills in when
    a function-word list is supplied. Returns the new entries and whether
    any heuristic tagging happened.
    """
    out: list[Entry] = []
    heuristic_used = False
    for entry in entries:
        sense = entry.first_sense()
        if sense is None or sense.tokens is not None:
            out.append(entry)
            continue
        tokens: tuple[Token, ...] | None = None
        if conllu_tokens is not None and entry.id in conllu_tokens:
            try:
                tokens = tuple(align_tokens_to_text(sense.text, conllu_tokens[entry.id]))
            except ValueError as exc:
                raise ParseError(f"entry {entry.id}: {exc}") from None
        elif function_words is not None:
            tokens = tuple(heuristic_tag(sense.text, function_words))
            heuristic_used = True
        if tokens is None:
            out.append(entry)
            continue
        senses = (Definition(sense.text, tokens),) + entry.senses[1:]
        out.append(Entry(entry.id, entry.term, senses, entry.synonym_of))
    return out, heuristic_used


def resolve_synonyms(entries: Sequence[Entry]) -> list[Entry]:
    """Give definition-less synonym entries their target's senses.

    Synonyms remain standalone entries; only the senses are shared.
    """
    by_id = {e.id: e for e in entries}
    out: list[Entry] = []
    for entry in entries:
        if entry.synonym_of is None or entry.senses:
            out.append(entry)
            continue
        target_id = entry.synonym_of
        visited = {entry.id}
        senses: tuple[Definition, ...] = ()
        while True:
            target = by_id.get(target_id)
            if target is None:
                raise ParseError(
                    f"entry {entry.id}: synonym_of points to unknown id {target_id!r}"
                )
            if target.id in visited:
                raise ParseError(f"entry {entry.id}: synonym chain loops")
            visited.add(target.id)
            if target.senses or target.synonym_of is None:
                senses = target.senses
                break
            target_id = target.synonym_of
        out.append(Entry(entry.id, entry.term, senses, entry.synonym_of))
    return out


def format_votes(votes: Iterable[Vote]) -> str:
    parts = []
    for v in votes:
        pos = "-" if v.position is None else str(v.position)
        parts.append(f"{v.strategy}:{v.category}:{v.trigger}:{pos}")
    return ";".join(parts)


def parse_votes(text: str) -> tuple[Vote, ...]:
    votes = []
    if not text:
        return ()
    for part in text.split(";"):
        fields = part.split(":")
        if len(fields) != 4:
            raise ValueError(f"bad vote serialization: {part!r}")
        strategy, category, trigger, pos = fields
        votes.append(
            Vote(
                Strategy[strategy],
                parse_category(category),
                trigger,
                None if pos == "-" else int(pos),
            )
        )
    return tuple(votes)


def render_outcomes(outcomes: Iterable[MappingOutcome], fmt: str = "tsv") -> str:
    lines = []
    if fmt == "jsonl":
        for o in outcomes:
            obj = {
                "id": o.entry_id,
                "term": o.term,
                "category": str(o.category) if o.category else None,
                "provenance": str(o.provenance),
                "votes": format_votes(o.votes),
            }
            lines.append(json.dumps(obj, ensure_ascii=False))
    else:
        lines.append("\t".join(OUTCOME_HEADER))
        for o in outcomes:
            lines.append(
                "\t".join(
                    (
                        o.entry_id,
                        o.term,
                        str(o.category) if o.category else "",
                        str(o.provenance),
                        format_votes(o.votes),
                    )
                )
            )
    return "\n".join(lines) + "\n"


def write_outcomes(outcomes: Iterable[MappingOutcome], path: str | Path, fmt: str | None = None) -> None:
    Path(path).write_text(
        render_outcomes(outcomes, _sniff_format(path, fmt)), encoding="utf-8"
    )


def read_outcomes(path: str | Path, fmt: str | None = None) -> list[MappingOutcome]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read outcomes: {exc}", str(p)) from exc
    use = _sniff_format(p, fmt)
    outcomes = []
    rows = text.splitlines()
    for lineno, raw in enumerate(rows, start=1):
        if not raw.strip():
            continue
        try:
            if use == "jsonl":
                obj = json.loads(raw)
                category = parse_category(obj["category"]) if obj.get("category") else None
                outcomes.append(
                    MappingOutcome(
                        str(obj["id"]),
                        str(obj["term"]),
                        category,
                        Provenance[str(obj["provenance"])],
                        parse_votes(str(obj.get("votes", ""))),
                    )
                )
            else:
                if lineno == 1 and raw.split("\t")[:2] == ["id", "term"]:
                    continue
                cols = raw.split("\t")
                if len(cols) != 5:
                    raise ValueError(f"expected 5 columns, got {len(cols)}")
                category = parse_category(cols[2]) if cols[2] else None
                outcomes.append(
                    MappingOutcome(
                        cols[0], cols[1], category, Provenance[cols[3]], parse_votes(cols[4])
                    )
                )
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad outcome row: {exc}", str(p), lineno) from None
    return outcomes
