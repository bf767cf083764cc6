"""Ingestion of external terminology resources under declarative specs,
merging with mapped dictionary output, deduplication, and the
overlap-based automatic correction of mapped categories."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import MergeConflictError, ParseError
from .model import Category, LexiconRecord, MappingOutcome, normalize_term, parse_category

# The automatically mapped dictionary ranks below every curated resource
# unless the caller says otherwise.
DEFAULT_MAPPED_NAME = "MO"
DEFAULT_MAPPED_RANK = 100


class ResourceMode(enum.Enum):
    FIXED = "FIXED"
    PER_ENTRY = "PER_ENTRY"
    CHAPTERED = "CHAPTERED"


# Sentinel used in chapter rules: rows under this "category" are dropped.
EXCLUDE = "EXCLUDE"


@dataclass(frozen=True)
class ChapterRule:
    chapter: str
    category: Category | None  # None means exclude

    def matches(self, chapter: str) -> bool:
        return chapter.strip().lower() == self.chapter.strip().lower()


@dataclass(frozen=True)
class ResourceSpec:
    """Declarative description of one external terminology source."""

    name: str
    file: str
    mode: ResourceMode
    trust_rank: int
    category: Category | None = None
    chapter_rules: tuple[ChapterRule, ...] = ()
    chapter_default: Category | None = None
    layout: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode is ResourceMode.FIXED and self.category is None:
            raise ValueError(f"resource {self.name}: FIXED mode needs a category")
        if self.mode is ResourceMode.CHAPTERED and not self.chapter_rules:
            raise ValueError(f"resource {self.name}: CHAPTERED mode needs chapter rules")
        if not self.layout:
            object.__setattr__(self, "layout", self._default_layout())
        if "term" not in self.layout:
            raise ValueError(f"resource {self.name}: layout must place the term column")
        if self.mode is ResourceMode.PER_ENTRY and "category" not in self.layout:
            raise ValueError(f"resource {self.name}: PER_ENTRY layout needs a category column")
        if self.mode is ResourceMode.CHAPTERED and "chapter" not in self.layout:
            raise ValueError(f"resource {self.name}: CHAPTERED layout needs a chapter column")

    def _default_layout(self) -> dict[str, int]:
        if self.mode is ResourceMode.PER_ENTRY:
            return {"term": 0, "category": 1}
        if self.mode is ResourceMode.CHAPTERED:
            return {"term": 0, "chapter": 1}
        return {"term": 0}

    def category_descriptor(self) -> str:
        """Short per-resource category summary, for report rows."""
        if self.mode is ResourceMode.FIXED:
            return str(self.category)
        return "Multiple"


@dataclass(frozen=True)
class SourceRecord:
    """One categorized term with its origin and trust."""

    term: str
    category: Category
    source: str
    provenance: str
    trust_rank: int


@dataclass(frozen=True)
class IngestResult:
    name: str
    records: tuple[SourceRecord, ...]
    ingested: int
    excluded: int

    @property
    def kept(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Correction:
    """A mapped-dictionary category overridden by a trusted resource."""

    term: str
    old_category: Category
    new_category: Category
    resource: str


@dataclass(frozen=True)
class MergeReport:
    resource_counts: tuple[tuple[str, int, int, int], ...]  # name, ingested, kept, excluded
    overlap_pairs: tuple[tuple[str, str, int], ...]
    corrections: tuple[Correction, ...]
    category_counts: dict[str, int]
    total: int


def load_manifest(path: str | Path) -> list[ResourceSpec]:
    """Resource manifest, JSON (list of objects) or TSV.

    TSV columns: name, file, mode, category-or-rules, trust_rank, layout.
    Rules use ``chapter=CATEGORY`` pairs joined by ``;`` with ``*`` for
    the default; layout uses ``field=column`` pairs joined by ``,``.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read manifest: {exc}", str(p)) from exc
    if p.suffix.lower() == ".json":
        specs = _manifest_from_json(text, str(p))
    else:
        specs = _manifest_from_tsv(text, str(p))
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ParseError("duplicate resource names in manifest", str(p))
    return specs


def _parse_rules(
    raw_rules: Iterable[tuple[str, str]], path: str, name: str
) -> tuple[tuple[ChapterRule, ...], Category | None]:
    rules: list[ChapterRule] = []
    default: Category | None = None
    for chapter, label in raw_rules:
        category = None if label.strip().upper() == EXCLUDE else parse_category(label)
        if chapter.strip() == "*":
            if category is None:
                raise ParseError(f"resource {name}: default rule cannot exclude", path)
            default = category
        else:
            rules.append(ChapterRule(chapter, category))
    return tuple(rules), default


def _manifest_from_json(text: str, path: str) -> list[ResourceSpec]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON manifest: {exc}", path) from None
    if not isinstance(data, list):
        raise ParseError("manifest must be a JSON list of resources", path)
    specs = []
    for i, obj in enumerate(data, start=1):
        try:
            mode = ResourceMode[str(obj["mode"]).strip().upper().replace("-", "_")]
            raw_rules = [
                (str(r["chapter"]), str(r["category"])) for r in obj.get("rules", [])
            ]
            if "default" in obj and obj["default"] is not None:
                raw_rules.append(("*", str(obj["default"])))
            rules, default = _parse_rules(raw_rules, path, str(obj.get("name", i)))
            layout = {str(k): int(v) for k, v in obj.get("layout", {}).items()}
            spec = ResourceSpec(
                name=str(obj["name"]),
                file=str(obj["file"]),
                mode=mode,
                trust_rank=int(obj["trust_rank"]),
                category=parse_category(str(obj["category"])) if obj.get("category") else None,
                chapter_rules=rules,
                chapter_default=default,
                layout=layout,
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"resource #{i}: {exc}", path) from None
        specs.append(spec)
    return specs


def _manifest_from_tsv(text: str, path: str) -> list[ResourceSpec]:
    specs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 6:
            raise ParseError(
                f"expected name<TAB>file<TAB>mode<TAB>category-or-rules<TAB>trust_rank"
                f"<TAB>layout, got {len(cols)} columns",
                path,
                lineno,
            )
        name, file, mode_s, cat_or_rules, rank_s, layout_s = cols
        try:
            mode = ResourceMode[mode_s.strip().upper().replace("-", "_")]
            layout = {}
            for pair in layout_s.split(","):
                if pair.strip():
                    k, _, v = pair.partition("=")
                    layout[k.strip()] = int(v)
            category = None
            rules: tuple[ChapterRule, ...] = ()
            default = None
            if mode is ResourceMode.FIXED:
                category = parse_category(cat_or_rules)
            elif mode is ResourceMode.CHAPTERED:
                raw_rules = []
                for pair in cat_or_rules.split(";"):
                    chapter, _, label = pair.partition("=")
                    raw_rules.append((chapter, label))
                rules, default = _parse_rules(raw_rules, path, name)
            spec = ResourceSpec(
                name=name.strip(),
                file=file.strip(),
                mode=mode,
                trust_rank=int(rank_s),
                category=category,
                chapter_rules=rules,
                chapter_default=default,
                layout=layout,
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(str(exc), path, lineno) from None
        specs.append(spec)
    return specs


def ingest_resource(spec: ResourceSpec, base_dir: str | Path | None = None) -> IngestResult:
    """Read one resource file into categorized records.

    FIXED stamps the spec category on every row; PER_ENTRY reads the
    category column; CHAPTERED routes rows through the chapter rules,
    dropping rows whose rule says exclude.
    """
    p = Path(spec.file)
    if base_dir is not None and not p.is_absolute():
        p = Path(base_dir) / p
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read resource {spec.name}: {exc}", str(p)) from exc
    need = max(spec.layout.values()) + 1
    records: list[SourceRecord] = []
    ingested = excluded = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < need:
            raise ParseError(
                f"resource {spec.name}: expected at least {need} columns, got {len(cols)}",
                str(p),
                lineno,
            )
        term = cols[spec.layout["term"]].strip()
        if not term:
            raise ParseError(f"resource {spec.name}: empty term", str(p), lineno)
        ingested += 1
        if spec.mode is ResourceMode.FIXED:
            category = spec.category
        elif spec.mode is ResourceMode.PER_ENTRY:
            try:
                category = parse_category(cols[spec.layout["category"]])
            except ValueError as exc:
                raise ParseError(f"resource {spec.name}: {exc}", str(p), lineno) from None
        else:
            chapter = cols[spec.layout["chapter"]]
            category = _route_chapter(spec, chapter, str(p), lineno)
            if category is None:
                excluded += 1
                continue
        assert category is not None
        records.append(SourceRecord(term, category, spec.name, spec.name, spec.trust_rank))
    return IngestResult(spec.name, tuple(records), ingested, excluded)


def _route_chapter(
    spec: ResourceSpec, chapter: str, path: str, lineno: int
) -> Category | None:
    for rule in spec.chapter_rules:
        if rule.matches(chapter):
            return rule.category
    if spec.chapter_default is None:
        raise ParseError(
            f"resource {spec.name}: chapter {chapter!r} matches no rule and "
            "the spec has no default",
            path,
            lineno,
        )
    return spec.chapter_default


def mapped_records(
    outcomes: Iterable[MappingOutcome],
    name: str = DEFAULT_MAPPED_NAME,
    trust_rank: int = DEFAULT_MAPPED_RANK,
) -> IngestResult:
    """Mapped dictionary outcomes as a mergeable source; unmapped entries
    are counted as excluded."""
    records = []
    ingested = excluded = 0
    for o in outcomes:
        ingested += 1
        if o.category is None:
            excluded += 1
            continue
        records.append(SourceRecord(o.term, o.category, name, str(o.provenance), trust_rank))
    return IngestResult(name, tuple(records), ingested, excluded)


def merge_lexicons(
    mapped: IngestResult | None,
    resources: Sequence[IngestResult],
    lowercase: bool = True,
) -> tuple[list[LexiconRecord], MergeReport]:
    """Merge all sources into one deduplicated lexicon.

    Groups records by normalized term. Within a group the category of
    the lowest trust rank wins; a mapped-dictionary category overridden
    by a more trusted resource is logged as a correction. Disagreements
    between equal lowest ranks are refused.
    """
    sources = ([mapped] if mapped is not None else []) + list(resources)
    mapped_name = mapped.name if mapped is not None else None

    groups: dict[str, list[SourceRecord]] = {}
    for result in sources:
        for record in result.records:
            key = normalize_term(record.term, lowercase)
            groups.setdefault(key, []).append(record)

    conflicts: list[tuple[str, str, str, str, str]] = []
    corrections: list[Correction] = []
    records: list[LexiconRecord] = []
    pair_counts: dict[tuple[str, str], int] = {}

    for key in sorted(groups):
        group = groups[key]
        best_rank = min(r.trust_rank for r in group)
        winners = [r for r in group if r.trust_rank == best_rank]
        winner = winners[0]
        for other in winners[1:]:
            if other.category is not winner.category:
                conflicts.append(
                    (key, winner.source, str(winner.category), other.source, str(other.category))
                )
        group_sources = {r.source for r in group}
        for a in sorted(group_sources):
            for b in sorted(group_sources):
                if a < b:
                    pair_counts[(a, b)] = pair_counts.get((a, b), 0) + 1
        if mapped_name is not None and winner.source != mapped_name:
            for r in group:
                if r.source == mapped_name and r.category is not winner.category:
                    corrections.append(
                        Correction(r.term, r.category, winner.category, winner.source)
                    )
                    break
        records.append(
            LexiconRecord(
                term=winner.term,
                normalized_term=key,
                category=winner.category,
                sources=frozenset(group_sources),
                provenance=winner.provenance,
            )
        )

    if conflicts:
        raise MergeConflictError(conflicts)

    category_counts: dict[str, int] = {}
    for record in records:
        category_counts[str(record.category)] = category_counts.get(str(record.category), 0) + 1

    report = MergeReport(
        resource_counts=tuple(
            (res.name, res.ingested, res.kept, res.excluded) for res in sources
        ),
        overlap_pairs=tuple(
            (a, b, n) for (a, b), n in sorted(pair_counts.items())
        ),
        corrections=tuple(corrections),
        category_counts=category_counts,
        total=len(records),
    )
    return records, report


def apply_corrections(
    outcomes: Iterable[MappingOutcome], corrections: Iterable[Correction]
) -> list[MappingOutcome]:
    """Annotate outcomes whose category a resource overrode.

    Only ``corrected_by`` is set; the outcome keeps its original category
    and votes (the corrected category lives in the merged lexicon).
    """
    by_term = {normalize_term(c.term): c.resource for c in corrections}
    out = []
    for o in outcomes:
        resource = by_term.get(normalize_term(o.term)) if o.category is not None else None
        if resource is None:
            out.append(o)
        else:
            out.append(replace(o, corrected_by=resource))
    return out


def format_merge_report(report: MergeReport) -> str:
    width = max([len("resource")] + [len(name) for name, *_ in report.resource_counts])
    lines = [f"{'resource'.ljust(width)}  ingested  kept  excluded"]
    for name, ingested, kept, excluded in report.resource_counts:
        lines.append(f"{name.ljust(width)}  {str(ingested).rjust(8)}  {str(kept).rjust(4)}  {str(excluded).rjust(8)}")
    lines.append("")
    if report.overlap_pairs:
        lines.append("overlapping terms between sources")
        for a, b, n in report.overlap_pairs:
            lines.append(f"  {a} & {b}: {n}")
        lines.append("")
    if report.corrections:
        lines.append("corrections applied to mapped categories")
        for c in report.corrections:
            lines.append(f"  {c.term}: {c.old_category} -> {c.new_category} (by {c.resource})")
        lines.append("")
    rows = sorted(report.category_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    cat_width = max([len("category")] + [len(k) for k, _ in rows])
    lines.append(f"{'category'.ljust(cat_width)}  entries")
    for name, n in rows:
        lines.append(f"{name.ljust(cat_width)}  {n}")
    lines.append(f"{'total'.ljust(cat_width)}  {report.total}")
    return "\n".join(lines) + "\n"


def render_lexicon(records: Sequence[LexiconRecord], fmt: str = "tsv") -> str:
    lines = []
    if fmt == "jsonl":
        for r in records:
            lines.append(
                json.dumps(
                    {
                        "term": r.term,
                        "category": str(r.category),
                        "sources": sorted(r.sources),
                        "provenance": r.provenance,
                    },
                    ensure_ascii=False,
                )
            )
    else:
        lines.append("term\tcategory\tsources\tprovenance")
        for r in records:
            lines.append(
                "\t".join((r.term, str(r.category), ",".join(sorted(r.sources)), r.provenance))
            )
    return "\n".join(lines) + "\n"


def export_lexicon(
    records: Sequence[LexiconRecord], path: str | Path, fmt: str | None = None
) -> None:
    """Write the merged lexicon as TSV (default) or JSON-lines, with a
    stable ordering; callers pass records already sorted by merge."""
    if fmt is None:
        fmt = "jsonl" if Path(path).suffix.lower() in (".jsonl", ".json", ".ndjson") else "tsv"
    Path(path).write_text(render_lexicon(records, fmt), encoding="utf-8")


def read_lexicon(path: str | Path) -> list[LexiconRecord]:
    """Read back an exported TSV lexicon (used by evaluation commands)."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read lexicon: {exc}", str(p)) from exc
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if lineno == 1 and raw.startswith("term\t"):
            continue
        cols = raw.split("\t")
        if len(cols) != 4:
            raise ParseError(f"expected 4 columns, got {len(cols)}", str(p), lineno)
        term, category, sources, provenance = cols
        records.append(
            LexiconRecord(
                term=term,
                normalized_term=normalize_term(term),
                category=parse_category(category),
                sources=frozenset(sources.split(",")) if sources else frozenset(),
                provenance=provenance,
            )
        )
    return records
