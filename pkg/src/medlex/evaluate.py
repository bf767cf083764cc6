"""Evaluation protocols: overlap accuracy against external resources,
gold-label precision/recall with confusion matrix and label merging,
per-strategy accuracy, and stratified sampling for manual annotation."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import GoldCoverageError, ParseError
from .merge import SourceRecord
from .model import (
    ASSIGNABLE_CATEGORIES,
    Category,
    MappingOutcome,
    Provenance,
    normalize_term,
    parse_category,
)

# Sampling strata: the three base strategies plus the two derived ones.
SAMPLE_STRATA: tuple[Provenance, ...] = (
    Provenance.SUFF,
    Provenance.KW_E,
    Provenance.KW_1N,
    Provenance.MULTI,
    Provenance.ITER,
)


def pct1(num: int, den: int) -> str:
    """Percentage with one decimal, exact integer arithmetic, half-up."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    tenths = (2000 * num + den) // (2 * den)
    return f"{tenths // 10}.{tenths % 10}"


def ratio3(num: int, den: int) -> str:
    """Ratio with three decimals, exact integer arithmetic, half-up."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    thousandths = (2000 * num + den) // (2 * den)
    return f"{thousandths // 1000}.{thousandths % 1000:03d}"


# ---------------------------------------------------------------------------
# overlap evaluation (mapped entries vs one external resource)


@dataclass(frozen=True)
class OverlapResult:
    overlap: int
    correct: int
    per_category: tuple[tuple[str, int, int], ...]  # label, overlap, correct

    @property
    def percent_correct(self) -> str | None:
        """Formatted percentage, or None (reported as N/A) when there is
        no overlap."""
        if self.overlap == 0:
            return None
        return pct1(self.correct, self.overlap)


def overlap_eval(
    mapped: Iterable[MappingOutcome], resource: Iterable[SourceRecord]
) -> OverlapResult:
    """Score mapped entries against one resource on shared terms.

    Terms are compared in normalized lowercase form; the first record
    wins when either side repeats a term.
    """
    mapped_cats: dict[str, Category] = {}
    for o in mapped:
        if o.category is None:
            continue
        key = normalize_term(o.term)
        mapped_cats.setdefault(key, o.category)
    resource_cats: dict[str, Category] = {}
    for r in resource:
        resource_cats.setdefault(normalize_term(r.term), r.category)

    shared = sorted(set(mapped_cats) & set(resource_cats))
    per_category: dict[str, list[int]] = {}
    correct = 0
    for term in shared:
        label = str(resource_cats[term])
        bucket = per_category.setdefault(label, [0, 0])
        bucket[0] += 1
        if mapped_cats[term] is resource_cats[term]:
            bucket[1] += 1
            correct += 1
    return OverlapResult(
        overlap=len(shared),
        correct=correct,
        per_category=tuple((k, v[0], v[1]) for k, v in sorted(per_category.items())),
    )


# ---------------------------------------------------------------------------
# stratified sampling


def stratified_sample(
    outcomes: Sequence[MappingOutcome], quota_per_category: int, seed: int
) -> list[str]:
    """Pick entry ids for manual annotation, balanced per category.

    Categories at or below the quota contribute everything they have;
    larger ones are filled by round-robin over provenance strata with a
    seeded shuffle inside each stratum, so a fixed seed reproduces the
    sample exactly.
    """
    if quota_per_category < 1:
        raise ValueError("quota must be >= 1")
    rng = random.Random(seed)
    by_category: dict[str, list[MappingOutcome]] = {}
    for o in outcomes:
        if o.category is None:
            continue
        by_category.setdefault(str(o.category), []).append(o)

    sample: list[str] = []
    for label in sorted(by_category):
        members = by_category[label]
        if len(members) <= quota_per_category:
            sample.extend(o.entry_id for o in members)
            continue
        strata: dict[Provenance, list[str]] = {p: [] for p in SAMPLE_STRATA}
        for o in members:
            strata[o.provenance].append(o.entry_id)
        for p in SAMPLE_STRATA:
            rng.shuffle(strata[p])
        picked: list[str] = []
        while len(picked) < quota_per_category:
            progressed = False
            for p in SAMPLE_STRATA:
                if strata[p] and len(picked) < quota_per_category:
                    picked.append(strata[p].pop())
                    progressed = True
            if not progressed:
                break
        sample.extend(picked)
    return sample


# ---------------------------------------------------------------------------
# gold scoring


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square gold x predicted count grid over an ordered label set."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    def col_sums(self) -> tuple[int, ...]:
        return tuple(sum(row[j] for row in self.counts) for j in range(len(self.labels)))

    def total(self) -> int:
        return sum(self.row_sums())

    def to_csv(self) -> str:
        lines = ["gold\\pred," + ",".join(self.labels)]
        for label, row in zip(self.labels, self.counts):
            lines.append(label + "," + ",".join(str(n) for n in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CategoryScore:
    label: str
    tp: int
    pred_n: int
    gold_n: int

    @property
    def precision(self) -> float | None:
        return None if self.pred_n == 0 else self.tp / self.pred_n

    @property
    def recall(self) -> float | None:
        return None if self.gold_n == 0 else self.tp / self.gold_n


@dataclass(frozen=True)
class EvalReport:
    per_category: tuple[CategoryScore, ...]
    scored_n: int
    matched_n: int
    accuracy_incl_other: tuple[int, int]  # matches, total over all gold terms
    accuracy_excl_other: tuple[int, int]  # matches, total over non-OTHER terms

    @property
    def micro_precision(self) -> tuple[int, int]:
        return (
            sum(s.tp for s in self.per_category),
            sum(s.pred_n for s in self.per_category),
        )

    @property
    def micro_recall(self) -> tuple[int, int]:
        return (
            sum(s.tp for s in self.per_category),
            sum(s.gold_n for s in self.per_category),
        )


def _merge_label_map(
    merge_groups: Sequence[tuple[str, frozenset[Category]]] | None,
) -> dict[Category, str]:
    mapping: dict[Category, str] = {c: str(c) for c in Category}
    if merge_groups:
        seen: set[Category] = set()
        for group_label, members in merge_groups:
            for member in members:
                if member is Category.OTHER:
                    raise ValueError("OTHER cannot be merged into a group")
                if member in seen:
                    raise ValueError(f"category {member} appears in two merge groups")
                seen.add(member)
                mapping[member] = group_label
    return mapping


def score(
    gold: Mapping[str, Category],
    predicted: Mapping[str, Category],
    merge_groups: Sequence[tuple[str, frozenset[Category]]] | None = None,
    exclude_other: bool = False,
    global_precision: bool = False,
) -> tuple[EvalReport, ConfusionMatrix]:
    """Per-category precision/recall and confusion matrix over gold terms.

    Every gold term must be present in ``predicted``. OTHER-labeled gold
    terms are dropped before scoring when ``exclude_other`` is set.
    ``merge_groups`` collapses member categories into one label on both
    axes. Precision denominators are restricted to the scored terms
    unless ``global_precision`` asks for the whole predicted map.
    """
    for term in gold:
        if term not in predicted:
            raise GoldCoverageError(term)
    label_of = _merge_label_map(merge_groups)

    matches_all = sum(
        1 for t, g in gold.items() if g is not Category.OTHER
        and label_of[g] == label_of[predicted[t]]
    )
    total_all = len(gold)
    total_non_other = sum(1 for g in gold.values() if g is not Category.OTHER)

    scored = {
        t: g for t, g in gold.items() if not (exclude_other and g is Category.OTHER)
    }

    labels: list[str] = []
    for c in ASSIGNABLE_CATEGORIES:
        if label_of[c] not in labels:
            labels.append(label_of[c])
    labels.sort()
    if not exclude_other and any(g is Category.OTHER for g in scored.values()):
        labels.append(str(Category.OTHER))
    index = {label: i for i, label in enumerate(labels)}

    grid = [[0] * len(labels) for _ in labels]
    for term in sorted(scored):
        g = label_of[scored[term]]
        p = label_of[predicted[term]]
        grid[index[g]][index[p]] += 1
    matrix = ConfusionMatrix(tuple(labels), tuple(tuple(row) for row in grid))

    if global_precision:
        pred_counts: dict[str, int] = {label: 0 for label in labels}
        for term in predicted:
            label = label_of[predicted[term]]
            if label in index:
                pred_counts[label] += 1
    else:
        pred_counts = {label: matrix.col_sums()[i] for label, i in index.items()}

    per_category = tuple(
        CategoryScore(
            label=label,
            tp=grid[i][i],
            pred_n=pred_counts[label],
            gold_n=matrix.row_sums()[i],
        )
        for label, i in index.items()
    )
    matched = sum(grid[i][i] for i in range(len(labels)))
    report = EvalReport(
        per_category=per_category,
        scored_n=len(scored),
        matched_n=matched,
        accuracy_incl_other=(matches_all, total_all),
        accuracy_excl_other=(matches_all, total_non_other),
    )
    return report, matrix


def strategy_accuracy(
    gold: Mapping[str, Category], outcomes: Iterable[MappingOutcome]
) -> dict[str, tuple[int, int]]:
    """Correct/total per provenance over outcomes covered by the gold map.

    Provenances with no sampled outcomes are simply absent from the
    result rather than reported as zero.
    """
    result: dict[str, tuple[int, int]] = {}
    for o in outcomes:
        if o.category is None:
            continue
        key = normalize_term(o.term)
        if key not in gold:
            continue
        correct, total = result.get(str(o.provenance), (0, 0))
        total += 1
        if gold[key] is o.category:
            correct += 1
        result[str(o.provenance)] = (correct, total)
    return result


# ---------------------------------------------------------------------------
# gold file I/O and report rendering


def read_gold(path: str | Path) -> dict[str, Category]:
    """Gold file: term<TAB>CATEGORY rows; OTHER allowed; terms normalized."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read gold file: {exc}", str(p)) from exc
    gold: dict[str, Category] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ParseError(f"expected term<TAB>CATEGORY, got {len(cols)} columns", str(p), lineno)
        term = normalize_term(cols[0])
        try:
            category = parse_category(cols[1], allow_other=True)
        except ValueError as exc:
            raise ParseError(f"term {cols[0]!r}: {exc}", str(p), lineno) from None
        if term in gold and gold[term] is not category:
            raise ParseError(f"term {cols[0]!r} labeled twice with different categories", str(p), lineno)
        gold[term] = category
    return gold


def parse_merge_groups(
    spec: str,
) -> list[tuple[str, frozenset[Category]]]:
    """Parse ``--merge-labels`` values like ``ORG+SER`` or
    ``ORGANIZATION+SERVICE,ANAT-LOC+PHYSIOLOGY``; components may be
    unambiguous prefixes of category names."""
    groups = []
    for group_text in spec.split(","):
        group_text = group_text.strip()
        if not group_text:
            continue
        members = frozenset(
            _resolve_category(part.strip()) for part in group_text.split("+")
        )
        if len(members) < 2:
            raise ValueError(f"merge group needs at least two distinct categories: {group_text!r}")
        groups.append((group_text, members))
    return groups


def _resolve_category(text: str) -> Category:
    try:
        return parse_category(text)
    except ValueError:
        pass
    key = text.strip().upper().replace("-", "_")
    hits = [c for c in ASSIGNABLE_CATEGORIES if c.value.startswith(key)]
    if len(hits) != 1:
        raise ValueError(f"category {text!r} is unknown or ambiguous")
    return hits[0]


def format_eval_report(
    report: EvalReport, strategy_acc: Mapping[str, tuple[int, int]] | None = None
) -> str:
    rows = sorted(report.per_category, key=lambda s: s.label)
    width = max([len("category"), len("total (micro)"), len("total (macro)")] + [len(s.label) for s in rows])
    lines = [f"{'category'.ljust(width)}  precision  recall  gold_n"]
    for s in rows:
        precision = "N/A" if s.pred_n == 0 else ratio3(s.tp, s.pred_n)
        recall = "N/A" if s.gold_n == 0 else ratio3(s.tp, s.gold_n)
        lines.append(
            f"{s.label.ljust(width)}  {precision.rjust(9)}  {recall.rjust(6)}  {s.gold_n}"
        )
    mp_num, mp_den = report.micro_precision
    mr_num, mr_den = report.micro_recall
    micro_p = "N/A" if mp_den == 0 else ratio3(mp_num, mp_den)
    micro_r = "N/A" if mr_den == 0 else ratio3(mr_num, mr_den)
    lines.append(f"{'total (micro)'.ljust(width)}  {micro_p.rjust(9)}  {micro_r.rjust(6)}  {report.scored_n}")
    macro_p = [s for s in rows if s.pred_n > 0]
    macro_r = [s for s in rows if s.gold_n > 0]
    macro_p_s = "N/A" if not macro_p else _macro(list((s.tp, s.pred_n) for s in macro_p))
    macro_r_s = "N/A" if not macro_r else _macro(list((s.tp, s.gold_n) for s in macro_r))
    lines.append(f"{'total (macro)'.ljust(width)}  {macro_p_s.rjust(9)}  {macro_r_s.rjust(6)}")
    inc_num, inc_den = report.accuracy_incl_other
    exc_num, exc_den = report.accuracy_excl_other
    lines.append("")
    lines.append(
        "accuracy incl OTHER  "
        + ("N/A" if inc_den == 0 else pct1(inc_num, inc_den) + "%")
    )
    lines.append(
        "accuracy excl OTHER  "
        + ("N/A" if exc_den == 0 else pct1(exc_num, exc_den) + "%")
    )
    if strategy_acc:
        lines.append("")
        lines.append("strategy  correct  total  accuracy")
        for name in sorted(strategy_acc):
            correct, total = strategy_acc[name]
            lines.append(
                f"{name.ljust(8)}  {str(correct).rjust(7)}  {str(total).rjust(5)}  {pct1(correct, total)}%"
            )
    return "\n".join(lines) + "\n"


def _macro(pairs: list[tuple[int, int]]) -> str:
    # Average of exact per-label ratios, no float drift.
    total = sum(Fraction(tp, den) for tp, den in pairs) / len(pairs)
    return ratio3(total.numerator, total.denominator)


def format_eval_tsv(report: EvalReport) -> str:
    lines = ["label\ttp\tpred_n\tgold_n\tprecision\trecall"]
    for s in sorted(report.per_category, key=lambda s: s.label):
        precision = "" if s.pred_n == 0 else ratio3(s.tp, s.pred_n)
        recall = "" if s.gold_n == 0 else ratio3(s.tp, s.gold_n)
        lines.append(f"{s.label}\t{s.tp}\t{s.pred_n}\t{s.gold_n}\t{precision}\t{recall}")
    return "\n".join(lines) + "\n"


def format_overlap_report(
    rows: Sequence[tuple[str, str, OverlapResult]]
) -> str:
    """Rows of (resource name, category descriptor, result)."""
    width = max([len("resource")] + [len(name) for name, _, _ in rows]) if rows else len("resource")
    lines = [f"{'resource'.ljust(width)}  overlap  correct(%)  category"]
    for name, descriptor, result in rows:
        percent = result.percent_correct
        lines.append(
            f"{name.ljust(width)}  {str(result.overlap).rjust(7)}  "
            f"{(percent if percent is not None else 'N/A').rjust(10)}  {descriptor}"
        )
        for label, n, correct in result.per_category:
            lines.append(
                f"{''.ljust(width)}    {label}: {correct}/{n} ({pct1(correct, n)}%)"
            )
    return "\n".join(lines) + "\n"
