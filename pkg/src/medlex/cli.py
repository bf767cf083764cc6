"""Command-line front end: map a dictionary, merge resources, evaluate.

Exit codes: 0 success, 2 missing or unparseable input, 3 configuration
lint failure, 4 equal-trust merge conflict, 5 gold term without a
prediction. Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import defaults
from .errors import GoldCoverageError, LintError, MergeConflictError, ParseError
from .evaluate import (
    format_eval_report,
    format_eval_tsv,
    format_overlap_report,
    overlap_eval,
    parse_merge_groups,
    read_gold,
    score,
    strategy_accuracy,
    stratified_sample,
)
from .merge import (
    DEFAULT_MAPPED_NAME,
    DEFAULT_MAPPED_RANK,
    export_lexicon,
    format_merge_report,
    ingest_resource,
    load_manifest,
    mapped_records,
    merge_lexicons,
)
from .model import normalize_term
from .pipeline import (
    attach_tokens,
    format_stats,
    map_dictionary,
    mapping_stats,
    read_dictionary,
    read_outcomes,
    render_outcomes,
    resolve_synonyms,
    write_outcomes,
)
from .strategies import load_keyword_table, load_suffix_table
from .textprep import ingest_conllu, load_stoplist, load_wordlist

log = logging.getLogger("medlex")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--threads",
        type=int,
        default=1,
        help="upper bound on worker parallelism; output never depends on it",
    )
    common.add_argument(
        "--lax",
        action="store_true",
        help="demote configuration lint failures to warnings",
    )

    parser = argparse.ArgumentParser(
        prog="medlex",
        description="Categorize dictionary terms, merge terminology resources, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("map", parents=[common], help="map dictionary entries to categories")
    p_map.add_argument("--dict", required=True, dest="dict_file")
    p_map.add_argument("--suffixes", help="suffix table TSV (default: shipped table)")
    p_map.add_argument("--keywords", help="keyword table TSV (default: shipped table)")
    p_map.add_argument("--stops", help="stoplist file (default: shipped list)")
    p_map.add_argument("--function-words", help="function word list for the heuristic tagger")
    p_map.add_argument("--conllu", help="CoNLL-U token/POS annotation keyed by sent_id")
    p_map.add_argument("--iter", type=int, default=1, dest="iter_rounds")
    p_map.add_argument("--out", help="outcome file (omit to print outcomes to stdout)")
    p_map.add_argument("--format", choices=("tsv", "jsonl"), dest="fmt")
    p_map.set_defaults(func=cmd_map)

    p_merge = sub.add_parser("merge", parents=[common], help="merge mapped output with resources")
    p_merge.add_argument("--manifest", required=True)
    p_merge.add_argument("--mapped", required=True, help="outcome file produced by map")
    p_merge.add_argument("--lowercase", action="store_true")
    p_merge.add_argument("--out", required=True)
    p_merge.add_argument("--format", choices=("tsv", "jsonl"), dest="fmt")
    p_merge.add_argument("--mapped-name", default=DEFAULT_MAPPED_NAME)
    p_merge.add_argument("--mapped-rank", type=int, default=DEFAULT_MAPPED_RANK)
    p_merge.set_defaults(func=cmd_merge)

    p_eval = sub.add_parser("eval", help="evaluation protocols")
    eval_sub = p_eval.add_subparsers(dest="protocol", required=True)

    p_overlap = eval_sub.add_parser(
        "overlap", parents=[common], help="score mapped entries against resources"
    )
    p_overlap.add_argument("--mapped", required=True)
    p_overlap.add_argument("--manifest", required=True)
    p_overlap.set_defaults(func=cmd_eval_overlap)

    p_gold = eval_sub.add_parser(
        "gold", parents=[common], help="precision/recall against a gold file"
    )
    p_gold.add_argument("--gold", required=True)
    p_gold.add_argument("--mapped", required=True)
    p_gold.add_argument(
        "--merge-labels",
        help="label groups to collapse, e.g. ORG+SER or ORGANIZATION+SERVICE",
    )
    p_gold.add_argument("--exclude-other", action="store_true")
    p_gold.add_argument(
        "--global-precision",
        action="store_true",
        help="precision denominators over all predictions, not the scored set",
    )
    p_gold.add_argument("--matrix-out", help="write the confusion matrix as CSV")
    p_gold.add_argument("--report-tsv", help="write the machine-readable report")
    p_gold.set_defaults(func=cmd_eval_gold)

    p_sample = eval_sub.add_parser(
        "sample", parents=[common], help="stratified sample for manual annotation"
    )
    p_sample.add_argument("--mapped", required=True)
    p_sample.add_argument("--quota", type=int, required=True)
    p_sample.add_argument("--seed", type=int, required=True)
    p_sample.add_argument("--out", help="sample file (omit to print to stdout)")
    p_sample.set_defaults(func=cmd_eval_sample)

    return parser


def cmd_map(args: argparse.Namespace) -> int:
    suffixes = (
        load_suffix_table(args.suffixes) if args.suffixes else defaults.default_suffix_table()
    )
    keywords = (
        load_keyword_table(args.keywords) if args.keywords else defaults.default_keyword_table()
    )
    stops = load_stoplist(args.stops) if args.stops else defaults.default_stops()
    function_words = (
        load_wordlist(args.function_words)
        if args.function_words
        else defaults.default_function_words()
    )

    problems = suffixes.lint()
    if problems:
        if not args.lax:
            raise LintError("; ".join(problems))
        for p in problems:
            log.warning("lint: %s", p)
    for note in keywords.lint():
        log.info("lint: %s", note)

    entries = read_dictionary(args.dict_file, args.fmt)
    conllu_tokens = None
    if args.conllu:
        try:
            with open(args.conllu, encoding="utf-8") as fh:
                conllu_tokens = ingest_conllu(
                    fh, id_map={e.id: e.id for e in entries}, path=args.conllu
                )
        except OSError as exc:
            raise ParseError(f"cannot read CoNLL-U: {exc}", args.conllu) from exc
    entries, heuristic_used = attach_tokens(entries, conllu_tokens, function_words)
    if heuristic_used:
        log.warning("one or more definitions were tagged heuristically")
    entries = resolve_synonyms(entries)
    outcomes = map_dictionary(entries, suffixes, keywords, stops, args.iter_rounds)

    if args.out:
        write_outcomes(outcomes, args.out, args.fmt)
        sys.stdout.write(format_stats(mapping_stats(outcomes), heuristic_used))
    else:
        sys.stdout.write(render_outcomes(outcomes, args.fmt or "tsv"))
    return 0


def cmd_merge(args: argparse.Namespace) -> int:
    outcomes = read_outcomes(args.mapped)
    specs = load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    resources = [ingest_resource(spec, base_dir) for spec in specs]
    mapped = mapped_records(outcomes, args.mapped_name, args.mapped_rank)
    records, report = merge_lexicons(mapped, resources, lowercase=args.lowercase)
    export_lexicon(records, args.out, args.fmt)
    sys.stdout.write(format_merge_report(report))
    return 0


def cmd_eval_overlap(args: argparse.Namespace) -> int:
    outcomes = read_outcomes(args.mapped)
    specs = load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    rows = []
    for spec in specs:
        result = ingest_resource(spec, base_dir)
        rows.append((spec.name, spec.category_descriptor(), overlap_eval(outcomes, result.records)))
    sys.stdout.write(format_overlap_report(rows))
    return 0


def cmd_eval_gold(args: argparse.Namespace) -> int:
    gold = read_gold(args.gold)
    outcomes = read_outcomes(args.mapped)
    predicted = {}
    for o in outcomes:
        if o.category is None:
            continue
        predicted.setdefault(normalize_term(o.term), o.category)
    try:
        groups = parse_merge_groups(args.merge_labels) if args.merge_labels else None
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    report, matrix = score(
        gold,
        predicted,
        merge_groups=groups,
        exclude_other=args.exclude_other,
        global_precision=args.global_precision,
    )
    acc = strategy_accuracy(gold, outcomes)
    sys.stdout.write(format_eval_report(report, acc))
    if args.matrix_out:
        Path(args.matrix_out).write_text(matrix.to_csv(), encoding="utf-8")
    if args.report_tsv:
        Path(args.report_tsv).write_text(format_eval_tsv(report), encoding="utf-8")
    return 0


def cmd_eval_sample(args: argparse.Namespace) -> int:
    outcomes = read_outcomes(args.mapped)
    ids = stratified_sample(outcomes, args.quota, args.seed)
    by_id = {o.entry_id: o for o in outcomes}
    lines = ["id\tterm\tcategory\tprovenance"]
    for entry_id in ids:
        o = by_id[entry_id]
        lines.append(f"{o.entry_id}\t{o.term}\t{o.category}\t{o.provenance}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LintError as exc:
        print(f"lint error: {exc}", file=sys.stderr)
        return 3
    except MergeConflictError as exc:
        print(f"merge conflict: {exc}", file=sys.stderr)
        return 4
    except GoldCoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
