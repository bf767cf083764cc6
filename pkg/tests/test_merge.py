from __future__ import annotations

import pytest

from medlex.errors import MergeConflictError, ParseError
from medlex.merge import (
    ChapterRule,
    IngestResult,
    ResourceMode,
    ResourceSpec,
    SourceRecord,
    apply_corrections,
    export_lexicon,
    ingest_resource,
    load_manifest,
    mapped_records,
    merge_lexicons,
    read_lexicon,
    render_lexicon,
)
from medlex.model import (
    Category,
    MappingOutcome,
    Provenance,
    Strategy,
    Vote,
    normalize_term,
)


def fixed_spec(tmp_path, rows, name="RES", category="SUBSTANCE", rank=1):
    path = tmp_path / f"{name.lower()}.tsv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return ResourceSpec(
        name=name,
        file=str(path),
        mode=ResourceMode.FIXED,
        trust_rank=rank,
        category=Category[category],
    )


def source(term, category, name="RES", rank=1):
    return SourceRecord(term, category, name, name, rank)


def result_of(*records: SourceRecord, name="RES", excluded=0):
    return IngestResult(name, tuple(records), len(records) + excluded, excluded)


class TestIngestResource:
    def test_fixed_assigns_spec_category_to_every_row(self, tmp_path):
        spec = fixed_spec(tmp_path, ["aspartam", "insulin", "glukose"])
        result = ingest_resource(spec)
        assert [r.category for r in result.records] == [Category.SUBSTANCE] * 3
        assert (result.ingested, result.kept, result.excluded) == (3, 3, 0)

    def test_chaptered_routes_and_excludes(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text(
            "blodtrykksmåling\tProcedure codes\n"
            "lav inntekt\tSocial problems\n"
            "feber\tGeneral\n",
            encoding="utf-8",
        )
        spec = ResourceSpec(
            name="ICPC-2",
            file=str(path),
            mode=ResourceMode.CHAPTERED,
            trust_rank=1,
            chapter_rules=(
                ChapterRule("Procedure codes", Category.PROCEDURE),
                ChapterRule("Social problems", None),
            ),
            chapter_default=Category.CONDITION,
        )
        result = ingest_resource(spec)
        categories = {r.term: r.category for r in result.records}
        assert categories == {
            "blodtrykksmåling": Category.PROCEDURE,
            "feber": Category.CONDITION,
        }
        assert (result.ingested, result.kept, result.excluded) == (3, 2, 1)

    def test_per_entry_reads_category_column(self, tmp_path):
        path = tmp_path / "aloc.tsv"
        path.write_text("tracheostomi\tPROCEDURE\n", encoding="utf-8")
        spec = ResourceSpec(
            name="ALOC", file=str(path), mode=ResourceMode.PER_ENTRY, trust_rank=1
        )
        result = ingest_resource(spec)
        assert result.records[0].category is Category.PROCEDURE

    def test_per_entry_unknown_category_names_row(self, tmp_path):
        path = tmp_path / "aloc.tsv"
        path.write_text("god term\tANAT-LOC\nvond term\tukjent\n", encoding="utf-8")
        spec = ResourceSpec(
            name="ALOC", file=str(path), mode=ResourceMode.PER_ENTRY, trust_rank=1
        )
        with pytest.raises(ParseError) as exc_info:
            ingest_resource(spec)
        assert exc_info.value.line == 2

    def test_unmatched_chapter_without_default_rejected(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("feber\tUkjent kapittel\n", encoding="utf-8")
        spec = ResourceSpec(
            name="X",
            file=str(path),
            mode=ResourceMode.CHAPTERED,
            trust_rank=1,
            chapter_rules=(ChapterRule("Procedure codes", Category.PROCEDURE),),
        )
        with pytest.raises(ParseError, match="no default"):
            ingest_resource(spec)

    def test_chapter_match_is_case_insensitive(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("x\tprocedure CODES\n", encoding="utf-8")
        spec = ResourceSpec(
            name="X",
            file=str(path),
            mode=ResourceMode.CHAPTERED,
            trust_rank=1,
            chapter_rules=(ChapterRule("Procedure codes", Category.PROCEDURE),),
        )
        assert ingest_resource(spec).records[0].category is Category.PROCEDURE

    def test_fixed_spec_requires_category(self, tmp_path):
        with pytest.raises(ValueError, match="category"):
            ResourceSpec(name="X", file="x.tsv", mode=ResourceMode.FIXED, trust_rank=1)

    def test_empty_term_rejected(self, tmp_path):
        path = tmp_path / "r.tsv"
        path.write_text("ok\tA10\n \tB20\n", encoding="utf-8")
        spec = ResourceSpec(
            name="R",
            file=str(path),
            mode=ResourceMode.FIXED,
            trust_rank=1,
            category=Category.CONDITION,
            layout={"term": 0, "code": 1},
        )
        with pytest.raises(ParseError, match="empty term"):
            ingest_resource(spec)


class TestMergeLexicons:
    def test_agreeing_overlap_unions_sources_without_correction(self):
        mo = result_of(source("leukemi", Category.CONDITION, "MO", 100), name="MO")
        icd = result_of(source("leukemi", Category.CONDITION, "ICD-10", 2), name="ICD-10")
        records, report = merge_lexicons(mo, [icd])
        assert len(records) == 1
        assert records[0].sources == frozenset({"MO", "ICD-10"})
        assert records[0].category is Category.CONDITION
        assert report.corrections == ()

    def test_trusted_resource_overrides_and_logs_correction(self):
        mo = result_of(source("forbrenning", Category.PHYSIOLOGY, "MO", 100), name="MO")
        icpc = result_of(source("forbrenning", Category.CONDITION, "ICPC-2", 3), name="ICPC-2")
        records, report = merge_lexicons(mo, [icpc])
        assert records[0].category is Category.CONDITION
        assert len(report.corrections) == 1
        c = report.corrections[0]
        assert (c.term, c.old_category, c.new_category, c.resource) == (
            "forbrenning",
            Category.PHYSIOLOGY,
            Category.CONDITION,
            "ICPC-2",
        )

    def test_case_variants_collapse_under_lowercase(self):
        res = result_of(
            source("Aspartam", Category.SUBSTANCE),
            source("aspartam", Category.SUBSTANCE),
        )
        lower, _ = merge_lexicons(None, [res], lowercase=True)
        cased, _ = merge_lexicons(None, [res], lowercase=False)
        assert len(lower) == 1
        assert len(cased) == 2

    def test_equal_rank_disagreement_is_refused(self):
        a = result_of(source("x", Category.CONDITION, "A", 1), name="A")
        b = result_of(source("x", Category.PROCEDURE, "B", 1), name="B")
        with pytest.raises(MergeConflictError) as exc_info:
            merge_lexicons(None, [a, b])
        assert exc_info.value.conflicts

    def test_equal_rank_agreement_is_fine(self):
        a = result_of(source("x", Category.CONDITION, "A", 1), name="A")
        b = result_of(source("x", Category.CONDITION, "B", 1), name="B")
        records, _ = merge_lexicons(None, [a, b])
        assert len(records) == 1

    def test_output_sorted_by_normalized_term(self):
        res = result_of(
            source("Zebra", Category.CONDITION),
            source("alfa", Category.CONDITION),
        )
        records, _ = merge_lexicons(None, [res])
        assert [r.normalized_term for r in records] == ["alfa", "zebra"]

    def test_provenance_of_winner_kept(self):
        votes = (
            Vote(Strategy.SUFF, Category.CONDITION, "emi"),
            Vote(Strategy.KW_1N, Category.CONDITION, "sykdom"),
        )
        outcome = MappingOutcome("e1", "leukemi", Category.CONDITION, Provenance.MULTI, votes)
        records, _ = merge_lexicons(mapped_records([outcome]), [])
        assert records[0].provenance == "MULTI"

    def test_unmapped_outcomes_counted_as_excluded(self):
        outcomes = [
            MappingOutcome("e1", "leukemi", Category.CONDITION, Provenance.ITER),
            MappingOutcome("e2", "ukjent", None, Provenance.UNMAPPED),
        ]
        result = mapped_records(outcomes)
        assert (result.ingested, result.kept, result.excluded) == (2, 1, 1)

    def test_apply_corrections_annotates_without_changing_category(self):
        outcomes = [
            MappingOutcome("e1", "forbrenning", Category.PHYSIOLOGY, Provenance.ITER),
            MappingOutcome("e2", "leukemi", Category.CONDITION, Provenance.ITER),
        ]
        icpc = result_of(source("forbrenning", Category.CONDITION, "ICPC-2", 3), name="ICPC-2")
        _, report = merge_lexicons(mapped_records(outcomes), [icpc])
        annotated = apply_corrections(outcomes, report.corrections)
        assert annotated[0].corrected_by == "ICPC-2"
        assert annotated[0].category is Category.PHYSIOLOGY  # category untouched
        assert annotated[1].corrected_by is None
        for o in annotated:
            o.validate()


class TestFixtureMerge:
    @pytest.fixture()
    def merged(self, data_dir, fixture_outcomes):
        specs = load_manifest(data_dir / "manifest.json")
        resources = [ingest_resource(s, data_dir) for s in specs]
        mo = mapped_records(fixture_outcomes)
        return merge_lexicons(mo, resources, lowercase=True), resources

    def test_no_duplicate_normalized_terms(self, merged):
        (records, _), _ = merged
        keys = [r.normalized_term for r in records]
        assert len(keys) == len(set(keys))

    def test_conservation_every_kept_record_lands_exactly_once(self, merged, fixture_outcomes):
        (records, _), resources = merged
        by_key = {r.normalized_term: r for r in records}
        mo = mapped_records(fixture_outcomes)
        for res in [mo] + resources:
            for rec in res.records:
                key = normalize_term(rec.term, True)
                assert key in by_key
                assert rec.source in by_key[key].sources

    def test_trust_dominance(self, merged, fixture_outcomes):
        (records, _), resources = merged
        all_records: dict[str, list] = {}
        mo = mapped_records(fixture_outcomes)
        for res in [mo] + resources:
            for rec in res.records:
                all_records.setdefault(normalize_term(rec.term, True), []).append(rec)
        for out in records:
            group = all_records[out.normalized_term]
            best = min(r.trust_rank for r in group)
            for rec in group:
                if rec.trust_rank < best or (
                    rec.trust_rank == best and rec.category is not out.category
                ):
                    pytest.fail(f"trust dominance violated for {out.normalized_term}")

    def test_expected_corrections(self, merged):
        (_, report), _ = merged
        got = {(c.term, str(c.old_category), str(c.new_category), c.resource) for c in report.corrections}
        assert got == {
            ("forbrenning", "PHYSIOLOGY", "CONDITION", "ICPC-2"),
            ("immunapparatet", "TOOL", "ANAT_LOC", "ALOC"),
        }

    def test_corrections_match_overlap_disagreements(self, merged, fixture_outcomes):
        (_, report), resources = merged
        mo_cats = {}
        for o in fixture_outcomes:
            if o.category is not None:
                mo_cats.setdefault(normalize_term(o.term), o.category)
        disagreements = set()
        winner_by_key: dict[str, SourceRecord] = {}
        for res in resources:
            for rec in res.records:
                key = normalize_term(rec.term)
                prev = winner_by_key.get(key)
                if prev is None or rec.trust_rank < prev.trust_rank:
                    winner_by_key[key] = rec
        for key, rec in winner_by_key.items():
            if key in mo_cats and mo_cats[key] is not rec.category:
                disagreements.add(key)
        assert {normalize_term(c.term) for c in report.corrections} == disagreements

    def test_lowercase_shrinks_or_preserves(self, data_dir, fixture_outcomes):
        specs = load_manifest(data_dir / "manifest.json")
        resources = [ingest_resource(s, data_dir) for s in specs]
        mo = mapped_records(fixture_outcomes)
        lower, _ = merge_lexicons(mo, resources, lowercase=True)
        cased, _ = merge_lexicons(mo, resources, lowercase=False)
        assert len(lower) <= len(cased)
        assert len(cased) - len(lower) == 2  # Aspartam and Paracetamol variants

    def test_report_counts_reconcile(self, merged):
        (records, report), _ = merged
        for name, ingested, kept, excluded in report.resource_counts:
            assert kept + excluded == ingested, name
        recount: dict[str, int] = {}
        for r in records:
            recount[str(r.category)] = recount.get(str(r.category), 0) + 1
        assert report.category_counts == recount
        assert report.total == len(records)

    def test_icpc2_exclusions_counted(self, merged):
        (_, report), _ = merged
        by_name = {name: (ingested, kept, excluded) for name, ingested, kept, excluded in report.resource_counts}
        assert by_name["ICPC-2"] == (7, 5, 2)


class TestManifest:
    def test_tsv_and_json_manifests_agree(self, data_dir):
        json_specs = load_manifest(data_dir / "manifest.json")
        tsv_specs = load_manifest(data_dir / "manifest.tsv")
        assert len(json_specs) == len(tsv_specs)
        for a, b in zip(json_specs, tsv_specs):
            assert (a.name, a.file, a.mode, a.trust_rank, a.category) == (
                b.name,
                b.file,
                b.mode,
                b.trust_rank,
                b.category,
            )
            assert a.chapter_rules == b.chapter_rules
            assert a.chapter_default == b.chapter_default

    def test_duplicate_names_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(
            '[{"name": "A", "file": "a.tsv", "mode": "FIXED", "category": "CONDITION", "trust_rank": 1},'
            ' {"name": "A", "file": "b.tsv", "mode": "FIXED", "category": "CONDITION", "trust_rank": 2}]',
            encoding="utf-8",
        )
        with pytest.raises(ParseError, match="duplicate"):
            load_manifest(path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ParseError):
            load_manifest(tmp_path / "missing.json")


class TestExport:
    def test_header_plus_rows(self, tmp_path):
        res = result_of(
            source("alfa", Category.CONDITION),
            source("beta", Category.PROCEDURE),
        )
        records, _ = merge_lexicons(None, [res])
        path = tmp_path / "lex.tsv"
        export_lexicon(records, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "term\tcategory\tsources\tprovenance"
        assert len(lines) == 3

    def test_empty_lexicon_is_header_only(self, tmp_path):
        path = tmp_path / "lex.tsv"
        export_lexicon([], path)
        assert path.read_text(encoding="utf-8") == "term\tcategory\tsources\tprovenance\n"

    def test_file_recount_matches_report(self, data_dir, fixture_outcomes, tmp_path):
        specs = load_manifest(data_dir / "manifest.json")
        resources = [ingest_resource(s, data_dir) for s in specs]
        records, report = merge_lexicons(mapped_records(fixture_outcomes), resources)
        path = tmp_path / "lex.tsv"
        export_lexicon(records, path)
        recount: dict[str, int] = {}
        for line in path.read_text(encoding="utf-8").splitlines()[1:]:
            category = line.split("\t")[1]
            recount[category] = recount.get(category, 0) + 1
        assert recount == report.category_counts

    def test_read_back(self, tmp_path):
        res = result_of(source("alfa", Category.CONDITION))
        records, _ = merge_lexicons(None, [res])
        path = tmp_path / "lex.tsv"
        export_lexicon(records, path)
        back = read_lexicon(path)
        assert back[0].term == "alfa"
        assert back[0].category is Category.CONDITION

    def test_jsonl_render_is_stable(self):
        res = result_of(source("alfa", Category.CONDITION))
        records, _ = merge_lexicons(None, [res])
        assert render_lexicon(records, "jsonl") == render_lexicon(records, "jsonl")
