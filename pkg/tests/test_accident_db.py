import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskprop.accident_db import (
    AccidentRecord,
    RiskTable,
    accrel,
    build_table,
    load_aliases,
    load_records,
    normalize_label,
    passes_share_filter,
    raw_ratio,
    risk_score,
)
from riskprop.errors import InputError, UndefinedScoreError

TYPES = ("cut", "fire", "trip_fall")


def rec(objects, atype, rid="r"):
    return AccidentRecord.create(rid, objects, atype)


def write_lines(path, rows):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in rows))
    return path


def table_from(counts, k=1):
    """Table with single-object reports: counts = {obj: {type: n}}."""
    records = [rec([o], a) for o, per in counts.items() for a, n in per.items() for _ in range(n)]
    return build_table(records, k=k)


class TestLoadRecords:
    def test_single_record(self, tmp_path):
        p = write_lines(tmp_path / "db.jsonl", [{"report_id": "1", "objects": ["knife"], "accident_type": "cut"}])
        assert load_records(p) == [AccidentRecord("1", ("knife",), "cut")]

    def test_empty_file(self, tmp_path):
        p = tmp_path / "db.jsonl"
        p.write_text("")
        assert load_records(p) == []

    def test_dedup_and_normalize(self, tmp_path):
        p = write_lines(
            tmp_path / "db.jsonl",
            [{"report_id": "1", "objects": ["Towel", "Stove", "towel"], "accident_type": "fire"}],
        )
        assert load_records(p)[0].objects == ("towel", "stove")

    def test_whitespace_collapsed(self):
        assert normalize_label("  Kitchen \t  KNIFE ") == "kitchen knife"

    def test_malformed_line_names_line_number(self, tmp_path):
        good = {"report_id": "1", "objects": ["knife"], "accident_type": "cut"}
        p = write_lines(tmp_path / "db.jsonl", [good, good, "{not json"])
        with pytest.raises(InputError, match="line 3"):
            load_records(p)

    @pytest.mark.parametrize(
        "row",
        [
            {"objects": ["knife"], "accident_type": "cut"},
            {"report_id": "1", "objects": "knife", "accident_type": "cut"},
            {"report_id": "1", "objects": [], "accident_type": "cut"},
            {"report_id": "1", "objects": ["  "], "accident_type": "cut"},
            [1, 2],
        ],
    )
    def test_invalid_rows(self, tmp_path, row):
        p = write_lines(tmp_path / "db.jsonl", [row])
        with pytest.raises(InputError, match="line 1"):
            load_records(p)

    def test_unknown_type_named(self, tmp_path):
        p = write_lines(tmp_path / "db.jsonl", [{"report_id": "1", "objects": ["x"], "accident_type": "drowning"}])
        with pytest.raises(InputError, match="drowning"):
            load_records(p)

    def test_aliases(self, tmp_path):
        (tmp_path / "a.tsv").write_text("# synonyms\nRange\tstove\n\n")
        aliases = load_aliases(tmp_path / "a.tsv")
        p = write_lines(tmp_path / "db.jsonl", [{"report_id": "1", "objects": ["range", "stove"], "accident_type": "fire"}])
        assert load_records(p, aliases=aliases)[0].objects == ("stove",)

    def test_alias_file_needs_two_columns(self, tmp_path):
        (tmp_path / "a.tsv").write_text("range stove\n")
        with pytest.raises(InputError, match=":1"):
            load_aliases(tmp_path / "a.tsv")


class TestBuildTable:
    def test_repeated_pair(self):
        t = build_table([rec(["towel", "stove"], "fire")] * 10)
        assert t.pair_count("towel", "stove", "fire") == 10
        assert t.pair_total("towel", "stove") == 10
        assert t.pair_total("stove", "towel") == 10

    def test_towel_stove_counts(self, fixture_table):
        assert fixture_table.pair_count("towel", "stove", "fire") == 6
        assert fixture_table.pair_total("towel", "stove") == 10

    def test_empty(self):
        t = build_table([])
        assert t.grand_total == 0
        assert t.total("knife") == 0 and t.pair_total("a", "b") == 0

    def test_all_pairs_of_larger_record(self):
        t = build_table([rec(["a", "b", "c"], "cut")])
        assert {t.pair_total(x, y) for x, y in [("a", "b"), ("a", "c"), ("b", "c")]} == {1}

    def test_type_outside_set(self):
        with pytest.raises(InputError):
            build_table([rec(["a"], "drowning")], types=TYPES)

    def test_negative_k(self):
        with pytest.raises(InputError):
            build_table([], k=-1)

    def test_round_trip(self, fixture_table, tmp_path):
        fixture_table.save(tmp_path / "t.json")
        again = RiskTable.load(tmp_path / "t.json")
        assert again.dumps() == fixture_table.dumps()
        assert accrel(again, "range", "towel", "fire") == 7 / 13


class TestScores:
    def test_towel_stove_accrel(self, fixture_table):
        assert accrel(fixture_table, "towel", "stove", "fire") == pytest.approx(7 / 13, abs=1e-12)

    def test_risk_score_formula(self):
        t = table_from({"knife": {"cut": 90, "fire": 10}})
        assert risk_score(t, "knife", "cut") == pytest.approx(91 / 103, abs=1e-15)

    def test_unknown_object_uniform(self):
        t = table_from({"knife": {"cut": 3}})
        assert risk_score(t, "teapot", "fire") == pytest.approx(1 / 3)
        assert accrel(t, "teapot", "knife", "fire") == pytest.approx(1 / 3)

    def test_accrel_zero_count(self):
        t = build_table([rec(["a", "b"], "cut")] * 20)
        assert accrel(t, "a", "b", "fire") == pytest.approx(1 / 23, abs=1e-15)

    def test_k_zero_undefined(self):
        t = build_table([], k=0)
        with pytest.raises(UndefinedScoreError):
            risk_score(t, "knife", "cut")
        with pytest.raises(UndefinedScoreError):
            accrel(t, "knife", "fork", "cut")

    def test_k_zero_is_raw_ratio(self):
        t = table_from({"knife": {"cut": 3, "fire": 1}}, k=0)
        assert risk_score(t, "knife", "cut") == raw_ratio(t, "knife", "cut") == 0.75

    def test_unknown_type_rejected(self):
        with pytest.raises(KeyError):
            risk_score(build_table([]), "knife", "drowning")


class TestShareFilter:
    def test_below_threshold(self):
        t = table_from({"rare": {"cut": 4}, "common": {"cut": 996}})
        assert not passes_share_filter(t, "rare", 0.005)

    def test_boundary_inclusive(self):
        t = table_from({"rare": {"cut": 5}, "common": {"cut": 995}})
        assert passes_share_filter(t, "rare", 0.005)

    def test_zero_threshold(self):
        t = table_from({"common": {"cut": 10}})
        assert passes_share_filter(t, "never-seen", 0.0)

    def test_empty_table_disables_and_logs_once(self, caplog):
        t = build_table([])
        with caplog.at_level(logging.WARNING):
            assert passes_share_filter(t, "x", 0.5)
            assert passes_share_filter(t, "y", 0.5)
        assert sum("share filter disabled" in r.message for r in caplog.records) == 1


labels = st.sampled_from(["knife", "towel", "stove", "box", "rug"])
records_st = st.lists(
    st.tuples(st.lists(labels, min_size=1, max_size=4), st.sampled_from(TYPES)), max_size=40
).map(lambda rows: [rec(objs, a, str(i)) for i, (objs, a) in enumerate(rows)])


@settings(max_examples=150, deadline=None)
@given(records_st, st.integers(1, 4))
def test_table_invariants(records, k):
    t = build_table(records, k=k)
    for o in t.objects:
        assert t.total(o) == sum(t.count(o, a) for a in TYPES)
        assert sum(risk_score(t, o, a) for a in TYPES) == pytest.approx(1.0, abs=1e-12)
        assert all(0 < risk_score(t, o, a) < 1 for a in TYPES)
        for o2 in t.objects:
            if o2 == o:
                continue
            assert t.pair_total(o, o2) <= min(t.total(o), t.total(o2))
            for a in TYPES:
                assert accrel(t, o, o2, a) == accrel(t, o2, o, a)
            assert sum(accrel(t, o, o2, a) for a in TYPES) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(records_st, labels, st.sampled_from(TYPES), st.integers(1, 3))
def test_adding_a_report_never_lowers_its_score(records, o, a, k):
    before = risk_score(build_table(records, k=k), o, a)
    after = risk_score(build_table(records + [rec([o], a, "new")], k=k), o, a)
    assert after >= before


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10_000), st.integers(1, 5))
def test_smoothing_gap_bound(c, extra, k):
    total = c + extra
    t = table_from({"x": {"cut": c, "fire": extra}}, k=k)
    gap = abs(risk_score(t, "x", "cut") - c / total)
    assert gap <= k * 3 / (total + k * 3) + 1e-15
