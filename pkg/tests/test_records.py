from __future__ import annotations

import io
import json

import pytest

from conftest import make_record
from faceaudit.records import (
    AttributeRecord,
    RecordError,
    StrictParseError,
    aggregate_label,
    aggregate_records,
    filter_records,
    parse_records,
    serialize_records,
)
from faceaudit.schemes import AGE5_TO_AGE3, RACE5_TO_RACE4

VALID_LINE = (
    '{"image_id":"a1","model":"flux","model_origin":"western",'
    '"prompt_emotion":"neutral","prompt_language":"en",'
    '"gender":"male","race":"white","age":"20-39"}'
)


class TestParsing:
    def test_minimal_valid_line(self):
        records, diags = parse_records(io.StringIO(VALID_LINE))
        assert len(records) == 1 and not diags
        rec = records[0]
        assert rec.image_id == "a1"
        assert rec.attractiveness is None

    def test_unknown_category_becomes_diagnostic(self):
        line = VALID_LINE.replace('"race":"white"', '"race":"martian"')
        records, diags = parse_records(io.StringIO(line))
        assert records == []
        assert len(diags) == 1
        assert "martian" in diags[0].reason and "race5" in diags[0].reason

    def test_strict_mode_is_fatal_and_names_the_line(self):
        bad = VALID_LINE.replace('"race":"white"', '"race":"martian"')
        stream = io.StringIO("\n".join([VALID_LINE, bad, VALID_LINE.replace("a1", "a3")]))
        with pytest.raises(StrictParseError, match="line 2"):
            parse_records(stream, strict=True)

    def test_unknown_fields_preserved(self):
        data = json.loads(VALID_LINE)
        data["custom_tag"] = "x"
        records, _ = parse_records(io.StringIO(json.dumps(data)))
        assert records[0].extra == {"custom_tag": "x"}
        assert records[0].to_dict()["custom_tag"] == "x"

    def test_duplicate_model_image_id_rejected(self):
        stream = io.StringIO(VALID_LINE + "\n" + VALID_LINE)
        records, diags = parse_records(stream)
        assert len(records) == 1
        assert any("duplicate" in d.reason for d in diags)

    def test_missing_required_field(self):
        data = json.loads(VALID_LINE)
        del data["gender"]
        records, diags = parse_records(io.StringIO(json.dumps(data)))
        assert not records and "gender" in diags[0].reason

    def test_csv_roundtrip(self):
        recs = [
            make_record(image_id="a", attractiveness="high"),
            make_record(image_id="b"),
        ]
        text = serialize_records(recs, "csv")
        parsed, diags = parse_records(io.StringIO(text), fmt="csv")
        assert not diags
        assert parsed == recs

    def test_jsonl_roundtrip_field_for_field(self):
        recs = [
            make_record(image_id=f"r{i}", race=race)
            for i, race in enumerate(("white", "latino", "asian"))
        ]
        text = serialize_records(recs, "jsonl")
        parsed, diags = parse_records(io.StringIO(text))
        assert not diags
        assert parsed == recs

    def test_unreadable_file_is_fatal(self, tmp_path):
        with pytest.raises(RecordError, match="cannot read"):
            parse_records(tmp_path / "nope.jsonl")


class TestRecordInvariants:
    def test_empty_image_id_rejected(self):
        with pytest.raises(RecordError):
            make_record(image_id="")

    def test_bad_origin_rejected(self):
        with pytest.raises(RecordError):
            make_record(model_origin="martian")

    def test_confidence_bounds(self):
        with pytest.raises(RecordError):
            make_record(confidences={"male": 1.5})
        rec = make_record(confidences={"male": 0.9, "female": 0.1})
        assert rec.confidences == {"male": 0.9, "female": 0.1}


class TestAggregation:
    def test_label_examples(self):
        assert aggregate_label("10-19", AGE5_TO_AGE3) == "young"
        assert aggregate_label("latino", RACE5_TO_RACE4) == "others"
        assert aggregate_label("white", RACE5_TO_RACE4) == "white"

    def test_count_vector_pushforward(self):
        races = ["white", "white", "latino", "indian", "asian", "black"]
        recs = [make_record(image_id=f"r{i}", race=r) for i, r in enumerate(races)]
        out = aggregate_records(recs, RACE5_TO_RACE4)
        assert len(out) == len(recs)
        by_cat = {}
        for label in out:
            by_cat[label] = by_cat.get(label, 0) + 1
        # Direct summation through the map.
        assert by_cat == {"white": 2, "others": 2, "asian": 1, "black": 1}


class TestFiltering:
    @pytest.fixture
    def corpus(self):
        recs = []
        for i in range(10):
            recs.append(
                make_record(
                    image_id=f"r{i}",
                    model="flux" if i % 2 == 0 else "sana",
                    prompt_emotion="happy" if i < 4 else "neutral",
                )
            )
        return recs

    def test_single_field(self, corpus):
        happy = filter_records(corpus, prompt_emotion="happy")
        assert len(happy) == 4
        assert [r.image_id for r in happy] == ["r0", "r1", "r2", "r3"]

    def test_empty_selector_is_identity(self, corpus):
        assert filter_records(corpus, {}) == corpus

    def test_conjunction(self, corpus):
        both = filter_records(corpus, model="flux", prompt_emotion="happy")
        assert both == [r for r in corpus if r.model == "flux" and r.prompt_emotion == "happy"]

    def test_composition_equals_union_of_selectors(self, corpus):
        chained = filter_records(
            filter_records(corpus, model="sana"), prompt_emotion="neutral"
        )
        joint = filter_records(corpus, model="sana", prompt_emotion="neutral")
        assert chained == joint

    def test_unknown_selector_field(self, corpus):
        with pytest.raises(RecordError):
            filter_records(corpus, {"gender": "male"})
