import json

import pytest

from mirror.chartspec import emit, parse_and_validate
from mirror.datasource import ResultTable
from mirror.errors import VegaInvalid

TABLE = ResultTable(
    columns=(("team", "TEXT"), ("total", "REAL")),
    rows=(("Hawks", 55.7), ("Comets", 45.75), ("Pilots", 35.3)),
)

MINIMAL_BAR = json.dumps({
    "mark": "bar",
    "encoding": {
        "x": {"field": "team", "type": "nominal"},
        "y": {"field": "total", "type": "quantitative"},
    },
})


class TestParseAndValidate:
    def test_minimal_bar_spec(self):
        spec = parse_and_validate(MINIMAL_BAR, TABLE)
        assert spec.mark == "bar"
        assert spec.encoding_map()["x"] == {"field": "team", "type": "nominal"}
        assert len(spec.inline_data) == 3

    def test_unknown_field_rejected(self):
        raw = MINIMAL_BAR.replace('"team"', '"salary"')
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate(raw, TABLE)
        assert err.value.reason == "unknown-field"

    def test_prose_wrapped_object_recovered(self):
        raw = "Here's a chart you might like: " + MINIMAL_BAR + " Enjoy!"
        spec = parse_and_validate(raw, TABLE)
        assert spec.mark == "bar"

    def test_fenced_block_recovered(self):
        raw = "Sure thing.\n```json\n" + MINIMAL_BAR + "\n```\nDone."
        assert parse_and_validate(raw, TABLE).mark == "bar"

    def test_malformed_json(self):
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate("{mark: bar, encoding", TABLE)
        assert err.value.reason == "not-json"

    def test_plain_prose(self):
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate("I cannot draw that.", TABLE)
        assert err.value.reason == "not-json"

    def test_json_array_not_object(self):
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate("[1, 2, 3]", TABLE)
        assert err.value.reason == "not-json"

    def test_bad_mark(self):
        raw = MINIMAL_BAR.replace('"bar"', '"treemap"')
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate(raw, TABLE)
        assert err.value.reason == "bad-mark"

    def test_missing_mark(self):
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate(json.dumps({"encoding": {
                "x": {"field": "team", "type": "nominal"}}}), TABLE)
        assert err.value.reason == "bad-mark"

    def test_mark_object_form(self):
        doc = json.loads(MINIMAL_BAR)
        doc["mark"] = {"type": "line", "tooltip": True}
        assert parse_and_validate(json.dumps(doc), TABLE).mark == "line"

    def test_no_encoding(self):
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate(json.dumps({"mark": "bar"}), TABLE)
        assert err.value.reason == "no-encoding"

    def test_color_only_encoding_rejected(self):
        doc = {"mark": "bar",
               "encoding": {"color": {"field": "team", "type": "nominal"}}}
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate(json.dumps(doc), TABLE)
        assert err.value.reason == "no-encoding"

    def test_bad_field_type(self):
        raw = MINIMAL_BAR.replace('"nominal"', '"categorical"')
        with pytest.raises(VegaInvalid) as err:
            parse_and_validate(raw, TABLE)
        assert err.value.reason == "unknown-field"

    def test_unknown_top_level_keys_ignored(self):
        doc = json.loads(MINIMAL_BAR)
        doc["width"] = 400
        doc["config"] = {"axis": {}}
        assert parse_and_validate(json.dumps(doc), TABLE).mark == "bar"

    def test_unsupported_channels_dropped(self):
        doc = json.loads(MINIMAL_BAR)
        doc["encoding"]["tooltip"] = {"field": "made_up", "type": "nominal"}
        spec = parse_and_validate(json.dumps(doc), TABLE)
        assert "tooltip" not in spec.encoding_map()

    def test_model_data_discarded(self):
        doc = json.loads(MINIMAL_BAR)
        doc["data"] = {"values": [{"team": "Fabricated", "total": 999.0}]}
        spec = parse_and_validate(json.dumps(doc), TABLE)
        assert spec.inline_data == tuple(TABLE.records())

    def test_chart_row_cap(self):
        big = ResultTable(
            columns=(("team", "TEXT"), ("total", "REAL")),
            rows=tuple((f"t{i}", float(i)) for i in range(600)))
        spec = parse_and_validate(MINIMAL_BAR, big, chart_row_cap=500)
        assert len(spec.inline_data) == 500

    def test_field_closure_invariant(self):
        spec = parse_and_validate(MINIMAL_BAR, TABLE)
        for _, field_name, _ in spec.encodings:
            assert field_name in TABLE.column_names

    def test_title_passthrough(self):
        doc = json.loads(MINIMAL_BAR)
        doc["title"] = "Totals by team"
        spec = parse_and_validate(json.dumps(doc), TABLE)
        assert spec.title == "Totals by team"

    def test_theta_arc_pie(self):
        doc = {"mark": "arc", "encoding": {
            "theta": {"field": "total", "type": "quantitative"},
            "color": {"field": "team", "type": "nominal"}}}
        spec = parse_and_validate(json.dumps(doc), TABLE)
        assert spec.mark == "arc"
        assert set(spec.encoding_map()) == {"theta", "color"}


class TestEmit:
    def test_document_structure(self):
        document = emit(parse_and_validate(MINIMAL_BAR, TABLE))
        doc = json.loads(document)
        assert doc["mark"] == "bar"
        assert doc["encoding"]["x"]["field"] == "team"
        assert doc["data"]["values"][0] == {"team": "Hawks", "total": 55.7}
        assert "$schema" in doc

    def test_sorted_keys_stable(self):
        spec = parse_and_validate(MINIMAL_BAR, TABLE)
        assert emit(spec) == emit(spec)

    def test_round_trip_fixed_point(self):
        spec = parse_and_validate(MINIMAL_BAR, TABLE)
        document = emit(spec)
        reparsed = parse_and_validate(document, TABLE)
        assert reparsed == spec
        assert emit(reparsed) == document

    def test_data_integrity(self):
        spec = parse_and_validate(MINIMAL_BAR, TABLE)
        values = json.loads(emit(spec))["data"]["values"]
        assert values == TABLE.records()
