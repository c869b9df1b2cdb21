"""Chart description validation and emission.

Model output is parsed as JSON (with lenient extraction from fenced or
prose-wrapped text), checked against a conservative subset of the Vega-Lite
grammar, and bound to the result table: every encoded field must be a real
column, and the data values are always copied from the table, never taken
from the model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .datasource import ResultTable
from .errors import VegaInvalid
from .prompting import CHART_CHANNELS, CHART_FIELD_TYPES, CHART_MARKS

__all__ = ["ChartSpec", "parse_and_validate", "emit", "DEFAULT_CHART_ROW_CAP"]

DEFAULT_CHART_ROW_CAP = 500

VEGA_LITE_SCHEMA = "https://vega.github.io/schema/vega-lite/v5.json"

_AXIS_CHANNELS = ("x", "y", "theta")


@dataclass(frozen=True)
class ChartSpec:
    mark: str
    encodings: tuple[tuple[str, str, str], ...]  # (channel, field, type)
    inline_data: tuple[dict, ...]
    title: str | None = None

    def encoding_map(self) -> dict[str, dict[str, str]]:
        return {ch: {"field": f, "type": t} for ch, f, t in self.encodings}


def _extract_json_object(raw: str) -> dict:
    text = raw.strip()
    try:
        value = json.loads(text)
        if isinstance(value, dict):
            return value
        raise VegaInvalid("not-json", f"top-level JSON is {type(value).__name__}, not an object")
    except json.JSONDecodeError:
        pass
    fenced = re.search(r"```(?:json)?\s*\n(.*?)```", text, re.DOTALL)
    if fenced:
        try:
            value = json.loads(fenced.group(1))
            if isinstance(value, dict):
                return value
        except json.JSONDecodeError:
            pass
    balanced = _first_balanced_object(text)
    if balanced is not None:
        try:
            value = json.loads(balanced)
            if isinstance(value, dict):
                return value
        except json.JSONDecodeError:
            pass
    raise VegaInvalid("not-json", "no JSON object found in output")


def _first_balanced_object(text: str) -> str | None:
    start = text.find("{")
    while start >= 0:
        depth = 0
        in_string = False
        escape = False
        for idx in range(start, len(text)):
            ch = text[idx]
            if in_string:
                if escape:
                    escape = False
                elif ch == "\\":
                    escape = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start:idx + 1]
        start = text.find("{", start + 1)
    return None


def parse_and_validate(raw: str, table: ResultTable,
                       chart_row_cap: int = DEFAULT_CHART_ROW_CAP) -> ChartSpec:
    """Validate a raw chart description against the table it will display.

    Unknown top-level keys are ignored; channels outside the supported set
    are dropped; model-supplied data is discarded and replaced with rows
    copied from the table.
    """
    doc = _extract_json_object(raw)

    mark = doc.get("mark")
    if isinstance(mark, dict):
        mark = mark.get("type")
    if not isinstance(mark, str) or mark not in CHART_MARKS:
        raise VegaInvalid("bad-mark", f"mark must be one of {CHART_MARKS}, got {mark!r}")

    encoding = doc.get("encoding")
    if not isinstance(encoding, dict) or not encoding:
        raise VegaInvalid("no-encoding", "spec has no encoding object")

    column_names = set(table.column_names)
    encodings: list[tuple[str, str, str]] = []
    for channel in CHART_CHANNELS:
        entry = encoding.get(channel)
        if entry is None:
            continue
        if not isinstance(entry, dict):
            raise VegaInvalid("unknown-field",
                              f"encoding channel {channel!r} is not an object")
        fname = entry.get("field")
        ftype = entry.get("type")
        if not isinstance(fname, str):
            raise VegaInvalid("unknown-field",
                              f"encoding channel {channel!r} has no field name")
        if fname not in column_names:
            raise VegaInvalid("unknown-field",
                              f"field {fname!r} is not a column of the result")
        if not isinstance(ftype, str) or ftype not in CHART_FIELD_TYPES:
            raise VegaInvalid("unknown-field",
                              f"field type {ftype!r} must be one of {CHART_FIELD_TYPES}")
        encodings.append((channel, fname, ftype))

    if not any(ch in _AXIS_CHANNELS for ch, _, _ in encodings):
        raise VegaInvalid("no-encoding",
                          "at least one of x, y, or theta must be encoded")

    title = doc.get("title")
    if not isinstance(title, str):
        title = None

    inline = tuple(table.records()[:chart_row_cap])
    return ChartSpec(mark=mark, encodings=tuple(encodings),
                     inline_data=inline, title=title)


def emit(spec: ChartSpec) -> str:
    """Serialize to a renderer-ready JSON document (sorted keys, UTF-8)."""
    doc = {
        "$schema": VEGA_LITE_SCHEMA,
        "mark": spec.mark,
        "encoding": spec.encoding_map(),
        "data": {"values": list(spec.inline_data)},
    }
    if spec.title is not None:
        doc["title"] = spec.title
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2)
