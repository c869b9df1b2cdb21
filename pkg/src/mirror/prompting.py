"""Prompt construction for the three pipeline calls, plus autocompletion.

Templates are plain format strings with literal ``{name}`` slots (``{{``
escapes a brace) and optional free-form instructions prepended to the body.
All rendering is pure: identical inputs produce byte-identical text.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from enum import Enum

from .datasource import ResultTable, SchemaMetadata
from .errors import TemplateError, VisualizationSkipped

__all__ = [
    "TemplateKind",
    "PromptTemplate",
    "RenderedPrompt",
    "Suggestion",
    "serialize_schema",
    "render_generation_prompt",
    "render_summarization_prompt",
    "render_visualization_prompt",
    "render_result_section",
    "autocomplete",
    "default_template",
    "parse_template_file",
    "template_to_file",
    "DEFAULT_PROMPT_ROW_CAP",
]

DEFAULT_PROMPT_ROW_CAP = 20

CHART_MARKS = ("bar", "line", "area", "point", "arc")
CHART_CHANNELS = ("x", "y", "color", "theta")
CHART_FIELD_TYPES = ("quantitative", "nominal", "ordinal", "temporal")


class TemplateKind(str, Enum):
    GENERATION = "generation"
    SUMMARIZATION = "summarization"
    VISUALIZATION = "visualization"


# Required slots must appear exactly once; optional slots at most once.
_SLOT_RULES: dict[TemplateKind, tuple[frozenset[str], frozenset[str]]] = {
    TemplateKind.GENERATION: (frozenset({"metadata", "query"}), frozenset()),
    TemplateKind.SUMMARIZATION: (frozenset({"query", "result"}), frozenset()),
    TemplateKind.VISUALIZATION: (frozenset({"query", "result"}),
                                 frozenset({"columns"})),
}


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    kind: TemplateKind
    body: str
    instructions: str = ""

    def __post_init__(self):
        required, optional = _SLOT_RULES[self.kind]
        seen: dict[str, int] = {}
        for name in _scan_slots(self.body):
            seen[name] = seen.get(name, 0) + 1
        for name in required:
            if name not in seen:
                raise TemplateError("missing-slot", f"slot {{{name}}} is required")
        for name, count in seen.items():
            if name not in required and name not in optional:
                raise TemplateError("unknown-slot", f"slot {{{name}}} is not allowed")
            if count > 1:
                raise TemplateError("duplicate-slot",
                                    f"slot {{{name}}} appears {count} times")


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    token_estimate: int
    template_id: str
    inputs_fingerprint: str


@dataclass(frozen=True)
class Suggestion:
    completion: str
    kind: str  # "table" | "column"
    source_table: str | None = None


_SLOT_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _scan_slots(body: str):
    """Yield slot names, honoring {{ and }} escapes."""
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "{":
            if body.startswith("{{", i):
                i += 2
                continue
            m = _SLOT_RE.match(body, i)
            if not m:
                raise TemplateError("bad-header",
                                    f"stray '{{' at offset {i} (use '{{{{' for a literal)")
            yield m.group(1)
            i = m.end()
        elif ch == "}":
            if body.startswith("}}", i):
                i += 2
                continue
            raise TemplateError("bad-header",
                                f"stray '}}' at offset {i} (use '}}}}' for a literal)")
        else:
            i += 1


def _substitute(body: str, values: dict[str, str]) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "{":
            if body.startswith("{{", i):
                out.append("{")
                i += 2
                continue
            m = _SLOT_RE.match(body, i)
            out.append(values[m.group(1)])
            i = m.end()
        elif ch == "}" and body.startswith("}}", i):
            out.append("}")
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _finish(template: PromptTemplate, body_text: str, inputs: dict) -> RenderedPrompt:
    text = (template.instructions + "\n\n" if template.instructions else "") + body_text
    fingerprint = hashlib.sha256(json.dumps(
        {"template": template.id, "body": template.body,
         "instructions": template.instructions, "inputs": inputs},
        sort_keys=True, separators=(",", ":"), default=str).encode("utf-8")).hexdigest()
    return RenderedPrompt(
        text=text,
        token_estimate=math.ceil(len(text) / 4),
        template_id=template.id,
        inputs_fingerprint=fingerprint,
    )


def serialize_schema(meta: SchemaMetadata) -> str:
    """Render the schema as DDL-style text, one CREATE TABLE per line."""
    lines = []
    for table in meta.tables:
        parts = []
        for name, tag, nullable in table.columns:
            parts.append(f"{name} {tag}" + ("" if nullable else " NOT NULL"))
        if table.primary_key:
            parts.append("PRIMARY KEY (" + ", ".join(table.primary_key) + ")")
        for local, ftable, fcol in table.foreign_keys:
            parts.append(f"FOREIGN KEY ({local}) REFERENCES {ftable} ({fcol})")
        lines.append(f"CREATE TABLE {table.name} (" + ", ".join(parts) + ");")
    return "\n".join(lines)


def render_generation_prompt(template: PromptTemplate, meta: SchemaMetadata,
                             question: str) -> RenderedPrompt:
    if template.kind is not TemplateKind.GENERATION:
        raise TemplateError("missing-slot",
                            f"expected a generation template, got {template.kind.value}")
    body = _substitute(template.body, {
        "metadata": serialize_schema(meta),
        "query": question,
    })
    return _finish(template, body, {
        "schema": meta.fingerprint, "question": question,
    })


def render_result_section(table: ResultTable,
                          row_cap: int = DEFAULT_PROMPT_ROW_CAP) -> str:
    """Header line plus at most ``row_cap`` pipe-separated rows."""
    if table.is_empty():
        return "(no rows)"
    lines = [" | ".join(name for name, _ in table.columns)]
    shown = table.rows[:row_cap]
    for row in shown:
        lines.append(" | ".join(_render_cell(cell) for cell in row))
    omitted = len(table.rows) - len(shown)
    if omitted > 0:
        lines.append(f"... ({omitted} more rows omitted)")
    return "\n".join(lines)


def _render_cell(cell) -> str:
    if cell is None:
        return "NULL"
    if isinstance(cell, float):
        return f"{cell:.6g}"
    if isinstance(cell, bytes):
        return cell.hex()
    return str(cell).replace("|", "\\|")


def render_summarization_prompt(template: PromptTemplate, question: str,
                                table: ResultTable,
                                row_cap: int = DEFAULT_PROMPT_ROW_CAP) -> RenderedPrompt:
    if template.kind is not TemplateKind.SUMMARIZATION:
        raise TemplateError("missing-slot",
                            f"expected a summarization template, got {template.kind.value}")
    body = _substitute(template.body, {
        "query": question,
        "result": render_result_section(table, row_cap),
    })
    return _finish(template, body, {
        "question": question, "table": table.content_hash(), "row_cap": row_cap,
    })


def chart_context_block(table: ResultTable) -> str:
    """Allowed chart grammar plus the exact columns a spec may reference."""
    lines = [
        "Allowed marks: " + ", ".join(CHART_MARKS) + ".",
        "Allowed encoding channels: " + ", ".join(CHART_CHANNELS) + ".",
        "Allowed field types: " + ", ".join(CHART_FIELD_TYPES) + ".",
        "Columns available to encodings:",
    ]
    for name, tag in table.columns:
        lines.append(f"  {name}: {tag}")
    return "\n".join(lines)


def render_visualization_prompt(template: PromptTemplate, question: str,
                                table: ResultTable,
                                row_cap: int = DEFAULT_PROMPT_ROW_CAP) -> RenderedPrompt:
    if template.kind is not TemplateKind.VISUALIZATION:
        raise TemplateError("missing-slot",
                            f"expected a visualization template, got {template.kind.value}")
    if table.is_empty():
        raise VisualizationSkipped()
    context = chart_context_block(table)
    has_columns_slot = "columns" in set(_scan_slots(template.body))
    body = _substitute(template.body, {
        "query": question,
        "result": render_result_section(table, row_cap),
        "columns": context,
    })
    if not has_columns_slot:
        body = body.rstrip("\n") + "\n\n" + context
    return _finish(template, body, {
        "question": question, "table": table.content_hash(), "row_cap": row_cap,
    })


def autocomplete(meta: SchemaMetadata, text_before_cursor: str) -> list[Suggestion]:
    """Identifier completions for the trailing word of the input.

    Tables rank before columns; ties break lexicographically; at most 10.
    """
    m = re.search(r"[A-Za-z_][A-Za-z0-9_]*$", text_before_cursor)
    if not m:
        return []
    prefix = m.group(0).lower()
    tables = []
    columns = []
    for table in meta.tables:
        if table.name.lower().startswith(prefix):
            tables.append(Suggestion(table.name, "table"))
        for cname in table.column_names():
            if cname.lower().startswith(prefix):
                columns.append(Suggestion(cname, "column", table.name))
    tables.sort(key=lambda s: s.completion)
    columns.sort(key=lambda s: (s.completion, s.source_table))
    return (tables + columns)[:10]


# --------------------------------------------------------------------------
# Shipped defaults and the template file format

_DEFAULT_BODIES = {
    TemplateKind.GENERATION: (
        "default-generation",
        "Given the following database schema:\n"
        "\n"
        "{metadata}\n"
        "\n"
        "Write one SQL SELECT statement that answers the question below.\n"
        "Return only the SQL, nothing else.\n"
        "Question: {query}\n"
        "SQL:",
    ),
    TemplateKind.SUMMARIZATION: (
        "default-summarization",
        "Question: {query}\n"
        "\n"
        "Query result:\n"
        "{result}\n"
        "\n"
        "Answer the question in one or two plain-English sentences using only "
        "the result above.",
    ),
    TemplateKind.VISUALIZATION: (
        "default-visualization",
        "Question: {query}\n"
        "\n"
        "Query result:\n"
        "{result}\n"
        "\n"
        "{columns}\n"
        "\n"
        "Produce a JSON chart description for this result with keys "
        "\"mark\" and \"encoding\" only. Each encoding channel maps to an "
        "object with \"field\" and \"type\". Return only the JSON object.",
    ),
}


def default_template(kind: TemplateKind) -> PromptTemplate:
    tid, body = _DEFAULT_BODIES[kind]
    return PromptTemplate(id=tid, kind=kind, body=body)


def parse_template_file(text: str) -> PromptTemplate:
    """Parse the on-disk format: ``id:``/``kind:`` header, ``---``, body."""
    header, sep, body = text.partition("\n---\n")
    if not sep:
        raise TemplateError("bad-header", "missing '---' separator line")
    fields = {}
    for line in header.splitlines():
        if not line.strip():
            continue
        key, colon, value = line.partition(":")
        if not colon:
            raise TemplateError("bad-header", f"malformed header line {line!r}")
        fields[key.strip()] = value.strip()
    if "id" not in fields or "kind" not in fields:
        raise TemplateError("bad-header", "header must define id and kind")
    try:
        kind = TemplateKind(fields["kind"])
    except ValueError:
        raise TemplateError("bad-header",
                            f"unknown template kind {fields['kind']!r}") from None
    return PromptTemplate(id=fields["id"], kind=kind, body=body,
                          instructions=fields.get("instructions", ""))


def template_to_file(template: PromptTemplate) -> str:
    lines = [f"id: {template.id}", f"kind: {template.kind.value}"]
    if template.instructions:
        lines.append(f"instructions: {template.instructions}")
    return "\n".join(lines) + "\n---\n" + template.body
