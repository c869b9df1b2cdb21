"""Natural-language data querying: question in, validated read-only SQL out,
plus a prose summary and a chart description for the result."""

from .chartspec import ChartSpec, emit, parse_and_validate
from .datasource import (
    DataSourceConfig,
    DataSourceRegistry,
    ResultTable,
    SchemaMetadata,
    SourceKind,
    TableMeta,
    ingest_csv,
)
from .errors import (
    DataSourceError,
    ExecutionError,
    ExtractionError,
    GenerationExhausted,
    MirrorError,
    ProviderError,
    TemplateError,
    ValidationRejected,
    VegaInvalid,
    VisualizationSkipped,
)
from .orchestrator import Orchestrator, QuerySession, SessionStatus, extract_sql
from .prompting import (
    PromptTemplate,
    RenderedPrompt,
    Suggestion,
    TemplateKind,
    autocomplete,
    default_template,
    render_generation_prompt,
    render_summarization_prompt,
    render_visualization_prompt,
    serialize_schema,
)
from .providers import GenerationParams, HttpProvider, Provider, ProviderResponse, ScriptedProvider
from .sqlguard import ValidationVerdict, referenced_identifiers, validate

__version__ = "0.1.0"
