/**
 * Typed client for the query service. Every request goes through one of the
 * documented endpoints below; nothing in the UI talks to the server any
 * other way.
 */

export interface Verdict {
  accepted: boolean;
  reason: string;
  referenced_tables: string[];
  detail: string;
}

export interface ErrorInfo {
  reason: string;
  message: string;
}

export interface GenerationParams {
  temperature: number;
  top_p: number;
  max_output_tokens: number;
  stop_sequences: string[];
  seed_hint: number | null;
}

export interface Attempt {
  index: number;
  prompt_fingerprint: string;
  extracted_sql: string;
  verdict: Verdict | null;
  params_used: GenerationParams;
  execution_error: ErrorInfo | null;
  provider_error: ErrorInfo | null;
  raw_output?: string;
  prompt_text?: string;
}

export interface TableData {
  columns: [string, string][];
  rows: unknown[][];
  truncated: boolean;
}

export interface ChartAttempt {
  index: number;
  raw_output: string;
  error: ErrorInfo | null;
}

export type SessionStatus =
  | "pending"
  | "sql-failed"
  | "succeeded"
  | "summarizing"
  | "complete";

export interface SessionRecord {
  id: string;
  datasource_id: string;
  question: string;
  status: SessionStatus;
  attempts: Attempt[];
  edit_attempts: Attempt[];
  final_sql: string | null;
  table: TableData | null;
  summary: string | null;
  summary_error: ErrorInfo | null;
  chart: unknown | null;
  chart_document?: Record<string, unknown>;
  chart_attempts: ChartAttempt[];
  last_error: string | null;
  schema_fingerprint?: string;
  template_ids?: Record<string, string>;
  created_at: string;
  updated_at: string;
}

export interface Suggestion {
  completion: string;
  kind: "table" | "column";
  source_table: string | null;
}

export interface SchemaColumn {
  name: string;
  sql_type: string;
  nullable: boolean;
}

export interface SchemaTable {
  name: string;
  columns: SchemaColumn[];
  primary_key: string[];
  foreign_keys: { column: string; foreign_table: string; foreign_column: string }[];
}

export interface SchemaDocument {
  fingerprint: string;
  tables: SchemaTable[];
}

export interface TemplateDoc {
  id: string;
  kind: string;
  body: string;
  instructions: string;
}

/** Error carrying the server's machine-readable reason code. */
export class ApiError extends Error {
  readonly status: number;
  readonly reason: string;

  constructor(status: number, reason: string, message: string) {
    super(message);
    this.status = status;
    this.reason = reason;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let reason = "error";
  let message = response.statusText;
  try {
    const body = await response.json();
    reason = body.reason ?? reason;
    message = body.message ?? body.detail ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, reason, message);
}

export class ApiClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listDatasources(): Promise<{ ids: string[] }> {
    return this.request("/api/datasources");
  }

  getSchema(datasourceId: string): Promise<SchemaDocument> {
    return this.request(`/api/datasources/${encodeURIComponent(datasourceId)}/schema`);
  }

  startQuery(datasourceId: string, question: string): Promise<{ id: string; status: SessionStatus }> {
    return this.post("/api/query", { datasource_id: datasourceId, question });
  }

  getSession(sessionId: string): Promise<SessionRecord> {
    return this.request(`/api/sessions/${encodeURIComponent(sessionId)}`);
  }

  rerunSql(sessionId: string, sql: string): Promise<SessionRecord> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/sql`, { sql });
  }

  editWithInstruction(sessionId: string, instruction: string): Promise<SessionRecord> {
    return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/edit`, { instruction });
  }

  autocomplete(datasourceId: string, text: string): Promise<{ suggestions: Suggestion[] }> {
    const params = new URLSearchParams({ datasource: datasourceId, q: text });
    return this.request(`/api/autocomplete?${params}`);
  }

  getTemplates(datasourceId: string): Promise<{ templates: TemplateDoc[] }> {
    const params = new URLSearchParams({ datasource: datasourceId });
    return this.request(`/api/templates?${params}`);
  }
}
