/**
 * Single-page client: question input with schema suggestions, generated-SQL
 * editor with manual and instructed edit paths, result table, summary, and
 * the rendered chart with its export menu.
 */

import { ApiClient, Attempt, SessionRecord, Suggestion } from "./api.js";
import { applySuggestion, suggestWhileTyping } from "./autocomplete.js";
import { renderChart } from "./chart.js";
import {
  EditorState,
  instructionEnabled,
  newEditor,
  rerunEnabled,
  submitInstruction,
  submitManualSql,
  syncFromSession,
  typeSql,
} from "./editor.js";
import { newSessionView, queryFlow, SessionView } from "./session.js";
import { renderTable } from "./table.js";

export interface App {
  client: ApiClient;
  datasourceId: string;
  view: SessionView;
  editor: EditorState;
  elements: Record<string, HTMLElement>;
  activeRun: Promise<SessionRecord> | null;
  lastChartRender: Promise<unknown> | null;
  submitQuestion(question: string): Promise<SessionRecord>;
  rerun(): Promise<void>;
  instruct(instruction: string): Promise<void>;
  refreshSuggestions(): Promise<Suggestion[]>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  id: string,
  parent: HTMLElement,
  className?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.id = id;
  if (className) {
    node.className = className;
  }
  parent.appendChild(node);
  return node;
}

function attemptBadge(attempt: Attempt): string {
  if (attempt.provider_error) {
    return `provider ${attempt.provider_error.reason}`;
  }
  if (attempt.execution_error) {
    return `execution ${attempt.execution_error.reason}`;
  }
  if (attempt.verdict && !attempt.verdict.accepted) {
    return `rejected ${attempt.verdict.reason}`;
  }
  return "ok";
}

export function mountApp(root: HTMLElement, client: ApiClient, datasourceId: string): App {
  root.replaceChildren();

  const queryRegion = el("section", "query-region", root);
  const questionInput = el("input", "question-input", queryRegion);
  questionInput.type = "text";
  questionInput.placeholder = "Ask a question about the data";
  const submitButton = el("button", "submit-question", queryRegion);
  submitButton.textContent = "Ask";
  const suggestionBox = el("ul", "suggestions", queryRegion, "suggestions hidden");
  const statusLine = el("p", "status-line", queryRegion, "status");

  const editorRegion = el("section", "editor-region", root);
  const sqlEditor = el("textarea", "sql-editor", editorRegion);
  const rerunButton = el("button", "rerun-sql", editorRegion);
  rerunButton.textContent = "Run SQL";
  const instructionInput = el("input", "instruction-input", editorRegion);
  instructionInput.type = "text";
  instructionInput.placeholder = "Describe a change, e.g. exclude a group";
  const instructButton = el("button", "apply-instruction", editorRegion);
  instructButton.textContent = "Revise";
  const editProblem = el("p", "edit-problem", editorRegion, "problem hidden");
  const attemptsList = el("ul", "attempts", editorRegion);

  const resultRegion = el("section", "result-region", root);
  const tablePanel = el("div", "table-panel", resultRegion);
  const summaryPanel = el("p", "summary-panel", resultRegion);
  const chartPanel = el("div", "chart-panel", resultRegion);

  const app: App = {
    client,
    datasourceId,
    view: newSessionView(),
    editor: newEditor(null),
    elements: {
      questionInput, submitButton, suggestionBox, statusLine,
      sqlEditor, rerunButton, instructionInput, instructButton,
      editProblem, attemptsList, tablePanel, summaryPanel, chartPanel,
    },
    activeRun: null,
    lastChartRender: null,
    submitQuestion,
    rerun,
    instruct,
    refreshSuggestions,
  };

  function syncEditPaths(): void {
    // one edit path at a time: a dirty editor enables rerun and parks
    // the instruction box; a clean editor does the reverse
    rerunButton.disabled = !rerunEnabled(app.editor);
    instructionInput.disabled = !instructionEnabled(app.editor);
    instructButton.disabled = !instructionEnabled(app.editor);
  }

  function renderAttempts(record: SessionRecord): void {
    attemptsList.replaceChildren();
    for (const [label, attempts] of [
      ["attempt", record.attempts],
      ["edit", record.edit_attempts],
    ] as const) {
      for (const attempt of attempts) {
        const item = document.createElement("li");
        item.className = "attempt";
        const badge = attemptBadge(attempt);
        item.dataset.badge = badge;
        item.textContent = `${label} ${attempt.index}: ${badge}`
          + (attempt.extracted_sql ? ` — ${attempt.extracted_sql}` : "");
        attemptsList.appendChild(item);
      }
    }
  }

  function applyRecord(record: SessionRecord): void {
    app.view.record = record;
    statusLine.textContent = `status: ${record.status}`;
    renderAttempts(record);
    if (!app.editor.dirty) {
      app.editor = syncFromSession(app.editor, record.final_sql);
      sqlEditor.value = app.editor.text;
    }
    renderTable(tablePanel, record.table);
    summaryPanel.textContent = record.summary ?? "";
    app.lastChartRender = renderChart(chartPanel, record.chart_document ?? null);
    syncEditPaths();
  }

  async function submitQuestion(question: string): Promise<SessionRecord> {
    statusLine.textContent = "status: submitting";
    suggestionBox.classList.add("hidden");
    const run = queryFlow(client, datasourceId, question, {
      onUpdate: applyRecord,
      onRetry: (attempt, delayMs) => {
        statusLine.textContent = `status: connection lost, retry ${attempt} in ${delayMs}ms`;
      },
    });
    app.activeRun = run;
    try {
      return await run;
    } finally {
      app.activeRun = null;
    }
  }

  async function refreshSuggestions(): Promise<Suggestion[]> {
    const text = questionInput.value;
    const suggestions = await suggestWhileTyping(client, datasourceId, text);
    suggestionBox.replaceChildren();
    if (suggestions.length === 0) {
      suggestionBox.classList.add("hidden");
      return suggestions;
    }
    for (const suggestion of suggestions) {
      const item = document.createElement("li");
      item.className = `suggestion ${suggestion.kind}`;
      item.textContent = suggestion.completion;
      item.addEventListener("click", () => {
        questionInput.value = applySuggestion(questionInput.value, suggestion);
        suggestionBox.classList.add("hidden");
        questionInput.focus();
      });
      suggestionBox.appendChild(item);
    }
    suggestionBox.classList.remove("hidden");
    return suggestions;
  }

  async function rerun(): Promise<void> {
    const record = app.view.record;
    if (!record) {
      return;
    }
    editProblem.classList.add("hidden");
    const outcome = await submitManualSql(client, record.id, sqlEditor.value);
    if (outcome.problem !== null) {
      editProblem.textContent = outcome.problem;
      editProblem.classList.remove("hidden");
      return;
    }
    app.editor = newEditor(null); // force resync from the fresh record
    applyRecord(outcome.record!);
  }

  async function instruct(instruction: string): Promise<void> {
    const record = app.view.record;
    if (!record) {
      return;
    }
    editProblem.classList.add("hidden");
    const outcome = await submitInstruction(client, record.id, instruction);
    if (outcome.problem !== null) {
      editProblem.textContent = outcome.problem;
      editProblem.classList.remove("hidden");
      return;
    }
    instructionInput.value = "";
    applyRecord(outcome.record!);
  }

  questionInput.addEventListener("input", () => {
    void refreshSuggestions();
  });
  submitButton.addEventListener("click", () => {
    void submitQuestion(questionInput.value);
  });
  sqlEditor.addEventListener("input", () => {
    app.editor = typeSql(app.editor, sqlEditor.value);
    syncEditPaths();
  });
  rerunButton.addEventListener("click", () => {
    void rerun();
  });
  instructButton.addEventListener("click", () => {
    void instruct(instructionInput.value);
  });

  syncEditPaths();
  return app;
}
