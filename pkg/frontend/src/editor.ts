/**
 * SQL editor state and the two edit paths.
 *
 * Exactly one path is live at a time: while the editor is dirty (text differs
 * from the session's SQL) only manual rerun is enabled; while it is clean the
 * instruction box is the active path.
 */

import { ApiClient, ApiError, SessionRecord } from "./api.js";

export interface EditorState {
  text: string;
  baseline: string;
  dirty: boolean;
}

export function newEditor(sql: string | null): EditorState {
  const text = sql ?? "";
  return { text, baseline: text, dirty: false };
}

export function typeSql(state: EditorState, text: string): EditorState {
  return { ...state, text, dirty: text !== state.baseline };
}

export function syncFromSession(state: EditorState, sql: string | null): EditorState {
  return newEditor(sql);
}

export function rerunEnabled(state: EditorState): boolean {
  return state.dirty;
}

export function instructionEnabled(state: EditorState): boolean {
  return !state.dirty && state.baseline.length > 0;
}

export interface EditOutcome {
  record: SessionRecord | null;
  problem: string | null; // validation/execution message for inline display
}

/** Manual path: submit the edited SQL; rejections come back inline. */
export async function submitManualSql(
  client: ApiClient,
  sessionId: string,
  sql: string,
): Promise<EditOutcome> {
  try {
    return { record: await client.rerunSql(sessionId, sql), problem: null };
  } catch (err) {
    if (err instanceof ApiError && (err.status === 422 || err.status === 400)) {
      return { record: null, problem: `${err.reason}: ${err.message}` };
    }
    throw err;
  }
}

/** Instructed path: let the model revise the current SQL. */
export async function submitInstruction(
  client: ApiClient,
  sessionId: string,
  instruction: string,
): Promise<EditOutcome> {
  try {
    return {
      record: await client.editWithInstruction(sessionId, instruction),
      problem: null,
    };
  } catch (err) {
    if (err instanceof ApiError && (err.status === 422 || err.status === 409)) {
      return { record: null, problem: `${err.reason}: ${err.message}` };
    }
    throw err;
  }
}
