/**
 * Session polling with progressive updates.
 *
 * One in-flight poll per session; network failures retry with exponential
 * backoff (surfaced through onRetry so the UI can show an indicator) and the
 * interval resets as soon as a snapshot arrives.
 */

import { ApiClient, SessionRecord, SessionStatus } from "./api.js";

export interface SessionView {
  record: SessionRecord | null;
  pollIntervalMs: number;
  editorDirty: boolean;
  polling: boolean;
  lastProblem: string | null;
}

export function newSessionView(pollIntervalMs = 150): SessionView {
  return {
    record: null,
    pollIntervalMs,
    editorDirty: false,
    polling: false,
    lastProblem: null,
  };
}

const TERMINAL: SessionStatus[] = ["complete", "sql-failed"];

export function isTerminal(status: SessionStatus): boolean {
  return TERMINAL.includes(status);
}

export interface PollOptions {
  intervalMs?: number;
  maxBackoffMs?: number;
  timeoutMs?: number;
  onUpdate?: (record: SessionRecord) => void;
  onRetry?: (attempt: number, delayMs: number) => void;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/**
 * Poll until the session reaches a terminal status, invoking onUpdate for
 * every snapshot so panels can render progressively.
 */
export async function pollSession(
  client: ApiClient,
  sessionId: string,
  options: PollOptions = {},
): Promise<SessionRecord> {
  const interval = options.intervalMs ?? 150;
  const maxBackoff = options.maxBackoffMs ?? 5000;
  const deadline = Date.now() + (options.timeoutMs ?? 60_000);
  let failures = 0;

  while (Date.now() < deadline) {
    let record: SessionRecord;
    try {
      record = await client.getSession(sessionId);
    } catch (err) {
      failures += 1;
      const delay = Math.min(interval * 2 ** failures, maxBackoff);
      options.onRetry?.(failures, delay);
      await sleep(delay);
      continue;
    }
    failures = 0;
    options.onUpdate?.(record);
    if (isTerminal(record.status)) {
      return record;
    }
    await sleep(interval);
  }
  throw new Error(`session ${sessionId} did not finish before the timeout`);
}

/**
 * Submit a question and follow the session to completion.
 */
export async function queryFlow(
  client: ApiClient,
  datasourceId: string,
  question: string,
  options: PollOptions = {},
): Promise<SessionRecord> {
  const started = await client.startQuery(datasourceId, question);
  return pollSession(client, started.id, options);
}
