import { describe, expect, it } from "vitest";

import type { ApiClient, SessionRecord } from "../src/api.js";
import { isTerminal, pollSession } from "../src/session.js";

function record(status: SessionRecord["status"]): SessionRecord {
  return {
    id: "s1",
    datasource_id: "ds",
    question: "q",
    status,
    attempts: [],
    edit_attempts: [],
    final_sql: null,
    table: null,
    summary: null,
    summary_error: null,
    chart: null,
    chart_attempts: [],
    last_error: null,
    created_at: "",
    updated_at: "",
  };
}

describe("pollSession", () => {
  it("reports every snapshot and stops at a terminal status", async () => {
    const sequence = [record("pending"), record("succeeded"),
                      record("summarizing"), record("complete")];
    let calls = 0;
    const client = {
      getSession: async () => sequence[Math.min(calls++, sequence.length - 1)],
    } as unknown as ApiClient;

    const seen: string[] = [];
    const final = await pollSession(client, "s1", {
      intervalMs: 1,
      onUpdate: (r) => seen.push(r.status),
    });
    expect(final.status).toBe("complete");
    expect(seen).toEqual(["pending", "succeeded", "summarizing", "complete"]);
  });

  it("retries with backoff after network loss", async () => {
    let calls = 0;
    const client = {
      getSession: async () => {
        calls += 1;
        if (calls <= 2) {
          throw new TypeError("fetch failed");
        }
        return record("complete");
      },
    } as unknown as ApiClient;

    const retries: number[] = [];
    const final = await pollSession(client, "s1", {
      intervalMs: 1,
      onRetry: (_attempt, delayMs) => retries.push(delayMs),
    });
    expect(final.status).toBe("complete");
    expect(retries).toHaveLength(2);
    expect(retries[1]).toBeGreaterThan(retries[0]);
  });

  it("gives up after the timeout", async () => {
    const client = {
      getSession: async () => record("pending"),
    } as unknown as ApiClient;
    await expect(
      pollSession(client, "s1", { intervalMs: 1, timeoutMs: 30 }),
    ).rejects.toThrow(/did not finish/);
  });
});

describe("isTerminal", () => {
  it("matches only completed and failed sessions", () => {
    expect(isTerminal("complete")).toBe(true);
    expect(isTerminal("sql-failed")).toBe(true);
    expect(isTerminal("pending")).toBe(false);
    expect(isTerminal("summarizing")).toBe(false);
  });
});
