import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

/** Paths published by the server; the client may use nothing else. */
const DOCUMENTED = [
  /^\/api\/datasources$/,
  /^\/api\/datasources\/[^/]+\/schema$/,
  /^\/api\/query$/,
  /^\/api\/sessions\/[^/]+$/,
  /^\/api\/sessions\/[^/]+\/sql$/,
  /^\/api\/sessions\/[^/]+\/edit$/,
  /^\/api\/autocomplete\?.*$/,
  /^\/api\/templates\?.*$/,
];

describe("api client contract", () => {
  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it("issues only documented endpoints", async () => {
    const requested: string[] = [];
    vi.stubGlobal("fetch", async (url: string | URL) => {
      requested.push(String(url));
      return new Response("{}", { status: 200 });
    });

    const client = new ApiClient("http://test");
    await client.listDatasources();
    await client.getSchema("sports");
    await client.startQuery("sports", "q");
    await client.getSession("s1");
    await client.rerunSql("s1", "SELECT 1");
    await client.editWithInstruction("s1", "change it");
    await client.autocomplete("sports", "pla");
    await client.getTemplates("sports");

    expect(requested).toHaveLength(8);
    for (const url of requested) {
      const path = url.replace("http://test", "");
      expect(
        DOCUMENTED.some((pattern) => pattern.test(path)),
        `undocumented endpoint: ${path}`,
      ).toBe(true);
    }
  });

  it("surfaces machine-readable error reasons", async () => {
    vi.stubGlobal("fetch", async () =>
      new Response(JSON.stringify({ reason: "not-a-select", message: "nope" }), {
        status: 422,
      }));
    const client = new ApiClient("http://test");
    const error = await client.rerunSql("s1", "DELETE FROM x").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(422);
    expect(error.reason).toBe("not-a-select");
  });
});
