/**
 * Autocomplete UX against the live backend: the dropdown mirrors the
 * backend's suggestion list, hides at word boundaries, and inserts the
 * picked identifier verbatim.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App, mountApp } from "../src/app.js";
import { startServer, TestServer } from "./server.js";

let server: TestServer;
let app: App;
let client: ApiClient;

beforeAll(async () => {
  server = await startServer([{ match: null, response: "unused" }]);
  client = new ApiClient(server.baseUrl);
  const root = document.createElement("div");
  document.body.appendChild(root);
  app = mountApp(root, client, "sports");
});

afterAll(async () => {
  await server.stop();
});

describe("suggest while typing", () => {
  it("a 3-character prefix shows the backend's list in order", async () => {
    const input = app.elements.questionInput as HTMLInputElement;
    input.value = "show pla";
    const suggestions = await app.refreshSuggestions();

    const backend = await client.autocomplete("sports", "show pla");
    expect(suggestions).toEqual(backend.suggestions);

    const items = app.elements.suggestionBox.querySelectorAll("li");
    expect(items.length).toBe(backend.suggestions.length);
    expect(items[0].textContent).toBe("players");
    expect(
      Array.from(items).map((item) => item.textContent),
    ).toEqual(backend.suggestions.map((s) => s.completion));
    expect(app.elements.suggestionBox.classList.contains("hidden")).toBe(false);
  });

  it("hides the dropdown at a word boundary", async () => {
    const input = app.elements.questionInput as HTMLInputElement;
    input.value = "show players ";
    const suggestions = await app.refreshSuggestions();
    expect(suggestions).toEqual([]);
    expect(app.elements.suggestionBox.classList.contains("hidden")).toBe(true);
  });

  it("clicking a suggestion inserts the identifier verbatim", async () => {
    const input = app.elements.questionInput as HTMLInputElement;
    input.value = "top ppg of pla";
    await app.refreshSuggestions();

    const first = app.elements.suggestionBox.querySelector("li")!;
    first.dispatchEvent(new MouseEvent("click"));

    expect(input.value).toBe("top ppg of players");
    expect(app.elements.suggestionBox.classList.contains("hidden")).toBe(true);
  });
});
