import { describe, expect, it } from "vitest";

import {
  instructionEnabled,
  newEditor,
  rerunEnabled,
  syncFromSession,
  typeSql,
} from "../src/editor.js";

describe("editor state", () => {
  it("starts clean with the session SQL", () => {
    const state = newEditor("SELECT 1");
    expect(state.dirty).toBe(false);
    expect(rerunEnabled(state)).toBe(false);
    expect(instructionEnabled(state)).toBe(true);
  });

  it("dirty editor enables rerun and disables the instruction path", () => {
    const state = typeSql(newEditor("SELECT 1"), "SELECT 2");
    expect(state.dirty).toBe(true);
    expect(rerunEnabled(state)).toBe(true);
    expect(instructionEnabled(state)).toBe(false);
  });

  it("typing back the original text makes it clean again", () => {
    let state = newEditor("SELECT 1");
    state = typeSql(state, "SELECT 12");
    state = typeSql(state, "SELECT 1");
    expect(state.dirty).toBe(false);
  });

  it("without SQL neither path is available", () => {
    const state = newEditor(null);
    expect(rerunEnabled(state)).toBe(false);
    expect(instructionEnabled(state)).toBe(false);
  });

  it("syncing from a session resets the baseline", () => {
    let state = typeSql(newEditor("SELECT 1"), "SELECT 2");
    state = syncFromSession(state, "SELECT 3");
    expect(state.text).toBe("SELECT 3");
    expect(state.dirty).toBe(false);
  });
});
