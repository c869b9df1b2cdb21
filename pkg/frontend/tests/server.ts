/**
 * Spawns the real backend with a scripted provider for integration tests.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const PYTHON = process.env.PYTHON ?? "python3";

export interface TranscriptEntry {
  match: string | null;
  response: string;
}

export interface TestServer {
  baseUrl: string;
  stop(): Promise<void>;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = net.createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      const port = address.port;
      server.close(() => resolve(port));
    });
  });
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export async function startServer(transcript: TranscriptEntry[]): Promise<TestServer> {
  const dir = mkdtempSync(path.join(tmpdir(), "mirror-ui-"));
  const dbPath = path.join(dir, "sports.db");
  execFileSync(PYTHON, [path.join(HERE, "fixtures", "make_fixture.py"), dbPath]);

  const transcriptPath = path.join(dir, "transcript.json");
  writeFileSync(transcriptPath, JSON.stringify(transcript));

  const port = await freePort();
  const configPath = path.join(dir, "config.json");
  writeFileSync(configPath, JSON.stringify({
    host: "127.0.0.1",
    port,
    store_path: path.join(dir, "sessions.db"),
    provider: { kind: "scripted", transcript_path: transcriptPath },
    datasources: [{ id: "sports", kind: "embedded-file", location: dbPath }],
  }));

  const proc: ChildProcess = spawn(
    PYTHON, ["-m", "mirror.cli", "serve", "--config", configPath],
    { stdio: "ignore" },
  );

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/api/datasources`);
      if (response.ok) {
        break;
      }
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill("SIGKILL");
      throw new Error("backend did not start in time");
    }
    await sleep(100);
  }

  return {
    baseUrl,
    stop: () =>
      new Promise<void>((resolve) => {
        proc.once("exit", () => resolve());
        proc.kill("SIGKILL");
      }),
  };
}
