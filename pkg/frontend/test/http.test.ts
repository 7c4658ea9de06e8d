import { spawn } from "node:child_process";
import * as http from "node:http";
import * as path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

const harnessPath = path.resolve(__dirname, "..", "dist", "harness.js");
const PORT = 8765 + Math.floor(Math.random() * 1000);

function post(payload: unknown): Promise<{ status: number; body: any }> {
  return new Promise((resolve, reject) => {
    const data = JSON.stringify(payload);
    const req = http.request(
      {
        host: "127.0.0.1",
        port: PORT,
        path: "/execute",
        method: "POST",
        headers: { "Content-Type": "application/json" },
      },
      (res) => {
        const chunks: Buffer[] = [];
        res.on("data", (c) => chunks.push(c));
        res.on("end", () => {
          resolve({
            status: res.statusCode ?? 0,
            body: JSON.parse(Buffer.concat(chunks).toString("utf8")),
          });
        });
      },
    );
    req.on("error", reject);
    req.end(data);
  });
}

describe("http mode", () => {
  let child: ReturnType<typeof spawn>;

  beforeAll(async () => {
    child = spawn(process.execPath, [harnessPath, "--port", String(PORT)], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    // wait for the listener announcement on stderr
    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("no listener")), 8000);
      child.stderr!.on("data", (chunk: Buffer) => {
        if (chunk.toString().includes("listening")) {
          clearTimeout(timer);
          resolve();
        }
      });
    });
  });

  afterAll(() => {
    child.kill();
  });

  it("mirrors the stdio schema", async () => {
    const { status, body } = await post({
      id: "h1",
      script: "console.log('via http');",
      timeout_ms: 2000,
    });
    expect(status).toBe(200);
    expect(body.id).toBe("h1");
    expect(body.status).toBe("ok");
    expect(body.console).toEqual(["via http"]);
  });

  it("rejects malformed requests", async () => {
    const { status } = await post({ nope: true });
    expect(status).toBe(400);
  });
});
