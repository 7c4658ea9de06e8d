#!/usr/bin/env node
/**
 * Harness entry point.
 *
 * Default mode speaks line-delimited JSON over stdin/stdout (one request
 * object per line, one response object per line, matched by id). With
 * --port N an HTTP listener mirroring the same schema is started as well:
 * POST /execute with a request object returns the response object.
 */

import * as http from "node:http";
import * as readline from "node:readline";
import { enqueueExecution } from "./executor";
import { parseRequest } from "./protocol";

function writeResponse(payload: unknown): void {
  process.stdout.write(JSON.stringify(payload) + "\n");
}

function startStdioLoop(): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  let inFlight = 0;
  let closed = false;
  const maybeExit = () => {
    if (closed && inFlight === 0) process.exit(0);
  };
  rl.on("line", (line) => {
    const trimmed = line.trim();
    if (!trimmed) return;
    const request = parseRequest(trimmed);
    if (request === null) return; // unparseable lines are dropped
    inFlight += 1;
    enqueueExecution(request)
      .then((response) => writeResponse(response))
      .catch((error) => {
        writeResponse({
          id: request.id,
          status: "runtime_error",
          error: `harness failure: ${String(error)}`,
          console: [],
        });
      })
      .finally(() => {
        inFlight -= 1;
        maybeExit();
      });
  });
  rl.on("close", () => {
    closed = true;
    maybeExit();
  });
}

function startHttp(port: number): void {
  const server = http.createServer((req, res) => {
    if (req.method !== "POST" || !(req.url === "/execute" || req.url === "/")) {
      res.writeHead(404, { "Content-Type": "application/json" });
      res.end(JSON.stringify({ error: "POST /execute" }));
      return;
    }
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => {
      const request = parseRequest(Buffer.concat(chunks).toString("utf8"));
      if (request === null) {
        res.writeHead(400, { "Content-Type": "application/json" });
        res.end(JSON.stringify({ error: "malformed request" }));
        return;
      }
      enqueueExecution(request).then(
        (response) => {
          res.writeHead(200, { "Content-Type": "application/json" });
          res.end(JSON.stringify(response));
        },
        (error) => {
          res.writeHead(500, { "Content-Type": "application/json" });
          res.end(JSON.stringify({
            id: request.id,
            status: "runtime_error",
            error: `harness failure: ${String(error)}`,
            console: [],
          }));
        },
      );
    });
  });
  server.listen(port, () => {
    process.stderr.write(`harness http listening on :${port}\n`);
  });
}

function main(): void {
  const args = process.argv.slice(2);
  const portIndex = args.indexOf("--port");
  if (portIndex >= 0) {
    const port = Number(args[portIndex + 1]);
    if (!Number.isInteger(port) || port <= 0) {
      process.stderr.write("--port requires a positive integer\n");
      process.exit(2);
    }
    startHttp(port);
  }
  startStdioLoop();
}

main();
