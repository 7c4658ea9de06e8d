/**
 * Script execution against a fresh page environment: compile, run, wait
 * for quiescence (or timeout), and classify the outcome.
 */

import * as vm from "node:vm";
import { createEnvironment, PageEnvironment } from "./environment";
import { HarnessRequest, HarnessResponse } from "./protocol";

const SETTLE_MS = 500; // idle window after the last observed activity
const IDLE_ROUNDS_EXIT = 25; // early exit once microtasks stop producing work
const MAX_TIMER_RUNS = 100_000;

let currentRejectionSink: ((reason: unknown) => void) | null = null;
let rejectionHookInstalled = false;

function installRejectionHook(): void {
  if (rejectionHookInstalled) return;
  rejectionHookInstalled = true;
  process.on("unhandledRejection", (reason) => {
    if (currentRejectionSink) currentRejectionSink(reason);
  });
}

function flushMicrotasks(): Promise<void> {
  return new Promise((resolve) => setImmediate(resolve));
}

function errorText(error: unknown): string {
  // errors may come from another realm, so instanceof is unreliable
  const candidate = error as { name?: unknown; message?: unknown };
  if (candidate && candidate.message !== undefined) {
    const name = candidate.name !== undefined ? String(candidate.name) : "Error";
    return `${name}: ${String(candidate.message)}`;
  }
  return String(error);
}

async function settle(env: PageEnvironment, deadline: number,
                      sawRejection: () => boolean,
                      topLevelSettled: () => boolean): Promise<"quiesced" | "timeout"> {
  // Idle early-exit is only safe once the script's own top-level promise
  // has settled: async WASM compilation finishes on a background thread
  // and posts its completion later than any microtask flush.
  let idleRounds = 0;
  let timerRuns = 0;
  let lastActivity = Date.now();
  while (Date.now() < deadline) {
    if (sawRejection()) return "quiesced"; // classified by the caller
    if (env.pendingTimers() > 0) {
      if (++timerRuns > MAX_TIMER_RUNS) return "timeout";
      env.runNextTimer();
      idleRounds = 0;
      lastActivity = Date.now();
    } else if (topLevelSettled()) {
      idleRounds += 1;
      if (idleRounds >= IDLE_ROUNDS_EXIT) return "quiesced";
      if (Date.now() - lastActivity > SETTLE_MS) return "quiesced";
    }
    await flushMicrotasks();
  }
  if (!topLevelSettled() || env.pendingTimers() > 0) return "timeout";
  return "quiesced";
}

export async function executeRequest(req: HarnessRequest): Promise<HarnessResponse> {
  installRejectionHook();
  const env = createEnvironment({ monitorApis: req.monitor_apis });
  const response: HarnessResponse = {
    id: req.id,
    status: "ok",
    console: env.consoleLines,
  };
  if (req.monitor_apis) {
    response.api_accesses = env.apiAccesses;
    if (env.watchpointFailures.length > 0) {
      response.watchpoint_failures = env.watchpointFailures;
    }
  }

  let script: vm.Script;
  try {
    script = new vm.Script(req.script, { filename: "injected.js" });
  } catch (error) {
    response.status = "parse_error";
    response.error = errorText(error);
    return response;
  }

  let rejection: unknown = null;
  let sawRejection = false;
  currentRejectionSink = (reason) => {
    rejection = reason;
    sawRejection = true;
  };
  const deadline = Date.now() + req.timeout_ms;
  try {
    const result = script.runInContext(env.context, {
      timeout: req.timeout_ms,
      displayErrors: true,
    });
    let topLevelSettled = true;
    if (result !== null && result !== undefined &&
        typeof (result as { then?: unknown }).then === "function") {
      // top-level IIAFE: let its promise join the settle loop
      topLevelSettled = false;
      (result as Promise<unknown>).then(
        () => { topLevelSettled = true; },
        (error) => {
          rejection = error;
          sawRejection = true;
          topLevelSettled = true;
        },
      );
    }
    const settled = await settle(env, deadline, () => sawRejection,
                                 () => topLevelSettled);
    if (sawRejection) {
      response.status = "runtime_error";
      response.error = errorText(rejection);
    } else if (settled === "timeout") {
      response.status = "timeout";
      response.error = "script did not quiesce within timeout";
    }
  } catch (error) {
    // the vm module's timeout error is realm-crossing: match by code,
    // covering the historical spelling as well
    const code = (error as { code?: string }).code;
    const message = String((error as { message?: unknown })?.message ?? error);
    const timedOut = code === "ERR_SCRIPT_EXECUTION_TIMEOUT" ||
      code === "ERR_SCRIPT_EXECUTION_TIMED_OUT" ||
      /execution timed out/i.test(message);
    if (timedOut) {
      response.status = "timeout";
      response.error = "synchronous execution exceeded timeout";
    } else {
      response.status = "runtime_error";
      response.error = errorText(error);
    }
  } finally {
    currentRejectionSink = null;
  }

  if (response.status === "ok" && req.collect_fingerprint) {
    const hash = env.readFingerprint();
    if (hash !== undefined) response.fingerprint_hash = hash;
  }
  return response;
}

let executionChain: Promise<unknown> = Promise.resolve();

/** Requests share one page-context pipeline per process: serialize. */
export function enqueueExecution(req: HarnessRequest): Promise<HarnessResponse> {
  const next = executionChain.then(() => executeRequest(req));
  executionChain = next.catch(() => undefined);
  return next;
}
