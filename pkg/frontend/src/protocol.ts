/**
 * Line-JSON request/response protocol shared with the Python orchestrator.
 * One JSON object per line on the standard streams; responses are matched
 * by id and may arrive out of order. Unknown request fields are ignored.
 */

export interface HarnessRequest {
  id: string;
  script: string;
  timeout_ms: number;
  collect_fingerprint: boolean;
  monitor_apis: boolean;
}

export type HarnessStatus = "ok" | "parse_error" | "runtime_error" | "timeout";

export interface HarnessResponse {
  id: string;
  status: HarnessStatus;
  error?: string;
  fingerprint_hash?: string;
  api_accesses?: string[];
  watchpoint_failures?: string[];
  console: string[];
}

export function parseRequest(line: string): HarnessRequest | null {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const record = raw as Record<string, unknown>;
  if (typeof record.id !== "string" || typeof record.script !== "string") {
    return null;
  }
  return {
    id: record.id,
    script: record.script,
    timeout_ms:
      typeof record.timeout_ms === "number" && record.timeout_ms > 0
        ? record.timeout_ms
        : 5000,
    collect_fingerprint: record.collect_fingerprint === true,
    monitor_apis: record.monitor_apis === true,
  };
}
