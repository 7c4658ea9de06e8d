import { describe, expect, it } from "vitest";
import { executeRequest } from "../src/executor";
import { HarnessRequest } from "../src/protocol";

function request(script: string, overrides: Partial<HarnessRequest> = {}): HarnessRequest {
  return {
    id: Math.random().toString(16).slice(2),
    script,
    timeout_ms: 3000,
    collect_fingerprint: false,
    monitor_apis: false,
    ...overrides,
  };
}

describe("executeRequest", () => {
  it("captures console output", async () => {
    const response = await executeRequest(request("console.log(1+1);"));
    expect(response.status).toBe("ok");
    expect(response.console).toEqual(["2"]);
  });

  it("reports thrown errors as runtime_error", async () => {
    const response = await executeRequest(request('throw new Error("x");'));
    expect(response.status).toBe("runtime_error");
    expect(response.error).toContain("x");
  });

  it("counts unhandled rejections as runtime_error", async () => {
    const response = await executeRequest(
      request('Promise.reject(new Error("lost"));'),
    );
    expect(response.status).toBe("runtime_error");
    expect(response.error).toContain("lost");
  });

  it("reports syntax errors as parse_error", async () => {
    const response = await executeRequest(request("let x = ;"));
    expect(response.status).toBe("parse_error");
  });

  it("times out synchronous loops", async () => {
    const response = await executeRequest(
      request("while (true) {}", { timeout_ms: 300 }),
    );
    expect(response.status).toBe("timeout");
  }, 10_000);

  it("times out endless timer chains", async () => {
    const response = await executeRequest(
      request("function again() { setTimeout(again, 1); } again();", {
        timeout_ms: 300,
      }),
    );
    expect(response.status).toBe("timeout");
  }, 10_000);

  it("collects the fingerprint global", async () => {
    const response = await executeRequest(
      request('window.__fp_hash = __sha256hex("probe");', {
        collect_fingerprint: true,
      }),
    );
    expect(response.status).toBe("ok");
    expect(response.fingerprint_hash).toMatch(/^[0-9a-f]{64}$/);
  });

  it("is deterministic across fresh contexts", async () => {
    const script = `
      var c = document.createElement("canvas");
      var ctx = c.getContext("2d");
      ctx.fillText("stable probe text", 2, 15);
      window.__fp_hash = __sha256hex(c.toDataURL() + navigator.userAgent);
    `;
    const first = await executeRequest(request(script, { collect_fingerprint: true }));
    const second = await executeRequest(request(script, { collect_fingerprint: true }));
    expect(first.fingerprint_hash).toBe(second.fingerprint_hash);
  });

  it("waits for async work before reading the fingerprint", async () => {
    const script = `
      setTimeout(function () {
        window.__fp_hash = __sha256hex("late");
      }, 10);
    `;
    const response = await executeRequest(
      request(script, { collect_fingerprint: true }),
    );
    expect(response.status).toBe("ok");
    expect(response.fingerprint_hash).toBeDefined();
  });

  it("executes injected script elements synchronously", async () => {
    const script = `
      var el = document.createElement("script");
      el.textContent = "window.__inj = 41 + 1;";
      document.body.appendChild(el);
      console.log(window.__inj);
    `;
    const response = await executeRequest(request(script));
    expect(response.console).toEqual(["42"]);
  });

  it("runs real WebAssembly inside the context", async () => {
    // minimal module: (module) -> magic + version only
    const script = `
      (async function () {
        var mod = await WebAssembly.compile(new Uint8Array([0,97,115,109,1,0,0,0]));
        console.log(mod instanceof WebAssembly.Module);
      })();
    `;
    const response = await executeRequest(request(script));
    expect(response.status).toBe("ok");
    expect(response.console).toEqual(["true"]);
  });
});

describe("monitoring", () => {
  it("records watched property reads", async () => {
    const response = await executeRequest(
      request("var ua = navigator.userAgent; var w = screen.width;", {
        monitor_apis: true,
      }),
    );
    expect(response.api_accesses).toContain("navigator.userAgent");
    expect(response.api_accesses).toContain("screen.width");
  });

  it("records prototype method calls", async () => {
    const script = `
      var c = document.createElement("canvas");
      c.getContext("2d").fillText("x", 0, 0);
      var snapshot = c.toDataURL();
      var zone = new Date().getTimezoneOffset();
    `;
    const response = await executeRequest(request(script, { monitor_apis: true }));
    expect(response.api_accesses).toContain(
      "CanvasRenderingContext2D.prototype.fillText",
    );
    expect(response.api_accesses).toContain(
      "HTMLCanvasElement.prototype.toDataURL",
    );
    expect(response.api_accesses).toContain("Date.prototype.getTimezoneOffset");
  });

  it("sees through computed member access", async () => {
    const direct = await executeRequest(
      request("var v = screen.availHeight;", { monitor_apis: true }),
    );
    const indirect = await executeRequest(
      request('var v = window["scr" + "een"]["avail" + "Height"];', {
        monitor_apis: true,
      }),
    );
    expect(new Set(indirect.api_accesses)).toEqual(new Set(direct.api_accesses));
  });

  it("omits access log when monitoring is off", async () => {
    const response = await executeRequest(request("var ua = navigator.userAgent;"));
    expect(response.api_accesses).toBeUndefined();
  });

  it("script touching no watched API yields an empty list", async () => {
    const response = await executeRequest(
      request("var benign = 1 + 2;", { monitor_apis: true }),
    );
    expect(response.api_accesses).toEqual([]);
  });
});
