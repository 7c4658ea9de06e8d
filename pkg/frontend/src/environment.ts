/**
 * Deterministic synthetic browser context for script execution.
 *
 * Every request gets a fresh `vm` context populated with window/document,
 * navigator, screen, canvas, audio, WebRTC and storage stubs whose outputs
 * are fixed functions of their inputs, so a script and its rewritten
 * variant produce identical observable behavior. API watchpoints are
 * installed at the environment level (property getters and prototype
 * methods), so monitoring needs no script modification and survives
 * source-level obfuscation.
 */

import * as crypto from "node:crypto";
import * as vm from "node:vm";

export interface HostTimer {
  id: number;
  at: number;
  seq: number;
  fn: () => void;
}

export interface PageEnvironment {
  context: vm.Context;
  sandbox: Record<string, unknown>;
  consoleLines: string[];
  apiAccesses: string[];
  watchpointFailures: string[];
  pendingTimers: () => number;
  runNextTimer: () => boolean;
  readFingerprint: () => string | undefined;
}

export function sha256hex(value: string): string {
  return crypto.createHash("sha256").update(String(value), "utf8").digest("hex");
}

/** In-context setup: DOM-ish globals built with context-realm intrinsics. */
const BOOTSTRAP = String.raw`
"use strict";
(function (host) {
  globalThis.window = globalThis;

  // --- canvas -------------------------------------------------------------
  class CanvasRenderingContext2D {
    constructor(canvas) {
      this.canvas = canvas;
      this._font = "10px sans-serif";
      this._fillStyle = "#000000";
      this._strokeStyle = "#000000";
      this._textBaseline = "alphabetic";
    }
    get font() { return this._font; }
    set font(v) { this.canvas._ops.push(["set", "font", String(v)]); this._font = String(v); }
    get fillStyle() { return this._fillStyle; }
    set fillStyle(v) { this.canvas._ops.push(["set", "fillStyle", String(v)]); this._fillStyle = String(v); }
    get strokeStyle() { return this._strokeStyle; }
    set strokeStyle(v) { this.canvas._ops.push(["set", "strokeStyle", String(v)]); this._strokeStyle = String(v); }
    get textBaseline() { return this._textBaseline; }
    set textBaseline(v) { this.canvas._ops.push(["set", "textBaseline", String(v)]); this._textBaseline = String(v); }
    save() { this.canvas._ops.push(["save"]); }
    restore() { this.canvas._ops.push(["restore"]); }
    beginPath() { this.canvas._ops.push(["beginPath"]); }
    closePath() { this.canvas._ops.push(["closePath"]); }
    arc(x, y, r, a, b) { this.canvas._ops.push(["arc", x, y, r, a, b]); }
    fillRect(x, y, w, h) { this.canvas._ops.push(["fillRect", x, y, w, h]); }
    strokeRect(x, y, w, h) { this.canvas._ops.push(["strokeRect", x, y, w, h]); }
    fillText(text, x, y) { this.canvas._ops.push(["fillText", String(text), x, y, this._font, this._fillStyle]); }
    strokeText(text, x, y) { this.canvas._ops.push(["strokeText", String(text), x, y, this._font]); }
    measureText(text) {
      let h = 2166136261 >>> 0;
      const s = this._font + "|" + String(text);
      for (let i = 0; i < s.length; i++) {
        h ^= s.charCodeAt(i);
        h = Math.imul(h, 16777619) >>> 0;
      }
      return { width: (h % 10000) / 16 };
    }
    getImageData(x, y, w, h) {
      const n = Math.max(0, (w | 0) * (h | 0) * 4);
      const data = new Uint8ClampedArray(n);
      for (let i = 0; i < n; i++) data[i] = (i * 31 + this.canvas._ops.length * 7) & 0xff;
      return { width: w, height: h, data };
    }
  }

  class HTMLCanvasElement {
    constructor() {
      this.tagName = "CANVAS";
      this.width = 300;
      this.height = 150;
      this._ops = [];
      this._ctx = null;
    }
    getContext(kind) {
      if (String(kind) !== "2d") return null;
      if (!this._ctx) this._ctx = new CanvasRenderingContext2D(this);
      return this._ctx;
    }
    toDataURL() {
      const digest = host.sha256hex(JSON.stringify([this.width, this.height, this._ops]));
      return "data:image/png;base64," + host.hexToBase64(digest);
    }
  }

  class HTMLScriptElement {
    constructor() {
      this.tagName = "SCRIPT";
      this.textContent = "";
    }
  }

  class HTMLElement {
    constructor(tag) {
      this.tagName = String(tag).toUpperCase();
      this.textContent = "";
      this.children = [];
    }
    appendChild(el) { this.children.push(el); return el; }
  }

  const body = new HTMLElement("body");
  body.appendChild = function (el) {
    this.children.push(el);
    if (el instanceof HTMLScriptElement && el.textContent) {
      host.evalInPage(String(el.textContent));
    }
    return el;
  };

  globalThis.document = {
    body: body,
    documentElement: new HTMLElement("html"),
    createElement(tag) {
      const name = String(tag).toLowerCase();
      if (name === "canvas") return new HTMLCanvasElement();
      if (name === "script") return new HTMLScriptElement();
      return new HTMLElement(name);
    },
    getElementById() { return null; },
  };

  // --- navigator / screen ---------------------------------------------------
  globalThis.navigator = {
    userAgent: "Mozilla/5.0 (X11; Linux x86_64) HarnessShell/1.0",
    platform: "Linux x86_64",
    language: "en-US",
    languages: ["en-US", "en"],
    appName: "Netscape",
    appVersion: "5.0 (X11)",
    hardwareConcurrency: 8,
    plugins: {
      length: 3,
      0: { name: "PDF Viewer" },
      1: { name: "Chromium PDF Viewer" },
      2: { name: "WebKit built-in PDF" },
    },
  };
  globalThis.screen = {
    width: 1920,
    height: 1080,
    availWidth: 1920,
    availHeight: 1040,
    colorDepth: 24,
    pixelDepth: 24,
  };

  // --- storage ---------------------------------------------------------------
  class Storage {
    constructor() { this._map = new Map(); }
    getItem(k) { return this._map.has(String(k)) ? this._map.get(String(k)) : null; }
    setItem(k, v) { this._map.set(String(k), String(v)); }
    removeItem(k) { this._map.delete(String(k)); }
    clear() { this._map.clear(); }
    get length() { return this._map.size; }
  }
  globalThis.Storage = Storage;
  globalThis.localStorage = new Storage();
  globalThis.sessionStorage = new Storage();

  // --- audio -------------------------------------------------------------------
  function audioNode(extra) {
    const base = { connect(n) { return n; }, disconnect() {} };
    return Object.assign(base, extra);
  }
  class AudioContext {
    constructor() {
      this.sampleRate = 44100;
      this.destination = audioNode({});
      this.state = "running";
    }
    createOscillator() {
      return audioNode({ type: "sine", frequency: { value: 440 }, start() {}, stop() {} });
    }
    createAnalyser() {
      return audioNode({
        fftSize: 2048,
        frequencyBinCount: 1024,
        getFloatFrequencyData(arr) {
          for (let i = 0; i < arr.length; i++) arr[i] = -30 - ((i * 7) % 50) - (i % 3) * 0.5;
        },
      });
    }
    createDynamicsCompressor() {
      return audioNode({
        threshold: { value: -24 }, knee: { value: 30 }, ratio: { value: 12 },
        attack: { value: 0.003 }, release: { value: 0.25 },
      });
    }
  }
  class OfflineAudioContext extends AudioContext {
    constructor(channels, length, rate) {
      super();
      this.numberOfChannels = channels | 0;
      this.length = length | 0;
      this.sampleRate = rate | 0;
    }
    startRendering() {
      const length = this.length;
      const rate = this.sampleRate;
      const channels = this.numberOfChannels;
      return new Promise((resolve) => {
        setTimeout(() => {
          resolve({
            length: length,
            sampleRate: rate,
            numberOfChannels: channels,
            getChannelData(c) {
              const data = new Float64Array(length);
              for (let i = 0; i < length; i++) data[i] = Math.sin(i / 17 + c) * 0.5;
              return data;
            },
          });
        }, 0);
      });
    }
  }
  globalThis.AudioContext = AudioContext;
  globalThis.OfflineAudioContext = OfflineAudioContext;

  // --- WebRTC ---------------------------------------------------------------------
  class RTCPeerConnection {
    constructor() {
      this.localDescription = null;
      this._onicecandidate = null;
    }
    get onicecandidate() { return this._onicecandidate; }
    set onicecandidate(fn) {
      this._onicecandidate = fn;
      const self = this;
      setTimeout(function () {
        if (self._onicecandidate) {
          self._onicecandidate({
            candidate: { candidate: "candidate:842163049 1 udp 1677729535 192.0.2.1 46154 typ srflx" },
          });
        }
        if (self._onicecandidate) self._onicecandidate(null);
      }, 0);
    }
    createDataChannel(label) {
      return { label: String(label), id: 0, readyState: "connecting" };
    }
    createOffer() {
      return new Promise(function (resolve) {
        setTimeout(function () {
          resolve({
            type: "offer",
            sdp: "v=0\no=- 4611731400430051336 2 IN IP4 127.0.0.1\ns=-\nt=0 0\na=ice-ufrag:harn\na=ice-pwd:deadbeefdeadbeefdeadbeef\n",
          });
        }, 0);
      });
    }
    setLocalDescription(desc) { this.localDescription = desc; return Promise.resolve(); }
    close() {}
  }
  globalThis.RTCPeerConnection = RTCPeerConnection;

  globalThis.__sha256hex = function (value) { return host.sha256hex(String(value)); };
  globalThis.performance = { now: function () { return host.now(); } };
})
`;

/** Watchpoint table: label -> installer run inside the context. */
const WATCHPOINT_INSTALLER = String.raw`
(function (record) {
  function instrumentGetter(obj, prop, label) {
    if (!obj || !(prop in obj)) throw new Error("missing " + label);
    const value = obj[prop];
    Object.defineProperty(obj, prop, {
      get() { record(label); return value; },
      configurable: true,
    });
  }
  function instrumentMethod(proto, name, label) {
    if (!proto || typeof proto[name] !== "function") throw new Error("missing " + label);
    const original = proto[name];
    proto[name] = function () { record(label); return original.apply(this, arguments); };
  }
  function instrumentConstructor(name, label) {
    const original = globalThis[name];
    if (typeof original !== "function") throw new Error("missing " + label);
    const wrapped = function () {
      record(label);
      return Reflect.construct(original, arguments, original);
    };
    wrapped.prototype = original.prototype;
    globalThis[name] = wrapped;
  }
  const failures = [];
  const registrations = [
    ["navigator.userAgent", () => instrumentGetter(navigator, "userAgent", "navigator.userAgent")],
    ["navigator.platform", () => instrumentGetter(navigator, "platform", "navigator.platform")],
    ["navigator.language", () => instrumentGetter(navigator, "language", "navigator.language")],
    ["navigator.appName", () => instrumentGetter(navigator, "appName", "navigator.appName")],
    ["navigator.hardwareConcurrency", () => instrumentGetter(navigator, "hardwareConcurrency", "navigator.hardwareConcurrency")],
    ["navigator.plugins", () => instrumentGetter(navigator, "plugins", "navigator.plugins")],
    ["screen.width", () => instrumentGetter(screen, "width", "screen.width")],
    ["screen.height", () => instrumentGetter(screen, "height", "screen.height")],
    ["screen.availWidth", () => instrumentGetter(screen, "availWidth", "screen.availWidth")],
    ["screen.availHeight", () => instrumentGetter(screen, "availHeight", "screen.availHeight")],
    ["screen.colorDepth", () => instrumentGetter(screen, "colorDepth", "screen.colorDepth")],
    ["HTMLCanvasElement.prototype.toDataURL", () => {
      const canvas = document.createElement("canvas");
      instrumentMethod(Object.getPrototypeOf(canvas), "toDataURL", "HTMLCanvasElement.prototype.toDataURL");
    }],
    ["CanvasRenderingContext2D.prototype.fillText", () => {
      const proto = Object.getPrototypeOf(document.createElement("canvas").getContext("2d"));
      instrumentMethod(proto, "fillText", "CanvasRenderingContext2D.prototype.fillText");
    }],
    ["CanvasRenderingContext2D.prototype.measureText", () => {
      const proto = Object.getPrototypeOf(document.createElement("canvas").getContext("2d"));
      instrumentMethod(proto, "measureText", "CanvasRenderingContext2D.prototype.measureText");
    }],
    ["CanvasRenderingContext2D.prototype.getImageData", () => {
      const proto = Object.getPrototypeOf(document.createElement("canvas").getContext("2d"));
      instrumentMethod(proto, "getImageData", "CanvasRenderingContext2D.prototype.getImageData");
    }],
    ["AudioContext.prototype.createOscillator", () => instrumentMethod(AudioContext.prototype, "createOscillator", "AudioContext.prototype.createOscillator")],
    ["AudioContext.prototype.createAnalyser", () => instrumentMethod(AudioContext.prototype, "createAnalyser", "AudioContext.prototype.createAnalyser")],
    ["AudioContext.prototype.createDynamicsCompressor", () => instrumentMethod(AudioContext.prototype, "createDynamicsCompressor", "AudioContext.prototype.createDynamicsCompressor")],
    ["Date.prototype.getTimezoneOffset", () => instrumentMethod(Date.prototype, "getTimezoneOffset", "Date.prototype.getTimezoneOffset")],
    ["Storage.prototype.getItem", () => instrumentMethod(Storage.prototype, "getItem", "Storage.prototype.getItem")],
    ["Storage.prototype.setItem", () => instrumentMethod(Storage.prototype, "setItem", "Storage.prototype.setItem")],
    ["RTCPeerConnection", () => instrumentConstructor("RTCPeerConnection", "RTCPeerConnection")],
  ];
  for (const [label, install] of registrations) {
    try {
      install();
    } catch (e) {
      failures.push(label);
    }
  }
  return failures;
})
`;

const MAX_ACCESS_LOG = 1000;

export function createEnvironment(options: { monitorApis: boolean }): PageEnvironment {
  const consoleLines: string[] = [];
  const apiAccesses: string[] = [];
  const watchpointFailures: string[] = [];
  const timers: HostTimer[] = [];
  let timerSeq = 0;
  const startedAt = Date.now();

  const sandbox: Record<string, unknown> = {};
  vm.createContext(sandbox, { name: "harness-page" });
  const run = (code: string) => vm.runInContext(code, sandbox as vm.Context);

  const stringify = (value: unknown): string => {
    if (typeof value === "string") return value;
    if (value instanceof Error) return String(value);
    try {
      return String(value);
    } catch {
      return "[unprintable]";
    }
  };

  sandbox.console = {
    log: (...args: unknown[]) => consoleLines.push(args.map(stringify).join(" ")),
    info: (...args: unknown[]) => consoleLines.push(args.map(stringify).join(" ")),
    warn: (...args: unknown[]) => consoleLines.push(args.map(stringify).join(" ")),
    error: (...args: unknown[]) => consoleLines.push(args.map(stringify).join(" ")),
    debug: () => undefined,
  };
  sandbox.TextDecoder = TextDecoder;
  sandbox.TextEncoder = TextEncoder;
  sandbox.atob = (data: string) => Buffer.from(String(data), "base64").toString("binary");
  sandbox.btoa = (data: string) => Buffer.from(String(data), "binary").toString("base64");
  sandbox.setTimeout = (fn: () => void, ms?: number, ...rest: unknown[]) => {
    const id = ++timerSeq;
    const bound = typeof fn === "function" ? () => (fn as (...a: unknown[]) => void)(...rest) : () => undefined;
    timers.push({ id, at: Math.max(0, Number(ms) | 0), seq: id, fn: bound });
    return id;
  };
  sandbox.clearTimeout = (id: number) => {
    const index = timers.findIndex((t) => t.id === id);
    if (index >= 0) timers.splice(index, 1);
  };
  sandbox.setInterval = sandbox.setTimeout; // one-shot approximation
  sandbox.clearInterval = sandbox.clearTimeout;
  sandbox.queueMicrotask = (fn: () => void) => {
    Promise.resolve().then(() => fn());
  };

  const host = {
    sha256hex,
    hexToBase64: (hex: string) => Buffer.from(hex, "hex").toString("base64"),
    evalInPage: (code: string) => run(code),
    now: () => Date.now() - startedAt,
  };
  (run(BOOTSTRAP) as (h: typeof host) => void)(host);

  if (options.monitorApis) {
    const record = (label: string) => {
      if (apiAccesses.length < MAX_ACCESS_LOG) apiAccesses.push(label);
    };
    const failures = (run(WATCHPOINT_INSTALLER) as (r: typeof record) => string[])(record);
    watchpointFailures.push(...failures);
  }

  return {
    context: sandbox as vm.Context,
    sandbox,
    consoleLines,
    apiAccesses,
    watchpointFailures,
    pendingTimers: () => timers.length,
    runNextTimer: () => {
      if (timers.length === 0) return false;
      timers.sort((a, b) => a.at - b.at || a.seq - b.seq);
      const timer = timers.shift()!;
      timer.fn();
      return true;
    },
    readFingerprint: () => {
      const value = sandbox.__fp_hash;
      return typeof value === "string" ? value : undefined;
    },
  };
}
