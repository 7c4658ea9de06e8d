"""Three-stage validation of conversion output.

Stage 1 decodes and structurally validates the embedded module, stage 2
re-parses the rewritten script, stage 3 hands the script to the runtime
harness. Without a harness, stage 3 is reported as skipped, never as a
silent pass.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .assemble import ObfuscatedScript, embedded_bytes_roundtrip
from .errors import (DecodeError, ExtractError, HarnessUnavailable,
                     ParseError, WasmobfError)
from .jsparser import parse_text
from .wasm.decoder import validate_module

DEFAULT_STAGE3_TIMEOUT_S = 5.0


@dataclass
class ValidationOutcome:
    stage1_compile: str = "skipped"     # pass | fail | skipped
    stage2_parse: str = "skipped"
    stage3_execute: str = "skipped"
    error: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    infra_error: bool = False
    fingerprint_hash: str | None = None
    console: list[str] = field(default_factory=list)

    @property
    def success(self) -> bool:
        if self.infra_error:
            return False
        if self.stage1_compile == "fail" or self.stage2_parse == "fail":
            return False
        return self.stage3_execute in ("pass", "skipped")

    @property
    def stage_reached(self) -> int:
        if self.stage3_execute != "skipped":
            return 3
        if self.stage2_parse != "skipped":
            return 2
        return 1


def validate(obf: ObfuscatedScript, harness=None,
             timeout_s: float = DEFAULT_STAGE3_TIMEOUT_S,
             require_stage3: bool = False,
             collect_fingerprint: bool = False) -> ValidationOutcome:
    outcome = ValidationOutcome()

    start = time.perf_counter()
    try:
        if obf.wrapped:
            validate_module(obf.embedded_module)
            extracted = embedded_bytes_roundtrip(obf)
            if extracted != obf.embedded_module:
                raise DecodeError("embedded bytes differ from module", 0)
        outcome.stage1_compile = "pass"
    except (DecodeError, ExtractError) as exc:
        outcome.stage1_compile = "fail"
        outcome.error = f"stage1: {exc}"
    outcome.timings["stage1_s"] = time.perf_counter() - start
    if outcome.stage1_compile == "fail":
        return outcome

    start = time.perf_counter()
    try:
        parse_text(obf.text)
        outcome.stage2_parse = "pass"
    except ParseError as exc:
        outcome.stage2_parse = "fail"
        outcome.error = f"stage2: {exc}"
    outcome.timings["stage2_s"] = time.perf_counter() - start
    if outcome.stage2_parse == "fail":
        return outcome

    if harness is None:
        if require_stage3:
            raise HarnessUnavailable(
                "stage 3 requested but no runtime harness is configured")
        outcome.stage3_execute = "skipped"
        return outcome

    start = time.perf_counter()
    try:
        response = harness.request(obf.text,
                                   timeout_ms=int(timeout_s * 1000),
                                   collect_fingerprint=collect_fingerprint)
    except HarnessUnavailable as exc:
        outcome.infra_error = True
        outcome.error = f"stage3 infra: {exc}"
        outcome.timings["stage3_s"] = time.perf_counter() - start
        return outcome
    outcome.timings["stage3_s"] = time.perf_counter() - start
    status = response.get("status")
    outcome.console = list(response.get("console") or [])
    outcome.fingerprint_hash = response.get("fingerprint_hash")
    if status == "ok":
        outcome.stage3_execute = "pass"
    elif status in ("parse_error", "runtime_error", "timeout"):
        outcome.stage3_execute = "fail"
        outcome.error = f"stage3: {status}: {response.get('error', '')}"
    else:
        outcome.infra_error = True
        outcome.error = f"stage3 infra: unexpected status {status!r}"
    return outcome


def validate_original(text: str, harness, timeout_s=DEFAULT_STAGE3_TIMEOUT_S,
                      collect_fingerprint: bool = False,
                      monitor_apis: bool = False) -> dict:
    """Run an unconverted script through the harness (equivalence checks)."""
    return harness.request(text, timeout_ms=int(timeout_s * 1000),
                           collect_fingerprint=collect_fingerprint,
                           monitor_apis=monitor_apis)
