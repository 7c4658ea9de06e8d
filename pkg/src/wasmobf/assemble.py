"""Patch assembly: overlap filtering, glue splicing, and the asynchronous
instantiation wrapper that hosts the rewritten script body."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from . import ir
from .errors import AssembleError, ExtractError
from .scripts import SourceScript
from .wasm.encoder import WasmModuleImage, synthesize

_EXPORT_REF_RE = re.compile(r"instance\.exports\.([A-Za-z_$][A-Za-z0-9_$]*)")
_BYTE_ARRAY_RE = re.compile(r"new Uint8Array\(\[([0-9,\s]*)\]\)")

RUNTIME_NAMES = ("instance", "memory", "getString")


@dataclass
class PatchPlan:
    kept: list[ir.TransformArtifact] = field(default_factory=list)
    dropped: list[tuple[ir.TransformArtifact, str]] = field(default_factory=list)
    module: WasmModuleImage | None = None


@dataclass
class ObfuscatedScript:
    text: str
    embedded_module: bytes
    original_id: str

    @property
    def wrapped(self) -> bool:
        return bool(self.embedded_module)


def filter_overlaps(artifacts: list[ir.TransformArtifact]) -> PatchPlan:
    """Greedy sweep ordered by (start asc, length desc, rule order asc):
    keep an artifact iff its span is disjoint from every kept span."""
    plan = PatchPlan()
    ordered = sorted(artifacts,
                     key=lambda a: (a.span.start, -len(a.span),
                                    ir.rule_order(a.rule)))
    for artifact in ordered:
        clash = next((kept for kept in plan.kept
                      if kept.span.overlaps(artifact.span)), None)
        if clash is None:
            plan.kept.append(artifact)
        else:
            plan.dropped.append(
                (artifact,
                 f"overlaps kept {clash.rule} at "
                 f"[{clash.span.start},{clash.span.end})"))
    plan.kept.sort(key=lambda a: a.span.start)
    return plan


def synthesize_plan_module(plan: PatchPlan) -> WasmModuleImage | None:
    """One module per script, built from the kept artifacts only."""
    if not plan.kept:
        plan.module = None
        return None
    exports = [export for artifact in plan.kept for export in artifact.exports]
    imports = [decl for artifact in plan.kept for decl in artifact.imports]
    plan.module = synthesize(exports, imports)
    return plan.module


def _import_object_lines(imports: list[ir.ImportDecl]) -> list[str]:
    lines = ['const __wasm_imports = { "js": {']
    for decl in imports:
        params = ", ".join(f"a{i}" for i in range(len(decl.params)))
        lines.append(f'"{decl.field}": ({params}) => {{ {decl.js_body} }},')
    lines.append("} };")
    return lines


def _patched_body(script: SourceScript, plan: PatchPlan) -> str:
    pieces = []
    cursor = 0
    for artifact in plan.kept:
        pieces.append(script.text[cursor:artifact.span.start])
        pieces.append(artifact.glue)
        cursor = artifact.span.end
    pieces.append(script.text[cursor:])
    return "".join(pieces)


def assemble(script: SourceScript, plan: PatchPlan) -> ObfuscatedScript:
    """Splice glue into the source and wrap it for async instantiation.

    Zero-artifact plans bypass wrapping: an empty module would only add
    weight and shift timing without obfuscating anything.
    """
    if not plan.kept:
        return ObfuscatedScript(text=script.text, embedded_module=b"",
                                original_id=script.id)
    module = plan.module or synthesize_plan_module(plan)
    export_names = {symbol for symbol, _ in module.exports}
    import_fields = {decl.field for decl in module.imports}
    for artifact in plan.kept:
        for ref in _EXPORT_REF_RE.findall(artifact.glue):
            if ref not in export_names:
                raise AssembleError(
                    f"glue references {ref!r} which the module does not export")
        for decl in artifact.imports:
            if decl.field not in import_fields:
                raise AssembleError(
                    f"artifact import {decl.field!r} missing from module")

    byte_literal = ",".join(str(b) for b in module.bytes)
    lines = ["(async function () {"]
    lines.append(f"const __wasm_bytes = new Uint8Array([{byte_literal}]);")
    lines.extend(_import_object_lines(module.imports))
    lines.append(
        "const __wasm = await WebAssembly.instantiate(__wasm_bytes, __wasm_imports);")
    lines.append("const instance = __wasm.instance;")
    lines.append("const memory = instance.exports.memory;")
    lines.append("const getString = function (ptr) {")
    lines.append("const __len = new DataView(memory.buffer).getUint32(ptr, true);")
    lines.append(
        'return new TextDecoder("utf-8").decode('
        "new Uint8Array(memory.buffer, ptr + 4, __len));")
    lines.append("};")
    lines.append(_patched_body(script, plan))
    lines.append("})();")
    return ObfuscatedScript(text="\n".join(lines),
                            embedded_module=module.bytes,
                            original_id=script.id)


def embedded_bytes_roundtrip(obf: ObfuscatedScript) -> bytes:
    """Pull the embedded byte-array literal back out of an assembled script."""
    match = _BYTE_ARRAY_RE.search(obf.text)
    if match is None:
        raise ExtractError("no embedded byte-array literal found")
    body = match.group(1).strip()
    if not body:
        return b""
    values = [int(part) for part in body.split(",")]
    if any(not 0 <= v <= 255 for v in values):
        raise ExtractError("byte-array literal holds non-byte values")
    return bytes(values)


def plan_to_json(plan: PatchPlan) -> str:
    """Sidecar report of kept/dropped artifacts."""
    def artifact_entry(artifact: ir.TransformArtifact) -> dict:
        return {
            "rule": artifact.rule,
            "span": [artifact.span.start, artifact.span.end],
            "exports": [[e.kind, e.symbol] for e in artifact.exports],
            "imports": [d.field for d in artifact.imports],
        }

    payload = {
        "kept": [artifact_entry(a) for a in plan.kept],
        "dropped": [
            {**artifact_entry(a), "reason": reason}
            for a, reason in plan.dropped
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
