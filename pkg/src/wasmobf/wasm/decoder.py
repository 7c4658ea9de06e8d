"""Independent WASM 1.0 binary reader used to verify emitted modules.

Deliberately shares nothing with the encoder beyond the spec constants:
it re-derives section structure from the bytes so round-trip tests mean
something.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..errors import DecodeError

_SECTION_NAMES = {
    0: "custom", 1: "type", 2: "import", 3: "function", 4: "table",
    5: "memory", 6: "global", 7: "export", 8: "start", 9: "element",
    10: "code", 11: "data",
}

_KIND_NAMES = {0: "func", 1: "table", 2: "memory", 3: "global"}


@dataclass
class ModuleSummary:
    sections: list[tuple[str, int]] = field(default_factory=list)  # (name, size)
    types: list[tuple[tuple[str, ...], str]] = field(default_factory=list)
    imports: list[tuple[str, str, str]] = field(default_factory=list)
    memories: list[tuple[int, int | None]] = field(default_factory=list)
    globals: list[tuple[str, bool, float | int]] = field(default_factory=list)
    exports: list[tuple[str, str, int]] = field(default_factory=list)
    function_count: int = 0
    data_segments: list[tuple[int, bytes]] = field(default_factory=list)

    def export_names(self) -> list[str]:
        return [name for name, _, _ in self.exports]

    def global_value(self, export_name: str) -> float | int:
        for name, kind, index in self.exports:
            if name == export_name and kind == "global":
                return self.globals[index][2]
        raise KeyError(export_name)

    def data_at(self, offset: int) -> bytes:
        for seg_offset, blob in self.data_segments:
            if seg_offset == offset:
                return blob
        raise KeyError(offset)

    def read_string(self, offset: int) -> str:
        blob = self.data_at(offset)
        if len(blob) < 4:
            raise DecodeError("string payload shorter than length prefix", offset)
        (length,) = struct.unpack("<I", blob[:4])
        if 4 + length > len(blob):
            raise DecodeError("string length prefix exceeds payload", offset)
        return blob[4:4 + length].decode("utf-8")


class _Reader:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def error(self, message: str) -> DecodeError:
        return DecodeError(message, self.pos)

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise self.error("unexpected end of module")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def byte(self) -> int:
        return self.take(1)[0]

    def uleb(self, max_bits: int = 32) -> int:
        result = 0
        shift = 0
        while True:
            byte = self.byte()
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                break
            shift += 7
            if shift >= max_bits + 7:
                raise self.error("unterminated LEB128")
        if result >= 1 << max_bits:
            raise self.error("LEB128 exceeds range")
        return result

    def sleb(self, max_bits: int = 32) -> int:
        result = 0
        shift = 0
        while True:
            byte = self.byte()
            result |= (byte & 0x7F) << shift
            shift += 7
            if not byte & 0x80:
                if byte & 0x40 and shift < max_bits + 7:
                    result |= -(1 << shift)
                break
            if shift >= max_bits + 7:
                raise self.error("unterminated LEB128")
        return result

    def name(self) -> str:
        length = self.uleb()
        raw = self.take(length)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise self.error("export name is not UTF-8") from None


def _valtype(reader: _Reader) -> str:
    code = reader.byte()
    table = {0x7F: "i32", 0x7E: "i64", 0x7D: "f32", 0x7C: "f64"}
    if code not in table:
        raise reader.error(f"unknown value type 0x{code:02x}")
    return table[code]


def decode(data: bytes) -> ModuleSummary:
    """Parse a binary module into a section/export/data summary."""
    reader = _Reader(data)
    if reader.take(4) != b"\x00asm":
        raise DecodeError("bad magic", 0)
    if reader.take(4) != b"\x01\x00\x00\x00":
        raise DecodeError("unsupported version", 4)

    summary = ModuleSummary()
    last_id = 0
    while reader.pos < len(data):
        section_id = reader.byte()
        if section_id not in _SECTION_NAMES:
            raise DecodeError(f"unknown section id {section_id}", reader.pos - 1)
        if section_id != 0:
            if section_id <= last_id:
                raise DecodeError(
                    f"section {_SECTION_NAMES[section_id]} out of order",
                    reader.pos - 1)
            last_id = section_id
        size = reader.uleb()
        body_start = reader.pos
        if body_start + size > len(data):
            raise DecodeError("section size exceeds module", body_start)
        body = _Reader(data, body_start)
        summary.sections.append((_SECTION_NAMES[section_id], size))

        if section_id == 1:
            count = body.uleb()
            for _ in range(count):
                if body.byte() != 0x60:
                    raise body.error("expected functype tag 0x60")
                params = tuple(_valtype(body) for _ in range(body.uleb()))
                results = [_valtype(body) for _ in range(body.uleb())]
                if len(results) > 1:
                    raise body.error("multi-value results not supported")
                summary.types.append((params, results[0] if results else "void"))
        elif section_id == 2:
            count = body.uleb()
            for _ in range(count):
                module = body.name()
                fieldname = body.name()
                kind = body.byte()
                if kind == 0:
                    body.uleb()
                elif kind == 3:
                    _valtype(body)
                    body.byte()
                else:
                    raise body.error(f"unsupported import kind {kind}")
                summary.imports.append((module, fieldname, _KIND_NAMES[kind]))
        elif section_id == 3:
            count = body.uleb()
            summary.function_count = count
            for _ in range(count):
                body.uleb()
        elif section_id == 5:
            count = body.uleb()
            for _ in range(count):
                flags = body.byte()
                minimum = body.uleb()
                maximum = body.uleb() if flags & 0x01 else None
                summary.memories.append((minimum, maximum))
        elif section_id == 6:
            count = body.uleb()
            for _ in range(count):
                valtype = _valtype(body)
                mutability = body.byte()
                if mutability not in (0, 1):
                    raise body.error("bad global mutability flag")
                op = body.byte()
                if op == 0x41:
                    value: float | int = body.sleb()
                elif op == 0x44:
                    (value,) = struct.unpack("<d", body.take(8))
                else:
                    raise body.error(f"unsupported global init opcode 0x{op:02x}")
                if body.byte() != 0x0B:
                    raise body.error("global init not terminated")
                summary.globals.append((valtype, mutability == 1, value))
        elif section_id == 7:
            count = body.uleb()
            for _ in range(count):
                name = body.name()
                kind = body.byte()
                if kind not in _KIND_NAMES:
                    raise body.error(f"unknown export kind {kind}")
                index = body.uleb()
                summary.exports.append((name, _KIND_NAMES[kind], index))
        elif section_id == 10:
            count = body.uleb()
            for _ in range(count):
                fsize = body.uleb()
                body.take(fsize)
        elif section_id == 11:
            count = body.uleb()
            for _ in range(count):
                memidx = body.uleb()
                if memidx != 0:
                    raise body.error("data segment targets unknown memory")
                op = body.byte()
                if op != 0x41:
                    raise body.error("unsupported data offset expression")
                offset = body.sleb()
                if body.byte() != 0x0B:
                    raise body.error("data offset not terminated")
                blob = body.take(body.uleb())
                summary.data_segments.append((offset, bytes(blob)))

        if section_id != 0 and body.pos != body_start + size:
            raise DecodeError(
                f"section {_SECTION_NAMES[section_id]} has trailing bytes",
                body.pos)
        reader.pos = body_start + size
    return summary


def validate_module(data: bytes) -> ModuleSummary:
    """Decode plus the structural checks conversion output must satisfy."""
    summary = decode(data)
    if len(summary.memories) != 1:
        raise DecodeError(
            f"expected exactly one memory, found {len(summary.memories)}", 0)
    mem_exports = [e for e in summary.exports if e[1] == "memory"]
    if [name for name, _, _ in mem_exports] != ["memory"]:
        raise DecodeError("memory must be exported exactly once as 'memory'", 0)
    names = summary.export_names()
    if len(names) != len(set(names)):
        raise DecodeError("duplicate export names", 0)
    limit = summary.memories[0][0] * 65536
    for offset, blob in summary.data_segments:
        if offset < 8:
            raise DecodeError("data segment inside null guard", offset)
        if offset + len(blob) > limit:
            raise DecodeError("data segment exceeds initial memory", offset)
    return summary
