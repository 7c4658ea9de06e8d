"""Direct WASM 1.0 binary emission for the restricted export/import IR.

One linear memory, strings stored as [u32-LE byte length][UTF-8 bytes] in
data segments, numeric constants as immutable exported globals, static
arrays as data segments behind exported pointer-getter functions, and
FunctionIR bodies lowered to plain stack code.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..errors import EmitError
from .. import ir

PAGE_SIZE = 65536
MAGIC = b"\x00asm"
VERSION = b"\x01\x00\x00\x00"

_VALTYPE = {ir.I32: 0x7F, ir.F64: 0x7C}

_SEC_TYPE = 1
_SEC_IMPORT = 2
_SEC_FUNC = 3
_SEC_MEMORY = 5
_SEC_GLOBAL = 6
_SEC_EXPORT = 7
_SEC_CODE = 10
_SEC_DATA = 11

_OP = {
    "block": 0x02, "loop": 0x03, "if": 0x04, "else": 0x05, "end": 0x0B,
    "br": 0x0C, "br_if": 0x0D, "return": 0x0F, "call": 0x10,
    "drop": 0x1A, "select": 0x1B,
    "local.get": 0x20, "local.set": 0x21,
    "i32.const": 0x41, "f64.const": 0x44,
    "i32.eqz": 0x45,
}

_I32_CMP = {"==": 0x46, "!=": 0x47, "<": 0x48, ">": 0x4A, "<=": 0x4C, ">=": 0x4E}
_F64_CMP = {"==": 0x61, "!=": 0x62, "<": 0x63, ">": 0x64, "<=": 0x65, ">=": 0x66}
_I32_BIN = {"+": 0x6A, "-": 0x6B, "*": 0x6C, "/": 0x6D, "%": 0x6F}
_F64_BIN = {"+": 0xA0, "-": 0xA1, "*": 0xA2, "/": 0xA3}


def uleb(value: int) -> bytes:
    if value < 0:
        raise EmitError(f"uleb of negative value {value}")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def sleb(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        done = (value == 0 and not byte & 0x40) or (value == -1 and byte & 0x40)
        if done:
            out.append(byte)
            return bytes(out)
        out.append(byte | 0x80)


def _section(section_id: int, body: bytes) -> bytes:
    return bytes([section_id]) + uleb(len(body)) + body


def _name(text: str) -> bytes:
    raw = text.encode("utf-8")
    return uleb(len(raw)) + raw


@dataclass
class MemoryLayout:
    """Symbol-addressed byte layout of the module's data segments."""

    entries: list[tuple[str, int, int]] = field(default_factory=list)
    next_free: int = 8  # bytes 0..7 stay zero as a null guard

    def allocate(self, symbol: str, byte_len: int, align: int = 4) -> int:
        offset = self.next_free
        if offset % align:
            offset += align - offset % align
        self.entries.append((symbol, offset, byte_len))
        self.next_free = offset + byte_len
        if self.next_free % 4:
            self.next_free += 4 - self.next_free % 4
        return offset

    def offset_of(self, symbol: str) -> int:
        for name, offset, _ in self.entries:
            if name == symbol:
                return offset
        raise KeyError(symbol)

    @property
    def pages(self) -> int:
        return max(1, -(-self.next_free // PAGE_SIZE))


@dataclass
class WasmModuleImage:
    bytes: bytes
    layout: MemoryLayout
    exports: list[tuple[str, str]]          # (symbol, kind: global|func|memory)
    imports: list[ir.ImportDecl]


def encode_string_payload(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _FuncEmitter:
    def __init__(self, fn: ir.FunctionIR, import_index: dict[str, int]):
        self.fn = fn
        self.import_index = import_index
        self.code = bytearray()

    def emit(self) -> bytes:
        body = bytearray()
        # local declarations, grouped run-length by type
        groups: list[tuple[int, int]] = []
        for vt in self.fn.locals:
            code = _VALTYPE.get(vt)
            if code is None:
                raise EmitError(f"unsupported local type {vt!r}")
            if groups and groups[-1][1] == code:
                groups[-1] = (groups[-1][0] + 1, code)
            else:
                groups.append((1, code))
        body += uleb(len(groups))
        for count, code in groups:
            body += uleb(count) + bytes([code])
        for stmt in self.fn.body:
            self._stmt(stmt)
        self.code.append(_OP["end"])
        body += self.code
        return uleb(len(body)) + bytes(body)

    # local index space: params first, then declared locals
    def _local_index(self, declared_index: int) -> int:
        return len(self.fn.params) + declared_index

    def _stmt(self, stmt: ir.Stmt) -> None:
        code = self.code
        if isinstance(stmt, ir.CallImport):
            decl = self._import_decl(stmt.name)
            for arg in stmt.args:
                self._expr(arg)
            code.append(_OP["call"])
            code += uleb(self.import_index[stmt.name])
            if decl.result != ir.VOID:
                code.append(_OP["drop"])
        elif isinstance(stmt, ir.IfStmt):
            self._expr(stmt.cond)
            code += bytes([_OP["if"], 0x40])
            for inner in stmt.then:
                self._stmt(inner)
            if stmt.orelse:
                code.append(_OP["else"])
                for inner in stmt.orelse:
                    self._stmt(inner)
            code.append(_OP["end"])
        elif isinstance(stmt, ir.CountingLoop):
            var = self._local_index(stmt.var)
            code.append(_OP["i32.const"])
            code += sleb(stmt.init)
            code.append(_OP["local.set"])
            code += uleb(var)
            code += bytes([_OP["block"], 0x40, _OP["loop"], 0x40])
            code.append(_OP["local.get"])
            code += uleb(var)
            code.append(_OP["i32.const"])
            code += sleb(stmt.bound)
            if stmt.cmp == "<":
                code.append(_I32_CMP[">="])    # exit when i >= bound
            elif stmt.cmp == "<=":
                code.append(_I32_CMP[">"])     # exit when i > bound
            else:
                raise EmitError(f"unsupported loop comparison {stmt.cmp!r}")
            code.append(_OP["br_if"])
            code += uleb(1)
            for inner in stmt.body:
                self._stmt(inner)
            code.append(_OP["local.get"])
            code += uleb(var)
            code.append(_OP["i32.const"])
            code += sleb(stmt.step)
            code.append(_I32_BIN["+"])
            code.append(_OP["local.set"])
            code += uleb(var)
            code.append(_OP["br"])
            code += uleb(0)
            code += bytes([_OP["end"], _OP["end"]])
        elif isinstance(stmt, ir.CondLoop):
            code += bytes([_OP["block"], 0x40, _OP["loop"], 0x40])
            self._expr(stmt.cond)
            code.append(_OP["i32.eqz"])
            code.append(_OP["br_if"])
            code += uleb(1)
            for inner in stmt.body:
                self._stmt(inner)
            code.append(_OP["br"])
            code += uleb(0)
            code += bytes([_OP["end"], _OP["end"]])
        elif isinstance(stmt, ir.Return):
            if stmt.value is not None:
                self._expr(stmt.value)
            code.append(_OP["return"])
        else:
            raise EmitError(f"unsupported statement {type(stmt).__name__}")

    def _import_decl(self, name: str) -> ir.ImportDecl:
        for decl in self.fn.imports_needed:
            if decl.field == name:
                return decl
        raise EmitError(f"function references undeclared import {name!r}")

    def _expr(self, expr: ir.Expr) -> None:
        code = self.code
        if isinstance(expr, ir.ConstI32):
            if not -(2 ** 31) <= expr.value < 2 ** 31:
                raise EmitError(f"i32 constant out of range: {expr.value}")
            code.append(_OP["i32.const"])
            code += sleb(expr.value)
        elif isinstance(expr, ir.ConstF64):
            code.append(_OP["f64.const"])
            code += struct.pack("<d", expr.value)
        elif isinstance(expr, ir.ParamRef):
            code.append(_OP["local.get"])
            code += uleb(expr.index)
        elif isinstance(expr, ir.LocalRef):
            code.append(_OP["local.get"])
            code += uleb(self._local_index(expr.index))
        elif isinstance(expr, ir.BinOp):
            self._expr(expr.left)
            self._expr(expr.right)
            table = _I32_BIN if expr.type == ir.I32 else _F64_BIN
            op = table.get(expr.op)
            if op is None:
                raise EmitError(f"unsupported {expr.type} operator {expr.op!r}")
            code.append(op)
        elif isinstance(expr, ir.Compare):
            self._expr(expr.left)
            self._expr(expr.right)
            table = _I32_CMP if expr.operand_type == ir.I32 else _F64_CMP
            code.append(table[expr.op])
        elif isinstance(expr, ir.Ternary):
            # `select` evaluates both arms; the IR grammar only admits
            # trap-free arms so this is behavior-preserving
            self._expr(expr.then)
            self._expr(expr.orelse)
            self._expr(expr.cond)
            code.append(_OP["select"])
        elif isinstance(expr, ir.CallImportExpr):
            for arg in expr.args:
                self._expr(arg)
            code.append(_OP["call"])
            code += uleb(self.import_index[expr.name])
        else:
            raise EmitError(f"unsupported expression {type(expr).__name__}")


def synthesize(exports: list[ir.ExportIR],
               imports: list[ir.ImportDecl]) -> WasmModuleImage:
    """Aggregate IR into one valid module with a single exported memory."""
    seen: set[str] = set()
    for export in exports:
        if export.symbol in seen:
            raise EmitError(f"duplicate export symbol {export.symbol!r}")
        seen.add(export.symbol)
    fields = [decl.field for decl in imports]
    if len(fields) != len(set(fields)):
        raise EmitError("duplicate import fields")

    layout = MemoryLayout()
    functypes: list[tuple[tuple[str, ...], str]] = []

    def type_index(params: tuple[str, ...], result: str) -> int:
        key = (params, result)
        if key not in functypes:
            functypes.append(key)
        return functypes.index(key)

    import_index = {decl.field: i for i, decl in enumerate(imports)}
    import_types = [type_index(tuple(d.params), d.result) for d in imports]

    # local function space: FunctionIR exports then array pointer-getters
    local_funcs: list[tuple[int, bytes]] = []
    globals_: list[tuple[str, int | float]] = []   # (valtype, init)
    export_entries: list[tuple[str, str, int]] = []  # (symbol, kind, index)
    data_segments: list[tuple[int, bytes]] = []

    n_imports = len(imports)

    for export in exports:
        if export.kind == "const_i32":
            value = export.payload
            if not isinstance(value, int) or not -(2 ** 31) <= value < 2 ** 31:
                raise EmitError(f"const_i32 payload out of range: {value!r}")
            export_entries.append((export.symbol, "global", len(globals_)))
            globals_.append((ir.I32, value))
        elif export.kind == "const_f64":
            value = float(export.payload)
            export_entries.append((export.symbol, "global", len(globals_)))
            globals_.append((ir.F64, value))
        elif export.kind == "const_string":
            blob = encode_string_payload(str(export.payload))
            offset = layout.allocate(export.symbol, len(blob))
            data_segments.append((offset, blob))
            export_entries.append((export.symbol, "global", len(globals_)))
            globals_.append((ir.I32, offset))
        elif export.kind in ("static_array_i32", "static_array_f64"):
            values = list(export.payload)
            if not values:
                raise EmitError("empty static array")
            if export.kind == "static_array_i32":
                try:
                    blob = b"".join(struct.pack("<i", int(v)) for v in values)
                except struct.error:
                    raise EmitError("static_array_i32 element out of range") from None
                align = 4
            else:
                blob = b"".join(struct.pack("<d", float(v)) for v in values)
                align = 8
            offset = layout.allocate(export.symbol, len(blob), align=align)
            data_segments.append((offset, blob))
            fn = ir.FunctionIR(params=[], result=ir.I32,
                               body=[ir.Return(ir.ConstI32(offset))])
            tidx = type_index((), ir.I32)
            body = _FuncEmitter(fn, import_index).emit()
            export_entries.append((export.symbol, "func",
                                   n_imports + len(local_funcs)))
            local_funcs.append((tidx, body))
        elif export.kind == "func":
            fn = export.payload
            if not isinstance(fn, ir.FunctionIR):
                raise EmitError("func export payload must be FunctionIR")
            for needed in fn.imports_needed:
                if needed.field not in import_index:
                    raise EmitError(
                        f"function import {needed.field!r} missing from module imports")
            tidx = type_index(tuple(fn.params), fn.result)
            body = _FuncEmitter(fn, import_index).emit()
            export_entries.append((export.symbol, "func",
                                   n_imports + len(local_funcs)))
            local_funcs.append((tidx, body))
        else:
            raise EmitError(f"unknown export kind {export.kind!r}")

    # -- assemble sections ---------------------------------------------------
    out = bytearray(MAGIC + VERSION)

    type_body = bytearray(uleb(len(functypes)))
    for params, result in functypes:
        type_body.append(0x60)
        type_body += uleb(len(params))
        for p in params:
            if p not in _VALTYPE:
                raise EmitError(f"unsupported value type {p!r}")
            type_body.append(_VALTYPE[p])
        if result == ir.VOID:
            type_body += uleb(0)
        else:
            type_body += uleb(1)
            type_body.append(_VALTYPE[result])
    out += _section(_SEC_TYPE, bytes(type_body))

    if imports:
        imp_body = bytearray(uleb(len(imports)))
        for decl, tidx in zip(imports, import_types):
            imp_body += _name(decl.module)
            imp_body += _name(decl.field)
            imp_body += bytes([0x00])  # func import
            imp_body += uleb(tidx)
        out += _section(_SEC_IMPORT, bytes(imp_body))

    if local_funcs:
        func_body = bytearray(uleb(len(local_funcs)))
        for tidx, _ in local_funcs:
            func_body += uleb(tidx)
        out += _section(_SEC_FUNC, bytes(func_body))

    mem_body = uleb(1) + bytes([0x00]) + uleb(layout.pages)
    out += _section(_SEC_MEMORY, mem_body)

    if globals_:
        glob_body = bytearray(uleb(len(globals_)))
        for valtype, init in globals_:
            glob_body += bytes([_VALTYPE[valtype], 0x00])  # immutable
            if valtype == ir.I32:
                glob_body.append(_OP["i32.const"])
                glob_body += sleb(int(init))
            else:
                glob_body.append(_OP["f64.const"])
                glob_body += struct.pack("<d", float(init))
            glob_body.append(_OP["end"])
        out += _section(_SEC_GLOBAL, bytes(glob_body))

    kind_codes = {"func": 0x00, "memory": 0x02, "global": 0x03}
    exp_body = bytearray(uleb(len(export_entries) + 1))
    for symbol, kind, index in export_entries:
        exp_body += _name(symbol)
        exp_body += bytes([kind_codes[kind]])
        exp_body += uleb(index)
    exp_body += _name("memory")
    exp_body += bytes([kind_codes["memory"]])
    exp_body += uleb(0)
    out += _section(_SEC_EXPORT, bytes(exp_body))

    if local_funcs:
        code_body = bytearray(uleb(len(local_funcs)))
        for _, body in local_funcs:
            code_body += body
        out += _section(_SEC_CODE, bytes(code_body))

    if data_segments:
        data_body = bytearray(uleb(len(data_segments)))
        for offset, blob in data_segments:
            data_body += uleb(0)  # memory index
            data_body.append(_OP["i32.const"])
            data_body += sleb(offset)
            data_body.append(_OP["end"])
            data_body += uleb(len(blob))
            data_body += blob
        out += _section(_SEC_DATA, bytes(data_body))

    image_exports = [(symbol, kind) for symbol, kind, _ in export_entries]
    image_exports.append(("memory", "memory"))
    return WasmModuleImage(bytes=bytes(out), layout=layout,
                           exports=image_exports, imports=list(imports))
