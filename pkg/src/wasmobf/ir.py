"""Intermediate representation for synthesized module content.

Everything a rule emits is expressed here: constant exports, static data
arrays, and a restricted function grammar (import calls, a dispatcher
`if`, counting and condition-driven loops, and a single arithmetic
`return`). The emitter lowers this directly to WASM 1.0 bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .scripts import Span

I32 = "i32"
F64 = "f64"
VOID = "void"

RULE_IDS = (
    "replace_literals_recursive",
    "replace_callee",
    "replace_int_arrays",
    "replace_float_arrays",
    "replace_if_else",
    "replace_for_loops",
    "replace_while_loops",
    "replace_function_calls_with_no_return",
    "replace_class_defs",
    "replace_func_defs",
    "replace_canvas_api_calls",
    "obfuscate_functions",
    "replace_with_regex",
    "replace_obf_screen",
)

_SYMBOL_RE = re.compile(r"^[A-Za-z_$][A-Za-z0-9_$]*$")


def rule_order(rule: str) -> int:
    return RULE_IDS.index(rule)


def is_valid_symbol(name: str) -> bool:
    return bool(_SYMBOL_RE.match(name))


# -- expressions --------------------------------------------------------------

@dataclass
class ConstI32:
    value: int
    type: str = I32


@dataclass
class ConstF64:
    value: float
    type: str = F64


@dataclass
class ParamRef:
    index: int
    type: str


@dataclass
class LocalRef:
    index: int
    type: str


@dataclass
class BinOp:
    op: str                     # + - * / %
    left: "Expr"
    right: "Expr"
    type: str


@dataclass
class Compare:
    op: str                     # < <= > >= == !=
    left: "Expr"
    right: "Expr"
    operand_type: str
    type: str = I32


@dataclass
class Ternary:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    type: str


@dataclass
class CallImportExpr:
    name: str
    args: list["Expr"]
    type: str


Expr = (ConstI32 | ConstF64 | ParamRef | LocalRef | BinOp | Compare
        | Ternary | CallImportExpr)


# -- statements ---------------------------------------------------------------

@dataclass
class CallImport:
    name: str
    args: list[Expr] = field(default_factory=list)


@dataclass
class IfStmt:
    cond: Expr
    then: list["Stmt"]
    orelse: list["Stmt"] = field(default_factory=list)


@dataclass
class CountingLoop:
    """for-style loop: local var runs from `init` while `cmp bound`, += step."""
    var: int                    # local index (i32)
    init: int
    cmp: str                    # "<" or "<="
    bound: int
    step: int
    body: list["Stmt"] = field(default_factory=list)


@dataclass
class CondLoop:
    """while-style loop: repeat body while `cond` expression is non-zero."""
    cond: Expr
    body: list["Stmt"] = field(default_factory=list)


@dataclass
class Return:
    value: Expr | None = None


Stmt = CallImport | IfStmt | CountingLoop | CondLoop | Return


@dataclass
class FunctionIR:
    params: list[str]                       # value types
    result: str                             # void | i32 | f64
    body: list[Stmt]
    locals: list[str] = field(default_factory=list)
    param_names: list[str] = field(default_factory=list)
    imports_needed: list["ImportDecl"] = field(default_factory=list)


# -- module-level pieces -------------------------------------------------------

@dataclass
class ExportIR:
    kind: str       # const_i32 const_f64 const_string static_array_i32 static_array_f64 func
    symbol: str
    payload: object
    decl: str = "let"   # AssemblyScript-text emission keyword (let/const)

    def __post_init__(self):
        if not is_valid_symbol(self.symbol):
            raise ValueError(f"invalid export symbol {self.symbol!r}")


@dataclass
class ImportDecl:
    field: str
    params: list[str] = field(default_factory=list)
    result: str = VOID
    js_body: str = ""
    module: str = "js"

    def __post_init__(self):
        if not is_valid_symbol(self.field):
            raise ValueError(f"invalid import field {self.field!r}")


@dataclass
class TransformArtifact:
    rule: str
    span: Span
    exports: list[ExportIR] = field(default_factory=list)
    imports: list[ImportDecl] = field(default_factory=list)
    glue: str = ""


class IRTrap(Exception):
    """Raised by the interpreter where real WASM execution would trap."""


def _wrap_i32(value: int) -> int:
    value &= 0xFFFFFFFF
    return value - 0x100000000 if value >= 0x80000000 else value


def _eval_expr(expr: Expr, args: list, locals_: list) -> float | int:
    if isinstance(expr, (ConstI32, ConstF64)):
        return expr.value
    if isinstance(expr, ParamRef):
        return args[expr.index]
    if isinstance(expr, LocalRef):
        return locals_[expr.index]
    if isinstance(expr, BinOp):
        left = _eval_expr(expr.left, args, locals_)
        right = _eval_expr(expr.right, args, locals_)
        if expr.type == I32:
            if expr.op == "+":
                return _wrap_i32(left + right)
            if expr.op == "-":
                return _wrap_i32(left - right)
            if expr.op == "*":
                return _wrap_i32(left * right)
            if expr.op == "%":
                if right == 0:
                    raise IRTrap("i32.rem_s by zero")
                # i32.rem_s: truncated division, remainder keeps dividend sign
                rem = abs(left) % abs(right)
                return _wrap_i32(-rem if left < 0 else rem)
            if expr.op == "/":
                if right == 0:
                    raise IRTrap("i32.div_s by zero")
                quot = abs(left) // abs(right)
                return _wrap_i32(-quot if (left < 0) != (right < 0) else quot)
        else:
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            if expr.op == "/":
                if right == 0:
                    return float("inf") if left > 0 else (
                        float("-inf") if left < 0 else float("nan"))
                return left / right
        raise IRTrap(f"unsupported op {expr.op} for {expr.type}")
    if isinstance(expr, Compare):
        left = _eval_expr(expr.left, args, locals_)
        right = _eval_expr(expr.right, args, locals_)
        table = {
            "<": left < right, "<=": left <= right,
            ">": left > right, ">=": left >= right,
            "==": left == right, "!=": left != right,
        }
        return 1 if table[expr.op] else 0
    if isinstance(expr, Ternary):
        cond = _eval_expr(expr.cond, args, locals_)
        # mirrors lowering via `select`: both arms evaluate
        then = _eval_expr(expr.then, args, locals_)
        orelse = _eval_expr(expr.orelse, args, locals_)
        return then if cond != 0 else orelse
    raise IRTrap(f"cannot interpret {type(expr).__name__} without imports")


def interpret_function(fn: FunctionIR, args: list) -> float | int | None:
    """Execute a FunctionIR the way the lowered WASM would, sans imports.

    Only the pure arithmetic subset is supported; import calls raise.
    """
    locals_ = [0] * len(fn.locals)
    for stmt in fn.body:
        if isinstance(stmt, Return):
            if stmt.value is None:
                return None
            return _eval_expr(stmt.value, args, locals_)
        raise IRTrap(f"cannot interpret statement {type(stmt).__name__}")
    return None
