"""Function-definition translator: remote code-translation service client
plus a deterministic built-in fallback used for hermetic runs.

The stub accepts only pure functions over numeric parameters (arithmetic,
comparisons inside ternary tests, a single return) and lowers them to
FunctionIR; everything else is declined. The service client sends the
fixed translation prompt to an HTTP chat-completion endpoint and then
parses the reply through the same restricted grammar, so service output
can never widen what the emitter accepts.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass

from . import ir
from .astnodes import AstNode
from .errors import EmitError, ParseError, TranslatorUnavailable
from .jsparser import parse_text
from .wasm.encoder import synthesize

PROMPT_TEMPLATE = (
    "Write the following JS function in AssemblyScript, name it {name}, "
    "and export it. Only provide the code; no explanation or use case."
)

DEFAULT_TOKEN_ENV = "WASMOBF_TRANSLATOR_TOKEN"

_CODE_BLOCK_RE = re.compile(r"```(?:\w+)?\n(.*?)```", re.DOTALL)
_AS_SIGNATURE_RE = re.compile(
    r"export\s+function\s+(?P<name>[A-Za-z_$][\w$]*)\s*"
    r"\((?P<params>[^)]*)\)\s*:\s*(?P<result>i32|f64|void)\s*\{(?P<body>.*)\}",
    re.DOTALL)


@dataclass
class TranslationRequest:
    function_source: str
    target_name: str
    timeout: float = 30.0

    def __post_init__(self):
        if not ir.is_valid_symbol(self.target_name):
            raise ValueError(f"invalid target name {self.target_name!r}")


@dataclass
class TranslationResult:
    status: str                     # ok | declined | error
    function_ir: ir.FunctionIR | None = None
    raw_text: str | None = None

    @classmethod
    def declined(cls, raw_text: str | None = None) -> "TranslationResult":
        return cls(status="declined", raw_text=raw_text)


class _Unsupported(Exception):
    pass


class _ExprBuilder:
    """Lowers a parsed arithmetic expression into typed IR."""

    def __init__(self, param_names: list[str], value_type: str):
        self.param_names = param_names
        self.value_type = value_type

    def const(self, value) -> ir.Expr:
        if self.value_type == ir.I32:
            if not isinstance(value, int):
                raise _Unsupported("float constant in i32 context")
            return ir.ConstI32(value)
        return ir.ConstF64(float(value))

    def build(self, node: AstNode, as_condition: bool = False) -> ir.Expr:
        kind = node.kind
        if kind == "Literal":
            if node.attrs.get("literal_type") != "number":
                raise _Unsupported("non-numeric literal")
            return self.const(node.attrs["value"])
        if kind == "Identifier":
            name = node.attrs["name"]
            if name not in self.param_names:
                raise _Unsupported(f"free identifier {name!r}")
            return ir.ParamRef(self.param_names.index(name), self.value_type)
        if kind == "UnaryExpression" and node.attrs.get("operator") == "-":
            inner = self.build(node.child("argument"))
            return ir.BinOp("-", self.const(0), inner, self.value_type)
        if kind == "UnaryExpression" and node.attrs.get("operator") == "+":
            return self.build(node.child("argument"))
        if kind == "BinaryExpression":
            op = node.attrs["operator"]
            if op in ("+", "-", "*", "/", "%"):
                left = self.build(node.child("left"))
                right = self.build(node.child("right"))
                if op == "%":
                    if self.value_type != ir.I32:
                        raise _Unsupported("f64 remainder has no opcode")
                    divisor = node.child("right")
                    if not (divisor.kind == "Literal"
                            and isinstance(divisor.attrs.get("value"), int)
                            and divisor.attrs["value"] != 0):
                        raise _Unsupported("remainder needs a nonzero literal divisor")
                if op == "/" and self.value_type == ir.I32:
                    raise _Unsupported("division forces the f64 path")
                return ir.BinOp(op, left, right, self.value_type)
            if op in ("<", "<=", ">", ">=", "==", "!="):
                if not as_condition:
                    raise _Unsupported("comparison outside a ternary test")
                left = self.build(node.child("left"))
                right = self.build(node.child("right"))
                return ir.Compare(op, left, right, self.value_type)
            raise _Unsupported(f"operator {op!r}")
        if kind == "ConditionalExpression":
            test = node.child("test")
            if test.kind != "BinaryExpression" or \
                    test.attrs.get("operator") not in ("<", "<=", ">", ">=", "==", "!="):
                raise _Unsupported("ternary test must be a comparison")
            cond = self.build(test, as_condition=True)
            then = self.build(node.child("consequent"))
            orelse = self.build(node.child("alternate"))
            return ir.Ternary(cond, then, orelse, self.value_type)
        raise _Unsupported(f"node kind {kind}")


def _function_parts(source: str) -> tuple[list[str], AstNode] | None:
    """(param names, return expression) for a single pure function, else None."""
    try:
        root = parse_text(source.strip())
    except ParseError:
        try:
            root = parse_text(f"let __f = {source.strip()};")
        except ParseError:
            return None
    fns = [n for n in root.walk()
           if n.kind in ("FunctionDeclaration", "FunctionExpression",
                         "ArrowFunctionExpression")]
    if not fns:
        return None
    fn = fns[0]
    if fn.attrs.get("is_async") or fn.attrs.get("is_generator"):
        return None
    params = []
    for param in fn.children_by_role("params"):
        if param.kind != "Identifier":
            return None
        params.append(param.attrs["name"])
    body = fn.child("body")
    if body is None:
        return None
    if fn.kind == "ArrowFunctionExpression" and fn.attrs.get("expression"):
        return params, body
    statements = body.children_by_role("body")
    if len(statements) != 1 or statements[0].kind != "ReturnStatement":
        return None
    argument = statements[0].child("argument")
    if argument is None:
        return None
    return params, argument


def _infer_type(expr: AstNode) -> str:
    has_float = any(
        n.kind == "Literal" and n.attrs.get("literal_type") == "number"
        and isinstance(n.attrs["value"], float)
        for n in expr.walk())
    has_div = any(
        n.kind == "BinaryExpression" and n.attrs.get("operator") == "/"
        for n in expr.walk())
    return ir.F64 if has_float or has_div else ir.I32


def build_function_ir(source: str, declared_types: list[str] | None = None,
                      declared_result: str | None = None) -> ir.FunctionIR | None:
    parts = _function_parts(source)
    if parts is None:
        return None
    params, expr = parts
    value_type = declared_types[0] if declared_types else _infer_type(expr)
    if declared_types and any(t != value_type for t in declared_types):
        return None  # single numeric type per function
    if declared_result is not None and declared_result != value_type:
        return None
    builder = _ExprBuilder(params, value_type)
    try:
        body_expr = builder.build(expr)
    except _Unsupported:
        return None
    return ir.FunctionIR(params=[value_type] * len(params), result=value_type,
                         body=[ir.Return(body_expr)], param_names=params)


def _validate_by_synthesis(symbol: str, fn: ir.FunctionIR) -> bool:
    try:
        synthesize([ir.ExportIR("func", symbol, fn)], [])
        return True
    except EmitError:
        return False


class StubTranslator:
    """Deterministic built-in translator for hermetic tests."""

    mode = "stub"

    def __init__(self):
        self._memo: dict[str, TranslationResult] = {}

    def translate(self, req: TranslationRequest) -> TranslationResult:
        key = hashlib.sha256(
            f"{req.target_name}\x00{req.function_source}".encode()).hexdigest()
        if key in self._memo:
            return self._memo[key]
        fn = build_function_ir(req.function_source)
        if fn is None or not _validate_by_synthesis(req.target_name, fn):
            result = TranslationResult.declined()
        else:
            result = TranslationResult(status="ok", function_ir=fn)
        self._memo[key] = result
        return result

    def translate_source(self, source: str, target_name: str) -> TranslationResult:
        return self.translate(TranslationRequest(source, target_name))


def parse_assemblyscript_function(text: str) -> tuple[str, ir.FunctionIR] | None:
    """Parse service output of the `export function ...` shape into IR."""
    match = _AS_SIGNATURE_RE.search(text)
    if match is None:
        return None
    name = match.group("name")
    result = match.group("result")
    param_names: list[str] = []
    param_types: list[str] = []
    params_text = match.group("params").strip()
    if params_text:
        for part in params_text.split(","):
            if ":" not in part:
                return None
            pname, ptype = (s.strip() for s in part.split(":", 1))
            if ptype not in (ir.I32, ir.F64) or not ir.is_valid_symbol(pname):
                return None
            param_names.append(pname)
            param_types.append(ptype)
    if result == ir.VOID:
        return None
    js_like = f"function {name}({', '.join(param_names)}) {{{match.group('body')}}}"
    fn = build_function_ir(js_like, declared_types=param_types or [result],
                           declared_result=result)
    if fn is None:
        return None
    fn.param_names = param_names
    return name, fn


class ServiceTranslator:
    """HTTP chat-completion backed translator with stub-grade sandboxing."""

    mode = "service"

    def __init__(self, endpoint: str, model: str = "default",
                 token_env: str = DEFAULT_TOKEN_ENV, timeout: float = 30.0,
                 strict: bool = False, session=None):
        self.endpoint = endpoint
        self.model = model
        self.token = os.environ.get(token_env, "")
        self.timeout = timeout
        self.strict = strict
        if session is None:
            import requests
            session = requests.Session()
        self.session = session
        self._memo: dict[str, TranslationResult] = {}

    def translate(self, req: TranslationRequest) -> TranslationResult:
        key = hashlib.sha256(
            f"{req.target_name}\x00{req.function_source}".encode()).hexdigest()
        if key in self._memo:
            return self._memo[key]
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system",
                 "content": PROMPT_TEMPLATE.format(name=req.target_name)},
                {"role": "user", "content": req.function_source},
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            response = self.session.post(self.endpoint, json=payload,
                                         headers=headers,
                                         timeout=req.timeout or self.timeout)
            response.raise_for_status()
            data = response.json()
            raw = data["choices"][0]["message"]["content"]
        except Exception as exc:
            if self.strict:
                raise TranslatorUnavailable(str(exc)) from exc
            result = TranslationResult(status="error", raw_text=str(exc))
            self._memo[key] = result
            return result
        result = self._parse_reply(raw, req.target_name)
        self._memo[key] = result
        return result

    def _parse_reply(self, raw: str, target_name: str) -> TranslationResult:
        block = _CODE_BLOCK_RE.search(raw)
        code = block.group(1) if block else raw
        parsed = parse_assemblyscript_function(code)
        if parsed is None:
            return TranslationResult.declined(raw_text=raw)
        _, fn = parsed
        if not _validate_by_synthesis(target_name, fn):
            return TranslationResult.declined(raw_text=raw)
        return TranslationResult(status="ok", function_ir=fn, raw_text=raw)

    def translate_source(self, source: str, target_name: str) -> TranslationResult:
        return self.translate(TranslationRequest(source, target_name))


def make_translator(mode: str, endpoint: str | None = None,
                    model: str = "default", strict: bool = False,
                    timeout: float = 30.0):
    """Factory for the --translator {stub|service|off} switch."""
    if mode == "off":
        return None
    if mode == "stub":
        return StubTranslator()
    if mode == "service":
        if not endpoint:
            raise ValueError("service translator requires an endpoint URL")
        return ServiceTranslator(endpoint, model=model, strict=strict,
                                 timeout=timeout)
    raise ValueError(f"unknown translator mode {mode!r}")
