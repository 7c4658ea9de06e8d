"""AssemblyScript-style pretty-printer for IR (debugging/interop only)."""

from __future__ import annotations

import json

from .. import ir


def _expr(expr: ir.Expr, names: list[str], locals_: list[str]) -> str:
    if isinstance(expr, ir.ConstI32):
        return str(expr.value)
    if isinstance(expr, ir.ConstF64):
        return repr(expr.value)
    if isinstance(expr, ir.ParamRef):
        return names[expr.index]
    if isinstance(expr, ir.LocalRef):
        return locals_[expr.index]
    if isinstance(expr, ir.BinOp):
        return f"({_expr(expr.left, names, locals_)} {expr.op} {_expr(expr.right, names, locals_)})"
    if isinstance(expr, ir.Compare):
        return f"({_expr(expr.left, names, locals_)} {expr.op} {_expr(expr.right, names, locals_)})"
    if isinstance(expr, ir.Ternary):
        return (f"({_expr(expr.cond, names, locals_)} ? "
                f"{_expr(expr.then, names, locals_)} : "
                f"{_expr(expr.orelse, names, locals_)})")
    if isinstance(expr, ir.CallImportExpr):
        args = ", ".join(_expr(a, names, locals_) for a in expr.args)
        return f"{expr.name}({args})"
    return "/* ? */"


def _stmts(body: list[ir.Stmt], names: list[str], locals_: list[str],
           indent: str) -> list[str]:
    lines: list[str] = []
    for stmt in body:
        if isinstance(stmt, ir.CallImport):
            args = ", ".join(_expr(a, names, locals_) for a in stmt.args)
            lines.append(f"{indent}{stmt.name}({args});")
        elif isinstance(stmt, ir.IfStmt):
            lines.append(f"{indent}if ({_expr(stmt.cond, names, locals_)}) {{")
            lines += _stmts(stmt.then, names, locals_, indent)
            if stmt.orelse:
                lines.append(f"{indent}}} else {{")
                lines += _stmts(stmt.orelse, names, locals_, indent)
            lines.append(f"{indent}}}")
        elif isinstance(stmt, ir.CountingLoop):
            var = locals_[stmt.var]
            lines.append(f"{indent}let {var}: i32 = {stmt.init};")
            lines.append(f"{indent}while ({var} {stmt.cmp} {stmt.bound}) {{")
            lines += _stmts(stmt.body, names, locals_, indent)
            lines.append(f"{indent}{var} += {stmt.step};")
            lines.append(f"{indent}}}")
        elif isinstance(stmt, ir.CondLoop):
            lines.append(f"{indent}while (true) {{")
            lines.append(f"{indent}if ({_expr(stmt.cond, names, locals_)} == 0) {{")
            lines.append(f"{indent}break;")
            lines.append(f"{indent}}}")
            lines += _stmts(stmt.body, names, locals_, indent)
            lines.append(f"{indent}}}")
        elif isinstance(stmt, ir.Return):
            if stmt.value is None:
                lines.append(f"{indent}return;")
            else:
                lines.append(f"{indent}return {_expr(stmt.value, names, locals_)};")
    return lines


def _function_text(symbol: str, fn: ir.FunctionIR) -> list[str]:
    names = fn.param_names or [f"p{i}" for i in range(len(fn.params))]
    locals_ = [f"v{i}" for i in range(len(fn.locals))]
    lines: list[str] = []
    for decl in fn.imports_needed:
        params = ", ".join(f"a{i}: {t}" for i, t in enumerate(decl.params))
        result = decl.result if decl.result != ir.VOID else "void"
        lines.append(f'@external("{decl.module}", "{decl.field}")')
        lines.append(f"declare function {decl.field}({params}): {result};")
        lines.append("")
    params = ", ".join(f"{n}: {t}" for n, t in zip(names, fn.params))
    result = fn.result if fn.result != ir.VOID else "void"
    lines.append(f"export function {symbol}({params}): {result} {{")
    lines += _stmts(fn.body, names, locals_, "")
    lines.append("}")
    return lines


def emit_assemblyscript_text(exports: list[ir.ExportIR],
                             imports: list[ir.ImportDecl] | None = None) -> str:
    """Render IR in the source style the module bytes stand in for."""
    lines: list[str] = []
    for export in exports:
        if export.kind == "const_i32":
            lines.append(f"export {export.decl} {export.symbol}: i32 = {export.payload};")
        elif export.kind == "const_f64":
            lines.append(f"export {export.decl} {export.symbol}: f64 = {export.payload};")
        elif export.kind == "const_string":
            text = json.dumps(str(export.payload))
            lines.append(f"export {export.decl} {export.symbol}: string = {text};")
        elif export.kind in ("static_array_i32", "static_array_f64"):
            elem = "i32" if export.kind == "static_array_i32" else "f64"
            values = list(export.payload)
            lines.append(f"export function {export.symbol}(): i32 {{")
            lines.append(f"const arr = new Array<{elem}>({len(values)});")
            for i, v in enumerate(values):
                lines.append(f"arr[{i}] = {v};")
            lines.append(f"const ptr = __alloc({len(values)} * sizeof<{elem}>());")
            lines.append("for (let i = 0; i < arr.length; i++) {")
            lines.append(f"store<{elem}>(ptr + i * sizeof<{elem}>(), arr[i]);")
            lines.append("}")
            lines.append("return ptr;")
            lines.append("}")
        elif export.kind == "func":
            lines += _function_text(export.symbol, export.payload)
        lines.append("")
    return "\n".join(lines).strip() + ("\n" if lines else "")
