"""General-purpose conversion rules: literals, sensitive calls, arrays,
control flow, standalone calls, class and function definitions."""

from __future__ import annotations

from .. import ir
from ..astnodes import AstNode
from .base import (MatchContext, body_escapes_loop, contains_disruptive_flow,
                   get_string_ref, global_scope_ok, int_literal_value,
                   is_literal, lift_scope_ok, numeric_element_value,
                   references_identifier)

_I32_MIN, _I32_MAX = -(2 ** 31), 2 ** 31 - 1


def _single_named_declarator(decl: AstNode) -> AstNode | None:
    declarators = decl.children_by_role("declarations")
    if len(declarators) != 1:
        return None
    declarator = declarators[0]
    ident = declarator.child("id")
    if ident is None or ident.kind != "Identifier":
        return None
    return declarator


# -- Rule 1: literal-initialized variable declarations --------------------------

def replace_literals(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    for node in ctx.root.find_all("VariableDeclaration"):
        if ctx.in_for_header(node.span):
            continue
        declarator = _single_named_declarator(node)
        if declarator is None:
            continue
        init = declarator.child("init")
        if not is_literal(init, "number", "string", "boolean"):
            continue
        name = declarator.child("id").attrs["name"]
        keyword = node.attrs["keyword"]
        pos = node.span.start
        symbol = f"{name}_{pos}"
        if not ir.is_valid_symbol(symbol):
            continue  # e.g. non-ASCII binding names
        value = init.attrs["value"]
        literal_type = init.attrs["literal_type"]
        if literal_type == "string":
            exports = [ir.ExportIR("const_string", symbol, value)]
            glue = f"{keyword} {name} = {get_string_ref(symbol)};"
        elif literal_type == "boolean":
            exports = [ir.ExportIR("const_i32", symbol, 1 if value else 0)]
            glue = f"{keyword} {name} = instance.exports.{symbol}.value !== 0;"
        elif isinstance(value, int) and _I32_MIN <= value <= _I32_MAX:
            exports = [ir.ExportIR("const_i32", symbol, value)]
            glue = f"{keyword} {name} = instance.exports.{symbol}.value;"
        else:
            exports = [ir.ExportIR("const_f64", symbol, float(value))]
            glue = f"{keyword} {name} = instance.exports.{symbol}.value;"
        artifacts.append(ir.TransformArtifact(
            rule="replace_literals_recursive", span=node.span,
            exports=exports, glue=glue))
    return artifacts


# -- Rule 2: sensitive function calls -------------------------------------------

def _callee_name(callee: AstNode) -> str | None:
    if callee.kind == "Identifier":
        return callee.attrs["name"]
    if callee.kind == "MemberExpression":
        prop = callee.child("property")
        if not callee.attrs.get("computed"):
            return prop.attrs.get("name") if prop.kind == "Identifier" else None
        if is_literal(prop, "string"):
            return prop.attrs["value"]
    return None


def obfuscate_sensitive_calls(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    for node in ctx.root.walk():
        if node.kind not in ("CallExpression", "NewExpression"):
            continue
        callee = node.child("callee")
        if callee is None:
            continue
        name = _callee_name(callee)
        if name is None:
            continue
        if node.kind == "NewExpression" and name == "ActiveXObject":
            continue  # object construction semantics must survive
        args = node.children_by_role("arguments")
        if name == "setTimeout":
            if not (args and is_literal(args[0], "string")):
                continue
        elif name not in ctx.config.sensitive_callees:
            continue
        pos = node.span.start
        symbol = f"{name}_{pos}"
        if not ir.is_valid_symbol(symbol):
            continue
        arg_texts = ", ".join(ctx.slice(arg.span) for arg in args)
        glue = (
            "(function(){\n"
            f"let pointer_{symbol} = instance.exports.{symbol}.value;\n"
            f"const globalObject_{pos} = typeof window !== 'undefined' ? window : globalThis;\n"
            f"return globalObject_{pos}[getString(pointer_{symbol})]({arg_texts});\n"
            "})()"
        )
        artifacts.append(ir.TransformArtifact(
            rule="replace_callee", span=node.span,
            exports=[ir.ExportIR("const_string", symbol, name)], glue=glue))
    return artifacts


# -- Rule 3: numeric array declarations ------------------------------------------

def replace_numeric_arrays(ctx: MatchContext,
                           enabled: set[str]) -> list[ir.TransformArtifact]:
    artifacts = []
    for node in ctx.root.find_all("VariableDeclaration"):
        if ctx.in_for_header(node.span):
            continue
        declarator = _single_named_declarator(node)
        if declarator is None:
            continue
        init = declarator.child("init")
        if init is None or init.kind != "ArrayExpression":
            continue
        elements = init.children
        if not elements:
            continue  # no data segment for a zero-length array
        values = [numeric_element_value(el) for el in elements]
        if any(v is None for v in values):
            continue  # mixed or non-numeric arrays are ignored
        all_integral = all(isinstance(v, int) and _I32_MIN <= v <= _I32_MAX
                           for v in values)
        if all_integral:
            rule = "replace_int_arrays"
            kind = "static_array_i32"
            view = "Int32Array"
        else:
            rule = "replace_float_arrays"
            kind = "static_array_f64"
            view = "Float64Array"
            values = [float(v) for v in values]
        if rule not in enabled:
            continue
        name = declarator.child("id").attrs["name"]
        keyword = node.attrs["keyword"]
        pos = node.span.start
        symbol = f"get_{name}_{pos}Pointer"
        if not ir.is_valid_symbol(symbol):
            continue
        glue = (
            f"const createArray_{name}_{pos} = instance.exports.{symbol};\n"
            f"const ptr_{name}_{pos} = createArray_{name}_{pos}();\n"
            f"{keyword} {name} = new {view}(instance.exports.memory.buffer, "
            f"ptr_{name}_{pos}, {len(values)});"
        )
        artifacts.append(ir.TransformArtifact(
            rule=rule, span=node.span,
            exports=[ir.ExportIR(kind, symbol, values)], glue=glue))
    return artifacts


# -- Rule 4: if-else dispatch -----------------------------------------------------

def _branch_js_body(ctx: MatchContext, branch: AstNode) -> str:
    return ctx.slice(branch.span)


def replace_if_else(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    for node in ctx.root.find_all("IfStatement"):
        parent = ctx.parent_of(node)
        if parent is None or parent.kind not in ("Program", "BlockStatement"):
            continue  # glue is a statement list; needs a block position
        consequent = node.child("consequent")
        alternate = node.child("alternate")
        if alternate is None:
            continue
        if contains_disruptive_flow(ctx, node):
            continue
        if not lift_scope_ok(ctx, node, [consequent, alternate]):
            continue
        pos = node.span.start
        imp1 = ir.ImportDecl(f"$imp1_{pos}", [], ir.VOID,
                             js_body=_branch_js_body(ctx, consequent))
        imp2 = ir.ImportDecl(f"$imp2_{pos}", [], ir.VOID,
                             js_body=_branch_js_body(ctx, alternate))
        fn = ir.FunctionIR(
            params=[ir.I32], result=ir.VOID, param_names=["condition"],
            body=[ir.IfStmt(
                cond=ir.Compare("==", ir.ParamRef(0, ir.I32), ir.ConstI32(1), ir.I32),
                then=[ir.CallImport(imp1.field)],
                orelse=[ir.CallImport(imp2.field)])],
            imports_needed=[imp1, imp2])
        test_text = ctx.slice(node.child("test").span)
        glue = (
            f"let wasmTestCondition_{pos} = ({test_text}) ? 1 : 0;\n"
            f"instance.exports.$if_else_{pos}(wasmTestCondition_{pos});"
        )
        artifacts.append(ir.TransformArtifact(
            rule="replace_if_else", span=node.span,
            exports=[ir.ExportIR("func", f"$if_else_{pos}", fn)],
            imports=[imp1, imp2], glue=glue))
    return artifacts


# -- Rule 5: for loops --------------------------------------------------------------

def replace_for_loops(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    for node in ctx.root.find_all("ForStatement"):
        init = node.child("init")
        test = node.child("test")
        update = node.child("update")
        body = node.child("body")
        if init is None or test is None or update is None or body is None:
            continue
        if init.kind != "VariableDeclaration" or init.attrs.get("keyword") != "let":
            continue
        declarator = _single_named_declarator(init)
        if declarator is None:
            continue
        start_value = int_literal_value(declarator.child("init"))
        if start_value is None:
            continue
        var_name = declarator.child("id").attrs["name"]
        if (test.kind != "BinaryExpression"
                or test.attrs.get("operator") not in ("<", "<=")):
            continue
        left = test.child("left")
        if left.kind != "Identifier" or left.attrs["name"] != var_name:
            continue
        bound = int_literal_value(test.child("right"))
        if bound is None:
            continue
        step = None
        if (update.kind == "UpdateExpression"
                and update.attrs.get("operator") == "++"):
            target = update.child("argument")
            if target.kind == "Identifier" and target.attrs["name"] == var_name:
                step = 1
        elif (update.kind == "AssignmentExpression"
              and update.attrs.get("operator") == "+="):
            target = update.child("left")
            if target.kind == "Identifier" and target.attrs["name"] == var_name:
                step = int_literal_value(update.child("right"))
        if step is None or step < 1:
            continue
        if references_identifier(body, var_name):
            continue  # exported loop body takes no arguments
        if body_escapes_loop(body):
            continue
        if not lift_scope_ok(ctx, node, [body]):
            continue
        pos = node.span.start
        body_import = ir.ImportDecl(f"body_{pos}", [], ir.VOID,
                                    js_body=ctx.slice(body.span))
        fn = ir.FunctionIR(
            params=[], result=ir.VOID, locals=[ir.I32],
            body=[ir.CountingLoop(var=0, init=start_value,
                                  cmp=test.attrs["operator"], bound=bound,
                                  step=step,
                                  body=[ir.CallImport(body_import.field)])],
            imports_needed=[body_import])
        artifacts.append(ir.TransformArtifact(
            rule="replace_for_loops", span=node.span,
            exports=[ir.ExportIR("func", f"for_{pos}", fn)],
            imports=[body_import],
            glue=f"instance.exports.for_{pos}();"))
    return artifacts


# -- Rule 6: while loops ---------------------------------------------------------------

def replace_while_loops(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    for node in ctx.root.find_all("WhileStatement"):
        test = node.child("test")
        body = node.child("body")
        if test is None or body is None:
            continue
        parent = ctx.parent_of(node)
        if parent is not None and parent.kind == "LabeledStatement":
            continue  # a labeled loop can be a break/continue target
        if body_escapes_loop(body):
            continue
        if not lift_scope_ok(ctx, node, [test, body]):
            continue
        pos = node.span.start
        cond_import = ir.ImportDecl(
            f"cond_{pos}", [], ir.I32,
            js_body=f"return ({ctx.slice(test.span)}) ? 1 : 0;")
        body_import = ir.ImportDecl(f"body_{pos}", [], ir.VOID,
                                    js_body=ctx.slice(body.span))
        fn = ir.FunctionIR(
            params=[], result=ir.VOID,
            body=[ir.CondLoop(
                cond=ir.CallImportExpr(cond_import.field, [], ir.I32),
                body=[ir.CallImport(body_import.field)])],
            imports_needed=[cond_import, body_import])
        artifacts.append(ir.TransformArtifact(
            rule="replace_while_loops", span=node.span,
            exports=[ir.ExportIR("func", f"f_{pos}", fn)],
            imports=[cond_import, body_import],
            glue=f"instance.exports.f_{pos}();"))
    return artifacts


# -- Rule 7: standalone calls with unused return values -----------------------------

def replace_calls_no_return(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    for node in ctx.root.find_all("ExpressionStatement"):
        expr = node.child("expression")
        if expr is None or expr.kind != "CallExpression":
            continue
        callee = expr.child("callee")
        if callee is not None and callee.kind == "Super":
            continue
        if not lift_scope_ok(ctx, node, [expr]):
            continue
        pos = node.span.start
        call_text = ctx.slice(expr.span)
        imp = ir.ImportDecl(f"impFunc_{pos}", [], ir.VOID,
                            js_body=f"{call_text};")
        fn = ir.FunctionIR(params=[], result=ir.VOID,
                           body=[ir.CallImport(imp.field)],
                           imports_needed=[imp])
        artifacts.append(ir.TransformArtifact(
            rule="replace_function_calls_with_no_return", span=node.span,
            exports=[ir.ExportIR("func", f"f_{pos}", fn)],
            imports=[imp],
            glue=f"instance.exports.f_{pos}();"))
    return artifacts


# -- Rule 8: class definitions --------------------------------------------------------

def replace_class_defs(ctx: MatchContext) -> list[ir.TransformArtifact]:
    if not ctx.config.dom_enabled:
        return []
    artifacts = []
    for node in ctx.root.find_all("ClassDeclaration"):
        if not global_scope_ok(ctx, node, [node]):
            continue
        pos = node.span.start
        symbol = f"class_{pos}"
        class_text = ctx.slice(node.span)
        glue = (
            f"const classContent_{pos} = {get_string_ref(symbol)};\n"
            f"const script_{pos} = document.createElement(\"script\");\n"
            f"script_{pos}.textContent = classContent_{pos};\n"
            f"document.body.appendChild(script_{pos});"
        )
        artifacts.append(ir.TransformArtifact(
            rule="replace_class_defs", span=node.span,
            exports=[ir.ExportIR("const_string", symbol, class_text)],
            glue=glue))
    # anonymous/named class expressions bound via a declaration
    for node in ctx.root.find_all("VariableDeclaration"):
        declarator = _single_named_declarator(node)
        if declarator is None:
            continue
        init = declarator.child("init")
        if init is None or init.kind != "ClassExpression":
            continue
        if not global_scope_ok(ctx, node, [init]):
            continue
        name = declarator.child("id").attrs["name"]
        keyword = node.attrs["keyword"]
        pos = node.span.start
        symbol = f"class_{pos}"
        glue = (
            f"const classContent_{pos} = {get_string_ref(symbol)};\n"
            f"const script_{pos} = document.createElement(\"script\");\n"
            f"script_{pos}.textContent = \"window.__wasm_class_{pos} = (\" + classContent_{pos} + \");\";\n"
            f"document.body.appendChild(script_{pos});\n"
            f"{keyword} {name} = window.__wasm_class_{pos};"
        )
        artifacts.append(ir.TransformArtifact(
            rule="replace_class_defs", span=node.span,
            exports=[ir.ExportIR("const_string", symbol,
                                 ctx.slice(init.span))],
            glue=glue))
    return artifacts


# -- Rule 9: function definitions via the translator ----------------------------------

def replace_func_defs(ctx: MatchContext, translator,
                      taken_symbols: set[str]) -> list[ir.TransformArtifact]:
    if translator is None:
        return []
    artifacts = []
    calls_before: dict[str, int] = {}
    for node in ctx.root.find_all("CallExpression"):
        callee = node.child("callee")
        if callee is not None and callee.kind == "Identifier":
            name = callee.attrs["name"]
            first = calls_before.get(name)
            if first is None or node.span.start < first:
                calls_before[name] = node.span.start

    for node in ctx.root.walk():
        if node.kind not in ("FunctionDeclaration", "FunctionExpression",
                             "ArrowFunctionExpression"):
            continue
        if node.attrs.get("is_method"):
            continue  # class/object methods carry `this` state
        if node.attrs.get("is_async") or node.attrs.get("is_generator"):
            continue
        pos = node.span.start
        name = node.attrs.get("name")
        is_declaration = node.kind == "FunctionDeclaration"
        if is_declaration and name:
            # the glue binding is not hoisted, so earlier call sites break
            if calls_before.get(name, pos) < pos:
                continue
        if (is_declaration and name and ir.is_valid_symbol(name)
                and name not in taken_symbols):
            symbol = name
        else:
            symbol = f"func_def_{pos}"
        result = translator.translate_source(ctx.slice(node.span), symbol)
        if result.status != "ok" or result.function_ir is None:
            continue
        taken_symbols.add(symbol)
        if is_declaration and name:
            glue = f"let {name} = instance.exports.{symbol};"
        else:
            glue = f"instance.exports.{symbol}"
        artifacts.append(ir.TransformArtifact(
            rule="replace_func_defs", span=node.span,
            exports=[ir.ExportIR("func", symbol, result.function_ir)],
            glue=glue))
    return artifacts
