"""Recursive-descent parser for the ES2017 script grammar subset.

Produces AstNode trees whose spans are code-point offsets into the input.
Module syntax (import/export statements) is rejected: conversion output is
a classic script, so module inputs are excluded at intake. Unsupported
newer syntax surfaces as ParseError rather than a partial tree.
"""

from __future__ import annotations

from .astnodes import AstNode
from .errors import OversizeError, ParseError
from .scripts import MAX_SCRIPT_BYTES, SourceScript, Span
from .tokenizer import Token, tokenize

_ASSIGN_OPS = {
    "=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", ">>>=", "&=", "|=",
    "^=", "**=",
}

_BINARY_PRECEDENCE = {
    "||": 1, "&&": 2,
    "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6, "===": 6, "!==": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7, "in": 7, "instanceof": 7,
    "<<": 8, ">>": 8, ">>>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
    "**": 11,
}

_UNARY_OPS = {"+", "-", "~", "!", "typeof", "void", "delete"}


class _State:
    __slots__ = ("in_async", "in_generator", "in_function")

    def __init__(self, in_async=False, in_generator=False, in_function=False):
        self.in_async = in_async
        self.in_generator = in_generator
        self.in_function = in_function


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0
        self.state = _State()

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.index]

    def peek(self, offset=1) -> Token:
        i = min(self.index + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def at_punct(self, value: str) -> bool:
        return self.tok.is_punct(value)

    def at_keyword(self, value: str) -> bool:
        return self.tok.is_keyword(value)

    def at_ident(self, value: str | None = None) -> bool:
        if self.tok.type != "ident":
            return False
        return value is None or self.tok.value == value

    def advance(self) -> Token:
        tok = self.tok
        if tok.type != "eof":
            self.index += 1
        return tok

    def expect_punct(self, value: str) -> Token:
        if not self.at_punct(value):
            raise self.error(f"expected {value!r}")
        return self.advance()

    def expect_keyword(self, value: str) -> Token:
        if not self.at_keyword(value):
            raise self.error(f"expected keyword {value!r}")
        return self.advance()

    def error(self, message: str) -> ParseError:
        tok = self.tok
        what = tok.value if tok.type != "eof" else "end of input"
        return ParseError(f"{message}, found {what!r}", tok.start)

    def _prev_end(self) -> int:
        return self.tokens[self.index - 1].end if self.index > 0 else 0

    def node(self, kind: str, start: int, /, **attrs) -> AstNode:
        return AstNode(kind, Span(start, self._prev_end()), attrs=attrs)

    # -- entry ---------------------------------------------------------------

    def parse_program(self) -> AstNode:
        body = []
        while self.tok.type != "eof":
            body.append(self.parse_statement())
        program = AstNode("Program", Span(0, len(self.text)))
        program.add_all("body", body)
        return program

    # -- statements ----------------------------------------------------------

    def parse_statement(self) -> AstNode:
        tok = self.tok
        if tok.type == "punct":
            if tok.value == "{":
                return self.parse_block()
            if tok.value == ";":
                self.advance()
                return self.node("EmptyStatement", tok.start)
        if tok.type == "keyword":
            handler = {
                "var": self.parse_variable_statement,
                "const": self.parse_variable_statement,
                "if": self.parse_if,
                "for": self.parse_for,
                "while": self.parse_while,
                "do": self.parse_do_while,
                "function": self.parse_function_declaration,
                "class": self.parse_class_declaration,
                "return": self.parse_return,
                "break": self.parse_break_continue,
                "continue": self.parse_break_continue,
                "throw": self.parse_throw,
                "try": self.parse_try,
                "switch": self.parse_switch,
                "debugger": self.parse_debugger,
                "with": self.parse_with,
            }.get(tok.value)
            if handler is not None:
                return handler()
            if tok.value in ("import", "export"):
                raise self.error("module syntax is not supported in scripts")
        if tok.type == "ident" and tok.value == "let":
            nxt = self.peek()
            if nxt.type == "ident" or nxt.is_punct("[") or nxt.is_punct("{"):
                return self.parse_variable_statement()
        if tok.type == "ident" and tok.value == "async":
            nxt = self.peek()
            if nxt.is_keyword("function") and not nxt.nl_before:
                return self.parse_function_declaration()
        if tok.type == "ident" and self.peek().is_punct(":"):
            return self.parse_labeled()
        return self.parse_expression_statement()

    def parse_block(self) -> AstNode:
        start = self.expect_punct("{").start
        body = []
        while not self.at_punct("}"):
            if self.tok.type == "eof":
                raise self.error("unterminated block")
            body.append(self.parse_statement())
        self.expect_punct("}")
        node = self.node("BlockStatement", start)
        node.add_all("body", body)
        return node

    def parse_variable_statement(self) -> AstNode:
        node = self.parse_variable_declaration()
        self.consume_semicolon()
        node.span = Span(node.span.start, self._prev_end())
        return node

    def parse_variable_declaration(self, no_in=False) -> AstNode:
        tok = self.advance()
        keyword = tok.value
        declarators = [self.parse_variable_declarator(keyword, no_in)]
        while self.at_punct(","):
            self.advance()
            declarators.append(self.parse_variable_declarator(keyword, no_in))
        node = self.node("VariableDeclaration", tok.start, keyword=keyword)
        node.add_all("declarations", declarators)
        return node

    def parse_variable_declarator(self, keyword: str, no_in: bool) -> AstNode:
        start = self.tok.start
        target = self.parse_binding_target()
        init = None
        if self.at_punct("="):
            self.advance()
            init = self.parse_assignment(no_in=no_in)
        node = self.node("VariableDeclarator", start)
        node.add("id", target)
        node.add("init", init)
        return node

    def consume_semicolon(self) -> None:
        if self.at_punct(";"):
            self.advance()
            return
        if self.at_punct("}") or self.tok.type == "eof" or self.tok.nl_before:
            return  # automatic semicolon insertion
        raise self.error("expected ';'")

    def parse_expression_statement(self) -> AstNode:
        start = self.tok.start
        expr = self.parse_expression()
        self.consume_semicolon()
        node = self.node("ExpressionStatement", start)
        node.add("expression", expr)
        return node

    def parse_if(self) -> AstNode:
        start = self.expect_keyword("if").start
        self.expect_punct("(")
        test = self.parse_expression()
        self.expect_punct(")")
        consequent = self.parse_statement()
        alternate = None
        if self.at_keyword("else"):
            self.advance()
            alternate = self.parse_statement()
        node = self.node("IfStatement", start)
        node.add("test", test)
        node.add("consequent", consequent)
        node.add("alternate", alternate)
        return node

    def parse_for(self) -> AstNode:
        start = self.expect_keyword("for").start
        self.expect_punct("(")
        init = None
        if self.at_punct(";"):
            self.advance()
        else:
            if (self.at_keyword("var") or self.at_keyword("const")
                    or (self.at_ident("let")
                        and (self.peek().type == "ident"
                             or self.peek().is_punct("[")
                             or self.peek().is_punct("{")))):
                init = self.parse_variable_declaration(no_in=True)
            else:
                init_start = self.tok.start
                expr = self.parse_expression(no_in=True)
                init = self.node("_ExprInit", init_start)
                init.add("expression", expr)
            if self.at_keyword("in") or self.at_ident("of"):
                return self.parse_for_in_of(start, init)
            if init.kind == "_ExprInit":
                init = init.child("expression")
            self.expect_punct(";")
        test = None
        if not self.at_punct(";"):
            test = self.parse_expression()
        self.expect_punct(";")
        update = None
        if not self.at_punct(")"):
            update = self.parse_expression()
        self.expect_punct(")")
        body = self.parse_statement()
        node = self.node("ForStatement", start)
        node.add("init", init)
        node.add("test", test)
        node.add("update", update)
        node.add("body", body)
        return node

    def parse_for_in_of(self, start: int, left: AstNode) -> AstNode:
        kind = "ForInStatement" if self.at_keyword("in") else "ForOfStatement"
        self.advance()
        if left.kind == "_ExprInit":
            left = self.to_pattern(left.child("expression"))
        right = self.parse_assignment() if kind == "ForOfStatement" else self.parse_expression()
        self.expect_punct(")")
        body = self.parse_statement()
        node = self.node(kind, start)
        node.add("left", left)
        node.add("right", right)
        node.add("body", body)
        return node

    def parse_while(self) -> AstNode:
        start = self.expect_keyword("while").start
        self.expect_punct("(")
        test = self.parse_expression()
        self.expect_punct(")")
        body = self.parse_statement()
        node = self.node("WhileStatement", start)
        node.add("test", test)
        node.add("body", body)
        return node

    def parse_do_while(self) -> AstNode:
        start = self.expect_keyword("do").start
        body = self.parse_statement()
        self.expect_keyword("while")
        self.expect_punct("(")
        test = self.parse_expression()
        self.expect_punct(")")
        if self.at_punct(";"):
            self.advance()
        node = self.node("DoWhileStatement", start)
        node.add("body", body)
        node.add("test", test)
        return node

    def parse_return(self) -> AstNode:
        start = self.expect_keyword("return").start
        argument = None
        if (not self.at_punct(";") and not self.at_punct("}")
                and self.tok.type != "eof" and not self.tok.nl_before):
            argument = self.parse_expression()
        self.consume_semicolon()
        node = self.node("ReturnStatement", start)
        node.add("argument", argument)
        return node

    def parse_break_continue(self) -> AstNode:
        tok = self.advance()
        kind = "BreakStatement" if tok.value == "break" else "ContinueStatement"
        label = None
        if self.tok.type == "ident" and not self.tok.nl_before:
            label = self.parse_identifier()
        self.consume_semicolon()
        node = self.node(kind, tok.start)
        node.add("label", label)
        return node

    def parse_throw(self) -> AstNode:
        start = self.expect_keyword("throw").start
        if self.tok.nl_before:
            raise self.error("newline not allowed after 'throw'")
        argument = self.parse_expression()
        self.consume_semicolon()
        node = self.node("ThrowStatement", start)
        node.add("argument", argument)
        return node

    def parse_try(self) -> AstNode:
        start = self.expect_keyword("try").start
        block = self.parse_block()
        handler = None
        finalizer = None
        if self.at_keyword("catch"):
            cstart = self.advance().start
            param = None
            if self.at_punct("("):
                self.advance()
                param = self.parse_binding_target()
                self.expect_punct(")")
            body = self.parse_block()
            handler = self.node("CatchClause", cstart)
            handler.add("param", param)
            handler.add("body", body)
        if self.at_keyword("finally"):
            self.advance()
            finalizer = self.parse_block()
        if handler is None and finalizer is None:
            raise self.error("try without catch or finally")
        node = self.node("TryStatement", start)
        node.add("block", block)
        node.add("handler", handler)
        node.add("finalizer", finalizer)
        return node

    def parse_switch(self) -> AstNode:
        start = self.expect_keyword("switch").start
        self.expect_punct("(")
        discriminant = self.parse_expression()
        self.expect_punct(")")
        self.expect_punct("{")
        cases = []
        while not self.at_punct("}"):
            if self.at_keyword("case"):
                cstart = self.advance().start
                test = self.parse_expression()
            elif self.at_keyword("default"):
                cstart = self.advance().start
                test = None
            else:
                raise self.error("expected 'case' or 'default'")
            self.expect_punct(":")
            consequent = []
            while (not self.at_punct("}") and not self.at_keyword("case")
                   and not self.at_keyword("default")):
                consequent.append(self.parse_statement())
            case = self.node("SwitchCase", cstart)
            case.add("test", test)
            case.add_all("consequent", consequent)
            cases.append(case)
        self.expect_punct("}")
        node = self.node("SwitchStatement", start)
        node.add("discriminant", discriminant)
        node.add_all("cases", cases)
        return node

    def parse_labeled(self) -> AstNode:
        start = self.tok.start
        label = self.parse_identifier()
        self.expect_punct(":")
        body = self.parse_statement()
        node = self.node("LabeledStatement", start)
        node.add("label", label)
        node.add("body", body)
        return node

    def parse_debugger(self) -> AstNode:
        start = self.advance().start
        self.consume_semicolon()
        return self.node("DebuggerStatement", start)

    def parse_with(self) -> AstNode:
        start = self.expect_keyword("with").start
        self.expect_punct("(")
        obj = self.parse_expression()
        self.expect_punct(")")
        body = self.parse_statement()
        node = self.node("WithStatement", start)
        node.add("object", obj)
        node.add("body", body)
        return node

    # -- functions and classes -------------------------------------------------

    def parse_function_declaration(self) -> AstNode:
        return self.parse_function(declaration=True)

    def parse_function(self, declaration: bool) -> AstNode:
        start = self.tok.start
        is_async = False
        if self.at_ident("async"):
            is_async = True
            self.advance()
        self.expect_keyword("function")
        is_generator = False
        if self.at_punct("*"):
            is_generator = True
            self.advance()
        name = None
        if self.tok.type == "ident":
            name = self.parse_identifier()
        elif declaration:
            raise self.error("function declaration requires a name")
        params = self.parse_params()
        body = self.parse_function_body(is_async, is_generator)
        kind = "FunctionDeclaration" if declaration else "FunctionExpression"
        node = self.node(kind, start, is_async=is_async,
                         is_generator=is_generator,
                         name=name.attrs["name"] if name else None)
        node.add("id", name)
        node.add_all("params", params)
        node.add("body", body)
        return node

    def parse_params(self) -> list[AstNode]:
        self.expect_punct("(")
        params = []
        while not self.at_punct(")"):
            if self.at_punct("..."):
                rstart = self.advance().start
                target = self.parse_binding_target()
                rest = self.node("RestElement", rstart)
                rest.add("argument", target)
                params.append(rest)
            else:
                params.append(self.parse_binding_element())
            if not self.at_punct(")"):
                self.expect_punct(",")
        self.expect_punct(")")
        return params

    def parse_binding_element(self) -> AstNode:
        start = self.tok.start
        target = self.parse_binding_target()
        if self.at_punct("="):
            self.advance()
            default = self.parse_assignment()
            node = self.node("AssignmentPattern", start)
            node.add("left", target)
            node.add("right", default)
            return node
        return target

    def parse_binding_target(self) -> AstNode:
        if self.at_punct("["):
            return self.parse_array_pattern()
        if self.at_punct("{"):
            return self.parse_object_pattern()
        return self.parse_identifier(binding=True)

    def parse_array_pattern(self) -> AstNode:
        start = self.expect_punct("[").start
        elements = []
        while not self.at_punct("]"):
            if self.at_punct(","):
                hole_at = self.advance().start
                elements.append(AstNode("Hole", Span(hole_at, hole_at)))
                continue
            if self.at_punct("..."):
                rstart = self.advance().start
                rest = self.node("RestElement", rstart)
                rest.add("argument", self.parse_binding_target())
                rest.span = Span(rstart, self._prev_end())
                elements.append(rest)
            else:
                elements.append(self.parse_binding_element())
            if not self.at_punct("]"):
                self.expect_punct(",")
        self.expect_punct("]")
        node = self.node("ArrayPattern", start)
        node.add_all("elements", elements)
        return node

    def parse_object_pattern(self) -> AstNode:
        start = self.expect_punct("{").start
        props = []
        while not self.at_punct("}"):
            if self.at_punct("..."):
                rstart = self.advance().start
                rest = self.node("RestElement", rstart)
                rest.add("argument", self.parse_binding_target())
                rest.span = Span(rstart, self._prev_end())
                props.append(rest)
            else:
                pstart = self.tok.start
                computed = False
                if self.at_punct("["):
                    self.advance()
                    key = self.parse_assignment()
                    self.expect_punct("]")
                    computed = True
                else:
                    key = self.parse_property_key()
                if self.at_punct(":"):
                    self.advance()
                    value = self.parse_binding_element()
                    shorthand = False
                else:
                    if key.kind != "Identifier":
                        raise self.error("invalid shorthand pattern")
                    value = key
                    shorthand = True
                    if self.at_punct("="):
                        self.advance()
                        default = self.parse_assignment()
                        pat = self.node("AssignmentPattern", pstart)
                        pat.add("left", key)
                        pat.add("right", default)
                        value = pat
                prop = self.node("Property", pstart, computed=computed,
                                 shorthand=shorthand, kind="init", method=False)
                prop.add("key", key)
                if value is not key:
                    prop.add("value", value)
                else:
                    prop.add("value", key)
                props.append(prop)
            if not self.at_punct("}"):
                self.expect_punct(",")
        self.expect_punct("}")
        node = self.node("ObjectPattern", start)
        node.add_all("properties", props)
        return node

    def parse_function_body(self, is_async: bool, is_generator: bool) -> AstNode:
        saved = self.state
        self.state = _State(in_async=is_async, in_generator=is_generator,
                            in_function=True)
        try:
            return self.parse_block()
        finally:
            self.state = saved

    def parse_class_declaration(self) -> AstNode:
        return self.parse_class(declaration=True)

    def parse_class(self, declaration: bool) -> AstNode:
        start = self.expect_keyword("class").start
        name = None
        if self.tok.type == "ident":
            name = self.parse_identifier()
        elif declaration:
            raise self.error("class declaration requires a name")
        superclass = None
        if self.at_keyword("extends"):
            self.advance()
            superclass = self.parse_unary()
        body = self.parse_class_body()
        kind = "ClassDeclaration" if declaration else "ClassExpression"
        node = self.node(kind, start,
                         name=name.attrs["name"] if name else None)
        node.add("id", name)
        node.add("superclass", superclass)
        node.add("body", body)
        return node

    def parse_class_body(self) -> AstNode:
        start = self.expect_punct("{").start
        methods = []
        while not self.at_punct("}"):
            if self.at_punct(";"):
                self.advance()
                continue
            methods.append(self.parse_method_definition())
        self.expect_punct("}")
        node = self.node("ClassBody", start)
        node.add_all("body", methods)
        return node

    def parse_method_definition(self) -> AstNode:
        start = self.tok.start
        is_static = False
        if self.at_ident("static") and not self.peek().is_punct("("):
            is_static = True
            self.advance()
        is_async = False
        is_generator = False
        kind = "method"
        if (self.at_ident("async") and not self.peek().is_punct("(")
                and not self.peek().nl_before):
            is_async = True
            self.advance()
        if self.at_punct("*"):
            is_generator = True
            self.advance()
        if (self.at_ident("get") or self.at_ident("set")) and not self.peek().is_punct("("):
            kind = self.tok.value
            self.advance()
        computed = False
        if self.at_punct("["):
            self.advance()
            key = self.parse_assignment()
            self.expect_punct("]")
            computed = True
        else:
            key = self.parse_property_key()
        if key.kind == "Identifier" and key.attrs.get("name") == "constructor" and kind == "method":
            kind = "constructor"
        fstart = self.tok.start
        params = self.parse_params()
        body = self.parse_function_body(is_async, is_generator)
        fn = self.node("FunctionExpression", fstart, is_async=is_async,
                       is_generator=is_generator, name=None, is_method=True)
        fn.add_all("params", params)
        fn.add("body", body)
        node = self.node("MethodDefinition", start, kind=kind,
                         static=is_static, computed=computed)
        node.add("key", key)
        node.add("value", fn)
        return node

    def parse_property_key(self) -> AstNode:
        tok = self.tok
        if tok.type in ("ident", "keyword"):
            self.advance()
            return self.node("Identifier", tok.start, name=tok.value)
        if tok.type == "str":
            self.advance()
            return self.node("Literal", tok.start, value=tok.cooked,
                             raw=tok.value, literal_type="string")
        if tok.type == "num":
            self.advance()
            return self.node("Literal", tok.start, value=tok.cooked,
                             raw=tok.value, literal_type="number")
        raise self.error("invalid property key")

    # -- expressions -----------------------------------------------------------

    def parse_expression(self, no_in=False) -> AstNode:
        start = self.tok.start
        expr = self.parse_assignment(no_in=no_in)
        if not self.at_punct(","):
            return expr
        exprs = [expr]
        while self.at_punct(","):
            self.advance()
            exprs.append(self.parse_assignment(no_in=no_in))
        node = self.node("SequenceExpression", start)
        node.add_all("expressions", exprs)
        return node

    def parse_assignment(self, no_in=False) -> AstNode:
        if self.state.in_generator and self.at_keyword("yield"):
            return self.parse_yield(no_in)
        arrow = self.try_parse_arrow()
        if arrow is not None:
            return arrow
        start = self.tok.start
        expr = self.parse_conditional(no_in)
        if self.tok.type == "punct" and self.tok.value in _ASSIGN_OPS:
            op = self.advance().value
            if op == "=":
                target = self.to_pattern(expr)
            else:
                if expr.kind not in ("Identifier", "MemberExpression"):
                    raise self.error("invalid assignment target")
                target = expr
            right = self.parse_assignment(no_in=no_in)
            node = self.node("AssignmentExpression", start, operator=op)
            node.add("left", target)
            node.add("right", right)
            return node
        return expr

    def parse_yield(self, no_in: bool) -> AstNode:
        start = self.expect_keyword("yield").start
        delegate = False
        argument = None
        if self.at_punct("*") and not self.tok.nl_before:
            delegate = True
            self.advance()
            argument = self.parse_assignment(no_in=no_in)
        elif (self.tok.type != "eof" and not self.tok.nl_before
              and not self.at_punct(")") and not self.at_punct("]")
              and not self.at_punct("}") and not self.at_punct(",")
              and not self.at_punct(";") and not self.at_punct(":")):
            argument = self.parse_assignment(no_in=no_in)
        node = self.node("YieldExpression", start, delegate=delegate)
        node.add("argument", argument)
        return node

    # arrow lookahead: scan from a '(' to its matching ')' and check for '=>'
    def try_parse_arrow(self) -> AstNode | None:
        tok = self.tok
        is_async = False
        offset = 0
        if tok.type == "ident" and tok.value == "async":
            nxt = self.peek()
            if not nxt.nl_before and (nxt.type == "ident" or nxt.is_punct("(")):
                is_async = True
                offset = 1
        head = self.peek(offset) if offset else tok
        if head.type == "ident":
            after = self.peek(offset + 1)
            if after.is_punct("=>") and not after.nl_before:
                return self.parse_arrow(is_async)
            return None
        if head.is_punct("("):
            close = self._matching_paren(self.index + offset)
            if close is None:
                return None
            after = self.tokens[close + 1] if close + 1 < len(self.tokens) else None
            if after is not None and after.is_punct("=>") and not after.nl_before:
                return self.parse_arrow(is_async)
        return None

    def _matching_paren(self, open_index: int) -> int | None:
        depth = 0
        for i in range(open_index, len(self.tokens)):
            tok = self.tokens[i]
            if tok.type != "punct":
                continue
            if tok.value in ("(", "[", "{"):
                depth += 1
            elif tok.value in (")", "]", "}"):
                depth -= 1
                if depth == 0:
                    return i
        return None

    def parse_arrow(self, is_async: bool) -> AstNode:
        start = self.tok.start
        if is_async:
            self.advance()
        if self.at_punct("("):
            params = self.parse_params()
        else:
            params = [self.parse_identifier(binding=True)]
        self.expect_punct("=>")
        saved = self.state
        self.state = _State(in_async=is_async, in_function=True)
        try:
            if self.at_punct("{"):
                body = self.parse_block()
                expression = False
            else:
                body = self.parse_assignment()
                expression = True
        finally:
            self.state = saved
        node = self.node("ArrowFunctionExpression", start, is_async=is_async,
                         is_generator=False, name=None, expression=expression)
        node.add_all("params", params)
        node.add("body", body)
        return node

    def parse_conditional(self, no_in: bool) -> AstNode:
        start = self.tok.start
        test = self.parse_binary(0, no_in)
        if not self.at_punct("?"):
            return test
        self.advance()
        consequent = self.parse_assignment()
        self.expect_punct(":")
        alternate = self.parse_assignment(no_in=no_in)
        node = self.node("ConditionalExpression", start)
        node.add("test", test)
        node.add("consequent", consequent)
        node.add("alternate", alternate)
        return node

    def parse_binary(self, min_prec: int, no_in: bool) -> AstNode:
        start = self.tok.start
        left = self.parse_unary()
        while True:
            tok = self.tok
            op = None
            if tok.type == "punct" and tok.value in _BINARY_PRECEDENCE:
                op = tok.value
            elif tok.type == "keyword" and tok.value in ("in", "instanceof"):
                if tok.value == "in" and no_in:
                    break
                op = tok.value
            if op is None:
                break
            prec = _BINARY_PRECEDENCE[op]
            if prec < min_prec:
                break
            self.advance()
            # ** is right-associative, everything else left-associative
            right = self.parse_binary(prec if op == "**" else prec + 1, no_in)
            kind = "LogicalExpression" if op in ("&&", "||") else "BinaryExpression"
            node = self.node(kind, start, operator=op)
            node.add("left", left)
            node.add("right", right)
            left = node
        return left

    def parse_unary(self) -> AstNode:
        tok = self.tok
        start = tok.start
        if tok.type == "punct" and tok.value in ("+", "-", "~", "!"):
            self.advance()
            arg = self.parse_unary()
            node = self.node("UnaryExpression", start, operator=tok.value,
                             prefix=True)
            node.add("argument", arg)
            return node
        if tok.type == "keyword" and tok.value in ("typeof", "void", "delete"):
            self.advance()
            arg = self.parse_unary()
            node = self.node("UnaryExpression", start, operator=tok.value,
                             prefix=True)
            node.add("argument", arg)
            return node
        if tok.type == "punct" and tok.value in ("++", "--"):
            self.advance()
            arg = self.parse_unary()
            node = self.node("UpdateExpression", start, operator=tok.value,
                             prefix=True)
            node.add("argument", arg)
            return node
        if self.state.in_async and tok.type == "ident" and tok.value == "await":
            nxt = self.peek()
            if not (nxt.type == "punct" and nxt.value in
                    (")", "]", "}", ",", ";", ":", "=>")) and nxt.type != "eof":
                self.advance()
                arg = self.parse_unary()
                node = self.node("AwaitExpression", start)
                node.add("argument", arg)
                return node
        expr = self.parse_postfix()
        return expr

    def parse_postfix(self) -> AstNode:
        start = self.tok.start
        expr = self.parse_call_member()
        if (self.tok.type == "punct" and self.tok.value in ("++", "--")
                and not self.tok.nl_before):
            op = self.advance().value
            node = self.node("UpdateExpression", start, operator=op,
                             prefix=False)
            node.add("argument", expr)
            return node
        return expr

    def parse_call_member(self) -> AstNode:
        start = self.tok.start
        if self.at_keyword("new"):
            expr = self.parse_new()
        else:
            expr = self.parse_primary()
        return self.parse_call_member_tail(expr, start, allow_call=True)

    def parse_new(self) -> AstNode:
        start = self.expect_keyword("new").start
        if self.at_keyword("new"):
            callee = self.parse_new()
        else:
            callee = self.parse_primary()
            callee = self.parse_call_member_tail(callee, callee.span.start,
                                                 allow_call=False)
        arguments = []
        if self.at_punct("("):
            arguments = self.parse_arguments()
        node = self.node("NewExpression", start)
        node.add("callee", callee)
        node.add_all("arguments", arguments)
        return node

    def parse_call_member_tail(self, expr: AstNode, start: int,
                               allow_call: bool) -> AstNode:
        while True:
            if self.at_punct("."):
                self.advance()
                prop_tok = self.tok
                if prop_tok.type not in ("ident", "keyword"):
                    raise self.error("expected property name")
                self.advance()
                prop = self.node("Identifier", prop_tok.start,
                                 name=prop_tok.value)
                node = self.node("MemberExpression", start, computed=False)
                node.add("object", expr)
                node.add("property", prop)
                expr = node
            elif self.at_punct("["):
                self.advance()
                prop = self.parse_expression()
                self.expect_punct("]")
                node = self.node("MemberExpression", start, computed=True)
                node.add("object", expr)
                node.add("property", prop)
                expr = node
            elif allow_call and self.at_punct("("):
                arguments = self.parse_arguments()
                node = self.node("CallExpression", start)
                node.add("callee", expr)
                node.add_all("arguments", arguments)
                expr = node
            elif self.tok.type == "template":
                tok = self.advance()
                quasi = self.node("TemplateLiteral", tok.start, raw=tok.value)
                node = self.node("TaggedTemplateExpression", start)
                node.add("tag", expr)
                node.add("quasi", quasi)
                expr = node
            else:
                return expr

    def parse_arguments(self) -> list[AstNode]:
        self.expect_punct("(")
        args = []
        while not self.at_punct(")"):
            if self.at_punct("..."):
                sstart = self.advance().start
                spread = self.node("SpreadElement", sstart)
                spread.add("argument", self.parse_assignment())
                spread.span = Span(sstart, self._prev_end())
                args.append(spread)
            else:
                args.append(self.parse_assignment())
            if not self.at_punct(")"):
                self.expect_punct(",")
        self.expect_punct(")")
        return args

    def parse_identifier(self, binding=False) -> AstNode:
        tok = self.tok
        if tok.type != "ident":
            raise self.error("expected identifier")
        self.advance()
        return self.node("Identifier", tok.start, name=tok.value)

    def parse_primary(self) -> AstNode:
        tok = self.tok
        start = tok.start
        if tok.type == "num":
            self.advance()
            return self.node("Literal", start, value=tok.cooked,
                             raw=tok.value, literal_type="number")
        if tok.type == "str":
            self.advance()
            return self.node("Literal", start, value=tok.cooked,
                             raw=tok.value, literal_type="string")
        if tok.type == "regex":
            self.advance()
            return self.node("Literal", start, value=tok.value,
                             raw=tok.value, literal_type="regex")
        if tok.type == "template":
            self.advance()
            return self.node("TemplateLiteral", start, raw=tok.value)
        if tok.type == "keyword":
            if tok.value == "this":
                self.advance()
                return self.node("ThisExpression", start)
            if tok.value == "super":
                self.advance()
                return self.node("Super", start)
            if tok.value == "function":
                return self.parse_function(declaration=False)
            if tok.value == "class":
                return self.parse_class(declaration=False)
            raise self.error(f"unexpected keyword {tok.value!r}")
        if tok.type == "ident":
            if tok.value in ("true", "false"):
                self.advance()
                return self.node("Literal", start, value=tok.value == "true",
                                 raw=tok.value, literal_type="boolean")
            if tok.value == "null":
                self.advance()
                return self.node("Literal", start, value=None, raw=tok.value,
                                 literal_type="null")
            if (tok.value == "async" and self.peek().is_keyword("function")
                    and not self.peek().nl_before):
                return self.parse_function(declaration=False)
            return self.parse_identifier()
        if tok.type == "punct":
            if tok.value == "(":
                self.advance()
                expr = self.parse_expression()
                self.expect_punct(")")
                return expr
            if tok.value == "[":
                return self.parse_array_literal()
            if tok.value == "{":
                return self.parse_object_literal()
        raise self.error("unexpected token")

    def parse_array_literal(self) -> AstNode:
        start = self.expect_punct("[").start
        elements = []
        while not self.at_punct("]"):
            if self.at_punct(","):
                hole_at = self.advance().start
                elements.append(AstNode("Hole", Span(hole_at, hole_at)))
                continue
            if self.at_punct("..."):
                sstart = self.advance().start
                spread = self.node("SpreadElement", sstart)
                spread.add("argument", self.parse_assignment())
                spread.span = Span(sstart, self._prev_end())
                elements.append(spread)
            else:
                elements.append(self.parse_assignment())
            if not self.at_punct("]"):
                self.expect_punct(",")
        self.expect_punct("]")
        node = self.node("ArrayExpression", start)
        node.add_all("elements", elements)
        return node

    def parse_object_literal(self) -> AstNode:
        start = self.expect_punct("{").start
        props = []
        while not self.at_punct("}"):
            props.append(self.parse_object_property())
            if not self.at_punct("}"):
                self.expect_punct(",")
        self.expect_punct("}")
        node = self.node("ObjectExpression", start)
        node.add_all("properties", props)
        return node

    def parse_object_property(self) -> AstNode:
        start = self.tok.start
        if self.at_punct("..."):
            self.advance()
            spread = self.node("SpreadElement", start)
            spread.add("argument", self.parse_assignment())
            spread.span = Span(start, self._prev_end())
            return spread
        is_async = False
        is_generator = False
        kind = "init"
        if (self.at_ident("async") and not self.peek().is_punct("(")
                and not self.peek().is_punct(":") and not self.peek().is_punct(",")
                and not self.peek().is_punct("}") and not self.peek().nl_before):
            is_async = True
            self.advance()
        if self.at_punct("*"):
            is_generator = True
            self.advance()
        if ((self.at_ident("get") or self.at_ident("set"))
                and not self.peek().is_punct("(") and not self.peek().is_punct(":")
                and not self.peek().is_punct(",") and not self.peek().is_punct("}")):
            kind = self.tok.value
            self.advance()
        computed = False
        if self.at_punct("["):
            self.advance()
            key = self.parse_assignment()
            self.expect_punct("]")
            computed = True
        else:
            key = self.parse_property_key()
        if self.at_punct("(") or kind in ("get", "set"):
            fstart = self.tok.start
            params = self.parse_params()
            body = self.parse_function_body(is_async, is_generator)
            fn = self.node("FunctionExpression", fstart, is_async=is_async,
                           is_generator=is_generator, name=None, is_method=True)
            fn.add_all("params", params)
            fn.add("body", body)
            prop = self.node("Property", start, computed=computed,
                             shorthand=False, kind=kind,
                             method=kind == "init")
            prop.add("key", key)
            prop.add("value", fn)
            return prop
        if self.at_punct(":"):
            self.advance()
            value = self.parse_assignment()
            prop = self.node("Property", start, computed=computed,
                             shorthand=False, kind="init", method=False)
            prop.add("key", key)
            prop.add("value", value)
            return prop
        if key.kind != "Identifier":
            raise self.error("expected ':' after property key")
        value: AstNode = key
        shorthand = True
        if self.at_punct("="):  # only valid when reinterpreted as a pattern
            self.advance()
            default = self.parse_assignment()
            pat = self.node("AssignmentPattern", start)
            pat.add("left", key)
            pat.add("right", default)
            value = pat
        prop = self.node("Property", start, computed=False,
                         shorthand=shorthand, kind="init", method=False)
        prop.add("key", key)
        prop.add("value", value)
        return prop

    # -- expression-to-pattern reinterpretation --------------------------------

    def to_pattern(self, expr: AstNode) -> AstNode:
        if expr.kind in ("Identifier", "MemberExpression", "ObjectPattern",
                         "ArrayPattern", "AssignmentPattern", "Hole"):
            return expr
        if expr.kind == "ArrayExpression":
            expr.kind = "ArrayPattern"
            for child in expr.children:
                self._repattern_child(expr, child)
            return expr
        if expr.kind == "ObjectExpression":
            expr.kind = "ObjectPattern"
            for prop in expr.children:
                if prop.kind == "SpreadElement":
                    prop.kind = "RestElement"
                    continue
                value = prop.child("value")
                if value is not None:
                    self._repattern_child(prop, value)
            return expr
        if expr.kind == "SpreadElement":
            expr.kind = "RestElement"
            return expr
        if expr.kind == "AssignmentExpression" and expr.attrs.get("operator") == "=":
            expr.kind = "AssignmentPattern"
            expr.attrs.pop("operator", None)
            left = expr.child("left")
            if left is not None:
                self._repattern_child(expr, left)
            return expr
        raise ParseError("invalid assignment target", expr.span.start)

    def _repattern_child(self, parent: AstNode, child: AstNode) -> None:
        converted = self.to_pattern(child)
        if converted is not child:
            idx = parent.children.index(child)
            parent.children[idx] = converted


def parse_text(text: str) -> AstNode:
    """Parse plain text without the intake size check."""
    return Parser(text).parse_program()


def parse(script: SourceScript) -> AstNode:
    """Parse a script into a position-annotated tree.

    Raises OversizeError beyond the ingest byte limit and ParseError for
    anything outside the supported grammar.
    """
    if script.byte_len > MAX_SCRIPT_BYTES:
        raise OversizeError(
            f"script is {script.byte_len} bytes; limit is {MAX_SCRIPT_BYTES}")
    return parse_text(script.text)
