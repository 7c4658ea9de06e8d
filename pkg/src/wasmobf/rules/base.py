"""Shared matching helpers and configuration for the conversion rules."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from ..astnodes import AstNode, iter_with_parents
from ..scripts import SourceScript, Span

# APIs whose property names get split-and-reconstructed (member-expression
# rule) and that anchor the hex-encoded-access rule.
DEFAULT_FP_API_NAMES = (
    "toDataURL", "getContext", "fillText", "fillRect", "fillStyle",
    "measureText", "hardwareConcurrency", "availHeight", "availWidth",
    "colorDepth", "platform", "language", "appName", "userAgent",
    "getTimezoneOffset", "plugins", "createAnalyser", "createOscillator",
    "enumerateDevices",
)

# callees whose invocations get reconstructed through the global object
DEFAULT_SENSITIVE_CALLEES = (
    "eval", "Function", "atob", "btoa", "unescape", "escape",
)

_DISRUPTIVE_RE = re.compile(r"\b(return|throw|break|continue)\b")
_DISRUPTIVE_KINDS = {
    "ReturnStatement", "ThrowStatement", "BreakStatement", "ContinueStatement",
}

_SCOPE_KINDS = {"Program", "BlockStatement", "ForStatement", "ForInStatement",
                "ForOfStatement", "CatchClause"}
_FUNCTION_KINDS = {"FunctionDeclaration", "FunctionExpression",
                   "ArrowFunctionExpression"}


def load_name_list(path: str | Path) -> list[str]:
    """One name per line; # starts a comment."""
    names = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            names.append(line)
    return names


@dataclass
class RuleConfig:
    fp_api_names: frozenset[str] = frozenset(DEFAULT_FP_API_NAMES)
    sensitive_callees: frozenset[str] = frozenset(DEFAULT_SENSITIVE_CALLEES)
    dom_enabled: bool = True
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_files(cls, fp_api_file: str | None = None,
                   callee_file: str | None = None,
                   dom_enabled: bool = True) -> "RuleConfig":
        fp = frozenset(load_name_list(fp_api_file)) if fp_api_file else \
            frozenset(DEFAULT_FP_API_NAMES)
        callees = frozenset(DEFAULT_SENSITIVE_CALLEES)
        if callee_file:
            callees = callees | frozenset(load_name_list(callee_file))
        return cls(fp_api_names=fp, sensitive_callees=callees,
                   dom_enabled=dom_enabled)


@dataclass
class MatchContext:
    """Per-script bookkeeping shared across the rules."""

    script: SourceScript
    root: AstNode
    config: RuleConfig
    parents: dict[int, list[AstNode]] = field(default_factory=dict)
    for_header_spans: list[Span] = field(default_factory=list)
    scope_decls: dict[int, set[str]] = field(default_factory=dict)

    @classmethod
    def build(cls, root: AstNode, script: SourceScript,
              config: RuleConfig) -> "MatchContext":
        ctx = cls(script=script, root=root, config=config)
        for node, parents in iter_with_parents(root):
            ctx.parents[id(node)] = parents
            if node.kind == "ForStatement":
                for role in ("init", "test", "update"):
                    part = node.child(role)
                    if part is not None:
                        ctx.for_header_spans.append(part.span)
        ctx._collect_scope_decls()
        return ctx

    def parent_of(self, node: AstNode) -> AstNode | None:
        chain = self.parents.get(id(node), [])
        return chain[-1] if chain else None

    def ancestors(self, node: AstNode) -> list[AstNode]:
        return self.parents.get(id(node), [])

    def slice(self, span: Span) -> str:
        return self.script.slice(span)

    def in_for_header(self, span: Span) -> bool:
        return any(header.contains(span) for header in self.for_header_spans)

    # -- lexical declarations (coarse; used only to skip shadowed bases) ----

    def _collect_scope_decls(self) -> None:
        def nearest_scope(parents: list[AstNode]) -> AstNode:
            for candidate in reversed(parents):
                if candidate.kind in _SCOPE_KINDS or candidate.kind in _FUNCTION_KINDS:
                    return candidate
            return self.root

        for node, parents in iter_with_parents(self.root):
            names: list[str] = []
            scope: AstNode | None = None
            if node.kind == "VariableDeclarator":
                names = binding_names(node.child("id"))
                scope = nearest_scope(parents)
            elif node.kind in ("FunctionDeclaration", "ClassDeclaration"):
                if node.attrs.get("name"):
                    names = [node.attrs["name"]]
                scope = nearest_scope(parents)
            elif node.kind in _FUNCTION_KINDS:
                names = []
                for param in node.children_by_role("params"):
                    names.extend(binding_names(param))
                scope = node
            elif node.kind == "CatchClause":
                names = binding_names(node.child("param"))
                scope = node
            if names and scope is not None:
                self.scope_decls.setdefault(id(scope), set()).update(names)

    def is_shadowed(self, node: AstNode, name: str) -> bool:
        for scope in [self.root] + self.ancestors(node):
            if name in self.scope_decls.get(id(scope), ()):
                return True
        return False


def binding_names(node: AstNode | None) -> list[str]:
    if node is None:
        return []
    names: list[str] = []
    for inner in node.walk():
        if inner.kind == "Identifier":
            names.append(inner.attrs.get("name", ""))
    return [n for n in names if n]


def is_literal(node: AstNode | None, *types: str) -> bool:
    return (node is not None and node.kind == "Literal"
            and node.attrs.get("literal_type") in types)


def int_literal_value(node: AstNode | None) -> int | None:
    if is_literal(node, "number"):
        value = node.attrs["value"]
        if isinstance(value, int):
            return value
    return None


def numeric_element_value(node: AstNode) -> int | float | None:
    """Literal value of an array element, allowing a unary sign."""
    if is_literal(node, "number"):
        return node.attrs["value"]
    if (node.kind == "UnaryExpression" and node.attrs.get("operator") in ("+", "-")):
        inner = node.child("argument")
        if is_literal(inner, "number"):
            value = inner.attrs["value"]
            return -value if node.attrs["operator"] == "-" else value
    return None


def contains_disruptive_flow(ctx: MatchContext, node: AstNode) -> bool:
    """Conservative scan: AST statement kinds plus raw keyword tokens."""
    if _DISRUPTIVE_RE.search(ctx.slice(node.span)):
        return True
    return any(inner.kind in _DISRUPTIVE_KINDS for inner in node.walk())


_LOOP_KINDS = {"ForStatement", "ForInStatement", "ForOfStatement",
               "WhileStatement", "DoWhileStatement"}


def body_escapes_loop(body: AstNode) -> bool:
    """True when lifting `body` into a callback would change control flow:
    break/continue targeting this loop, any label, return, or function-scoped
    var hoisting out of the body."""

    def scan(node: AstNode, in_nested_loop: bool, in_switch: bool) -> bool:
        if node.kind in ("LabeledStatement",):
            return True
        if node.kind == "ReturnStatement":
            return True
        if node.kind == "VariableDeclaration" and node.attrs.get("keyword") == "var":
            return True
        if node.kind == "BreakStatement":
            if node.child("label") is not None:
                return True
            if not in_nested_loop and not in_switch:
                return True
        if node.kind == "ContinueStatement":
            if node.child("label") is not None or not in_nested_loop:
                return True
        if node.kind in _FUNCTION_KINDS:
            return False  # inner functions own their control flow
        nested_loop = in_nested_loop or node.kind in _LOOP_KINDS
        nested_switch = in_switch or node.kind == "SwitchStatement"
        return any(scan(child, nested_loop, nested_switch)
                   for child in node.children)

    return any(scan(child, False, False) for child in body.children) or \
        body.kind in ("ReturnStatement", "BreakStatement", "ContinueStatement",
                      "LabeledStatement")


def references_identifier(node: AstNode, name: str) -> bool:
    return any(inner.kind == "Identifier" and inner.attrs.get("name") == name
               for inner in node.walk())


def _subtree_binding_names(node: AstNode) -> set[str]:
    names: set[str] = set()
    for inner in node.walk():
        if inner.kind == "VariableDeclarator":
            names.update(binding_names(inner.child("id")))
        elif inner.kind in ("FunctionDeclaration", "ClassDeclaration",
                            "FunctionExpression", "ClassExpression"):
            if inner.attrs.get("name"):
                names.add(inner.attrs["name"])
        if inner.kind in _FUNCTION_KINDS:
            for param in inner.children_by_role("params"):
                names.update(binding_names(param))
        elif inner.kind == "CatchClause":
            names.update(binding_names(inner.child("param")))
    return names


def _subtree_referenced_names(node: AstNode) -> set[str]:
    """Identifier reads/writes, excluding property names and labels."""
    names: set[str] = set()
    for inner, parents in iter_with_parents(node):
        if inner.kind != "Identifier":
            continue
        parent = parents[-1] if parents else None
        if parent is not None:
            if (parent.kind == "MemberExpression" and inner.role == "property"
                    and not parent.attrs.get("computed")):
                continue
            if (parent.kind in ("Property", "MethodDefinition")
                    and inner.role == "key"
                    and not parent.attrs.get("computed")):
                continue
            if inner.role == "label":
                continue
        names.add(inner.attrs.get("name", ""))
    return {n for n in names if n}


def _contains_function_context_refs(node: AstNode) -> bool:
    """`this`/`arguments` outside any function nested in the fragment."""
    def scan(inner: AstNode) -> bool:
        if inner.kind in _FUNCTION_KINDS and inner.kind != "ArrowFunctionExpression":
            return False  # ordinary functions rebind this/arguments
        if inner.kind == "ThisExpression":
            return True
        if inner.kind == "Identifier" and inner.attrs.get("name") == "arguments":
            return True
        return any(scan(child) for child in inner.children)

    return scan(node)


def lift_scope_ok(ctx: MatchContext, site: AstNode,
                  fragments: list[AstNode]) -> bool:
    """Whether `fragments` can move into the aggregated import object.

    Import-object callbacks close over the wrapper's function scope; only
    top-level and global bindings remain visible there. Fragments that
    reference bindings from an enclosing non-top-level scope (or `this`/
    `arguments` inside a function) would break at call time, so their
    match is skipped.
    """
    ancestors = ctx.ancestors(site)
    in_function = any(a.kind in _FUNCTION_KINDS for a in ancestors)
    internal: set[str] = set()
    referenced: set[str] = set()
    for fragment in fragments:
        internal |= _subtree_binding_names(fragment)
        referenced |= _subtree_referenced_names(fragment)
        if in_function and _contains_function_context_refs(fragment):
            return False
    scopes = [ctx.root] + ancestors
    for name in referenced - internal:
        for scope in reversed(scopes):  # innermost declaring scope wins
            if name in ctx.scope_decls.get(id(scope), ()):
                if scope is not ctx.root:
                    return False
                break
    return True


def global_scope_ok(ctx: MatchContext, site: AstNode,
                    fragments: list[AstNode]) -> bool:
    """Stricter variant for text re-entering via indirect eval or injected
    script elements, which resolve in the true global scope: any binding
    declared in the script (top level included) becomes unreachable after
    wrapping."""
    internal: set[str] = set()
    referenced: set[str] = set()
    for fragment in fragments:
        internal |= _subtree_binding_names(fragment)
        referenced |= _subtree_referenced_names(fragment)
    scopes = [ctx.root] + ctx.ancestors(site)
    for name in referenced - internal:
        if any(name in ctx.scope_decls.get(id(scope), ())
               for scope in scopes):
            return False
    return True


def export_ref(symbol: str) -> str:
    return f"instance.exports.{symbol}"


def get_string_ref(symbol: str) -> str:
    return f"getString(instance.exports.{symbol}.value)"
