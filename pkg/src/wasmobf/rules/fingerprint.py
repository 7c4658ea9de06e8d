"""Fingerprinting-targeted rules: API-name splitting, indirect eval of
dynamic accesses, quoted-"canvas" rewriting, and hex-encoded screen access."""

from __future__ import annotations

import re

from .. import ir
from ..astnodes import AstNode
from ..scripts import Span
from .base import MatchContext, get_string_ref, global_scope_ok, is_literal

_HEX_ESCAPE_RE = re.compile(r"\\x[0-9a-fA-F]{2}")
_QUOTED_CANVAS_RE = re.compile(r"(['\"])canvas\1")


def _split_halves(name: str) -> tuple[str, str]:
    half = len(name) // 2
    return name[:half], name[half:]


def _is_write_target(ctx: MatchContext, node: AstNode) -> bool:
    parent = ctx.parent_of(node)
    if parent is None:
        return False
    if parent.kind == "AssignmentExpression" and node.role == "left":
        return True
    if parent.kind == "UpdateExpression":
        return True
    if (parent.kind == "UnaryExpression"
            and parent.attrs.get("operator") == "delete"):
        return True
    return False


# -- Rule 10: fingerprinting-relevant member expressions -------------------------

def obfuscate_fp_members(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    text = ctx.script.text
    for node in ctx.root.find_all("MemberExpression"):
        prop = node.child("property")
        obj = node.child("object")
        if prop is None or obj is None:
            continue
        if node.attrs.get("computed"):
            if not is_literal(prop, "string"):
                continue  # non-literal keys belong to the hex-access rule
            prop_name = prop.attrs["value"]
            if prop_name not in ctx.config.fp_api_names:
                continue
            span = prop.span  # replace just the quoted key
        else:
            if prop.kind != "Identifier":
                continue
            prop_name = prop.attrs["name"]
            if prop_name not in ctx.config.fp_api_names:
                continue
            dot = text.find(".", obj.span.end, prop.span.start + 1)
            if dot < 0:
                continue
            span = Span(dot, prop.span.end)  # replacement includes the dot
        pos = span.start
        first, second = _split_halves(prop_name)
        sym1, sym2 = f"f_h_{pos}", f"s_h_{pos}"
        reconstruct = f"{get_string_ref(sym1)} + {get_string_ref(sym2)}"
        glue = f"[{reconstruct}]" if not node.attrs.get("computed") else reconstruct
        artifacts.append(ir.TransformArtifact(
            rule="obfuscate_functions", span=span,
            exports=[ir.ExportIR("const_string", sym1, first, decl="const"),
                     ir.ExportIR("const_string", sym2, second, decl="const")],
            glue=glue))
    return artifacts


# -- Rule 11: dynamic code generation sites ----------------------------------------

def obfuscate_dynamic_codegen(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    for node in ctx.root.walk():
        matched = False
        if node.kind == "CallExpression":
            callee = node.child("callee")
            matched = (callee is not None and callee.kind == "Identifier"
                       and callee.attrs.get("name") == "canvas")
        elif node.kind == "MemberExpression":
            obj = node.child("object")
            matched = (obj is not None and obj.kind == "Identifier"
                       and obj.attrs.get("name") == "screen"
                       and not ctx.is_shadowed(node, "screen"))
        if not matched:
            continue
        if _is_write_target(ctx, node):
            continue
        parent = ctx.parent_of(node)
        if (parent is not None and parent.kind == "CallExpression"
                and node.role == "callee"):
            continue  # indirect eval would strip the receiver binding
        if not global_scope_ok(ctx, node, [node]):
            continue  # indirect eval resolves in the global scope only
        pos = node.span.start
        code_text = ctx.slice(node.span)
        e_sym, c_sym = f"e_call_{pos}", f"c_str_{pos}"
        glue = (f"window[{get_string_ref(e_sym)}]"
                f"({get_string_ref(c_sym)})")
        artifacts.append(ir.TransformArtifact(
            rule="replace_canvas_api_calls", span=node.span,
            exports=[ir.ExportIR("const_string", e_sym, "eval", decl="const"),
                     ir.ExportIR("const_string", c_sym, code_text, decl="const")],
            glue=glue))
    return artifacts


# -- Rule 12: quoted "canvas" strings (raw text scan) --------------------------------

def regex_split_canvas_strings(ctx: MatchContext) -> list[ir.TransformArtifact]:
    artifacts = []
    text = ctx.script.text
    for match in _QUOTED_CANVAS_RE.finditer(text):
        tail = text[match.end():]
        stripped = tail.lstrip(" \t")
        if stripped.startswith(":"):
            continue  # key of a key-value pair
        pos = match.start()
        sym1, sym2 = f"cv1_{pos}", f"cv2_{pos}"
        glue = f"{get_string_ref(sym1)} + {get_string_ref(sym2)}"
        artifacts.append(ir.TransformArtifact(
            rule="replace_with_regex", span=Span(match.start(), match.end()),
            exports=[ir.ExportIR("const_string", sym1, "can", decl="const"),
                     ir.ExportIR("const_string", sym2, "vas", decl="const")],
            glue=glue))
    return artifacts


# -- Rule 13: hex-obfuscated screen/canvas accesses -----------------------------------

def _hex_decoded_names(ctx: MatchContext) -> set[str]:
    names = set()
    for node in ctx.root.find_all("Literal"):
        if node.attrs.get("literal_type") != "string":
            continue
        raw = node.attrs.get("raw", "")
        if _HEX_ESCAPE_RE.search(raw):
            names.add(node.attrs["value"])
    return names


def obfuscate_hex_screen(ctx: MatchContext) -> list[ir.TransformArtifact]:
    decoded = _hex_decoded_names(ctx)
    evidence = bool(decoded & set(ctx.config.fp_api_names))
    artifacts = []
    for node in ctx.root.find_all("MemberExpression"):
        if not node.attrs.get("computed"):
            continue
        obj = node.child("object")
        prop = node.child("property")
        if obj is None or obj.kind != "Identifier":
            continue
        base = obj.attrs.get("name")
        if base not in ("screen", "canvas"):
            continue
        if ctx.is_shadowed(node, base):
            continue
        if is_literal(prop, "string"):
            raw = prop.attrs.get("raw", "")
            if not (_HEX_ESCAPE_RE.search(raw)
                    and prop.attrs["value"] in ctx.config.fp_api_names):
                continue
        elif not evidence:
            continue
        pos = obj.span.start
        first, second = _split_halves(base)
        sym1, sym2 = f"sc1_{pos}", f"sc2_{pos}"
        glue = f"window[{get_string_ref(sym1)}+{get_string_ref(sym2)}]"
        artifacts.append(ir.TransformArtifact(
            rule="replace_obf_screen", span=obj.span,
            exports=[ir.ExportIR("const_string", sym1, first, decl="const"),
                     ir.ExportIR("const_string", sym2, second, decl="const")],
            glue=glue))
    return artifacts
