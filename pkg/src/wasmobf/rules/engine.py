"""Rule application: run enabled rules over a parsed script and collect
artifacts in deterministic order."""

from __future__ import annotations

import re

from .. import ir
from ..astnodes import AstNode
from ..errors import TranslatorUnavailable
from ..scripts import SourceScript
from .base import MatchContext, RuleConfig
from . import fingerprint, general

_EXPORT_REF_RE = re.compile(r"instance\.exports\.([A-Za-z_$][A-Za-z0-9_$]*)")

ALL_RULES = frozenset(ir.RULE_IDS)


def parse_rule_set(spec: str) -> set[str]:
    """Parse a --rules value: 'all' or a comma-separated identifier list."""
    if spec.strip() == "all":
        return set(ALL_RULES)
    rules = {part.strip() for part in spec.split(",") if part.strip()}
    unknown = rules - ALL_RULES
    if unknown:
        raise ValueError(f"unknown rule names: {', '.join(sorted(unknown))}")
    return rules


def apply_all(root: AstNode, script: SourceScript, enabled: set[str],
              translator=None,
              config: RuleConfig | None = None) -> list[ir.TransformArtifact]:
    """All matches from enabled rules, sorted by (start, rule order)."""
    if not root.children:
        return []
    config = config or RuleConfig()
    ctx = MatchContext.build(root, script, config)
    artifacts: list[ir.TransformArtifact] = []

    def want(*rules: str) -> bool:
        return any(rule in enabled for rule in rules)

    if want("replace_literals_recursive"):
        artifacts += general.replace_literals(ctx)
    if want("replace_callee"):
        artifacts += general.obfuscate_sensitive_calls(ctx)
    if want("replace_int_arrays", "replace_float_arrays"):
        artifacts += general.replace_numeric_arrays(ctx, enabled)
    if want("replace_if_else"):
        artifacts += general.replace_if_else(ctx)
    if want("replace_for_loops"):
        artifacts += general.replace_for_loops(ctx)
    if want("replace_while_loops"):
        artifacts += general.replace_while_loops(ctx)
    if want("replace_function_calls_with_no_return"):
        artifacts += general.replace_calls_no_return(ctx)
    if want("replace_class_defs"):
        artifacts += general.replace_class_defs(ctx)
    if want("replace_func_defs"):
        taken = {exp.symbol for art in artifacts for exp in art.exports}
        try:
            artifacts += general.replace_func_defs(ctx, translator, taken)
        except TranslatorUnavailable:
            raise  # strict-mode transport failures surface to the caller
        except Exception:
            pass  # other translator trouble degrades to "no match"
    if want("obfuscate_functions"):
        artifacts += fingerprint.obfuscate_fp_members(ctx)
    if want("replace_canvas_api_calls"):
        artifacts += fingerprint.obfuscate_dynamic_codegen(ctx)
    if want("replace_with_regex"):
        artifacts += fingerprint.regex_split_canvas_strings(ctx)
    if want("replace_obf_screen"):
        artifacts += fingerprint.obfuscate_hex_screen(ctx)

    artifacts.sort(key=lambda a: (a.span.start, ir.rule_order(a.rule)))
    _check_artifacts(artifacts, script)
    return artifacts


def _check_artifacts(artifacts: list[ir.TransformArtifact],
                     script: SourceScript) -> None:
    """Mechanical well-formedness: in-bounds spans, unique symbols, and all
    glue export references backed by this artifact's exports."""
    length = len(script.text)
    symbols: set[str] = set()
    fields: set[str] = set()
    for artifact in artifacts:
        assert 0 <= artifact.span.start <= artifact.span.end <= length, \
            f"artifact span out of range: {artifact.span}"
        for export in artifact.exports:
            assert export.symbol not in symbols, \
                f"duplicate export symbol {export.symbol!r}"
            symbols.add(export.symbol)
        for decl in artifact.imports:
            assert decl.field not in fields, \
                f"duplicate import field {decl.field!r}"
            fields.add(decl.field)
        own = {export.symbol for export in artifact.exports}
        for ref in _EXPORT_REF_RE.findall(artifact.glue):
            assert ref == "memory" or ref in own, \
                f"glue references foreign symbol {ref!r}"
