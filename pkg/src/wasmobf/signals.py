"""AST-tuple signal analysis: extract Kind:token features, vectorize them,
and measure how conversion changes the counts of high-signal tuples."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .astnodes import AstNode
from .jsparser import parse_text


@dataclass(frozen=True, order=True)
class AstTuple:
    node_kind: str
    token: str

    @property
    def rendered(self) -> str:
        return f"{self.node_kind}:{self.token}"

    @classmethod
    def parse(cls, rendered: str) -> "AstTuple":
        kind, _, token = rendered.partition(":")
        return cls(kind, token)


# the ten highest-signal tuples used as the default evasion watchlist
DEFAULT_WATCHLIST = tuple(AstTuple.parse(s) for s in (
    "MemberExpression:screen",
    "MemberExpression:fillText",
    "CallExpression:canvas",
    "MemberExpression:language",
    "MemberExpression:localStorage",
    "MemberExpression:appName",
    "MemberExpression:platform",
    "MemberExpression:fillStyle",
    "MemberExpression:colorDepth",
    "MemberExpression:fillRect",
))


@dataclass
class SignalDelta:
    tuple: AstTuple
    count_before: int
    count_after: int

    @property
    def delta(self) -> int:
        return self.count_after - self.count_before


def _identifier_name(node: AstNode | None) -> str | None:
    if node is not None and node.kind == "Identifier":
        return node.attrs.get("name")
    return None


def _string_key(node: AstNode | None) -> str | None:
    if (node is not None and node.kind == "Literal"
            and node.attrs.get("literal_type") == "string"):
        return node.attrs.get("value")
    return None


def extract_tuple_occurrences(root: AstNode):
    """(tuple, token span) pairs over member accesses, call callees, object
    property keys, and identifier operands of binary expressions.

    Member expressions emit both the property name and, when the base is a
    bare identifier, the base name; high-signal bases like `screen` are
    features in their own right. The span is the token-bearing node, which
    is what a replacement has to cover to suppress the tuple.
    """
    occurrences: list[tuple[AstTuple, object]] = []
    for node in root.walk():
        kind = node.kind
        if kind == "MemberExpression":
            prop = node.child("property")
            if node.attrs.get("computed"):
                token = _string_key(prop)
            else:
                token = _identifier_name(prop)
            if token:
                occurrences.append((AstTuple("MemberExpression", token),
                                    prop.span))
            obj = node.child("object")
            base = _identifier_name(obj)
            if base:
                occurrences.append((AstTuple("MemberExpression", base),
                                    obj.span))
        elif kind in ("CallExpression", "NewExpression"):
            callee = node.child("callee")
            if callee is None:
                continue
            token = _identifier_name(callee)
            target = callee
            if token is None and callee.kind == "MemberExpression":
                target = callee.child("object")
                token = _identifier_name(target)
            if token:
                occurrences.append((AstTuple("CallExpression", token),
                                    target.span))
        elif kind == "Property":
            key = node.child("key")
            token = _identifier_name(key) or _string_key(key)
            if token:
                occurrences.append((AstTuple("Property", token), key.span))
        elif kind == "BinaryExpression":
            for role in ("left", "right"):
                operand = node.child(role)
                token = _identifier_name(operand)
                if token:
                    occurrences.append((AstTuple("BinaryExpression", token),
                                        operand.span))
    return occurrences


def extract_tuples(root: AstNode) -> Counter:
    counts: Counter = Counter()
    for tup, _ in extract_tuple_occurrences(root):
        counts[tup] += 1
    return counts


def extract_tuples_from_text(text: str) -> Counter:
    return extract_tuples(parse_text(text))


@dataclass
class VectorSummary:
    vocab: list[str]                 # rendered tuples, frequency-ranked
    matrix: list[list[int]]          # one count row per document


def vectorize(tuple_multisets: list[Counter],
              vocab_cap: int = 5000) -> VectorSummary:
    """Bag-of-words count matrix over a frequency-ranked vocabulary."""
    if vocab_cap <= 0:
        raise ValueError("vocab_cap must be positive")
    if not tuple_multisets:
        raise ValueError("need at least one document")
    totals: Counter = Counter()
    for counts in tuple_multisets:
        totals.update(counts)
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0].rendered))
    vocab = [tup for tup, _ in ranked[:vocab_cap]]
    matrix = [[counts.get(tup, 0) for tup in vocab]
              for counts in tuple_multisets]
    return VectorSummary(vocab=[t.rendered for t in vocab], matrix=matrix)


def evasion_report(original_text: str, converted_text: str,
                   watchlist=DEFAULT_WATCHLIST) -> list[SignalDelta]:
    """Per-watchlist-tuple counts before and after conversion."""
    before = extract_tuples_from_text(original_text)
    after = extract_tuples_from_text(converted_text)
    return [SignalDelta(tuple=tup, count_before=before.get(tup, 0),
                        count_after=after.get(tup, 0))
            for tup in watchlist]


def report_table(deltas: list[SignalDelta]) -> str:
    """Aligned text table of signal deltas."""
    header = ("ast_tuple", "count_before", "count_after", "delta")
    rows = [(d.tuple.rendered, str(d.count_before), str(d.count_after),
             str(d.delta)) for d in deltas]
    widths = [max(len(row[i]) for row in [header] + rows)
              for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row))
             for row in [header] + rows]
    return "\n".join(lines) + "\n"


def report_json(deltas: list[SignalDelta]) -> list[dict]:
    return [{"tuple": d.tuple.rendered, "count_before": d.count_before,
             "count_after": d.count_after, "delta": d.delta}
            for d in deltas]


def load_watchlist(path) -> list[AstTuple]:
    """One Kind:token per line; # comments."""
    from pathlib import Path
    tuples = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tuples.append(AstTuple.parse(line))
    return tuples
