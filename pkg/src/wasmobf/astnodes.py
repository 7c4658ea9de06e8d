"""Position-annotated syntax tree nodes (ESTree-compatible kind tags)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .scripts import Span


@dataclass
class AstNode:
    kind: str
    span: Span
    children: list["AstNode"] = field(default_factory=list)
    attrs: dict = field(default_factory=dict)
    role: str = ""

    def add(self, role: str, node: "AstNode | None") -> None:
        if node is not None:
            node.role = role
            self.children.append(node)

    def add_all(self, role: str, nodes) -> None:
        for node in nodes:
            self.add(role, node)

    def child(self, role: str) -> "AstNode | None":
        for node in self.children:
            if node.role == role:
                return node
        return None

    def children_by_role(self, role: str) -> list["AstNode"]:
        return [node for node in self.children if node.role == role]

    def walk(self) -> Iterator["AstNode"]:
        """Document-order traversal, this node first."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def find_all(self, kind: str) -> Iterator["AstNode"]:
        for node in self.walk():
            if node.kind == kind:
                yield node

    def structurally_equal(self, other: "AstNode") -> bool:
        if (self.kind != other.kind or self.span != other.span
                or self.role != other.role or self.attrs != other.attrs
                or len(self.children) != len(other.children)):
            return False
        return all(a.structurally_equal(b)
                   for a, b in zip(self.children, other.children))

    def __repr__(self):
        return f"AstNode({self.kind}, [{self.span.start},{self.span.end}))"


def iter_with_parents(root: AstNode) -> Iterator[tuple[AstNode, list[AstNode]]]:
    """Yield (node, ancestor chain) pairs; ancestors ordered root-first."""
    stack: list[tuple[AstNode, list[AstNode]]] = [(root, [])]
    while stack:
        node, parents = stack.pop()
        yield node, parents
        chain = parents + [node]
        stack.extend((child, chain) for child in reversed(node.children))
