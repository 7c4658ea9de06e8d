"""Script intake: normalized source text with identity hash and spans."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import OversizeError, RangeError

MAX_SCRIPT_BYTES = 100 * 1024


@dataclass(frozen=True, order=True)
class Span:
    """Half-open range of code-point offsets into a script's text."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise RangeError(f"invalid span [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start

    @property
    def length(self):
        return self.end - self.start

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


def normalize_text(text: str) -> str:
    """Apply ingest normalization: LF line endings, no BOM."""
    if text.startswith("﻿"):
        text = text[1:]
    return text.replace("\r\n", "\n").replace("\r", "\n")


def content_id(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class SourceScript:
    """A normalized script plus provenance metadata.

    `id` is always the SHA-256 of the UTF-8 encoding of `text`; construct
    through `from_text` so the invariant cannot drift.
    """

    id: str
    text: str
    byte_len: int
    origin: str | None = None
    meta: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str, origin: str | None = None,
                  meta: dict[str, str] | None = None,
                  enforce_limit: bool = False) -> "SourceScript":
        text = normalize_text(text)
        raw = text.encode("utf-8")
        if enforce_limit and len(raw) > MAX_SCRIPT_BYTES:
            raise OversizeError(
                f"script is {len(raw)} bytes; limit is {MAX_SCRIPT_BYTES}")
        return cls(id=content_id(text), text=text, byte_len=len(raw),
                   origin=origin, meta=dict(meta or {}))

    def check_span(self, span: Span) -> None:
        if span.end > len(self.text):
            raise RangeError(
                f"span [{span.start}, {span.end}) exceeds script length "
                f"{len(self.text)}")

    def slice(self, span: Span) -> str:
        self.check_span(span)
        return self.text[span.start:span.end]


def slice_text(script: SourceScript, span: Span) -> str:
    """Exact substring of the original text covered by `span`."""
    return script.slice(span)
