"""ECMAScript tokenizer producing code-point spans.

Single forward pass. The / ambiguity (division vs regex literal) is
resolved with the usual previous-token heuristic plus bracket context
tracking, which is exact for everything except a few pathological
constructs that the parser will reject anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError

KEYWORDS = {
    "break", "case", "catch", "class", "const", "continue", "debugger",
    "default", "delete", "do", "else", "enum", "export", "extends",
    "finally", "for", "function", "if", "import", "in", "instanceof",
    "new", "return", "super", "switch", "this", "throw", "try", "typeof",
    "var", "void", "while", "with", "yield",
}

# longest-first so maximal munch works with simple startswith checks
PUNCTUATORS = [
    ">>>=",
    "===", "!==", "**=", "<<=", ">>=", ">>>", "...",
    "=>", "**", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "{", "}", "(", ")", "[", "]", ";", ",", "<", ">", "+", "-", "*", "/",
    "%", "&", "|", "^", "!", "~", "?", ":", "=", ".",
]

LINE_TERMINATORS = "\n  "
_WS = " \t\v\f ﻿"

# previous tokens after which / starts a regex literal
_REGEX_AFTER_PUNCT_BLOCKLIST = {")", "]", "}"}
_REGEX_AFTER_KEYWORD_BLOCKLIST = {"this", "super"}


@dataclass
class Token:
    type: str          # ident keyword num str template regex punct eof
    value: str         # raw source text ("" for eof)
    start: int
    end: int
    nl_before: bool
    cooked: object = None

    def is_punct(self, value: str) -> bool:
        return self.type == "punct" and self.value == value

    def is_keyword(self, value: str) -> bool:
        return self.type == "keyword" and self.value == value

    def __repr__(self):
        return f"Token({self.type}, {self.value!r}, {self.start})"


def _is_ident_start(ch: str) -> bool:
    return ch == "$" or ch == "_" or ch.isalpha()


def _is_ident_part(ch: str) -> bool:
    return ch == "$" or ch == "_" or ch.isalnum() or ch == "‌" or ch == "‍"


def _is_ws(ch: str) -> bool:
    return ch in _WS or ch.isspace() and ch not in LINE_TERMINATORS


class Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.nl = False
        self.tokens: list[Token] = []
        # bracket context: "(" entries remember whether the paren follows a
        # control keyword, "{" entries whether the brace opens a block
        self._paren_stack: list[bool] = []
        self._brace_stack: list[bool] = []

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.pos)

    # -- main loop ---------------------------------------------------------

    def tokenize(self) -> list[Token]:
        while True:
            self._skip_trivia()
            if self.pos >= len(self.text):
                self.tokens.append(Token("eof", "", self.pos, self.pos, self.nl))
                return self.tokens
            start = self.pos
            ch = self.text[self.pos]
            if _is_ident_start(ch):
                tok = self._read_ident(start)
            elif ch.isdigit() or (ch == "." and self._peek_is_digit(1)):
                tok = self._read_number(start)
            elif ch in "'\"":
                tok = self._read_string(start)
            elif ch == "`":
                tok = self._read_template(start)
            elif ch == "/" and self._regex_allowed():
                tok = self._read_regex(start)
            else:
                tok = self._read_punct(start)
            tok.nl_before = self.nl
            self.nl = False
            self._track_brackets(tok)
            self.tokens.append(tok)

    def _skip_trivia(self) -> None:
        text, n = self.text, len(self.text)
        while self.pos < n:
            ch = text[self.pos]
            if ch in LINE_TERMINATORS:
                self.nl = True
                self.pos += 1
            elif ch == "\r":
                self.nl = True
                self.pos += 1
            elif _is_ws(ch):
                self.pos += 1
            elif ch == "/" and self.pos + 1 < n and text[self.pos + 1] == "/":
                while self.pos < n and text[self.pos] not in LINE_TERMINATORS:
                    self.pos += 1
            elif ch == "/" and self.pos + 1 < n and text[self.pos + 1] == "*":
                end = text.find("*/", self.pos + 2)
                if end < 0:
                    raise self.error("unterminated block comment")
                if any(t in text[self.pos:end] for t in LINE_TERMINATORS):
                    self.nl = True
                self.pos = end + 2
            else:
                return

    def _peek_is_digit(self, offset: int) -> bool:
        i = self.pos + offset
        return i < len(self.text) and self.text[i].isdigit()

    # -- token readers -----------------------------------------------------

    def _read_ident(self, start: int) -> Token:
        text, n = self.text, len(self.text)
        while self.pos < n and _is_ident_part(text[self.pos]):
            self.pos += 1
        value = text[start:self.pos]
        if value in KEYWORDS:
            return Token("keyword", value, start, self.pos, False)
        return Token("ident", value, start, self.pos, False)

    def _read_number(self, start: int) -> Token:
        text, n = self.text, len(self.text)
        is_float = False
        if text[self.pos] == "0" and self.pos + 1 < n and text[self.pos + 1] in "xXoObB":
            digits = {"x": "0123456789abcdefABCDEF", "o": "01234567", "b": "01"}
            base = {"x": 16, "o": 8, "b": 2}
            kind = text[self.pos + 1].lower()
            self.pos += 2
            body_start = self.pos
            while self.pos < n and text[self.pos] in digits[kind]:
                self.pos += 1
            if self.pos == body_start:
                raise self.error("malformed numeric literal")
            value = int(text[body_start:self.pos], base[kind])
        else:
            while self.pos < n and text[self.pos].isdigit():
                self.pos += 1
            if self.pos < n and text[self.pos] == ".":
                is_float = True
                self.pos += 1
                while self.pos < n and text[self.pos].isdigit():
                    self.pos += 1
            if self.pos < n and text[self.pos] in "eE":
                mark = self.pos
                self.pos += 1
                if self.pos < n and text[self.pos] in "+-":
                    self.pos += 1
                if self.pos < n and text[self.pos].isdigit():
                    is_float = True
                    while self.pos < n and text[self.pos].isdigit():
                        self.pos += 1
                else:
                    self.pos = mark
            raw = text[start:self.pos]
            value = float(raw) if is_float else int(raw)
        if self.pos < n and (_is_ident_start(text[self.pos]) or text[self.pos].isdigit()):
            raise self.error("identifier starts immediately after number")
        raw = text[start:self.pos]
        return Token("num", raw, start, self.pos, False, cooked=value)

    def _read_string(self, start: int) -> Token:
        text, n = self.text, len(self.text)
        quote = text[self.pos]
        self.pos += 1
        out: list[str] = []
        while True:
            if self.pos >= n:
                raise self.error("unterminated string literal")
            ch = text[self.pos]
            if ch == quote:
                self.pos += 1
                break
            if ch in LINE_TERMINATORS:
                raise self.error("newline in string literal")
            if ch == "\\":
                self.pos += 1
                out.append(self._read_escape())
            else:
                out.append(ch)
                self.pos += 1
        raw = text[start:self.pos]
        return Token("str", raw, start, self.pos, False, cooked="".join(out))

    def _read_escape(self) -> str:
        text, n = self.text, len(self.text)
        if self.pos >= n:
            raise self.error("unterminated escape sequence")
        ch = text[self.pos]
        self.pos += 1
        simple = {"b": "\b", "f": "\f", "n": "\n", "r": "\r", "t": "\t",
                  "v": "\v", "0": "\0"}
        if ch in simple and not (ch == "0" and self.pos < n and text[self.pos].isdigit()):
            return simple[ch]
        if ch == "x":
            if self.pos + 2 > n:
                raise self.error("bad \\x escape")
            code = text[self.pos:self.pos + 2]
            self.pos += 2
            try:
                return chr(int(code, 16))
            except ValueError:
                raise self.error("bad \\x escape") from None
        if ch == "u":
            if self.pos < n and text[self.pos] == "{":
                end = text.find("}", self.pos)
                if end < 0:
                    raise self.error("bad \\u{} escape")
                code = text[self.pos + 1:end]
                self.pos = end + 1
                return chr(int(code, 16))
            code = text[self.pos:self.pos + 4]
            self.pos += 4
            try:
                return chr(int(code, 16))
            except ValueError:
                raise self.error("bad \\u escape") from None
        if ch in LINE_TERMINATORS or ch == "\r":
            return ""  # line continuation
        if ch.isdigit():  # legacy octal
            digits = ch
            while self.pos < n and len(digits) < 3 and text[self.pos] in "01234567":
                digits += text[self.pos]
                self.pos += 1
            return chr(int(digits, 8))
        return ch

    def _read_template(self, start: int) -> Token:
        """Whole template literal as one token; ${} bodies scanned raw."""
        text, n = self.text, len(self.text)
        self.pos += 1
        while True:
            if self.pos >= n:
                raise self.error("unterminated template literal")
            ch = text[self.pos]
            if ch == "`":
                self.pos += 1
                break
            if ch == "\\":
                self.pos += 2
            elif ch == "$" and self.pos + 1 < n and text[self.pos + 1] == "{":
                self.pos += 2
                self._skip_template_expr()
            else:
                self.pos += 1
        raw = text[start:self.pos]
        return Token("template", raw, start, self.pos, False)

    def _skip_template_expr(self) -> None:
        text, n = self.text, len(self.text)
        depth = 1
        while depth > 0:
            if self.pos >= n:
                raise self.error("unterminated template substitution")
            ch = text[self.pos]
            if ch == "{":
                depth += 1
                self.pos += 1
            elif ch == "}":
                depth -= 1
                self.pos += 1
            elif ch in "'\"":
                self._read_string(self.pos)
            elif ch == "`":
                self._read_template(self.pos)
            elif ch == "/" and self.pos + 1 < n and text[self.pos + 1] == "/":
                while self.pos < n and text[self.pos] not in LINE_TERMINATORS:
                    self.pos += 1
            elif ch == "/" and self.pos + 1 < n and text[self.pos + 1] == "*":
                end = text.find("*/", self.pos + 2)
                if end < 0:
                    raise self.error("unterminated block comment")
                self.pos = end + 2
            else:
                self.pos += 1

    def _read_regex(self, start: int) -> Token:
        text, n = self.text, len(self.text)
        self.pos += 1
        in_class = False
        while True:
            if self.pos >= n:
                raise self.error("unterminated regular expression")
            ch = text[self.pos]
            if ch in LINE_TERMINATORS:
                raise self.error("newline in regular expression")
            if ch == "\\":
                self.pos += 2
                continue
            if ch == "[":
                in_class = True
            elif ch == "]":
                in_class = False
            elif ch == "/" and not in_class:
                self.pos += 1
                break
            self.pos += 1
        while self.pos < n and _is_ident_part(text[self.pos]):
            self.pos += 1
        raw = text[start:self.pos]
        return Token("regex", raw, start, self.pos, False, cooked=raw)

    def _read_punct(self, start: int) -> Token:
        rest = self.text[self.pos:self.pos + 4]
        for p in PUNCTUATORS:
            if rest.startswith(p):
                self.pos += len(p)
                return Token("punct", p, start, self.pos, False)
        raise self.error(f"unexpected character {self.text[self.pos]!r}")

    # -- / disambiguation ---------------------------------------------------

    def _prev_token(self) -> Token | None:
        return self.tokens[-1] if self.tokens else None

    def _track_brackets(self, tok: Token) -> None:
        if tok.type != "punct":
            return
        if tok.value == "(":
            prev = self.tokens[-1] if self.tokens else None
            is_control = (prev is not None and prev.type == "keyword"
                          and prev.value in {"if", "for", "while", "with",
                                             "switch", "catch"})
            self._paren_stack.append(is_control)
        elif tok.value == ")":
            self._last_paren_control = (self._paren_stack.pop()
                                        if self._paren_stack else False)
        elif tok.value == "{":
            prev = self.tokens[-1] if self.tokens else None
            if prev is None:
                is_block = True
            elif prev.type == "punct":
                is_block = prev.value in {")", "{", "}", ";", "=>", ":"}
            elif prev.type == "keyword":
                is_block = prev.value not in {"return", "typeof", "in",
                                              "instanceof", "case", "new",
                                              "delete", "void", "throw"}
            else:
                is_block = False
            self._brace_stack.append(is_block)
        elif tok.value == "}":
            self._last_brace_block = (self._brace_stack.pop()
                                      if self._brace_stack else True)

    def _regex_allowed(self) -> bool:
        prev = self._prev_token()
        if prev is None:
            return True
        if prev.type in ("num", "str", "template", "regex", "ident"):
            return False
        if prev.type == "keyword":
            return prev.value not in _REGEX_AFTER_KEYWORD_BLOCKLIST
        # punct
        if prev.value == ")":
            return getattr(self, "_last_paren_control", False)
        if prev.value == "}":
            return getattr(self, "_last_brace_block", True)
        if prev.value in ("]", "++", "--"):
            return False
        return True


def tokenize(text: str) -> list[Token]:
    return Tokenizer(text).tokenize()
