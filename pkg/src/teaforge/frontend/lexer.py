"""Tokenizer for TeaDSL source text."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .syntax import SourcePos, Span

KEYWORDS = frozenset(
    {"model", "type", "api", "import", "returns", "var", "return", "if", "else", "null"}
)
BOOL_WORDS = frozenset({"true", "false"})

# longest first so that "==" wins over "="
PUNCTUATION = (
    "${", "==", "!=", "&&", "||",
    "{", "}", "(", ")", "[", "]", ",", ";", ":", "=", "+", ".", "?", "-",
)

_ESCAPES = {
    "n": "\n",
    "t": "\t",
    "r": "\r",
    "0": "\0",
    "\\": "\\",
    "'": "'",
    '"': '"',
    "`": "`",
    "$": "$",
}


class TokenKind(enum.Enum):
    KEYWORD = "Keyword"
    IDENT = "Ident"
    AT_IDENT = "AtIdent"
    STRING = "StringLit"
    TEMPLATE_PART = "TemplateStringPart"
    NUMBER = "NumberLit"
    BOOL = "BoolLit"
    PUNCT = "Punct"
    COMMENT = "Comment"
    EOF = "Eof"


@dataclass(frozen=True)
class Token:
    """A lexeme.

    ``text`` is the exact source slice, so joining token texts with the
    whitespace between them reproduces the input. ``value`` is the cooked
    payload: decoded string contents, numeric value, or the text itself.
    """

    kind: TokenKind
    text: str
    span: Span
    value: object = field(default=None, compare=False)

    def is_punct(self, *texts: str) -> bool:
        return self.kind is TokenKind.PUNCT and self.text in texts

    def is_keyword(self, *texts: str) -> bool:
        return self.kind is TokenKind.KEYWORD and self.text in texts

    def __repr__(self) -> str:
        return f"{self.kind.value}({self.value!r})"


class LexError(Exception):
    def __init__(self, message: str, pos: SourcePos):
        super().__init__(f"{pos}: {message}")
        self.message = message
        self.pos = pos


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _is_ident_char(ch: str) -> bool:
    return _is_ident_start(ch) or ch.isdigit() and ch.isascii()


class _Lexer:
    def __init__(self, source: str):
        self.src = source
        self.i = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        # one entry per open `${` hole: count of unmatched `{` inside it
        self.holes: list[int] = []

    def pos(self) -> SourcePos:
        return SourcePos(self.line, self.col, self.i)

    def peek(self, k: int = 0) -> str:
        j = self.i + k
        return self.src[j] if j < len(self.src) else ""

    def bump(self) -> str:
        ch = self.src[self.i]
        self.i += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def emit(self, kind: TokenKind, start: SourcePos, value: object = None) -> None:
        text = self.src[start.offset:self.i]
        if value is None:
            value = text
        self.tokens.append(Token(kind, text, Span(start, self.pos()), value))

    def run(self) -> list[Token]:
        while self.i < len(self.src):
            ch = self.peek()
            if ch in " \t\r\n﻿":
                self.bump()
            elif ch == "/" and self.peek(1) == "/":
                self.comment()
            elif _is_ident_start(ch):
                self.word()
            elif ch == "@":
                self.at_ident()
            elif ch.isascii() and ch.isdigit():
                self.number()
            elif ch in "'\"":
                self.string(ch)
            elif ch == "`":
                start = self.pos()
                self.bump()
                self.template_part(start)
            else:
                self.punct()
        if self.holes:
            raise LexError("unterminated template string", self.pos())
        self.tokens.append(Token(TokenKind.EOF, "", Span.point(self.pos()), ""))
        return self.tokens

    def comment(self) -> None:
        start = self.pos()
        while self.i < len(self.src) and self.peek() != "\n":
            self.bump()
        self.emit(TokenKind.COMMENT, start)

    def word(self) -> None:
        start = self.pos()
        while self.i < len(self.src) and _is_ident_char(self.peek()):
            self.bump()
        text = self.src[start.offset:self.i]
        if text in BOOL_WORDS:
            self.emit(TokenKind.BOOL, start, text == "true")
        elif text in KEYWORDS:
            self.emit(TokenKind.KEYWORD, start)
        else:
            self.emit(TokenKind.IDENT, start)

    def at_ident(self) -> None:
        start = self.pos()
        self.bump()
        if not _is_ident_start(self.peek()):
            raise LexError("expected identifier after '@'", start)
        while self.i < len(self.src) and _is_ident_char(self.peek()):
            self.bump()
        self.emit(TokenKind.AT_IDENT, start)

    def number(self) -> None:
        start = self.pos()
        while self.peek().isascii() and self.peek().isdigit():
            self.bump()
        is_float = False
        if self.peek() == "." and self.peek(1).isascii() and self.peek(1).isdigit():
            is_float = True
            self.bump()
            while self.peek().isascii() and self.peek().isdigit():
                self.bump()
        if self.peek() in ("e", "E"):
            k = 1
            if self.peek(1) in ("+", "-"):
                k = 2
            if self.peek(k).isascii() and self.peek(k).isdigit():
                is_float = True
                for _ in range(k):
                    self.bump()
                while self.peek().isascii() and self.peek().isdigit():
                    self.bump()
        text = self.src[start.offset:self.i]
        self.emit(TokenKind.NUMBER, start, float(text) if is_float else int(text))

    def escape(self) -> str:
        esc_pos = self.pos()
        self.bump()  # backslash
        if self.i >= len(self.src):
            raise LexError("unterminated escape sequence", esc_pos)
        ch = self.bump()
        if ch in _ESCAPES:
            return _ESCAPES[ch]
        if ch == "u":
            digits = self.src[self.i:self.i + 4]
            if len(digits) != 4 or any(c not in "0123456789abcdefABCDEF" for c in digits):
                raise LexError("invalid \\u escape", esc_pos)
            for _ in range(4):
                self.bump()
            return chr(int(digits, 16))
        # unknown escapes are kept verbatim so regex patterns survive
        return "\\" + ch

    def string(self, quote: str) -> None:
        start = self.pos()
        self.bump()
        chars: list[str] = []
        while True:
            if self.i >= len(self.src):
                raise LexError("unterminated string literal", start)
            ch = self.peek()
            if ch == quote:
                self.bump()
                break
            if ch == "\n":
                raise LexError("unterminated string literal", start)
            if ch == "\\":
                chars.append(self.escape())
            else:
                chars.append(self.bump())
        self.emit(TokenKind.STRING, start, "".join(chars))

    def template_part(self, start: SourcePos) -> None:
        """Scan template text up to the closing backtick or the next hole."""
        chars: list[str] = []
        while True:
            if self.i >= len(self.src):
                raise LexError("unterminated template string", start)
            ch = self.peek()
            if ch == "`":
                self.bump()
                self.emit(TokenKind.TEMPLATE_PART, start, "".join(chars))
                return
            if ch == "$" and self.peek(1) == "{":
                self.emit(TokenKind.TEMPLATE_PART, start, "".join(chars))
                hole = self.pos()
                self.bump()
                self.bump()
                self.emit(TokenKind.PUNCT, hole)
                self.holes.append(0)
                return
            if ch == "\\":
                chars.append(self.escape())
            else:
                chars.append(self.bump())

    def punct(self) -> None:
        start = self.pos()
        for p in PUNCTUATION:
            if self.src.startswith(p, self.i):
                break
        else:
            raise LexError(f"illegal character {self.peek()!r}", start)
        if p == "${":
            # holes only open inside template text
            raise LexError("illegal character '$'", start)
        for _ in p:
            self.bump()
        self.emit(TokenKind.PUNCT, start)
        if self.holes:
            if p == "{":
                self.holes[-1] += 1
            elif p == "}":
                if self.holes[-1] == 0:
                    self.holes.pop()
                    self.template_part(self.pos())
                else:
                    self.holes[-1] -= 1


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens; the final token is always ``Eof``.

    Comments are kept as ``Comment`` tokens (the parser skips them).
    Raises ``LexError`` on unterminated literals or illegal characters.
    """
    return _Lexer(source).run()
