"""Tokenizer for the JAGS-subset model language."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import LexError


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self}")


class TokenKind(Enum):
    IDENTIFIER = "identifier"
    NUMBER = "number"
    TILDE = "~"
    ASSIGN_ARROW = "<-"
    EQUALS = "="
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    CARET = "^"
    LPAREN = "("
    RPAREN = ")"
    LBRACKET = "["
    RBRACKET = "]"
    LBRACE = "{"
    RBRACE = "}"
    COMMA = ","
    COLON = ":"
    KW_MODEL = "model"
    KW_FOR = "for"
    KW_IN = "in"
    COMMENT = "comment"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: SourceSpan


_KEYWORDS = {
    "model": TokenKind.KW_MODEL,
    "for": TokenKind.KW_FOR,
    "in": TokenKind.KW_IN,
}

_SINGLE = {
    "~": TokenKind.TILDE,
    "=": TokenKind.EQUALS,
    "+": TokenKind.PLUS,
    "-": TokenKind.MINUS,
    "*": TokenKind.STAR,
    "/": TokenKind.SLASH,
    "^": TokenKind.CARET,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    "[": TokenKind.LBRACKET,
    "]": TokenKind.RBRACKET,
    "{": TokenKind.LBRACE,
    "}": TokenKind.RBRACE,
    ",": TokenKind.COMMA,
    ":": TokenKind.COLON,
}


def tokenize(source: str) -> list[Token]:
    """Split source into tokens; `#` starts a comment running to end of line.

    Comments are emitted as COMMENT tokens (text excludes the `#`);
    whitespace is skipped. Concatenating token texts plus the skipped
    whitespace and `#` characters reconstructs the source.
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def span(length):
        return SourceSpan(line, col, length)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            j = source.find("\n", i)
            if j < 0:
                j = n
            text = source[i + 1 : j]
            tokens.append(Token(TokenKind.COMMENT, text, span(j - i)))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] in "._"):
                j += 1
            text = source[i:j]
            kind = _KEYWORDS.get(text, TokenKind.IDENTIFIER)
            tokens.append(Token(kind, text, span(j - i)))
            col += j - i
            i = j
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                value = float(text)
            except ValueError:
                raise LexError(f"malformed number {text!r}", span(j - i))
            if not (value == value and abs(value) != float("inf")):
                raise LexError(f"non-finite number literal {text!r}", span(j - i))
            tokens.append(Token(TokenKind.NUMBER, text, span(j - i)))
            col += j - i
            i = j
            continue
        if ch == "<" and i + 1 < n and source[i + 1] == "-":
            tokens.append(Token(TokenKind.ASSIGN_ARROW, "<-", span(2)))
            i += 2
            col += 2
            continue
        if ch in _SINGLE:
            tokens.append(Token(_SINGLE[ch], ch, span(1)))
            i += 1
            col += 1
            continue
        raise LexError(f"unexpected character {ch!r}", span(1))

    return tokens
