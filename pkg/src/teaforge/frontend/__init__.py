"""Lexing, parsing and rendering of TeaDSL source."""

from .dump import dump_ast, format_source
from .lexer import LexError, Token, TokenKind, tokenize
from .parser import ParseError, ParseErrors, parse, parse_source
from .syntax import SourcePos, Span, SyntaxTree, TypeExpr, TypeKind

__all__ = [
    "LexError",
    "ParseError",
    "ParseErrors",
    "SourcePos",
    "Span",
    "SyntaxTree",
    "Token",
    "TokenKind",
    "TypeExpr",
    "TypeKind",
    "dump_ast",
    "format_source",
    "parse",
    "parse_source",
    "tokenize",
]
