"""Textual renderings of syntax trees.

``dump_ast`` gives a stable structural rendering used by golden tests.
``format_source`` prints a tree back as TeaDSL source, so that
``parse(format_source(t)) == t`` for every parsed tree ``t``.
"""

from __future__ import annotations

import json
import re

from .syntax import (
    ApiDecl,
    Assign,
    BehaviorCall,
    BinaryOp,
    BoolLit,
    Call,
    ExprStmt,
    If,
    MapLit,
    NullLit,
    NumberLit,
    PathAccess,
    Return,
    StringLit,
    SyntaxTree,
    TemplateString,
    VarDecl,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _lit(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    return repr(value)


def _key(key: str) -> str:
    return key if _IDENT.match(key) else json.dumps(key, ensure_ascii=False)


def dump_expr(expr) -> str:
    if isinstance(expr, StringLit):
        return f"StringLit({_lit(expr.value)})"
    if isinstance(expr, NumberLit):
        return f"NumberLit({expr.value!r})"
    if isinstance(expr, BoolLit):
        return f"BoolLit({_lit(expr.value)})"
    if isinstance(expr, NullLit):
        return "NullLit"
    if isinstance(expr, TemplateString):
        parts = ", ".join(_lit(p) if isinstance(p, str) else dump_expr(p) for p in expr.parts)
        return f"TemplateString({parts})"
    if isinstance(expr, MapLit):
        entries = ", ".join(f"{_key(e.key)}={dump_expr(e.value)}" for e in expr.entries)
        return f"MapLit({entries})"
    if isinstance(expr, PathAccess):
        return f"PathAccess({expr.dotted()})"
    if isinstance(expr, Call):
        args = "".join(", " + dump_expr(a) for a in expr.args)
        return f"Call({expr.module}.{expr.method}{args})"
    if isinstance(expr, BehaviorCall):
        args = "".join(", " + dump_expr(a) for a in expr.args)
        return f"BehaviorCall(@{expr.name}{args})"
    if isinstance(expr, BinaryOp):
        return f"BinaryOp({expr.op}, {dump_expr(expr.lhs)}, {dump_expr(expr.rhs)})"
    raise TypeError(f"not an expression: {expr!r}")


def _dump_block(stmts, indent: str, out: list[str]) -> None:
    for stmt in stmts:
        if isinstance(stmt, VarDecl):
            out.append(f"{indent}VarDecl({stmt.name}, {dump_expr(stmt.value)})")
        elif isinstance(stmt, Assign):
            out.append(f"{indent}Assign({stmt.target.dotted()}, {dump_expr(stmt.value)})")
        elif isinstance(stmt, Return):
            out.append(f"{indent}Return({dump_expr(stmt.value)})")
        elif isinstance(stmt, ExprStmt):
            out.append(f"{indent}ExprStmt({dump_expr(stmt.expr)})")
        elif isinstance(stmt, If):
            _dump_nested(f"If({dump_expr(stmt.cond)})", stmt.then, indent, out)
            for branch in stmt.elifs:
                _dump_nested(f"ElseIf({dump_expr(branch.cond)})", branch.body, indent, out)
            if stmt.orelse is not None:
                _dump_nested("Else", stmt.orelse, indent, out)
        else:
            raise TypeError(f"not a statement: {stmt!r}")


def _dump_nested(head: str, stmts, indent: str, out: list[str]) -> None:
    if not stmts:
        out.append(f"{indent}{head}{{}}")
        return
    out.append(f"{indent}{head}{{")
    _dump_block(stmts, indent + "  ", out)
    out.append(f"{indent}}}")


def _dump_api(api: ApiDecl, out: list[str]) -> None:
    params = ", ".join(f"{p.name}: {p.type}" for p in api.params)
    out.append(f"  Api({api.name}, ({params}): {api.return_type}){{")
    _dump_nested("request", api.request_block, "    ", out)
    _dump_nested("returns", api.returns_block, "    ", out)
    out.append("  }")


def dump_ast(tree: SyntaxTree) -> str:
    """Render ``tree`` deterministically; spans are not included."""
    if tree.is_empty():
        return "Module{}"
    out = ["Module{"]
    for imp in tree.imports:
        out.append(f"  Import({imp.name})")
    for model in tree.models:
        if not model.fields:
            out.append(f"  Model({model.name}){{}}")
            continue
        out.append(f"  Model({model.name}){{")
        for f in model.fields:
            attrs = "".join(f", {k}={_lit(v)}" for k, v in f.attributes)
            opt = "?" if f.optional else ""
            out.append(f"    Field({_key(f.name)}{opt}, {f.type}{attrs})")
        out.append("  }")
    for beh in tree.behavior_types:
        params = ", ".join(str(t) for t in beh.param_types)
        out.append(f"  Behavior(@{beh.name}, ({params}): {beh.return_type})")
    for api in tree.apis:
        _dump_api(api, out)
    out.append("}")
    return "\n".join(out)


# --- source formatting -------------------------------------------------------

_STRING_ESCAPES = {"\\": "\\\\", "'": "\\'", "\n": "\\n", "\t": "\\t", "\r": "\\r", "\0": "\\0"}
_TEMPLATE_ESCAPES = {"\\": "\\\\", "`": "\\`", "$": "\\$", "\r": "\\r", "\0": "\\0"}


def _escape(text: str, table: dict[str, str]) -> str:
    out = []
    for ch in text:
        if ch in table:
            out.append(table[ch])
        elif ord(ch) < 0x20 and ch not in "\n\t":
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def _src_lit(value) -> str:
    if isinstance(value, str):
        return "'" + _escape(value, _STRING_ESCAPES) + "'"
    return _lit(value)


def format_expr(expr) -> str:
    if isinstance(expr, StringLit):
        return _src_lit(expr.value)
    if isinstance(expr, (NumberLit, BoolLit)):
        return _lit(expr.value)
    if isinstance(expr, NullLit):
        return "null"
    if isinstance(expr, TemplateString):
        body = "".join(
            _escape(p, _TEMPLATE_ESCAPES) if isinstance(p, str) else "${" + format_expr(p) + "}"
            for p in expr.parts
        )
        return f"`{body}`"
    if isinstance(expr, MapLit):
        if not expr.entries:
            return "{}"
        entries = " ".join(
            f"{e.key if _IDENT.match(e.key) else _src_lit(e.key)} = {format_expr(e.value)},"
            for e in expr.entries
        )
        return "{ " + entries + " }"
    if isinstance(expr, PathAccess):
        return expr.dotted()
    if isinstance(expr, Call):
        return f"{expr.module}.{expr.method}({', '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, BehaviorCall):
        return f"@{expr.name}({', '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, BinaryOp):
        return f"{_operand(expr.lhs)} {expr.op} {_operand(expr.rhs)}"
    raise TypeError(f"not an expression: {expr!r}")


def _operand(expr) -> str:
    text = format_expr(expr)
    return f"({text})" if isinstance(expr, BinaryOp) else text


def _format_block(stmts, indent: str) -> str:
    if not stmts:
        return "{}"
    lines = ["{"]
    inner = indent + "  "
    for stmt in stmts:
        if isinstance(stmt, VarDecl):
            lines.append(f"{inner}var {stmt.name} = {format_expr(stmt.value)};")
        elif isinstance(stmt, Assign):
            lines.append(f"{inner}{stmt.target.dotted()} = {format_expr(stmt.value)};")
        elif isinstance(stmt, Return):
            lines.append(f"{inner}return {format_expr(stmt.value)};")
        elif isinstance(stmt, ExprStmt):
            lines.append(f"{inner}{format_expr(stmt.expr)};")
        elif isinstance(stmt, If):
            text = f"{inner}if ({format_expr(stmt.cond)}) {_format_block(stmt.then, inner)}"
            for branch in stmt.elifs:
                text += f" else if ({format_expr(branch.cond)}) {_format_block(branch.body, inner)}"
            if stmt.orelse is not None:
                text += f" else {_format_block(stmt.orelse, inner)}"
            lines.append(text)
    lines.append(indent + "}")
    return "\n".join(lines)


def format_source(tree: SyntaxTree) -> str:
    """Pretty-print ``tree`` as TeaDSL source text."""
    chunks: list[str] = []
    if tree.imports:
        chunks.append("\n".join(f"import {imp.name};" for imp in tree.imports))
    for model in tree.models:
        fields = []
        for f in model.fields:
            attrs = ""
            if f.attributes:
                attrs = "(" + ", ".join(f"{k}={_src_lit(v)}" for k, v in f.attributes) + ")"
            fields.append(f"  {f.name}{'?' if f.optional else ''}: {f.type}{attrs},")
        body = "\n".join(fields)
        chunks.append(f"model {model.name} {{\n{body}\n}}" if fields else f"model {model.name} {{}}")
    for beh in tree.behavior_types:
        params = ", ".join(str(t) for t in beh.param_types)
        chunks.append(f"type @{beh.name} = ({params}): {beh.return_type}")
    for api in tree.apis:
        params = ", ".join(f"{p.name}: {p.type}" for p in api.params)
        chunks.append(
            f"api {api.name}({params}): {api.return_type} "
            f"{_format_block(api.request_block, '')} returns {_format_block(api.returns_block, '')}"
        )
    return "\n\n".join(chunks) + ("\n" if chunks else "")
