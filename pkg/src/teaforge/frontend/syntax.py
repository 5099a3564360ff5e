"""Syntax tree node types for TeaDSL modules.

Every node carries a ``span``; spans are excluded from equality so two trees
parsed from differently formatted sources compare equal when their structure
matches.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True, order=True)
class SourcePos:
    line: int
    column: int
    offset: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Span:
    start: SourcePos
    end: SourcePos

    @classmethod
    def point(cls, pos: SourcePos) -> Span:
        return cls(pos, pos)

    def to(self, other: Span) -> Span:
        return Span(self.start, other.end)


NO_SPAN = Span.point(SourcePos(1, 1, 0))


def _span_field():
    return field(default=NO_SPAN, compare=False, repr=False)


class TypeKind(enum.Enum):
    STRING = "string"
    NUMBER = "number"
    BOOLEAN = "boolean"
    ANY = "any"
    READABLE = "readable"
    VOID = "void"
    MAP = "map"
    ARRAY = "array"
    NAMED = "named"


PRIMITIVE_TYPE_NAMES = {
    "string": TypeKind.STRING,
    "number": TypeKind.NUMBER,
    "boolean": TypeKind.BOOLEAN,
    "any": TypeKind.ANY,
    "readable": TypeKind.READABLE,
    "void": TypeKind.VOID,
}


@dataclass(frozen=True)
class TypeExpr:
    kind: TypeKind
    key: TypeExpr | None = None
    value: TypeExpr | None = None
    element: TypeExpr | None = None
    name: str | None = None
    span: Span = _span_field()

    @classmethod
    def prim(cls, kind: TypeKind) -> TypeExpr:
        return cls(kind)

    @classmethod
    def map_of(cls, value: TypeExpr) -> TypeExpr:
        return cls(TypeKind.MAP, key=STRING, value=value)

    @classmethod
    def array_of(cls, element: TypeExpr) -> TypeExpr:
        return cls(TypeKind.ARRAY, element=element)

    @classmethod
    def named(cls, name: str) -> TypeExpr:
        return cls(TypeKind.NAMED, name=name)

    def __str__(self) -> str:
        if self.kind is TypeKind.MAP:
            return f"map[{self.key}]{self.value}"
        if self.kind is TypeKind.ARRAY:
            return f"[{self.element}]"
        if self.kind is TypeKind.NAMED:
            return str(self.name)
        return self.kind.value


STRING = TypeExpr(TypeKind.STRING)
NUMBER = TypeExpr(TypeKind.NUMBER)
BOOLEAN = TypeExpr(TypeKind.BOOLEAN)
ANY = TypeExpr(TypeKind.ANY)
READABLE = TypeExpr(TypeKind.READABLE)
VOID = TypeExpr(TypeKind.VOID)


# --- expressions ---------------------------------------------------------


@dataclass(frozen=True)
class StringLit:
    value: str
    span: Span = _span_field()


@dataclass(frozen=True)
class TemplateString:
    # interleaved str fragments and expressions, in source order
    parts: tuple[Union[str, "Expr"], ...]
    span: Span = _span_field()


@dataclass(frozen=True)
class NumberLit:
    value: int | float
    span: Span = _span_field()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = _span_field()


@dataclass(frozen=True)
class NullLit:
    span: Span = _span_field()


@dataclass(frozen=True)
class MapEntry:
    key: str
    value: "Expr"
    span: Span = _span_field()


@dataclass(frozen=True)
class MapLit:
    entries: tuple[MapEntry, ...]
    span: Span = _span_field()


@dataclass(frozen=True)
class PathAccess:
    segments: tuple[str, ...]
    span: Span = _span_field()

    @property
    def root(self) -> str:
        return self.segments[0]

    def dotted(self) -> str:
        return ".".join(self.segments)


@dataclass(frozen=True)
class Call:
    module: str
    method: str
    args: tuple["Expr", ...]
    span: Span = _span_field()


@dataclass(frozen=True)
class BehaviorCall:
    name: str
    args: tuple["Expr", ...]
    span: Span = _span_field()


@dataclass(frozen=True)
class BinaryOp:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    span: Span = _span_field()


Expr = Union[
    StringLit, TemplateString, NumberLit, BoolLit, NullLit, MapLit,
    PathAccess, Call, BehaviorCall, BinaryOp,
]

BINARY_OPS = ("==", "!=", "&&", "||", "+")


# --- statements ----------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    value: Expr
    span: Span = _span_field()


@dataclass(frozen=True)
class Assign:
    target: PathAccess
    value: Expr
    span: Span = _span_field()


@dataclass(frozen=True)
class ElseIf:
    cond: Expr
    body: tuple["Stmt", ...]
    span: Span = _span_field()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    elifs: tuple[ElseIf, ...] = ()
    orelse: tuple["Stmt", ...] | None = None
    span: Span = _span_field()


@dataclass(frozen=True)
class Return:
    value: Expr
    span: Span = _span_field()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    span: Span = _span_field()


Stmt = Union[VarDecl, Assign, If, Return, ExprStmt]


# --- declarations --------------------------------------------------------


@dataclass(frozen=True)
class ImportDecl:
    name: str
    span: Span = _span_field()


@dataclass(frozen=True)
class FieldDecl:
    name: str
    optional: bool
    type: TypeExpr
    attributes: tuple[tuple[str, str | int | float | bool | None], ...] = ()
    span: Span = _span_field()

    @property
    def attrs(self) -> dict:
        return dict(self.attributes)


@dataclass(frozen=True)
class ModelDecl:
    name: str
    fields: tuple[FieldDecl, ...]
    span: Span = _span_field()

    def field_named(self, name: str) -> FieldDecl | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class BehaviorTypeDecl:
    name: str
    param_types: tuple[TypeExpr, ...]
    return_type: TypeExpr
    span: Span = _span_field()


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeExpr
    span: Span = _span_field()


@dataclass(frozen=True)
class ApiDecl:
    name: str
    params: tuple[Param, ...]
    return_type: TypeExpr
    request_block: tuple[Stmt, ...]
    returns_block: tuple[Stmt, ...]
    span: Span = _span_field()


@dataclass(frozen=True)
class SyntaxTree:
    imports: tuple[ImportDecl, ...] = ()
    models: tuple[ModelDecl, ...] = ()
    behavior_types: tuple[BehaviorTypeDecl, ...] = ()
    apis: tuple[ApiDecl, ...] = ()
    span: Span = _span_field()

    def is_empty(self) -> bool:
        return not (self.imports or self.models or self.behavior_types or self.apis)
