from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from ..frontend.syntax import (
    ApiDecl,
    BehaviorTypeDecl,
    ModelDecl,
    Span,
    SyntaxTree,
    TypeExpr,
)
from .builtins import BuiltinModuleDescriptor


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: Span

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def render(self, filename: str = "<input>", color: bool = False) -> str:
        sev = self.severity.value
        if color:
            sev = ("\x1b[31m" if self.is_error else "\x1b[33m") + sev + "\x1b[0m"
        pos = self.span.start
        return f"{filename}:{pos.line}:{pos.column}: {sev}[{self.code}]: {self.message}"

    def sort_key(self):
        s = self.span.start
        return (s.offset, s.line, s.column, self.code, self.message)


class AnalysisError(Exception):
    """Raised by stages that require a module without Error diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.render() for d in self.diagnostics if d.is_error))


@dataclass(frozen=True)
class SemanticModule:
    """A name-resolved, type-checked TeaDSL module.

    ``expr_types`` maps ``id(expr)`` of every expression node in ``tree`` to
    its inferred type; use :meth:`type_of` rather than indexing directly.
    """

    tree: SyntaxTree
    models: Mapping[str, ModelDecl]
    behaviors: Mapping[str, BehaviorTypeDecl]
    apis: Mapping[str, ApiDecl]
    imports: Mapping[str, BuiltinModuleDescriptor]
    diagnostics: tuple[Diagnostic, ...]
    expr_types: Mapping[int, TypeExpr] = field(default_factory=dict, repr=False, compare=False)
    name: str = "module"

    def __post_init__(self):
        for attr in ("models", "behaviors", "apis", "imports", "expr_types"):
            object.__setattr__(self, attr, MappingProxyType(dict(getattr(self, attr))))

    @property
    def ok(self) -> bool:
        return not any(d.is_error for d in self.diagnostics)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if not d.is_error]

    def type_of(self, expr) -> TypeExpr:
        return self.expr_types[id(expr)]

    def require_ok(self) -> None:
        if not self.ok:
            raise AnalysisError(self.errors)
