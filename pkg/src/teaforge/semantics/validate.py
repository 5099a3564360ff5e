"""Runtime value validation against model declarations and their constraints."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

from ..frontend.syntax import TypeExpr, TypeKind
from ..values import is_number, render_scalar
from .module import SemanticModule

RULES = ("missing-required", "pattern", "min", "max", "type-mismatch")


class UnknownModel(KeyError):
    pass


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> list[tuple[str, str]]:
        return [(v.path, v.rule) for v in self.violations]

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{v.path or '<value>'}: {v.rule} ({v.detail})" for v in self.violations)


@lru_cache(maxsize=256)
def _compiled(pattern: str) -> re.Pattern:
    return re.compile(pattern)


def pattern_matches(pattern: str, text: str) -> bool:
    """Anchored pattern check.

    ``text`` matches when the whole of it is the pattern, or when it splits
    into successive leftmost greedy matches of the pattern. The second form
    lets a bare character class such as ``[a-zA-Z1-9]`` describe an alphabet
    while still rejecting partial matches like ``1x8`` against ``\\d+``.
    """
    rx = _compiled(pattern)
    if rx.fullmatch(text) is not None:
        return True
    pos = 0
    while pos < len(text):
        m = rx.match(text, pos)
        if m is None or m.end() == pos:
            return False
        pos = m.end()
    return bool(text)


def _type_name(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if is_number(value):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, dict):
        return "map"
    if isinstance(value, (list, tuple)):
        return "array"
    return type(value).__name__


def _join(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


class _Validator:
    def __init__(self, module: SemanticModule):
        self.module = module
        self.out: list[Violation] = []

    def add(self, path: str, rule: str, detail: str) -> None:
        self.out.append(Violation(path, rule, detail))

    def check_type(self, t: TypeExpr, value, path: str) -> None:
        kind = t.kind
        if kind is TypeKind.ANY:
            return
        if kind is TypeKind.VOID:
            if value is not None:
                self.add(path, "type-mismatch", f"expected void, got {_type_name(value)}")
            return
        if kind is TypeKind.STRING:
            ok = isinstance(value, str)
        elif kind is TypeKind.NUMBER:
            ok = is_number(value)
        elif kind is TypeKind.BOOLEAN:
            ok = isinstance(value, bool)
        elif kind is TypeKind.READABLE:
            ok = isinstance(value, (bytes, bytearray, str)) or hasattr(value, "read")
        elif kind is TypeKind.MAP:
            ok = isinstance(value, dict)
            if ok:
                for k, v in value.items():
                    self.check_type(t.value, v, _join(path, str(k)))
        elif kind is TypeKind.ARRAY:
            ok = isinstance(value, (list, tuple))
            if ok:
                for i, v in enumerate(value):
                    self.check_type(t.element, v, _join(path, str(i)))
        else:
            ok = isinstance(value, dict)
            if ok:
                self.check_model(t.name, value, path)
        if not ok:
            self.add(path, "type-mismatch", f"expected {t}, got {_type_name(value)}")

    def check_model(self, name: str, value: dict, prefix: str) -> None:
        model = self.module.models[name]
        for f in model.fields:
            path = _join(prefix, f.name)
            v = value.get(f.name)
            if v is None:
                if not f.optional:
                    self.add(path, "missing-required", f"required field {f.name!r} of {name} is missing")
                continue
            before = len(self.out)
            self.check_type(f.type, v, path)
            if len(self.out) != before:
                continue
            self.check_constraints(f.attrs, v, path)

    def check_constraints(self, attrs: dict, value, path: str) -> None:
        pattern = attrs.get("pattern")
        if pattern is not None and (isinstance(value, str) or is_number(value)):
            text = value if isinstance(value, str) else render_scalar(value)
            if not pattern_matches(pattern, text):
                self.add(path, "pattern", f"{text!r} does not match {pattern!r}")
        if is_number(value):
            lo, hi = attrs.get("min"), attrs.get("max")
            if lo is not None and value < lo:
                self.add(path, "min", f"{render_scalar(value)} < {render_scalar(lo)}")
            if hi is not None and value > hi:
                self.add(path, "max", f"{render_scalar(value)} > {render_scalar(hi)}")
        if isinstance(value, (str, list, tuple)):
            lo, hi = attrs.get("minLength"), attrs.get("maxLength")
            if lo is not None and len(value) < lo:
                self.add(path, "min", f"length {len(value)} < {lo}")
            if hi is not None and len(value) > hi:
                self.add(path, "max", f"length {len(value)} > {hi}")


def validate_value(model_name: str, value, module: SemanticModule) -> ValidationReport:
    """Check a JSON-like ``value`` against model ``model_name``.

    Checks required presence, primitive types, ``pattern`` (anchored, see
    :func:`pattern_matches`),
    inclusive ``min``/``max`` and length bounds, recursing into nested
    model-typed fields. Keys not declared on the model are ignored.
    """
    if model_name not in module.models:
        raise UnknownModel(model_name)
    v = _Validator(module)
    v.check_type(TypeExpr.named(model_name), value, "")
    return ValidationReport(tuple(v.out))


def validate_typed(t: TypeExpr, value, module: SemanticModule, path: str = "") -> ValidationReport:
    """Like :func:`validate_value` but for an arbitrary declared type."""
    v = _Validator(module)
    v.check_type(t, value, path)
    return ValidationReport(tuple(v.out))
