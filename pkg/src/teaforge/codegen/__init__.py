"""SDK generation from checked modules.

Two targets are built in: ``python`` (executable here, used for
differential tests against the interpreter) and ``typescript``.
"""

from __future__ import annotations

from typing import Mapping

from ..frontend.syntax import TypeKind
from ..runtime.interpreter import UnknownApi, ValidationFailed
from ..semantics.module import SemanticModule
from ..semantics.validate import ValidationReport, Violation, validate_typed
from .base import (
    CodeWriter,
    Emitter,
    EmitterTarget,
    FileSet,
    IdentifierStyle,
    NameScope,
    UnsupportedConstruct,
    apply_style,
    split_words,
)
from .python_target import PythonEmitter
from .typescript_target import TypeScriptEmitter, ts_quote

PYTHON = EmitterTarget(
    target_id="python",
    file_extension=".py",
    identifier_style=IdentifierStyle.SNAKE,
    quote=repr,
    type_names={
        TypeKind.STRING: "str",
        TypeKind.NUMBER: "float",
        TypeKind.BOOLEAN: "bool",
        TypeKind.ANY: "Any",
        TypeKind.READABLE: "core.Readable",
        TypeKind.VOID: "None",
    },
    map_format="dict[{key}, {value}]",
    array_format="list[{element}]",
    named_format="{name}",
    emitter=PythonEmitter(),
    executable=True,
)

TYPESCRIPT = EmitterTarget(
    target_id="typescript",
    file_extension=".ts",
    identifier_style=IdentifierStyle.CAMEL,
    quote=ts_quote,
    type_names={
        TypeKind.STRING: "string",
        TypeKind.NUMBER: "number",
        TypeKind.BOOLEAN: "boolean",
        TypeKind.ANY: "any",
        TypeKind.READABLE: "core.Readable",
        TypeKind.VOID: "void",
    },
    map_format="{{ [key: {key}]: {value} }}",
    array_format="Array<{element}>",
    named_format="{name}",
    emitter=TypeScriptEmitter(),
)

_TARGETS = {t.target_id: t for t in (PYTHON, TYPESCRIPT)}


def list_targets() -> list[EmitterTarget]:
    return list(_TARGETS.values())


def get_target(target_id: str) -> EmitterTarget:
    try:
        return _TARGETS[target_id]
    except KeyError:
        raise KeyError(f"unknown target {target_id!r}; choose from {', '.join(_TARGETS)}") from None


def _resolve(target: EmitterTarget | str) -> EmitterTarget:
    return get_target(target) if isinstance(target, str) else target


def emit(module: SemanticModule, target: EmitterTarget | str) -> FileSet:
    """Generate the SDK files for ``module``. The module must be error-free."""
    target = _resolve(target)
    return target.emitter.emit_module(module, target)


def emit_code_sample(module: SemanticModule, api: str, args: Mapping, target: EmitterTarget | str) -> str:
    """A snippet calling ``api`` with ``args`` through the generated client."""
    target = _resolve(target)
    module.require_ok()
    decl = module.apis.get(api)
    if decl is None:
        raise UnknownApi(f"unknown api {api!r}")
    extra = sorted(set(args) - {p.name for p in decl.params})
    violations = [Violation(name, "unexpected-argument", f"{api} has no parameter {name!r}") for name in extra]
    for p in decl.params:
        if args.get(p.name) is None:
            violations.append(Violation(p.name, "missing-required", f"argument {p.name!r} is required"))
        else:
            violations.extend(validate_typed(p.type, args[p.name], module, p.name).violations)
    if violations:
        raise ValidationFailed(ValidationReport(tuple(violations)), f"arguments for {api}")
    return target.emitter.emit_code_sample(module, api, args, target)


__all__ = [
    "CodeWriter",
    "Emitter",
    "EmitterTarget",
    "FileSet",
    "IdentifierStyle",
    "NameScope",
    "PYTHON",
    "TYPESCRIPT",
    "UnsupportedConstruct",
    "apply_style",
    "emit",
    "emit_code_sample",
    "get_target",
    "list_targets",
    "split_words",
]
