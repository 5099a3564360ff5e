"""Emitter plumbing: targets, file sets, identifier styles."""

from __future__ import annotations

import enum
import hashlib
import json
import keyword
import re
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Callable, Iterator, Mapping, Protocol

from ..frontend.syntax import NO_SPAN, Span, TypeExpr, TypeKind


class IdentifierStyle(enum.Enum):
    CAMEL = "camelCase"
    SNAKE = "snake_case"
    PASCAL = "PascalCase"


def split_words(name: str) -> list[str]:
    s = re.sub(r"[^A-Za-z0-9]+", "_", name)
    s = re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1_\2", s)
    s = re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", s)
    return [w.lower() for w in s.split("_") if w]


def apply_style(name: str, style: IdentifierStyle) -> str:
    """Restyle ``name``; the result is a fixpoint, so restyling is a no-op.

    Adjacent one-letter words (``aA`` -> ``AA``) re-split differently, so the
    styling is repeated until it settles; each round can only merge words.
    """
    out = _style_once(name, style)
    for _ in range(len(out)):
        again = _style_once(out, style)
        if again == out:
            break
        out = again
    return out


def _style_once(name: str, style: IdentifierStyle) -> str:
    words = split_words(name)
    if not words:
        return name
    if style is IdentifierStyle.SNAKE:
        return "_".join(words)
    if style is IdentifierStyle.CAMEL:
        return words[0] + "".join(w.capitalize() for w in words[1:])
    return "".join(w.capitalize() for w in words)


class UnsupportedConstruct(Exception):
    def __init__(self, target_id: str, span: Span | None, message: str):
        self.target_id = target_id
        self.span = span or NO_SPAN
        super().__init__(f"{target_id}: {self.span.start}: {message}")


@dataclass(frozen=True)
class EmitterTarget:
    """One output language: naming, literal quoting and type mapping."""

    target_id: str
    file_extension: str
    identifier_style: IdentifierStyle
    quote: Callable[[str], str]
    # names for the leaf kinds; MAP/ARRAY use the format strings below
    type_names: Mapping[TypeKind, str]
    map_format: str
    array_format: str
    named_format: str
    emitter: "Emitter" = field(repr=False, compare=False, default=None)
    executable: bool = False

    def style(self, name: str) -> str:
        return apply_style(name, self.identifier_style)

    def type_name(self, t: TypeExpr) -> str:
        if t.kind is TypeKind.MAP:
            return self.map_format.format(key=self.type_name(t.key), value=self.type_name(t.value))
        if t.kind is TypeKind.ARRAY:
            return self.array_format.format(element=self.type_name(t.element))
        if t.kind is TypeKind.NAMED:
            return self.named_format.format(name=apply_style(t.name, IdentifierStyle.PASCAL))
        return self.type_names[t.kind]


class Emitter(Protocol):
    def emit_module(self, module, target: EmitterTarget) -> "FileSet": ...

    def emit_code_sample(self, module, api: str, args: Mapping, target: EmitterTarget) -> str: ...


class FileSet(Mapping[str, str]):
    """Relative path -> file text, iterated in path order."""

    def __init__(self, files: Mapping[str, str] | None = None):
        self._files: dict[str, str] = {}
        for path, text in (files or {}).items():
            self.add(path, text)

    def add(self, path: str, text: str) -> None:
        p = PurePosixPath(path)
        if p.is_absolute() or ".." in p.parts or not p.parts:
            raise ValueError(f"invalid output path {path!r}")
        self._files[str(p)] = text

    def __getitem__(self, path: str) -> str:
        return self._files[path]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._files))

    def __len__(self) -> int:
        return len(self._files)

    def __eq__(self, other) -> bool:
        if isinstance(other, FileSet):
            return self._files == other._files
        return NotImplemented

    def __repr__(self) -> str:
        return f"FileSet({list(self)})"

    def digest(self, path: str) -> str:
        return hashlib.sha256(self._files[path].encode("utf-8")).hexdigest()

    def manifest(self) -> dict:
        return {"files": [{"path": p, "sha256": self.digest(p)} for p in self]}

    def write(self, out_dir: str | Path) -> list[Path]:
        """Write every file plus ``fileset.json`` under ``out_dir``."""
        root = Path(out_dir)
        written = []
        for path in self:
            dest = root / path
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(self._files[path], encoding="utf-8", newline="\n")
            written.append(dest)
        manifest = root / "fileset.json"
        manifest.write_text(json.dumps(self.manifest(), indent=2) + "\n", encoding="utf-8")
        written.append(manifest)
        return written


class CodeWriter:
    """Indented line buffer."""

    def __init__(self, indent: str = "    "):
        self.lines: list[str] = []
        self.level = 0
        self.unit = indent

    def line(self, text: str = "") -> None:
        self.lines.append(self.unit * self.level + text if text else "")

    def indent(self) -> None:
        self.level += 1

    def dedent(self) -> None:
        self.level -= 1

    def text(self) -> str:
        return "\n".join(self.lines).rstrip("\n") + "\n"


class NameScope:
    """Maps source identifiers to target identifiers, avoiding clashes.

    A fresh target name is chosen whenever the preferred one is reserved or
    already taken anywhere in the enclosing function, since most targets
    scope locals per function rather than per block.
    """

    def __init__(self, reserved: set[str], parent: NameScope | None = None):
        self.parent = parent
        self.names: dict[str, str] = {}
        self.taken: set[str] = parent.taken if parent else set(reserved)

    def child(self) -> NameScope:
        return NameScope(set(), self)

    def declare(self, source: str, preferred: str) -> str:
        name = preferred
        n = 2
        while name in self.taken:
            name = f"{preferred}_{n}"
            n += 1
        self.taken.add(name)
        self.names[source] = name
        return name

    def lookup(self, source: str) -> str:
        scope = self
        while scope is not None:
            if source in scope.names:
                return scope.names[source]
            scope = scope.parent
        raise KeyError(source)


PY_RESERVED = set(keyword.kwlist) | {"self", "core", "models", "print", "len", "str", "dict", "list"}
