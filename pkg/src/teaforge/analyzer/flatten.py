"""Parameter flattening and the failed-vs-successful call diff."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterator, Mapping

from ..values import render_scalar

# Values recorded for container entries. Only the shape is kept so that a
# change deep inside a structure is reported once, at the leaf.
OBJECT_MARK = "{}"
ARRAY_MARK = "[]"

FlatParamMap = dict[str, str]


def escape_key(key: str) -> str:
    """Escape a key so that dotted paths and diff annotations stay unambiguous.

    A leading ``+``/``-`` is escaped too, otherwise a changed key ``+a``
    would read like an extra key ``a``.
    """
    key = key.replace("\\", "\\\\").replace(".", "\\.")
    return "\\" + key if key[:1] in ("+", "-") else key


def _expand_string(text: str):
    stripped = text.strip()
    if not stripped or stripped[0] not in "{[":
        return None
    try:
        value = json.loads(stripped)
    except ValueError:
        return None
    return value if isinstance(value, (dict, list)) else None


def _walk(path: str, value: Any, out: FlatParamMap) -> None:
    if isinstance(value, str):
        parsed = _expand_string(value)
        if parsed is not None:
            value = parsed
    if isinstance(value, Mapping):
        out[path] = OBJECT_MARK
        for key, child in value.items():
            _walk(f"{path}.{escape_key(str(key))}", child, out)
    elif isinstance(value, (list, tuple)):
        out[path] = ARRAY_MARK
        for i, child in enumerate(value):
            _walk(f"{path}.{i}", child, out)
    else:
        out[path] = render_scalar(value)


def flatten(params: Any) -> FlatParamMap:
    """Split request parameters into dotted paths down to single values.

    String values holding a JSON object or array are parsed and flattened in
    place, and every container also keeps an entry of its own. Roots that are
    not objects produce a single entry under ``""``.
    """
    out: FlatParamMap = {}
    if isinstance(params, Mapping):
        for key, value in params.items():
            _walk(escape_key(str(key)), value, out)
    elif isinstance(params, (list, tuple)):
        out[""] = json.dumps(params, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    else:
        out[""] = render_scalar(params)
    return out


@dataclass(frozen=True)
class DiffReport:
    """Paths missing from the wrong call, extra in it, and present in both
    with different values; ``annotations`` renders them as ``-path``,
    ``+path`` and bare ``path``."""

    missing: tuple[str, ...] = ()
    extra: tuple[str, ...] = ()
    changed: tuple[str, ...] = ()

    @property
    def annotations(self) -> tuple[str, ...]:
        return tuple(["-" + k for k in self.missing] + ["+" + k for k in self.extra] + list(self.changed))

    def __iter__(self) -> Iterator[str]:
        return iter(self.annotations)

    def __len__(self) -> int:
        return len(self.missing) + len(self.extra) + len(self.changed)

    def __bool__(self) -> bool:
        return len(self) > 0

    def as_list(self) -> list[str]:
        return list(self.annotations)


def diff(correct: Mapping[str, str], wrong: Mapping[str, str]) -> DiffReport:
    """Compare two flattened calls: all ``-`` entries, then ``+``, then
    changed values, each group in code point order."""
    missing = sorted(k for k in correct if k not in wrong)
    extra = sorted(k for k in wrong if k not in correct)
    changed = sorted(k for k in correct if k in wrong and correct[k] != wrong[k])
    return DiffReport(tuple(missing), tuple(extra), tuple(changed))
