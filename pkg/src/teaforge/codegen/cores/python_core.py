"""HTTP core for generated Python SDKs.

Provides the request/response record, transports with retry, the Util
builtins, and model validation. Generated code depends only on this file
and the standard library.
"""

from __future__ import annotations

import copy
import io
import json
import math
import re
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any


class EvalError(Exception):
    pass


class ValidationError(Exception):
    def __init__(self, violations, what: str = "value"):
        self.violations = list(violations)
        detail = "; ".join(f"{p or '<value>'}: {r} ({d})" for p, r, d in self.violations)
        super().__init__(f"invalid {what}: {detail}")


class TransportError(ConnectionError):
    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class Readable(io.BytesIO):
    def __init__(self, data=b""):
        if isinstance(data, str):
            data = data.encode("utf-8")
        super().__init__(bytes(data))

    def __eq__(self, other):
        if isinstance(other, Readable):
            return self.getvalue() == other.getvalue()
        return NotImplemented

    __hash__ = None

    def copy(self) -> Readable:
        return Readable(self.getvalue())


@dataclass
class Request:
    method: str = "GET"
    pathname: str = ""
    query: dict = field(default_factory=dict)
    headers: dict = field(default_factory=dict)
    body: Readable | None = None

    def copy(self) -> Request:
        body = self.body.copy() if self.body is not None else None
        return Request(self.method, self.pathname, dict(self.query), dict(self.headers), body)


@dataclass
class Response:
    status_code: int = 200
    status_message: str = "OK"
    headers: dict = field(default_factory=dict)
    body: Readable = field(default_factory=Readable)


@dataclass
class HttpExchange:
    protocol: str = "https"
    port: int = 443
    host: str = ""
    request: Request = field(default_factory=Request)
    response: Response | None = None

    def copy(self) -> HttpExchange:
        return HttpExchange(self.protocol, self.port, self.host, self.request.copy(), self.response)


@dataclass(frozen=True)
class Config:
    retry_times: int = 0
    backoff_ms: int = 100
    timeout_ms: int = 30000
    default_protocol: str = "https"
    default_port: int = 443


# --- values ------------------------------------------------------------------


def is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def render_scalar(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isfinite(value) and value.is_integer() and abs(value) < 2**63:
            return str(int(value))
        return repr(value)
    return str(value)


def eq(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    if is_number(a) and is_number(b):
        return a == b
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(eq(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(eq(x, y) for x, y in zip(a, b))
    return type(a) is type(b) and a == b


def plus(a, b):
    if isinstance(a, str) and isinstance(b, str):
        return a + b
    if is_number(a) and is_number(b):
        return a + b
    raise EvalError(f"cannot apply '+' to {type(a).__name__} and {type(b).__name__}")


def truth(value, op: str) -> bool:
    if not isinstance(value, bool):
        raise EvalError(f"'{op}' needs boolean operands, got {render_scalar(value)!r}")
    return value


def hole(value) -> str:
    if value is None:
        raise EvalError("null value in template hole")
    if isinstance(value, str):
        return value
    if isinstance(value, bool) or is_number(value):
        return render_scalar(value)
    raise EvalError(f"cannot interpolate a {type(value).__name__}")


_RESPONSE_ATTRS = {"statusCode": "status_code", "statusMessage": "status_message", "headers": "headers", "body": "body"}


def member(obj, name: str, where: str):
    if obj is None:
        raise EvalError(f"null dereference reading {name!r} of {where}")
    if isinstance(obj, dict):
        return obj.get(name)
    if isinstance(obj, Response) and name in _RESPONSE_ATTRS:
        return getattr(obj, _RESPONSE_ATTRS[name])
    raise EvalError(f"cannot read member {name!r} of {where}")


def set_member(obj, name: str, value, where: str) -> None:
    if obj is None:
        raise EvalError(f"null dereference assigning {name!r} of {where}")
    if not isinstance(obj, dict):
        raise EvalError(f"cannot assign member {name!r} of {where}")
    obj[name] = value


# --- Util builtins -----------------------------------------------------------


def to_json_string(value) -> str:
    try:
        return json.dumps(value, ensure_ascii=False, separators=(",", ":"))
    except (TypeError, ValueError) as exc:
        raise EvalError(f"value is not JSON-serializable: {exc}") from None


def parse_json(text: str):
    try:
        return json.loads(text)
    except ValueError as exc:
        raise EvalError(f"invalid JSON: {exc}") from None


def read_as_string(body) -> str:
    if not isinstance(body, Readable):
        raise EvalError("expected a readable body")
    try:
        return body.read().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EvalError(f"body is not UTF-8: {exc}") from None


def read_as_json(body):
    return parse_json(read_as_string(body))


def to_readable(text: str) -> Readable:
    return Readable(text)


# --- request building --------------------------------------------------------

_REQUEST_FIELDS = frozenset({"protocol", "port", "host", "method", "pathname", "query", "headers", "body"})


class RequestState:
    def __init__(self):
        self.fields: dict[str, Any] = {"query": {}, "headers": {}}

    def get(self, name: str):
        if name not in _REQUEST_FIELDS:
            raise EvalError(f"__request has no field {name!r}")
        return self.fields.get(name)

    def set(self, name: str, value) -> None:
        if name not in _REQUEST_FIELDS:
            raise EvalError(f"__request has no field {name!r}")
        self.fields[name] = value

    def finish(self, config: Config) -> HttpExchange:
        f = self.fields
        protocol = f.get("protocol")
        protocol = config.default_protocol if protocol is None else protocol
        if protocol not in ("http", "https"):
            raise EvalError(f"unsupported protocol {protocol!r}")
        port = f.get("port")
        if port is None:
            port = config.default_port
        if not is_number(port) or port != int(port) or not 1 <= port <= 65535:
            raise EvalError(f"invalid port {port!r}")
        host, method, pathname = f.get("host"), f.get("method"), f.get("pathname")
        for name, value in (("host", host), ("method", method), ("pathname", pathname)):
            if value is not None and not isinstance(value, str):
                raise EvalError(f"__request.{name} must be a string")
        body = f.get("body")
        if body is not None and not isinstance(body, Readable):
            raise EvalError("__request.body must be readable")
        maps = {}
        for name in ("query", "headers"):
            value = f.get(name)
            if value is None:
                value = {}
            if not isinstance(value, dict):
                raise EvalError(f"__request.{name} must be a map")
            for k, v in value.items():
                if not isinstance(v, str):
                    raise EvalError(f"__request.{name}.{k} must be a string, got {render_scalar(v)!r}")
            maps[name] = dict(value)
        return HttpExchange(
            protocol,
            int(port),
            host or "",
            Request(
                method if method is not None else "GET",
                pathname or "",
                maps["query"],
                maps["headers"],
                body.copy() if body is not None else None,
            ),
        )


# --- transports --------------------------------------------------------------


class UrllibTransport:
    def send(self, exchange: HttpExchange, timeout_ms: int) -> Response:
        req = exchange.request
        path = urllib.parse.quote(req.pathname or "/", safe="/:@!$&'()*+,;=-._~%")
        url = f"{exchange.protocol}://{exchange.host}:{exchange.port}{path}"
        if req.query:
            url += "?" + urllib.parse.urlencode(sorted(req.query.items()))
        data = req.body.getvalue() if req.body is not None else None
        http_req = urllib.request.Request(url, data=data, headers=dict(req.headers), method=req.method)
        try:
            with urllib.request.urlopen(http_req, timeout=timeout_ms / 1000) as resp:
                return Response(resp.status, resp.reason or "", dict(resp.headers.items()), Readable(resp.read()))
        except urllib.error.HTTPError as err:
            return Response(err.code, err.reason or "", dict(err.headers.items()), Readable(err.read()))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise TransportError(str(exc)) from exc


_default_transport = None


def set_default_transport(transport) -> None:
    """Transport used by clients constructed without one (e.g. code samples)."""
    global _default_transport
    _default_transport = transport


def get_default_transport():
    return _default_transport if _default_transport is not None else UrllibTransport()


def _as_response(resp) -> Response:
    body = resp.body
    if not isinstance(body, Readable):
        if hasattr(body, "getvalue"):
            body = Readable(body.getvalue())
        elif hasattr(body, "read"):
            body = Readable(body.read())
        else:
            body = Readable(body if body is not None else b"")
    return Response(int(resp.status_code), resp.status_message, dict(resp.headers), body)


def send_with_retry(transport, exchange: HttpExchange, config: Config, sleep=time.sleep) -> Response:
    attempts = config.retry_times + 1
    for attempt in range(1, attempts + 1):
        try:
            resp = transport.send(exchange.copy(), config.timeout_ms)
        except OSError as exc:
            if attempt == attempts:
                raise TransportError(f"{exc} (after {attempt} attempt(s))", attempts=attempt) from exc
            if config.backoff_ms:
                sleep(config.backoff_ms / 1000)
            continue
        return _as_response(resp)
    raise AssertionError("unreachable")


# --- models and validation ---------------------------------------------------


class Model:
    """Base for generated models.

    ``_fields`` rows are ``(wire_name, attribute, type, optional, constraints)``
    where ``type`` is a tuple such as ``("string",)``, ``("map", T)``,
    ``("array", T)`` or ``("model", "Name")``.
    """

    _name = ""
    _fields: list = []

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.to_map() == other.to_map()

    __hash__ = None

    def __repr__(self):
        inner = ", ".join(f"{attr}={getattr(self, attr)!r}" for _, attr, _, _, _ in self._fields)
        return f"{type(self).__name__}({inner})"

    def to_map(self) -> dict:
        out = dict(getattr(self, "_extra", None) or {})
        for wire, attr, _, _, _ in self._fields:
            value = getattr(self, attr)
            if value is not None:
                out[wire] = plain(value)
        return out

    @classmethod
    def from_map(cls, data: dict, registry: dict):
        kwargs = {}
        known = set()
        for wire, attr, typ, _, _ in cls._fields:
            known.add(wire)
            if wire in data:
                kwargs[attr] = decode(typ, data[wire], registry)
        obj = cls(**kwargs)
        obj._extra = {k: copy.deepcopy(v) for k, v in data.items() if k not in known}
        return obj


def plain(value):
    """Deep copy ``value`` into JSON-like data, unwrapping models."""
    if isinstance(value, Model):
        return value.to_map()
    if isinstance(value, dict):
        return {k: plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return value


def decode(typ, value, registry: dict):
    kind = typ[0]
    if value is None:
        return None
    if kind == "model" and isinstance(value, dict):
        return registry[typ[1]].from_map(value, registry)
    if kind == "array" and isinstance(value, list):
        return [decode(typ[1], v, registry) for v in value]
    if kind == "map" and isinstance(value, dict):
        return {k: decode(typ[1], v, registry) for k, v in value.items()}
    return value


@lru_cache(maxsize=256)
def _compiled(pattern: str):
    return re.compile(pattern)


def pattern_matches(pattern: str, text: str) -> bool:
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


def _type_label(typ) -> str:
    kind = typ[0]
    if kind == "map":
        return f"map[string]{_type_label(typ[1])}"
    if kind == "array":
        return f"[{_type_label(typ[1])}]"
    if kind == "model":
        return typ[1]
    return kind


def _value_label(value) -> str:
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


def check(typ, value, path: str, registry: dict, out: list) -> None:
    kind = typ[0]
    if kind == "any":
        return
    if kind == "void":
        if value is not None:
            out.append((path, "type-mismatch", f"expected void, got {_value_label(value)}"))
        return
    if kind == "string":
        ok = isinstance(value, str)
    elif kind == "number":
        ok = is_number(value)
    elif kind == "boolean":
        ok = isinstance(value, bool)
    elif kind == "readable":
        ok = isinstance(value, (bytes, bytearray, str)) or hasattr(value, "read")
    elif kind == "map":
        ok = isinstance(value, dict)
        if ok:
            for k, v in value.items():
                check(typ[1], v, _join(path, str(k)), registry, out)
    elif kind == "array":
        ok = isinstance(value, (list, tuple))
        if ok:
            for i, v in enumerate(value):
                check(typ[1], v, _join(path, str(i)), registry, out)
    else:
        ok = isinstance(value, dict)
        if ok:
            _check_model(registry[typ[1]], value, path, registry, out)
    if not ok:
        out.append((path, "type-mismatch", f"expected {_type_label(typ)}, got {_value_label(value)}"))


def _check_model(cls, value: dict, prefix: str, registry: dict, out: list) -> None:
    for wire, _, typ, optional, constraints in cls._fields:
        path = _join(prefix, wire)
        v = value.get(wire)
        if v is None:
            if not optional:
                out.append((path, "missing-required", f"required field {wire!r} of {cls._name} is missing"))
            continue
        before = len(out)
        check(typ, v, path, registry, out)
        if len(out) == before:
            _check_constraints(constraints, v, path, out)


def _check_constraints(attrs: dict, value, path: str, out: list) -> None:
    pattern = attrs.get("pattern")
    if pattern is not None and (isinstance(value, str) or is_number(value)):
        text = value if isinstance(value, str) else render_scalar(value)
        if not pattern_matches(pattern, text):
            out.append((path, "pattern", f"{text!r} does not match {pattern!r}"))
    if is_number(value):
        lo, hi = attrs.get("min"), attrs.get("max")
        if lo is not None and value < lo:
            out.append((path, "min", f"{render_scalar(value)} < {render_scalar(lo)}"))
        if hi is not None and value > hi:
            out.append((path, "max", f"{render_scalar(value)} > {render_scalar(hi)}"))
    if isinstance(value, (str, list, tuple)):
        lo, hi = attrs.get("minLength"), attrs.get("maxLength")
        if lo is not None and len(value) < lo:
            out.append((path, "min", f"length {len(value)} < {lo}"))
        if hi is not None and len(value) > hi:
            out.append((path, "max", f"length {len(value)} > {hi}"))


def check_args(api: str, args: list, registry: dict) -> list:
    """Validate ``(name, value, type)`` triples; return plain copies of the values."""
    out: list = []
    values = []
    for name, value, typ in args:
        if value is None:
            out.append((name, "missing-required", f"argument {name!r} is required"))
            values.append(None)
            continue
        value = plain(value)
        check(typ, value, name, registry, out)
        values.append(value)
    if out:
        raise ValidationError(out, f"arguments for {api}")
    return values


def result(api: str, value, typ, registry: dict):
    """Validate an api result and decode model-typed parts into model objects."""
    out: list = []
    check(typ, value, "", registry, out)
    if out:
        raise ValidationError(out, f"result of {api}")
    return decode(typ, value, registry)
