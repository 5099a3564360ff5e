"""Tree-walking evaluation of api blocks."""

from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping

from ..frontend.syntax import (
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
    TemplateString,
    VarDecl,
)
from ..semantics.builtins import REQUEST, RESPONSE
from ..semantics.module import SemanticModule
from ..semantics.validate import ValidationReport, Violation, validate_typed
from ..values import is_number, render_scalar, strict_equal
from .exchange import HttpExchange, Readable, Request, Response, RuntimeConfig, Transport, TransportError

log = logging.getLogger(__name__)


class EvalError(Exception):
    pass


class UnknownApi(EvalError):
    pass


class UnboundBehavior(EvalError):
    pass


class ValidationFailed(Exception):
    def __init__(self, report: ValidationReport, what: str = "value"):
        self.report = report
        super().__init__(f"invalid {what}: {report}")


# --- builtin library ------------------------------------------------------


def _to_json(value) -> str:
    try:
        return json.dumps(value, ensure_ascii=False, separators=(",", ":"))
    except (TypeError, ValueError) as exc:
        raise EvalError(f"value is not JSON-serializable: {exc}") from None


def _from_json(text: str):
    try:
        return json.loads(text)
    except ValueError as exc:
        raise EvalError(f"invalid JSON: {exc}") from None


def _read_text(body) -> str:
    if not isinstance(body, Readable):
        raise EvalError("expected a readable body")
    try:
        return body.read().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EvalError(f"body is not UTF-8: {exc}") from None


UTIL_FUNCTIONS: dict[str, Callable] = {
    "readAsJSON": lambda body: _from_json(_read_text(body)),
    "readAsString": _read_text,
    "toJSONString": _to_json,
    "parseJSON": _from_json,
    "toReadable": lambda text: Readable(text),
}

BUILTIN_IMPLS: dict[str, dict[str, Callable]] = {"Util": UTIL_FUNCTIONS}


@dataclass(frozen=True)
class BehaviorRegistry:
    """Native implementations for declared behavior types, keyed by name."""

    bindings: Mapping[str, Callable] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "bindings", MappingProxyType(dict(self.bindings)))

    @classmethod
    def default(cls) -> BehaviorRegistry:
        return cls({"toJSONString": _to_json, "parseJSON": _from_json})

    def bind(self, **impls: Callable) -> BehaviorRegistry:
        return BehaviorRegistry({**self.bindings, **impls})

    def missing_for(self, api: ApiDecl) -> list[str]:
        return sorted(name for name in behaviors_used(api) if name not in self.bindings)


# --- environment ----------------------------------------------------------

_REQUEST_ATTRS = {
    "protocol": None, "port": None, "host": None,
    "method": "method", "pathname": "pathname", "query": "query", "headers": "headers", "body": "body",
}
_RESPONSE_ATTRS = {
    "statusCode": "status_code", "statusMessage": "status_message", "headers": "headers", "body": "body",
}


class RequestState:
    """Mutable view of ``__request`` while a request block runs."""

    def __init__(self):
        self.fields: dict[str, Any] = {}
        self.fields["query"] = {}
        self.fields["headers"] = {}

    def get(self, name: str):
        if name not in _REQUEST_ATTRS:
            raise EvalError(f"__request has no field {name!r}")
        return self.fields.get(name)

    def set(self, name: str, value) -> None:
        if name not in _REQUEST_ATTRS:
            raise EvalError(f"__request has no field {name!r}")
        self.fields[name] = value

    def finish(self, config: RuntimeConfig) -> HttpExchange:
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
        host = f.get("host")
        method = f.get("method")
        pathname = f.get("pathname")
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
            protocol=protocol,
            port=int(port),
            host=host or "",
            request=Request(
                method=method if method is not None else "GET",
                pathname=pathname or "",
                query=maps["query"],
                headers=maps["headers"],
                body=body.copy() if body is not None else None,
            ),
        )


class Environment:
    """Variable scopes plus the builtin request/response bindings."""

    def __init__(
        self,
        module: SemanticModule | None = None,
        registry: BehaviorRegistry | None = None,
        variables: Mapping[str, Any] | None = None,
    ):
        self.module = module
        self.registry = registry or BehaviorRegistry.default()
        self.scopes: list[dict[str, Any]] = [dict(variables or {})]
        self.request = RequestState()
        self.response: Response | None = None
        self.phase = "request"

    def push(self) -> None:
        self.scopes.append({})

    def pop(self) -> None:
        self.scopes.pop()

    def declare(self, name: str, value) -> None:
        self.scopes[-1][name] = value

    def lookup(self, name: str):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise EvalError(f"unknown name {name!r}")

    def rebind(self, name: str, value) -> None:
        for scope in reversed(self.scopes):
            if name in scope:
                scope[name] = value
                return
        raise EvalError(f"unknown name {name!r}")


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


# --- evaluation -----------------------------------------------------------


def _member(obj, name: str, where: str):
    if obj is None:
        raise EvalError(f"null dereference reading {name!r} of {where}")
    if isinstance(obj, dict):
        return obj.get(name)
    if isinstance(obj, RequestState):
        return obj.get(name)
    if isinstance(obj, Response):
        if name not in _RESPONSE_ATTRS:
            raise EvalError(f"__response has no field {name!r}")
        return getattr(obj, _RESPONSE_ATTRS[name])
    raise EvalError(f"cannot read member {name!r} of {where}")


def _eval_path(path: PathAccess, env: Environment):
    root = path.root
    if root == REQUEST:
        value = env.request
    elif root == RESPONSE:
        if env.response is None:
            raise EvalError("__response is not available before the request is sent")
        value = env.response
    else:
        value = env.lookup(root)
    where = root
    for seg in path.segments[1:]:
        value = _member(value, seg, where)
        where = f"{where}.{seg}"
    if isinstance(value, (RequestState, Response)):
        raise EvalError(f"{root} is not a value")
    return value


def _hole(value) -> str:
    if value is None:
        raise EvalError("null value in template hole")
    if isinstance(value, str):
        return value
    if isinstance(value, bool) or is_number(value):
        return render_scalar(value)
    raise EvalError(f"cannot interpolate a {type(value).__name__}")


def _truth(value, op: str) -> bool:
    if not isinstance(value, bool):
        raise EvalError(f"'{op}' needs boolean operands, got {render_scalar(value)!r}")
    return value


def eval_expr(expr, env: Environment):
    """Evaluate one expression strictly, left to right."""
    if isinstance(expr, (StringLit, NumberLit, BoolLit)):
        return expr.value
    if isinstance(expr, NullLit):
        return None
    if isinstance(expr, TemplateString):
        return "".join(p if isinstance(p, str) else _hole(eval_expr(p, env)) for p in expr.parts)
    if isinstance(expr, MapLit):
        out = {}
        for entry in expr.entries:
            out[entry.key] = eval_expr(entry.value, env)
        return out
    if isinstance(expr, PathAccess):
        return _eval_path(expr, env)
    if isinstance(expr, BinaryOp):
        op = expr.op
        if op == "&&":
            return _truth(eval_expr(expr.lhs, env), op) and _truth(eval_expr(expr.rhs, env), op)
        if op == "||":
            return _truth(eval_expr(expr.lhs, env), op) or _truth(eval_expr(expr.rhs, env), op)
        lhs = eval_expr(expr.lhs, env)
        rhs = eval_expr(expr.rhs, env)
        if op == "==":
            return strict_equal(lhs, rhs)
        if op == "!=":
            return not strict_equal(lhs, rhs)
        if isinstance(lhs, str) and isinstance(rhs, str):
            return lhs + rhs
        if is_number(lhs) and is_number(rhs):
            return lhs + rhs
        raise EvalError(f"cannot apply '+' to {type(lhs).__name__} and {type(rhs).__name__}")
    if isinstance(expr, Call):
        impl = BUILTIN_IMPLS.get(expr.module, {}).get(expr.method)
        if impl is None:
            raise EvalError(f"unknown function {expr.module}.{expr.method}")
        args = [eval_expr(a, env) for a in expr.args]
        return impl(*args)
    if isinstance(expr, BehaviorCall):
        impl = env.registry.bindings.get(expr.name)
        if impl is None:
            raise UnboundBehavior(f"behavior @{expr.name} has no implementation")
        args = [eval_expr(a, env) for a in expr.args]
        return impl(*args)
    raise EvalError(f"not an expression: {expr!r}")


def _assign(stmt: Assign, env: Environment) -> None:
    segments = stmt.target.segments
    root = segments[0]
    if root == RESPONSE:
        raise EvalError("__response is read-only")
    if root == REQUEST and env.phase != "request":
        raise EvalError("the returns block cannot modify __request")
    value = eval_expr(stmt.value, env)
    if len(segments) == 1:
        if root == REQUEST:
            raise EvalError("cannot replace __request")
        env.rebind(root, value)
        return
    container = env.request if root == REQUEST else env.lookup(root)
    where = root
    for seg in segments[1:-1]:
        container = _member(container, seg, where)
        where = f"{where}.{seg}"
    last = segments[-1]
    if isinstance(container, RequestState):
        container.set(last, value)
    elif isinstance(container, dict):
        container[last] = value
    elif container is None:
        raise EvalError(f"null dereference assigning {last!r} of {where}")
    else:
        raise EvalError(f"cannot assign member {last!r} of {where}")


def exec_block(stmts, env: Environment) -> None:
    for stmt in stmts:
        exec_stmt(stmt, env)


def _exec_scoped(stmts, env: Environment) -> None:
    env.push()
    try:
        exec_block(stmts, env)
    finally:
        env.pop()


def exec_stmt(stmt, env: Environment) -> None:
    if isinstance(stmt, VarDecl):
        env.declare(stmt.name, eval_expr(stmt.value, env))
    elif isinstance(stmt, Assign):
        _assign(stmt, env)
    elif isinstance(stmt, If):
        if _truth(eval_expr(stmt.cond, env), "if"):
            _exec_scoped(stmt.then, env)
            return
        for branch in stmt.elifs:
            if _truth(eval_expr(branch.cond, env), "if"):
                _exec_scoped(branch.body, env)
                return
        if stmt.orelse is not None:
            _exec_scoped(stmt.orelse, env)
    elif isinstance(stmt, Return):
        if env.phase == "request":
            raise EvalError("return inside a request block")
        raise _ReturnSignal(eval_expr(stmt.value, env))
    elif isinstance(stmt, ExprStmt):
        eval_expr(stmt.expr, env)
    else:
        raise EvalError(f"not a statement: {stmt!r}")


# --- api execution --------------------------------------------------------


def behaviors_used(api: ApiDecl) -> set[str]:
    found: set[str] = set()

    def walk(node) -> None:
        if isinstance(node, BehaviorCall):
            found.add(node.name)
        if isinstance(node, (list, tuple)):
            for item in node:
                walk(item)
            return
        fields = getattr(node, "__dataclass_fields__", None)
        if fields:
            for name in fields:
                if name != "span":
                    walk(getattr(node, name))

    walk(api.request_block)
    walk(api.returns_block)
    return found


def _lookup_api(module: SemanticModule, api: str) -> ApiDecl:
    module.require_ok()
    decl = module.apis.get(api)
    if decl is None:
        raise UnknownApi(f"unknown api {api!r}")
    return decl


def _bind_args(module: SemanticModule, decl: ApiDecl, args: Mapping[str, Any]) -> dict[str, Any]:
    extra = sorted(set(args) - {p.name for p in decl.params})
    if extra:
        raise EvalError(f"unexpected argument(s) for {decl.name}: {', '.join(extra)}")
    violations: list[Violation] = []
    bound = {}
    for p in decl.params:
        if args.get(p.name) is None:
            violations.append(Violation(p.name, "missing-required", f"argument {p.name!r} is required"))
            continue
        report = validate_typed(p.type, args[p.name], module, p.name)
        violations.extend(report.violations)
        bound[p.name] = copy.deepcopy(args[p.name])
    if violations:
        raise ValidationFailed(ValidationReport(tuple(violations)), f"arguments for {decl.name}")
    return bound


def _run_request(
    module: SemanticModule,
    decl: ApiDecl,
    args: Mapping[str, Any],
    config: RuntimeConfig,
    registry: BehaviorRegistry | None,
) -> tuple[HttpExchange, Environment]:
    env = Environment(module, registry, _bind_args(module, decl, args))
    exec_block(decl.request_block, env)
    return env.request.finish(config), env


def build_request(
    module: SemanticModule,
    api: str,
    args: Mapping[str, Any],
    config: RuntimeConfig | None = None,
    registry: BehaviorRegistry | None = None,
) -> HttpExchange:
    """Run only the request block of ``api`` and return the populated exchange.

    Fields the block leaves unset take defaults from ``config``. No
    transport I/O happens here.
    """
    decl = _lookup_api(module, api)
    exchange, _ = _run_request(module, decl, args, config or RuntimeConfig(), registry)
    return exchange


def send_with_retry(
    transport: Transport,
    exchange: HttpExchange,
    config: RuntimeConfig,
    sleep: Callable[[float], None] = time.sleep,
) -> Response:
    """Send with fixed-interval retries on transport-level failures only.

    Each attempt gets its own copy of the exchange, so a misbehaving
    transport cannot alter what later attempts (or the caller) see.
    """
    attempts = config.retry_times + 1
    for attempt in range(1, attempts + 1):
        try:
            response = transport.send(exchange.copy(), config.timeout_ms)
        except OSError as exc:
            if attempt == attempts:
                raise TransportError(f"{exc} (after {attempt} attempt(s))", attempts=attempt) from exc
            log.debug("attempt %d/%d failed: %s", attempt, attempts, exc)
            if config.backoff_ms:
                sleep(config.backoff_ms / 1000)
            continue
        if not isinstance(response, Response):
            response = Response(
                response.status_code, response.status_message, dict(response.headers), response.body
            )
        return response
    raise AssertionError("unreachable")


def invoke(
    module: SemanticModule,
    api: str,
    args: Mapping[str, Any],
    transport: Transport,
    registry: BehaviorRegistry | None = None,
    config: RuntimeConfig | None = None,
    *,
    sleep: Callable[[float], None] = time.sleep,
):
    """Build the request, send it, and evaluate the returns block.

    Non-2xx responses are handed to the returns block like any other; only
    transport failures are retried. The result is checked against the
    declared return type.
    """
    config = config or RuntimeConfig()
    registry = registry or BehaviorRegistry.default()
    decl = _lookup_api(module, api)
    missing = registry.missing_for(decl)
    if missing:
        raise UnboundBehavior("no implementation bound for " + ", ".join("@" + m for m in missing))

    exchange, env = _run_request(module, decl, args, config, registry)
    response = send_with_retry(transport, exchange, config, sleep)
    exchange.response = response

    env.response = response
    env.phase = "returns"
    result = None
    env.push()
    try:
        exec_block(decl.returns_block, env)
    except _ReturnSignal as ret:
        result = ret.value
    finally:
        env.pop()
    report = validate_typed(decl.return_type, result, module, "")
    if not report.ok:
        raise ValidationFailed(report, f"result of {decl.name}")
    return result
