"""Python target: an importable package driven by a small bundled core."""

from __future__ import annotations

import keyword
import math
from importlib import resources
from typing import Mapping

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
    TypeExpr,
    TypeKind,
    VarDecl,
)
from ..semantics.builtins import REQUEST, RESPONSE
from ..semantics.checker import always_returns
from ..semantics.module import SemanticModule
from .base import PY_RESERVED, CodeWriter, EmitterTarget, FileSet, IdentifierStyle, NameScope, UnsupportedConstruct, apply_style

UTIL_NAMES = {
    "readAsJSON": "read_as_json",
    "readAsString": "read_as_string",
    "toJSONString": "to_json_string",
    "parseJSON": "parse_json",
    "toReadable": "to_readable",
}

# behavior types with a stock implementation in the core
DEFAULT_BEHAVIORS = {"toJSONString": "to_json_string", "parseJSON": "parse_json"}

HEADER = "Generated by teaforge; do not edit."
TARGET_ID = "python"


def core_source() -> str:
    return resources.files(__package__).joinpath("cores/python_core.py").read_text(encoding="utf-8")


def py_literal(value) -> str:
    """Python source for a JSON-like value."""
    if value is None:
        return "None"
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, int):
        return repr(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return f"float({repr(value)!r})"
        return repr(value)
    if isinstance(value, str):
        return repr(value)
    if isinstance(value, Mapping):
        return "{" + ", ".join(f"{py_literal(str(k))}: {py_literal(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(py_literal(v) for v in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__} as a literal")


def type_desc(t: TypeExpr) -> str:
    """Runtime type descriptor understood by ``core.check``."""
    if t.kind is TypeKind.MAP:
        return f"('map', {type_desc(t.value)})"
    if t.kind is TypeKind.ARRAY:
        return f"('array', {type_desc(t.element)})"
    if t.kind is TypeKind.NAMED:
        return f"('model', {t.name!r})"
    return f"({t.kind.value!r},)"


def _safe(name: str) -> str:
    return name + "_" if keyword.iskeyword(name) or name in PY_RESERVED else name


class _Names:
    """Module-level naming decisions shared by every file of one emission."""

    def __init__(self, module: SemanticModule, target: EmitterTarget):
        self.target = target
        self.models: dict[str, str] = {}
        self.fields: dict[str, dict[str, str]] = {}
        self.methods: dict[str, str] = {}
        self.behaviors: dict[str, str] = {}
        taken = {"Client", "Behaviors", "MODELS", "Model"}
        for name, decl in module.models.items():
            cls = _safe(apply_style(name, IdentifierStyle.PASCAL))
            self._claim(taken, cls, decl.span, f"model {name}")
            self.models[name] = cls
            attrs: set[str] = {"to_map", "from_map"}
            self.fields[name] = {}
            for f in decl.fields:
                attr = _safe(apply_style(f.name, IdentifierStyle.SNAKE))
                if attr.startswith("_"):
                    attr = "f" + attr
                self._claim(attrs, attr, f.span, f"field {name}.{f.name}")
                self.fields[name][f.name] = attr
        # instance attributes of the generated Client
        methods: set[str] = {"transport", "behaviors", "config", "sleep", "APIS"}
        for name, decl in module.apis.items():
            meth = _safe(target.style(name))
            self._claim(methods, meth, decl.span, f"api {name}")
            self.methods[name] = meth
        hooks: set[str] = {"HOOKS"}
        for name, decl in module.behaviors.items():
            hook = _safe(target.style(name))
            self._claim(hooks, hook, decl.span, f"behavior @{name}")
            self.behaviors[name] = hook

    @staticmethod
    def _claim(taken: set[str], name: str, span, what: str) -> None:
        if name in taken or name.startswith("__"):
            raise UnsupportedConstruct(TARGET_ID, span, f"{what} maps to the identifier {name!r}, which is already used")
        taken.add(name)


class _ApiWriter:
    """Emits one client method by structural recursion over the api block."""

    LOCAL_RESERVED = PY_RESERVED | {"request", "response", "exchange", "value", "MODELS", "Client", "Behaviors"}

    def __init__(self, names: _Names, decl: ApiDecl, out: CodeWriter):
        self.names = names
        self.decl = decl
        self.out = out
        self.scope = NameScope(self.LOCAL_RESERVED | set(names.models.values()))
        self.params = [self.scope.declare(p.name, _safe(apply_style(p.name, IdentifierStyle.SNAKE)) or "arg") for p in decl.params]

    # expressions

    def expr(self, e, scope: NameScope) -> str:
        if isinstance(e, StringLit):
            return self.names.target.quote(e.value)
        if isinstance(e, (NumberLit, BoolLit)):
            return py_literal(e.value)
        if isinstance(e, NullLit):
            return "None"
        if isinstance(e, TemplateString):
            parts = [self.names.target.quote(p) if isinstance(p, str) else f"core.hole({self.expr(p, scope)})" for p in e.parts]
            if len(parts) == 1 and isinstance(e.parts[0], str):
                return parts[0]
            return '"".join((' + ", ".join(parts) + ",))"
        if isinstance(e, MapLit):
            items = ", ".join(f"{self.names.target.quote(en.key)}: {self.expr(en.value, scope)}" for en in e.entries)
            return "{" + items + "}"
        if isinstance(e, PathAccess):
            return self.path(e.segments, scope)
        if isinstance(e, BinaryOp):
            lhs, rhs = self.expr(e.lhs, scope), self.expr(e.rhs, scope)
            if e.op == "&&":
                return f'(core.truth({lhs}, "&&") and core.truth({rhs}, "&&"))'
            if e.op == "||":
                return f'(core.truth({lhs}, "||") or core.truth({rhs}, "||"))'
            if e.op == "==":
                return f"core.eq({lhs}, {rhs})"
            if e.op == "!=":
                return f"(not core.eq({lhs}, {rhs}))"
            return f"core.plus({lhs}, {rhs})"
        if isinstance(e, Call):
            fn = UTIL_NAMES.get(e.method) if e.module == "Util" else None
            if fn is None:
                raise UnsupportedConstruct(TARGET_ID, e.span, f"no binding for {e.module}.{e.method}")
            return f"core.{fn}(" + ", ".join(self.expr(a, scope) for a in e.args) + ")"
        if isinstance(e, BehaviorCall):
            hook = self.names.behaviors[e.name]
            return f"self.behaviors.{hook}(" + ", ".join(self.expr(a, scope) for a in e.args) + ")"
        raise UnsupportedConstruct(TARGET_ID, getattr(e, "span", None), f"cannot emit {type(e).__name__}")

    def path(self, segments: tuple[str, ...], scope: NameScope) -> str:
        root = segments[0]
        if root == REQUEST:
            code = f"request.get({segments[1]!r})"
            rest, where = segments[2:], f"{REQUEST}.{segments[1]}"
        elif root == RESPONSE:
            code, rest, where = "response", segments[1:], RESPONSE
        else:
            code, rest, where = scope.lookup(root), segments[1:], root
        for seg in rest:
            code = f"core.member({code}, {seg!r}, {where!r})"
            where = f"{where}.{seg}"
        return code

    # statements

    def block(self, stmts, scope: NameScope) -> None:
        if not stmts:
            self.out.line("pass")
        for s in stmts:
            self.stmt(s, scope)

    def stmt(self, s, scope: NameScope) -> None:
        out = self.out
        if isinstance(s, VarDecl):
            value = self.expr(s.value, scope)
            out.line(f"{scope.declare(s.name, _safe(apply_style(s.name, IdentifierStyle.SNAKE)) or 'v')} = {value}")
        elif isinstance(s, Assign):
            segs = s.target.segments
            value = self.expr(s.value, scope)
            if len(segs) == 1:
                out.line(f"{scope.lookup(segs[0])} = {value}")
            elif segs[0] == REQUEST and len(segs) == 2:
                out.line(f"request.set({segs[1]!r}, {value})")
            else:
                # the value is evaluated before the target container
                out.line(f"value = {value}")
                where = ".".join(segs[:-1])
                out.line(f"core.set_member({self.path(segs[:-1], scope)}, {segs[-1]!r}, value, {where!r})")
        elif isinstance(s, If):
            out.line(f'if core.truth({self.expr(s.cond, scope)}, "if"):')
            self.nested(s.then, scope)
            for branch in s.elifs:
                out.line(f'elif core.truth({self.expr(branch.cond, scope)}, "if"):')
                self.nested(branch.body, scope)
            if s.orelse is not None:
                out.line("else:")
                self.nested(s.orelse, scope)
        elif isinstance(s, Return):
            out.line(f"return self._result({self.decl.name!r}, {self.expr(s.value, scope)}, {type_desc(self.decl.return_type)})")
        elif isinstance(s, ExprStmt):
            out.line(self.expr(s.expr, scope))
        else:
            raise UnsupportedConstruct(TARGET_ID, getattr(s, "span", None), f"cannot emit {type(s).__name__}")

    def nested(self, stmts, scope: NameScope) -> None:
        self.out.indent()
        self.block(stmts, scope.child())
        self.out.dedent()

    def method(self) -> None:
        decl, out = self.decl, self.out
        params = self.params
        sig = "".join(f", {p}" for p in params)
        out.line(f"def {self.names.methods[decl.name]}(self{sig}):")
        out.indent()
        out.line(f'"""Call ``{decl.name}``; returns {decl.return_type}."""')
        if params:
            triples = ", ".join(f"({p.name!r}, {name}, {type_desc(p.type)})" for p, name in zip(decl.params, params))
            lhs = ", ".join(params) + ("," if len(params) == 1 else "")
            out.line(f"{lhs} = core.check_args({decl.name!r}, [{triples}], MODELS)")
        out.line("request = core.RequestState()")
        for s in decl.request_block:
            self.stmt(s, self.scope)
        out.line("exchange = request.finish(self.config)")
        out.line("response = core.send_with_retry(self.transport, exchange, self.config, self.sleep)")
        out.line("exchange.response = response")
        returns = self.scope.child()
        for s in decl.returns_block:
            self.stmt(s, returns)
        if not always_returns(decl.returns_block):
            out.line(f"return self._result({decl.name!r}, None, {type_desc(decl.return_type)})")
        out.dedent()


class PythonEmitter:
    def emit_module(self, module: SemanticModule, target: EmitterTarget) -> FileSet:
        module.require_ok()
        names = _Names(module, target)
        pkg = "teasdk"
        files = FileSet()
        files.add(f"{pkg}/core.py", core_source())
        if module.models:
            files.add(f"{pkg}/models.py", self._models(module, names))
        files.add(f"{pkg}/client.py", self._client(module, names))
        files.add(f"{pkg}/__init__.py", self._init(module, names))
        return files

    def _init(self, module: SemanticModule, names: _Names) -> str:
        w = CodeWriter()
        w.line(f'"""SDK for the {module.name!r} module. {HEADER}"""')
        w.line()
        w.line("from .client import Behaviors, Client")
        exported = ["Behaviors", "Client"]
        if module.models:
            classes = [names.models[m] for m in module.models]
            w.line(f"from .models import MODELS, {', '.join(classes)}")
            exported += ["MODELS", *classes]
        w.line()
        w.line(f"__all__ = {py_literal(exported)}")
        return w.text()

    def _models(self, module: SemanticModule, names: _Names) -> str:
        w = CodeWriter()
        w.line(f'"""Data models. {HEADER}"""')
        w.line()
        w.line("from . import core")
        for name, decl in module.models.items():
            attrs = names.fields[name]
            w.line()
            w.line()
            w.line(f"class {names.models[name]}(core.Model):")
            w.indent()
            w.line(f"_name = {name!r}")
            w.line("# (wire name, attribute, type, optional, constraints)")
            w.line("_fields = [")
            w.indent()
            for f in decl.fields:
                constraints = py_literal(dict(f.attributes))
                w.line(f"({f.name!r}, {attrs[f.name]!r}, {type_desc(f.type)}, {f.optional!r}, {constraints}),")
            w.dedent()
            w.line("]")
            w.line()
            sig = "".join(f", {attrs[f.name]}=None" for f in decl.fields)
            w.line(f"def __init__(self{sig}):")
            w.indent()
            for f in decl.fields:
                w.line(f"self.{attrs[f.name]} = {attrs[f.name]}")
            w.line("self._extra = {}")
            w.dedent()
            w.dedent()
        w.line()
        w.line()
        entries = ", ".join(f"{name!r}: {names.models[name]}" for name in module.models)
        w.line(f"MODELS = {{{entries}}}")
        return w.text()

    def _client(self, module: SemanticModule, names: _Names) -> str:
        w = CodeWriter()
        w.line(f'"""Api client. {HEADER}"""')
        w.line()
        w.line("import time")
        w.line()
        w.line("from . import core")
        if module.models:
            w.line("from .models import MODELS")
        else:
            w.line()
            w.line("MODELS = {}")
        w.line()
        w.line()
        w.line("class Behaviors:")
        w.indent()
        w.line('"""Implementations of the declared behavior types; override as needed."""')
        w.line()
        w.line("# behavior type -> method name")
        w.line(f"HOOKS = {py_literal(names.behaviors)}")
        for name, decl in module.behaviors.items():
            args = [f"arg{i}" for i in range(len(decl.param_types))]
            w.line()
            w.line(f"def {names.behaviors[name]}(self{''.join(', ' + a for a in args)}):")
            w.indent()
            w.line(f'"""@{name}: ({", ".join(str(t) for t in decl.param_types)}): {decl.return_type}"""')
            if name in DEFAULT_BEHAVIORS and len(args) == 1:
                w.line(f"return core.{DEFAULT_BEHAVIORS[name]}({args[0]})")
            else:
                w.line(f'raise NotImplementedError("no implementation bound for @{name}")')
            w.dedent()
        w.dedent()
        w.line()
        w.line()
        w.line("class Client:")
        w.indent()
        w.line("# api name -> method name")
        w.line(f"APIS = {py_literal(names.methods)}")
        w.line()
        w.line("def __init__(self, transport=None, behaviors=None, config=None, sleep=time.sleep):")
        w.indent()
        w.line("self.transport = transport if transport is not None else core.get_default_transport()")
        w.line("self.behaviors = behaviors if behaviors is not None else Behaviors()")
        w.line("self.config = config if config is not None else core.Config()")
        w.line("self.sleep = sleep")
        w.dedent()
        w.line()
        w.line("@staticmethod")
        w.line("def _result(api, value, typ):")
        w.indent()
        w.line("return core.result(api, value, typ, MODELS)")
        w.dedent()
        for decl in module.apis.values():
            w.line()
            _ApiWriter(names, decl, w).method()
        w.dedent()
        return w.text()

    def emit_code_sample(self, module: SemanticModule, api: str, args: Mapping, target: EmitterTarget) -> str:
        names = _Names(module, target)
        decl = module.apis[api]
        w = CodeWriter()
        used: set[str] = set()
        setup: list[str] = []
        call_args = []
        taken = {"client", "result"} | set(PY_RESERVED)
        param_names = _ApiWriter(names, decl, w).params
        for p, kw in zip(decl.params, param_names):
            value = args[p.name]
            code = self._sample_value(p.type, value, module, names, used)
            if p.type.kind is TypeKind.NAMED:
                var = _safe(apply_style(p.name, IdentifierStyle.SNAKE)) or "arg"
                while var in taken or var in names.models.values():
                    var += "_"
                taken.add(var)
                setup.append(f"{var} = {code}")
                code = var
            call_args.append(f"{kw}={code}")
        w.line("from teasdk import Client")
        if used:
            w.line(f"from teasdk.models import {', '.join(sorted(used))}")
        w.line()
        for line in setup:
            w.line(line)
        w.line("client = Client()")
        w.line(f"result = client.{names.methods[api]}({', '.join(call_args)})")
        w.line("print(result)")
        return w.text()

    def _sample_value(self, t: TypeExpr, value, module: SemanticModule, names: _Names, used: set[str]) -> str:
        if value is None:
            return "None"
        if t.kind is TypeKind.NAMED and isinstance(value, Mapping):
            decl = module.models[t.name]
            cls = names.models[t.name]
            used.add(cls)
            known = {f.name for f in decl.fields}
            if set(value) - known:
                used.add("MODELS")
                return f"{cls}.from_map({py_literal(value)}, MODELS)"
            parts = [
                f"{names.fields[t.name][f.name]}={self._sample_value(f.type, value[f.name], module, names, used)}"
                for f in decl.fields
                if f.name in value
            ]
            return f"{cls}({', '.join(parts)})"
        if t.kind is TypeKind.ARRAY and isinstance(value, (list, tuple)):
            return "[" + ", ".join(self._sample_value(t.element, v, module, names, used) for v in value) + "]"
        if t.kind is TypeKind.MAP and isinstance(value, Mapping):
            inner = ", ".join(f"{py_literal(str(k))}: {self._sample_value(t.value, v, module, names, used)}" for k, v in value.items())
            return "{" + inner + "}"
        return py_literal(value)
