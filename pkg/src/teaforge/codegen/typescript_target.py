"""TypeScript target: typed interfaces plus an async client over a bundled core."""

from __future__ import annotations

import json
import math
import re
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
from .base import CodeWriter, EmitterTarget, FileSet, IdentifierStyle, NameScope, UnsupportedConstruct, apply_style

TARGET_ID = "typescript"
HEADER = "// Generated by teaforge; do not edit."

TS_RESERVED = {
    "break", "case", "catch", "class", "const", "continue", "debugger", "default", "delete", "do", "else",
    "enum", "export", "extends", "false", "finally", "for", "function", "if", "import", "in", "instanceof",
    "new", "null", "return", "super", "switch", "this", "throw", "true", "try", "typeof", "var", "void",
    "while", "with", "as", "implements", "interface", "let", "package", "private", "protected", "public",
    "static", "yield", "await", "async", "arguments", "eval", "undefined", "any", "string", "number",
    "boolean", "constructor",
}

UTIL_NAMES = {name: name for name in ("readAsJSON", "readAsString", "toJSONString", "parseJSON", "toReadable")}
DEFAULT_BEHAVIORS = {"toJSONString", "parseJSON"}

_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*\Z")


def core_source() -> str:
    return resources.files(__package__).joinpath("cores/ts_core.ts").read_text(encoding="utf-8")


def ts_quote(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


def ts_literal(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            return "NaN" if math.isnan(value) else ("Infinity" if value > 0 else "-Infinity")
        return repr(value)
    if isinstance(value, str):
        return ts_quote(value)
    if isinstance(value, Mapping):
        return "{ " + ", ".join(f"{prop_key(str(k))}: {ts_literal(v)}" for k, v in value.items()) + " }" if value else "{}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(ts_literal(v) for v in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__} as a literal")


def prop_key(name: str) -> str:
    return name if _IDENT.match(name) and name != "__proto__" else ts_quote(name)


def type_desc(t: TypeExpr) -> str:
    if t.kind is TypeKind.MAP:
        return f'["map", {type_desc(t.value)}]'
    if t.kind is TypeKind.ARRAY:
        return f'["array", {type_desc(t.element)}]'
    if t.kind is TypeKind.NAMED:
        return f'["model", {ts_quote(t.name)}]'
    return f'["{t.kind.value}"]'


def _safe(name: str) -> str:
    return name + "_" if name in TS_RESERVED else name


class _Names:
    def __init__(self, module: SemanticModule, target: EmitterTarget):
        self.target = target
        self.models: dict[str, str] = {}
        self.methods: dict[str, str] = {}
        self.behaviors: dict[str, str] = {}
        taken = {"Client", "Behaviors", "MODELS", "core"}
        for name, decl in module.models.items():
            self.models[name] = self._claim(taken, _safe(apply_style(name, IdentifierStyle.PASCAL)), decl.span, f"model {name}")
        methods = {"transport", "behaviors", "config"}
        for name, decl in module.apis.items():
            self.methods[name] = self._claim(methods, _safe(target.style(name)), decl.span, f"api {name}")
        hooks: set[str] = set()
        for name, decl in module.behaviors.items():
            self.behaviors[name] = self._claim(hooks, _safe(target.style(name)), decl.span, f"behavior @{name}")

    @staticmethod
    def _claim(taken: set[str], name: str, span, what: str) -> str:
        if name in taken or not _IDENT.match(name):
            raise UnsupportedConstruct(TARGET_ID, span, f"{what} maps to the identifier {name!r}, which is unusable")
        taken.add(name)
        return name

    def type_name(self, t: TypeExpr) -> str:
        if t.kind is TypeKind.NAMED:
            return self.models[t.name]
        if t.kind is TypeKind.MAP:
            return f"{{ [key: string]: {self.type_name(t.value)} }}"
        if t.kind is TypeKind.ARRAY:
            inner = self.type_name(t.element)
            return f"({inner})[]" if " " in inner else f"{inner}[]"
        return self.target.type_names[t.kind]


class _ApiWriter:
    LOCAL_RESERVED = TS_RESERVED | {"core", "request", "response", "exchange", "value", "checked", "MODELS", "Client", "Behaviors", "this"}

    def __init__(self, names: _Names, decl: ApiDecl, out: CodeWriter):
        self.names = names
        self.decl = decl
        self.out = out
        self.scope = NameScope(self.LOCAL_RESERVED | set(names.models.values()))
        self.params = [self.scope.declare(p.name, _safe(apply_style(p.name, IdentifierStyle.CAMEL)) or "arg") for p in decl.params]

    def expr(self, e, scope: NameScope) -> str:
        if isinstance(e, StringLit):
            return ts_quote(e.value)
        if isinstance(e, (NumberLit, BoolLit)):
            return ts_literal(e.value)
        if isinstance(e, NullLit):
            return "null"
        if isinstance(e, TemplateString):
            parts = [ts_quote(p) if isinstance(p, str) else f"core.hole({self.expr(p, scope)})" for p in e.parts]
            if len(parts) == 1 and isinstance(e.parts[0], str):
                return parts[0]
            return "[" + ", ".join(parts) + '].join("")'
        if isinstance(e, MapLit):
            return "core.mapOf([" + ", ".join(f"[{ts_quote(en.key)}, {self.expr(en.value, scope)}]" for en in e.entries) + "])"
        if isinstance(e, PathAccess):
            return self.path(e.segments, scope)
        if isinstance(e, BinaryOp):
            lhs, rhs = self.expr(e.lhs, scope), self.expr(e.rhs, scope)
            if e.op in ("&&", "||"):
                return f'(core.truth({lhs}, "{e.op}") {e.op} core.truth({rhs}, "{e.op}"))'
            if e.op == "==":
                return f"core.eq({lhs}, {rhs})"
            if e.op == "!=":
                return f"!core.eq({lhs}, {rhs})"
            return f"core.plus({lhs}, {rhs})"
        if isinstance(e, Call):
            fn = UTIL_NAMES.get(e.method) if e.module == "Util" else None
            if fn is None:
                raise UnsupportedConstruct(TARGET_ID, e.span, f"no binding for {e.module}.{e.method}")
            return f"core.{fn}(" + ", ".join(self.expr(a, scope) for a in e.args) + ")"
        if isinstance(e, BehaviorCall):
            args = ", ".join(self.expr(a, scope) for a in e.args)
            return f"this.behaviors.{self.names.behaviors[e.name]}({args})"
        raise UnsupportedConstruct(TARGET_ID, getattr(e, "span", None), f"cannot emit {type(e).__name__}")

    def path(self, segments: tuple[str, ...], scope: NameScope) -> str:
        root = segments[0]
        if root == REQUEST:
            code, rest, where = f"request.get({ts_quote(segments[1])})", segments[2:], f"{REQUEST}.{segments[1]}"
        elif root == RESPONSE:
            code, rest, where = f"core.responseField(response, {ts_quote(segments[1])})", segments[2:], f"{RESPONSE}.{segments[1]}"
        else:
            code, rest, where = scope.lookup(root), segments[1:], root
        for seg in rest:
            code = f"core.member({code}, {ts_quote(seg)}, {ts_quote(where)})"
            where = f"{where}.{seg}"
        return code

    def stmt(self, s, scope: NameScope) -> None:
        out = self.out
        if isinstance(s, VarDecl):
            value = self.expr(s.value, scope)
            out.line(f"let {scope.declare(s.name, _safe(apply_style(s.name, IdentifierStyle.CAMEL)) or 'v')}: any = {value};")
        elif isinstance(s, Assign):
            segs = s.target.segments
            value = self.expr(s.value, scope)
            if len(segs) == 1:
                out.line(f"{scope.lookup(segs[0])} = {value};")
            elif segs[0] == REQUEST and len(segs) == 2:
                out.line(f"request.set({ts_quote(segs[1])}, {value});")
            else:
                out.line(f"value = {value};")
                where = ".".join(segs[:-1])
                out.line(f"core.setMember({self.path(segs[:-1], scope)}, {ts_quote(segs[-1])}, value, {ts_quote(where)});")
        elif isinstance(s, If):
            out.line(f'if (core.truth({self.expr(s.cond, scope)}, "if")) {{')
            self.nested(s.then, scope)
            for branch in s.elifs:
                out.line(f'}} else if (core.truth({self.expr(branch.cond, scope)}, "if")) {{')
                self.nested(branch.body, scope)
            if s.orelse is not None:
                out.line("} else {")
                self.nested(s.orelse, scope)
            out.line("}")
        elif isinstance(s, Return):
            out.line(f"return core.result({ts_quote(self.decl.name)}, {self.expr(s.value, scope)}, {type_desc(self.decl.return_type)}, MODELS);")
        elif isinstance(s, ExprStmt):
            out.line(self.expr(s.expr, scope) + ";")
        else:
            raise UnsupportedConstruct(TARGET_ID, getattr(s, "span", None), f"cannot emit {type(s).__name__}")

    def nested(self, stmts, scope: NameScope) -> None:
        self.out.indent()
        child = scope.child()
        for s in stmts:
            self.stmt(s, child)
        self.out.dedent()

    def method(self) -> None:
        decl, out, names = self.decl, self.out, self.names
        sig = ", ".join(f"{n}: {names.type_name(p.type)}" for p, n in zip(decl.params, self.params))
        ret = names.type_name(decl.return_type)
        out.line(f"/** Call `{decl.name}`; resolves to {decl.return_type}. */")
        out.line(f"async {names.methods[decl.name]}({sig}): Promise<{ret}> {{")
        out.indent()
        if self.params:
            triples = ", ".join(f"[{ts_quote(p.name)}, {n}, {type_desc(p.type)}]" for p, n in zip(decl.params, self.params))
            out.line(f"const checked = core.checkArgs({ts_quote(decl.name)}, [{triples}], MODELS);")
            for i, n in enumerate(self.params):
                out.line(f"{n} = checked[{i}];")
        out.line("let value: any = null;")
        out.line("const request = new core.RequestState();")
        for s in decl.request_block:
            self.stmt(s, self.scope)
        out.line("const exchange = request.finish(this.config);")
        out.line("const response = await core.sendWithRetry(this.transport, exchange, this.config);")
        out.line("exchange.response = response;")
        returns = self.scope.child()
        for s in decl.returns_block:
            self.stmt(s, returns)
        if not always_returns(decl.returns_block):
            out.line(f"return core.result({ts_quote(decl.name)}, null, {type_desc(decl.return_type)}, MODELS);")
        out.dedent()
        out.line("}")


class TypeScriptEmitter:
    def emit_module(self, module: SemanticModule, target: EmitterTarget) -> FileSet:
        module.require_ok()
        names = _Names(module, target)
        files = FileSet()
        files.add("teasdk/core.ts", core_source())
        if module.models:
            files.add("teasdk/models.ts", self._models(module, names))
        files.add("teasdk/client.ts", self._client(module, names))
        files.add("teasdk/index.ts", self._index(module, names))
        return files

    def _index(self, module: SemanticModule, names: _Names) -> str:
        w = CodeWriter("  ")
        w.line(HEADER)
        w.line('export { Behaviors, Client } from "./client";')
        if module.models:
            w.line(f'export {{ MODELS, {", ".join(names.models.values())} }} from "./models";')
        w.line('export * as core from "./core";')
        return w.text()

    def _models(self, module: SemanticModule, names: _Names) -> str:
        w = CodeWriter("  ")
        w.line(HEADER)
        w.line('import * as core from "./core";')
        for name, decl in module.models.items():
            w.line()
            w.line(f"export interface {names.models[name]} {{")
            w.indent()
            for f in decl.fields:
                opt = "?" if f.optional else ""
                w.line(f"{prop_key(f.name)}{opt}: {names.type_name(f.type)}{' | null' if f.optional else ''};")
            w.dedent()
            w.line("}")
        w.line()
        w.line("export const MODELS: core.ModelRegistry = {")
        w.indent()
        for name, decl in module.models.items():
            w.line(f"{prop_key(name)}: {{")
            w.indent()
            w.line(f"name: {ts_quote(name)},")
            w.line("fields: [")
            w.indent()
            for f in decl.fields:
                w.line(
                    f"{{ wire: {ts_quote(f.name)}, type: {type_desc(f.type)}, optional: {ts_literal(f.optional)}, "
                    f"constraints: {ts_literal(dict(f.attributes))} }},"
                )
            w.dedent()
            w.line("],")
            w.dedent()
            w.line("},")
        w.dedent()
        w.line("};")
        return w.text()

    def _client(self, module: SemanticModule, names: _Names) -> str:
        w = CodeWriter("  ")
        w.line(HEADER)
        w.line('import * as core from "./core";')
        if module.models:
            w.line(f'import {{ MODELS }} from "./models";')
            w.line(f'import type {{ {", ".join(names.models.values())} }} from "./models";')
        else:
            w.line()
            w.line("const MODELS: core.ModelRegistry = {};")
        w.line()
        w.line("/** Implementations of the declared behavior types; override as needed. */")
        w.line("export class Behaviors {")
        w.indent()
        for name, decl in module.behaviors.items():
            params = ", ".join(f"arg{i}: {names.type_name(t)}" for i, t in enumerate(decl.param_types))
            w.line(f"{names.behaviors[name]}({params}): {names.type_name(decl.return_type)} {{")
            w.indent()
            if name in DEFAULT_BEHAVIORS and len(decl.param_types) == 1:
                w.line(f"return core.{name}(arg0);")
            else:
                w.line(f'throw new Error("no implementation bound for @{name}");')
            w.dedent()
            w.line("}")
        w.dedent()
        w.line("}")
        w.line()
        w.line("export class Client {")
        w.indent()
        w.line("transport: core.Transport;")
        w.line("behaviors: Behaviors;")
        w.line("config: core.Config;")
        w.line()
        w.line("constructor(transport?: core.Transport, behaviors?: Behaviors, config?: core.Config) {")
        w.indent()
        w.line("this.transport = transport ?? core.getDefaultTransport();")
        w.line("this.behaviors = behaviors ?? new Behaviors();")
        w.line("this.config = config ?? new core.Config();")
        w.dedent()
        w.line("}")
        for decl in module.apis.values():
            w.line()
            _ApiWriter(names, decl, w).method()
        w.dedent()
        w.line("}")
        return w.text()

    def emit_code_sample(self, module: SemanticModule, api: str, args: Mapping, target: EmitterTarget) -> str:
        names = _Names(module, target)
        decl = module.apis[api]
        used: set[str] = set()
        setup, call_args = [], []
        taken = {"client", "result", "main"} | TS_RESERVED
        for p, pname in zip(decl.params, _ApiWriter(names, decl, CodeWriter()).params):
            code = ts_literal(args[p.name])
            if p.type.kind is TypeKind.NAMED:
                cls = names.models[p.type.name]
                used.add(cls)
                var = pname
                while var in taken or var in names.models.values():
                    var += "_"
                taken.add(var)
                setup.append(f"const {var}: {cls} = {code};")
                code = var
            call_args.append(code)
        w = CodeWriter("  ")
        w.line('import { Client } from "./teasdk";')
        if used:
            w.line(f'import type {{ {", ".join(sorted(used))} }} from "./teasdk";')
        w.line()
        w.line("async function main(): Promise<void> {")
        w.indent()
        for line in setup:
            w.line(line)
        w.line("const client = new Client();")
        w.line(f"const result = await client.{names.methods[api]}({', '.join(call_args)});")
        w.line("console.log(result);")
        w.dedent()
        w.line("}")
        w.line()
        w.line("main();")
        return w.text()
