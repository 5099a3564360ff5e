"""Name resolution and type checking for TeaDSL syntax trees."""

from __future__ import annotations

import re

from ..frontend.syntax import (
    ANY,
    BOOLEAN,
    NUMBER,
    PRIMITIVE_TYPE_NAMES,
    STRING,
    VOID,
    ApiDecl,
    Assign,
    BehaviorCall,
    BinaryOp,
    BoolLit,
    Call,
    Expr,
    ExprStmt,
    If,
    MapLit,
    ModelDecl,
    NullLit,
    NumberLit,
    PathAccess,
    Return,
    Span,
    StringLit,
    SyntaxTree,
    TemplateString,
    TypeExpr,
    TypeKind,
    VarDecl,
)
from .builtins import BUILTIN_MODULES, REQUEST, REQUEST_FIELDS, RESPONSE, RESPONSE_FIELDS
from .module import Diagnostic, SemanticModule, Severity

RESERVED_TYPE_NAMES = frozenset(PRIMITIVE_TYPE_NAMES) | {"map"}
_HOLE_KINDS = (TypeKind.STRING, TypeKind.NUMBER, TypeKind.BOOLEAN, TypeKind.ANY)


class _Scope:
    def __init__(self, parent: _Scope | None = None):
        self.parent = parent
        self.vars: dict[str, TypeExpr] = {}

    def lookup(self, name: str) -> TypeExpr | None:
        scope = self
        while scope is not None:
            if name in scope.vars:
                return scope.vars[name]
            scope = scope.parent
        return None


class _Checker:
    def __init__(self, tree: SyntaxTree, name: str):
        self.tree = tree
        self.name = name
        self.diags: list[Diagnostic] = []
        self.types: dict[int, TypeExpr] = {}
        self.models: dict[str, ModelDecl] = {}
        self.behaviors = {}
        self.apis: dict[str, ApiDecl] = {}
        self.imports = {}
        # "request" or "returns" while checking an api body
        self.phase = ""

    def error(self, code: str, message: str, span: Span) -> None:
        self.diags.append(Diagnostic(Severity.ERROR, code, message, span))

    def warn(self, code: str, message: str, span: Span) -> None:
        self.diags.append(Diagnostic(Severity.WARNING, code, message, span))

    # -- declarations --

    def run(self) -> SemanticModule:
        for imp in self.tree.imports:
            if imp.name not in BUILTIN_MODULES:
                self.error("unknown-import", f"unknown module {imp.name!r}", imp.span)
            elif imp.name in self.imports:
                self.error("duplicate-declaration", f"module {imp.name!r} imported twice", imp.span)
            else:
                self.imports[imp.name] = BUILTIN_MODULES[imp.name]

        declared: dict[str, str] = {}
        for kind, decls, table in (
            ("model", self.tree.models, self.models),
            ("behavior", self.tree.behavior_types, self.behaviors),
            ("api", self.tree.apis, self.apis),
        ):
            for decl in decls:
                if decl.name in declared:
                    self.error(
                        "duplicate-declaration",
                        f"{kind} {decl.name!r} conflicts with an earlier {declared[decl.name]}",
                        decl.span,
                    )
                    continue
                if kind == "model" and decl.name in RESERVED_TYPE_NAMES:
                    self.error("reserved-name", f"{decl.name!r} is a builtin type name", decl.span)
                    continue
                declared[decl.name] = kind
                table[decl.name] = decl

        for model in self.tree.models:
            self.check_model(model)
        for beh in self.tree.behavior_types:
            for t in beh.param_types:
                self.resolve_type(t, allow_void=False)
            self.resolve_type(beh.return_type, allow_void=True)
        for api in self.tree.apis:
            self.check_api(api)

        self.diags.sort(key=Diagnostic.sort_key)
        return SemanticModule(
            tree=self.tree,
            models=self.models,
            behaviors=self.behaviors,
            apis=self.apis,
            imports=self.imports,
            diagnostics=tuple(self.diags),
            expr_types=self.types,
            name=self.name,
        )

    def resolve_type(self, t: TypeExpr, allow_void: bool) -> bool:
        if t.kind is TypeKind.NAMED:
            if t.name not in self.models:
                self.error("unknown-type", f"unknown type {t.name!r}", t.span)
                return False
        elif t.kind is TypeKind.MAP:
            return self.resolve_type(t.value, False)
        elif t.kind is TypeKind.ARRAY:
            return self.resolve_type(t.element, False)
        elif t.kind is TypeKind.VOID and not allow_void:
            self.error("invalid-type", "'void' is only allowed as a return type", t.span)
            return False
        return True

    def check_model(self, model: ModelDecl) -> None:
        seen: set[str] = set()
        for f in model.fields:
            if f.name in seen:
                self.error("duplicate-field", f"duplicate field {f.name!r} in model {model.name}", f.span)
            seen.add(f.name)
            self.resolve_type(f.type, allow_void=False)
            attrs = f.attrs
            kind = f.type.kind
            for key, value in f.attributes:
                if key == "pattern":
                    if not isinstance(value, str):
                        self.error("invalid-attribute", "pattern must be a string", f.span)
                        continue
                    try:
                        re.compile(value)
                    except re.error as exc:
                        self.error("invalid-attribute", f"invalid pattern {value!r}: {exc}", f.span)
                    if kind not in (TypeKind.STRING, TypeKind.NUMBER, TypeKind.ANY):
                        self.error("invalid-attribute", f"pattern does not apply to {f.type}", f.span)
                elif key in ("min", "max"):
                    if not isinstance(value, (int, float)) or isinstance(value, bool):
                        self.error("invalid-attribute", f"{key} must be a number", f.span)
                    elif kind not in (TypeKind.NUMBER, TypeKind.ANY):
                        self.error("invalid-attribute", f"{key} does not apply to {f.type}", f.span)
                else:
                    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                        self.error("invalid-attribute", f"{key} must be a non-negative integer", f.span)
                    elif kind not in (TypeKind.STRING, TypeKind.ARRAY, TypeKind.ANY):
                        self.error("invalid-attribute", f"{key} does not apply to {f.type}", f.span)
            for lo, hi in (("min", "max"), ("minLength", "maxLength")):
                a, b = attrs.get(lo), attrs.get(hi)
                if (
                    isinstance(a, (int, float)) and isinstance(b, (int, float))
                    and not isinstance(a, bool) and not isinstance(b, bool) and a > b
                ):
                    self.error("invalid-attribute", f"{lo} {a} exceeds {hi} {b}", f.span)

    def check_api(self, api: ApiDecl) -> None:
        scope = _Scope()
        for p in api.params:
            if p.name in scope.vars:
                self.error("duplicate-param", f"duplicate parameter {p.name!r}", p.span)
            if p.name in (REQUEST, RESPONSE):
                self.error("reserved-name", f"{p.name!r} is reserved", p.span)
            self.resolve_type(p.type, allow_void=False)
            scope.vars[p.name] = p.type
        self.resolve_type(api.return_type, allow_void=True)
        self.return_type = api.return_type

        self.phase = "request"
        self.check_block(api.request_block, scope)
        self.phase = "returns"
        # request-block locals stay visible to the returns block
        self.check_block(api.returns_block, _Scope(scope))
        self.phase = ""
        if api.return_type.kind is not TypeKind.VOID and not always_returns(api.returns_block):
            self.error(
                "missing-return",
                f"api {api.name!r} must return {api.return_type} on every path",
                api.span,
            )

    # -- statements --

    def check_block(self, stmts, scope: _Scope) -> None:
        for stmt in stmts:
            self.check_stmt(stmt, scope)

    def check_stmt(self, stmt, scope: _Scope) -> None:
        if isinstance(stmt, VarDecl):
            t = self.infer(stmt.value, scope)
            if t.kind is TypeKind.VOID:
                self.error("type-mismatch", "cannot bind a void value", stmt.value.span)
                t = ANY
            if stmt.name in scope.vars:
                self.error("duplicate-variable", f"variable {stmt.name!r} already declared", stmt.span)
            elif stmt.name in (REQUEST, RESPONSE):
                self.error("reserved-name", f"{stmt.name!r} is reserved", stmt.span)
            scope.vars[stmt.name] = t
        elif isinstance(stmt, Assign):
            self.check_assign(stmt, scope)
        elif isinstance(stmt, If):
            self.check_cond(stmt.cond, scope)
            self.check_block(stmt.then, _Scope(scope))
            for branch in stmt.elifs:
                self.check_cond(branch.cond, scope)
                self.check_block(branch.body, _Scope(scope))
            if stmt.orelse is not None:
                self.check_block(stmt.orelse, _Scope(scope))
        elif isinstance(stmt, Return):
            if self.phase == "request":
                self.error("return-in-request", "return is not allowed in a request block", stmt.span)
                self.infer(stmt.value, scope)
            elif self.return_type.kind is TypeKind.VOID:
                self.error("type-mismatch", "void api cannot return a value", stmt.span)
                self.infer(stmt.value, scope)
            else:
                self.check_against(stmt.value, self.return_type, scope)
        elif isinstance(stmt, ExprStmt):
            self.infer(stmt.expr, scope)

    def check_cond(self, cond: Expr, scope: _Scope) -> None:
        t = self.infer(cond, scope)
        if t.kind not in (TypeKind.BOOLEAN, TypeKind.ANY):
            self.error("type-mismatch", f"condition must be boolean, found {t}", cond.span)

    def check_assign(self, stmt: Assign, scope: _Scope) -> None:
        target = stmt.target
        root = target.root
        if root == RESPONSE:
            if self.phase == "request":
                msg = "cannot assign to __response inside the request block"
            else:
                msg = "__response is read-only"
            self.error("response-assignment", msg, target.span)
            self.infer(stmt.value, scope)
            return
        if root == REQUEST:
            if self.phase == "returns":
                self.error("request-mutation", "the returns block cannot modify __request", target.span)
                self.infer(stmt.value, scope)
                return
            if len(target.segments) == 1:
                self.error("invalid-assignment", "cannot replace __request as a whole", target.span)
                self.infer(stmt.value, scope)
                return
        elif scope.lookup(root) is None:
            self.error("unknown-name", f"unknown variable {root!r}", target.span)
            self.infer(stmt.value, scope)
            return
        t = self.type_path(target, scope, reading=False)
        self.check_against(stmt.value, t, scope)

    # -- expressions --

    def record(self, expr, t: TypeExpr) -> TypeExpr:
        self.types[id(expr)] = t
        return t

    def check_against(self, expr: Expr, expected: TypeExpr, scope: _Scope) -> None:
        """Check ``expr`` in a context expecting ``expected``."""
        if isinstance(expr, MapLit) and expected.kind in (TypeKind.MAP, TypeKind.NAMED):
            self.check_map_literal(expr, expected, scope)
            return
        actual = self.infer(expr, scope)
        self.require_assignable(expected, actual, expr.span)

    def check_map_literal(self, expr: MapLit, expected: TypeExpr, scope: _Scope) -> None:
        self.record(expr, expected)
        keys = set()
        for entry in expr.entries:
            if entry.key in keys:
                self.error("duplicate-key", f"duplicate key {entry.key!r}", entry.span)
            keys.add(entry.key)
        if expected.kind is TypeKind.MAP:
            for entry in expr.entries:
                self.check_against(entry.value, expected.value, scope)
            return
        model = self.models.get(expected.name)
        if model is None:
            for entry in expr.entries:
                self.infer(entry.value, scope)
            return
        for entry in expr.entries:
            f = model.field_named(entry.key)
            if f is None:
                self.error("unknown-field", f"model {model.name} has no field {entry.key!r}", entry.span)
                self.infer(entry.value, scope)
            else:
                self.check_against(entry.value, f.type, scope)
        for f in model.fields:
            if not f.optional and f.name not in keys:
                self.error("missing-field", f"required field {f.name!r} of {model.name} not set", expr.span)

    def require_assignable(self, target: TypeExpr, source: TypeExpr, span: Span) -> None:
        verdict = assignability(target, source)
        if verdict == "ok":
            return
        if verdict == "any":
            what = "model" if target.kind is TypeKind.NAMED else str(target)
            self.warn("implicit-any-cast", f"implicit any-to-{what} cast", span)
            return
        self.error("type-mismatch", f"type mismatch: {source} vs {target}", span)

    def infer(self, expr: Expr, scope: _Scope) -> TypeExpr:
        if isinstance(expr, StringLit):
            return self.record(expr, STRING)
        if isinstance(expr, NumberLit):
            return self.record(expr, NUMBER)
        if isinstance(expr, BoolLit):
            return self.record(expr, BOOLEAN)
        if isinstance(expr, NullLit):
            return self.record(expr, ANY)
        if isinstance(expr, TemplateString):
            for part in expr.parts:
                if isinstance(part, str):
                    continue
                t = self.infer(part, scope)
                if t.kind not in _HOLE_KINDS:
                    self.error("invalid-template-hole", f"cannot interpolate a value of type {t}", part.span)
            return self.record(expr, STRING)
        if isinstance(expr, MapLit):
            value_types = [self.infer(e.value, scope) for e in expr.entries]
            distinct = set(value_types)
            value = value_types[0] if len(distinct) == 1 else ANY
            return self.record(expr, TypeExpr.map_of(value))
        if isinstance(expr, PathAccess):
            return self.record(expr, self.type_path(expr, scope, reading=True))
        if isinstance(expr, Call):
            return self.record(expr, self.infer_call(expr, scope))
        if isinstance(expr, BehaviorCall):
            return self.record(expr, self.infer_behavior(expr, scope))
        if isinstance(expr, BinaryOp):
            return self.record(expr, self.infer_binary(expr, scope))
        raise TypeError(f"not an expression: {expr!r}")

    def type_path(self, path: PathAccess, scope: _Scope, reading: bool) -> TypeExpr:
        root = path.root
        segments = path.segments
        if root in (REQUEST, RESPONSE):
            if root == RESPONSE and self.phase == "request":
                self.error("response-unavailable", "__response is not available in the request block", path.span)
                return ANY
            if root == REQUEST and self.phase == "returns" and reading:
                self.warn("request-read", "reading __request inside the returns block", path.span)
            if len(segments) == 1:
                self.error("invalid-member", f"{root} is not a value; access one of its fields", path.span)
                return ANY
            fields = REQUEST_FIELDS if root == REQUEST else RESPONSE_FIELDS
            if segments[1] not in fields:
                self.error("unknown-field", f"{root} has no field {segments[1]!r}", path.span)
                return ANY
            t = fields[segments[1]]
            rest = segments[2:]
        else:
            found = scope.lookup(root)
            if found is None:
                self.error("unknown-name", f"unknown name {root!r}", path.span)
                return ANY
            t = found
            rest = segments[1:]
        for seg in rest:
            if t.kind is TypeKind.ANY:
                return ANY
            if t.kind is TypeKind.MAP:
                t = t.value
            elif t.kind is TypeKind.NAMED:
                model = self.models.get(t.name)
                if model is None:
                    return ANY
                f = model.field_named(seg)
                if f is None:
                    self.error("unknown-field", f"model {model.name} has no field {seg!r}", path.span)
                    return ANY
                t = f.type
            else:
                self.error("invalid-member", f"cannot access member {seg!r} of {t}", path.span)
                return ANY
        return t

    def infer_call(self, call: Call, scope: _Scope) -> TypeExpr:
        module = self.imports.get(call.module)
        if module is None:
            self.error("unknown-module", f"module {call.module!r} is not imported", call.span)
            for a in call.args:
                self.infer(a, scope)
            return ANY
        sig = module.functions.get(call.method)
        if sig is None:
            self.error("unknown-function", f"{call.module} has no function {call.method!r}", call.span)
            for a in call.args:
                self.infer(a, scope)
            return ANY
        if len(sig.params) != len(call.args):
            self.error(
                "call-arity",
                f"{call.module}.{call.method} takes {len(sig.params)} argument(s), got {len(call.args)}",
                call.span,
            )
            for a in call.args:
                self.infer(a, scope)
        else:
            for a, t in zip(call.args, sig.params):
                self.check_against(a, t, scope)
        return sig.returns

    def infer_behavior(self, call: BehaviorCall, scope: _Scope) -> TypeExpr:
        decl = self.behaviors.get(call.name)
        if decl is None:
            self.error("unknown-behavior", f"unknown behavior @{call.name}", call.span)
            for a in call.args:
                self.infer(a, scope)
            return ANY
        if len(decl.param_types) != len(call.args):
            self.error(
                "behavior-arity",
                f"@{call.name} takes {len(decl.param_types)} argument(s), got {len(call.args)}",
                call.span,
            )
            for a in call.args:
                self.infer(a, scope)
        else:
            for a, t in zip(call.args, decl.param_types):
                self.check_against(a, t, scope)
        return decl.return_type

    def infer_binary(self, expr: BinaryOp, scope: _Scope) -> TypeExpr:
        lhs = self.infer(expr.lhs, scope)
        rhs = self.infer(expr.rhs, scope)
        if expr.op in ("==", "!="):
            return BOOLEAN
        if expr.op in ("&&", "||"):
            for side, t in ((expr.lhs, lhs), (expr.rhs, rhs)):
                if t.kind not in (TypeKind.BOOLEAN, TypeKind.ANY):
                    self.error("type-mismatch", f"'{expr.op}' needs boolean operands, found {t}", side.span)
            return BOOLEAN
        kinds = {lhs.kind, rhs.kind}
        if kinds <= {TypeKind.STRING, TypeKind.ANY} and TypeKind.STRING in kinds:
            return STRING
        if kinds <= {TypeKind.NUMBER, TypeKind.ANY} and TypeKind.NUMBER in kinds:
            return NUMBER
        if kinds == {TypeKind.ANY}:
            return ANY
        self.error("type-mismatch", f"cannot apply '+' to {lhs} and {rhs}", expr.span)
        return ANY


def assignability(target: TypeExpr, source: TypeExpr) -> str:
    """Classify an assignment of ``source`` into ``target``.

    Returns ``"ok"``, ``"any"`` (allowed, but narrows a dynamic value) or
    ``"no"``.
    """
    if target.kind is TypeKind.ANY:
        return "ok"
    if source.kind is TypeKind.ANY:
        return "any"
    if target.kind is not source.kind:
        return "no"
    if target.kind is TypeKind.MAP:
        return assignability(target.value, source.value)
    if target.kind is TypeKind.ARRAY:
        return assignability(target.element, source.element)
    if target.kind is TypeKind.NAMED:
        return "ok" if target.name == source.name else "no"
    return "ok"


def always_returns(stmts) -> bool:
    for stmt in stmts:
        if isinstance(stmt, Return):
            return True
        if isinstance(stmt, If) and stmt.orelse is not None:
            branches = [stmt.then, *(b.body for b in stmt.elifs), stmt.orelse]
            if all(always_returns(b) for b in branches):
                return True
    return False


def analyze(tree: SyntaxTree, name: str = "module") -> SemanticModule:
    """Resolve names and type-check ``tree``.

    Never raises for user errors; problems are reported as diagnostics on the
    returned module, sorted by source position.
    """
    return _Checker(tree, name).run()
