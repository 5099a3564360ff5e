"""Compile-time registry of builtin modules that TeaDSL code may import."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..frontend.syntax import ANY, READABLE, STRING, TypeExpr, TypeKind


@dataclass(frozen=True)
class FunctionSig:
    params: tuple[TypeExpr, ...]
    returns: TypeExpr


@dataclass(frozen=True)
class BuiltinModuleDescriptor:
    name: str
    functions: dict[str, FunctionSig] = field(default_factory=dict)


UTIL = BuiltinModuleDescriptor(
    "Util",
    {
        "readAsJSON": FunctionSig((READABLE,), ANY),
        "readAsString": FunctionSig((READABLE,), STRING),
        "toJSONString": FunctionSig((ANY,), STRING),
        "parseJSON": FunctionSig((STRING,), ANY),
        "toReadable": FunctionSig((STRING,), READABLE),
    },
)

BUILTIN_MODULES: dict[str, BuiltinModuleDescriptor] = {UTIL.name: UTIL}

# the abstract gateway record exposed as `__request` / `__response`
REQUEST_FIELDS: dict[str, TypeExpr] = {
    "protocol": STRING,
    "port": TypeExpr(TypeKind.NUMBER),
    "host": STRING,
    "method": STRING,
    "pathname": STRING,
    "query": TypeExpr.map_of(STRING),
    "headers": TypeExpr.map_of(STRING),
    "body": READABLE,
}

RESPONSE_FIELDS: dict[str, TypeExpr] = {
    "statusCode": TypeExpr(TypeKind.NUMBER),
    "statusMessage": STRING,
    "headers": TypeExpr.map_of(STRING),
    "body": READABLE,
}

REQUEST = "__request"
RESPONSE = "__response"
