from __future__ import annotations

import itertools
import re

import pytest

from support import LISTINGS, fixture_modules, load_module
from teaforge.frontend import parse_source
from teaforge.semantics import (
    AnalysisError,
    Severity,
    UnknownModel,
    analyze,
    compile_source,
    pattern_matches,
    validate_typed,
    validate_value,
)
from teaforge.frontend.syntax import TypeExpr

GETUSER = (LISTINGS / "getuser.tea").read_text()


def codes(src):
    return [(d.severity.value, d.code) for d in compile_source(src).diagnostics]


def test_listings_have_no_errors():
    for name in ("user_model.tea", "behavior.tea", "getuser.tea"):
        m = compile_source((LISTINGS / name).read_text())
        assert m.ok, [d.render() for d in m.diagnostics]


def test_getuser_any_cast_warning_and_types():
    m = compile_source(GETUSER)
    assert [(d.severity, d.code, d.message) for d in m.diagnostics] == [
        (Severity.WARNING, "implicit-any-cast", "implicit any-to-model cast")
    ]
    var_body = m.apis["getUser"].returns_block[0]
    assert str(m.type_of(var_body.value)) == "any"
    assert str(m.type_of(m.apis["getUser"].request_block[1].value)) == "string"


def test_port_type_mismatch():
    m = compile_source("api a(): void { __request.port = 'x'; } returns { }")
    (d,) = m.errors
    assert d.code == "type-mismatch" and "string vs number" in d.message


def test_unknown_type_span_points_at_reference():
    src = "model A {\n  b: Accont\n}"
    m = compile_source(src)
    (d,) = m.errors
    assert d.code == "unknown-type"
    assert src[d.span.start.offset : d.span.end.offset] == "Accont"
    assert (d.span.start.line, d.span.start.column) == (2, 6)


# one broken snippet per error family; each must produce that code
CASES = [
    ("import Nope;", "unknown-import"),
    ("model A { a: string } model A { b: string }", "duplicate-declaration"),
    ("model string { a: number }", "reserved-name"),
    ("model A { a: void }", "invalid-type"),
    ("model A { a: string, a: number }", "duplicate-field"),
    ("model A { a: string(min=1) }", "invalid-attribute"),
    ("model A { a: string(pattern='(') }", "invalid-attribute"),
    ("model A { a: number(min=5, max=1) }", "invalid-attribute"),
    ("api a(x: string, x: string): void { } returns { }", "duplicate-param"),
    ("api a(): void { var x = 1; var x = 2; } returns { }", "duplicate-variable"),
    ("api a(): string { } returns { }", "missing-return"),
    ("api a(): void { return 1; } returns { }", "return-in-request"),
    ("api a(): void { __request.method = 1; } returns { }", "type-mismatch"),
    ("api a(): void { } returns { __response.statusCode = 1; }", "response-assignment"),
    ("api a(): void { __response.statusCode = 1; } returns { }", "response-assignment"),
    ("api a(): void { } returns { __request.method = 'x'; }", "request-mutation"),
    ("api a(): void { __request = 1; } returns { }", "invalid-assignment"),
    ("api a(): void { var x = y; } returns { }", "unknown-name"),
    ("api a(): void { var x = __request.nope; } returns { }", "unknown-field"),
    ("api a(): void { var r = __request; } returns { }", "invalid-member"),
    ("api a(): void { var s = __response.statusCode; } returns { }", "response-unavailable"),
    ("api a(): void { var x = Nope.f(); } returns { }", "unknown-module"),
    ("import Util; api a(): void { var x = Util.nope(); } returns { }", "unknown-function"),
    ("import Util; api a(): void { var x = Util.readAsJSON(); } returns { }", "call-arity"),
    ("api a(): void { var x = @nope(); } returns { }", "unknown-behavior"),
    ("type @f = (string): string api a(): void { var x = @f(); } returns { }", "behavior-arity"),
    ("type @f = (string): string api a(): void { var x = @f(1); } returns { }", "type-mismatch"),
    ("api a(m: map[string]string): void { __request.pathname = `${m}`; } returns { }", "invalid-template-hole"),
    ("model A { a: string } api a(): A { } returns { return { a = 'x', a = 'y', }; }", "duplicate-key"),
    ("model A { a: string } api a(): A { } returns { return { }; }", "missing-field"),
    ("api a(): void { var x = 1 + 'a'; } returns { }", "type-mismatch"),
    ("api a(): void { var x = 1 && true; } returns { }", "type-mismatch"),
]


@pytest.mark.parametrize("src, code", CASES, ids=[c for _, c in CASES])
def test_error_codes(src, code):
    got = codes(src)
    assert ("error", code) in got, got


def test_request_read_in_returns_is_warning():
    got = codes("api a(): string { __request.method = 'GET'; } returns { return __request.method; }")
    assert got == [("warning", "request-read")]


def test_request_locals_visible_in_returns():
    m = compile_source("api a(): string { var p = '/x'; __request.pathname = p; } returns { return p; }")
    assert m.ok and not m.diagnostics


def test_widening_to_any_is_silent():
    m = compile_source("import Util; api a(): string { } returns { return Util.toJSONString(1); }")
    assert not m.diagnostics


def test_diagnostics_sorted_and_deterministic():
    src = "api b(): void { var x = y; } returns { }\nmodel A { a: Nope }\n"
    one = compile_source(src).diagnostics
    two = analyze(parse_source(src)).diagnostics
    assert one == two
    offsets = [d.span.start.offset for d in one]
    assert offsets == sorted(offsets)


def test_require_ok_raises():
    with pytest.raises(AnalysisError):
        compile_source("model A { a: Nope }").require_ok()


def test_render():
    d = compile_source("model A { a: Nope }").diagnostics[0]
    assert d.render("x.tea") == "x.tea:1:14: error[unknown-type]: unknown type 'Nope'" or d.render("x.tea").startswith(
        "x.tea:1:14: error[unknown-type]:"
    )
    assert "\x1b[31m" in d.render("x.tea", color=True)


@pytest.mark.parametrize("path", fixture_modules(), ids=lambda p: p.stem)
def test_fixture_corpus_is_valid(path):
    load_module(path)


# --- validation ---------------------------------------------------------------

USER = compile_source((LISTINGS / "user_model.tea").read_text())


def test_validate_examples():
    r = validate_value("User", {"username": "jack", "age": 17}, USER)
    assert [(v.path, v.rule, v.detail) for v in r.violations] == [("age", "min", "17 < 18")]
    assert validate_value("User", {"username": "jack", "age": 18}, USER).ok
    assert validate_value("User", {"username": "jack", "age": 99}, USER).ok
    assert validate_value("User", {"username": "jack", "age": 100}, USER).rules() == [("age", "max")]
    r = validate_value("User", {"age": 42}, USER)
    assert r.rules() == [("username", "missing-required")]


def test_validate_unknown_model():
    with pytest.raises(UnknownModel):
        validate_value("Nope", {}, USER)


def test_pattern_is_anchored():
    assert not pattern_matches("\\d+", "1x8")
    assert not pattern_matches("\\d+", "age=1x8")
    assert pattern_matches("\\d+", "18")
    assert pattern_matches("[a-zA-Z1-9]", "jack")
    assert not pattern_matches("[a-zA-Z1-9]", "jack0")
    assert not pattern_matches("[a-zA-Z1-9]", "")


def test_nested_paths():
    m = compile_source("model In { n: number(min=0) } model Out { xs: [In], m: map[string]In }")
    r = validate_value("Out", {"xs": [{"n": 1}, {"n": -1}], "m": {"k": {"n": "x"}}}, m)
    assert r.rules() == [("xs.1.n", "min"), ("m.k.n", "type-mismatch")]


def test_validate_typed_top_level():
    assert validate_typed(TypeExpr.array_of(TypeExpr.named("User")), [{"username": "a", "age": 20}], USER).ok
    assert not validate_typed(TypeExpr.named("User"), None, USER).ok


# brute-force oracle: every combination of small field values for a 3-field model
ORACLE_MODEL = compile_source(
    "model T { s: string(pattern='[ab]'), n?: number(min=1, max=3), c: string(pattern='\\\\d+') }"
)
ABSENT = object()
DOMAIN = [ABSENT, None, "", "a", "ab", "abc", "12", "1x", 0, 1, 3, 4, 2.5, True]


def _oracle(value):
    out = []
    for name, optional, pattern, lo, hi, kind in (
        ("s", False, "[ab]", None, None, "string"),
        ("n", True, None, 1, 3, "number"),
        ("c", False, "\\d+", None, None, "string"),
    ):
        v = value.get(name)
        if v is None:
            if not optional:
                out.append((name, "missing-required"))
            continue
        is_num = isinstance(v, (int, float)) and not isinstance(v, bool)
        if (kind == "string" and not isinstance(v, str)) or (kind == "number" and not is_num):
            out.append((name, "type-mismatch"))
            continue
        if pattern and not re.fullmatch(f"(?:{pattern})+", v):
            out.append((name, "pattern"))
        if lo is not None and v < lo:
            out.append((name, "min"))
        if hi is not None and v > hi:
            out.append((name, "max"))
    return out


def test_validate_matches_bruteforce_oracle():
    checked = 0
    for s, n, c in itertools.product(DOMAIN, repeat=3):
        value = {k: v for k, v in (("s", s), ("n", n), ("c", c)) if v is not ABSENT}
        assert validate_value("T", value, ORACLE_MODEL).rules() == _oracle(value), value
        checked += 1
    assert checked == len(DOMAIN) ** 3


def test_two_field_presence_subsets():
    # all 4 presence subsets of the 2-field User model
    full = {"username": "jack", "age": 30}
    for keep in itertools.product([False, True], repeat=2):
        value = {k: v for (k, v), on in zip(full.items(), keep) if on}
        expected = [(k, "missing-required") for k, on in zip(full, keep) if not on]
        assert validate_value("User", value, USER).rules() == expected
