from __future__ import annotations

import json
import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import MODULES, LISTINGS, load_module
from teaforge.frontend import parse_source
from teaforge.runtime import (
    BehaviorRegistry,
    Environment,
    EvalError,
    FailingTransport,
    HttpExchange,
    MockRule,
    MockTransport,
    Readable,
    Request,
    Response,
    RuntimeConfig,
    TransportError,
    UnboundBehavior,
    UnknownApi,
    ValidationFailed,
    build_request,
    eval_expr,
    invoke,
    send_with_retry,
)
from teaforge.semantics import compile_source

GETUSER = load_module(LISTINGS / "getuser.tea")
NO_SLEEP = lambda _s: None  # noqa: E731


def user_reply(age=30, name="jack"):
    return MockTransport.from_json([{"match": {}, "respond": {"statusCode": 200, "body": {"username": name, "age": age}}}])


# --- build_request ------------------------------------------------------------


def test_build_request_getuser():
    ex = build_request(GETUSER, "getUser", {"username": "jack"})
    assert ex.request.method == "GET"
    assert ex.request.pathname == "/users/jack"
    assert ex.request.headers == {"host": "hostname"}
    assert ex.request.query == {}
    assert ex.request.body is None
    assert (ex.protocol, ex.port, ex.host) == ("https", 443, "")
    assert ex.response is None


def test_build_request_defaults_for_empty_block():
    m = compile_source("api ping(): void { } returns { }")
    ex = build_request(m, "ping", {})
    assert (ex.request.method, ex.request.pathname, ex.protocol, ex.port) == ("GET", "", "https", 443)
    ex = build_request(m, "ping", {}, RuntimeConfig(default_protocol="http", default_port=8080))
    assert (ex.protocol, ex.port) == ("http", 8080)


def test_template_substitution_is_not_encoded():
    ex = build_request(GETUSER, "getUser", {"username": "a b"})
    assert ex.request.pathname == "/users/a b"


@given(st.text(max_size=30))
def test_template_substitution_oracle(username):
    ex = build_request(GETUSER, "getUser", {"username": username})
    assert ex.request.pathname == "/users/" + username


def test_build_request_has_no_side_effects():
    args = {"payload": {"data": "x"}, "secret": "s"}
    before = json.dumps(args)
    m = load_module(MODULES / "behaviors.tea")
    reg = BehaviorRegistry.default().bind(sign=lambda t: "sig")
    one = build_request(m, "upload", args, registry=reg)
    two = build_request(m, "upload", args, registry=reg)
    assert json.dumps(args) == before
    assert one.summary() == two.summary()
    assert one.request.body.getvalue() == b'{"data":"x"}'


def test_build_request_validates_args():
    with pytest.raises(ValidationFailed) as info:
        build_request(GETUSER, "getUser", {})
    assert info.value.report.rules() == [("username", "missing-required")]
    with pytest.raises(ValidationFailed):
        build_request(GETUSER, "getUser", {"username": 3})
    with pytest.raises(EvalError):
        build_request(GETUSER, "getUser", {"username": "a", "extra": 1})
    with pytest.raises(UnknownApi):
        build_request(GETUSER, "nope", {})


def test_bad_port_is_rejected_at_finish():
    m = compile_source("api a(p: number): void { __request.port = p; } returns { }")
    assert build_request(m, "a", {"p": 8080}).port == 8080
    for bad in (0, 70000, 1.5):
        with pytest.raises(EvalError):
            build_request(m, "a", {"p": bad})


# --- invoke -------------------------------------------------------------------


def test_invoke_getuser_ok():
    t = user_reply()
    assert invoke(GETUSER, "getUser", {"username": "jack"}, t) == {"username": "jack", "age": 30}
    assert t.attempts == 1
    assert t.calls[0].request.pathname == "/users/jack"


@pytest.mark.parametrize("age, rule", [(7, "min"), (17, "min"), (100, "max"), ("x", "type-mismatch")])
def test_invoke_getuser_result_violations(age, rule):
    with pytest.raises(ValidationFailed) as info:
        invoke(GETUSER, "getUser", {"username": "jack"}, user_reply(age))
    assert info.value.report.rules() == [("age", rule)]


def test_invoke_result_pattern_violation():
    with pytest.raises(ValidationFailed) as info:
        invoke(GETUSER, "getUser", {"username": "jack"}, user_reply(30, "ja_ck"))
    assert info.value.report.rules() == [("username", "pattern")]


def test_non_2xx_reaches_returns_block():
    m = compile_source("api s(): number { } returns { return __response.statusCode; }")
    assert invoke(m, "s", {}, MockTransport()) == 404
    t = MockTransport.from_json([{"respond": {"statusCode": 503}}])
    assert invoke(m, "s", {}, t, config=RuntimeConfig(retry_times=3), sleep=NO_SLEEP) == 503
    assert t.attempts == 1


def test_malformed_json_body_is_eval_error():
    t = MockTransport.from_json([{"respond": {"body": "{not json"}}])
    with pytest.raises(EvalError):
        invoke(GETUSER, "getUser", {"username": "jack"}, t)


@pytest.mark.parametrize("retries", [0, 1, 2, 5])
def test_retry_counts(retries):
    t = FailingTransport()
    sleeps = []
    cfg = RuntimeConfig(retry_times=retries, backoff_ms=250)
    with pytest.raises(TransportError) as info:
        invoke(GETUSER, "getUser", {"username": "jack"}, t, config=cfg, sleep=sleeps.append)
    assert t.attempts == retries + 1 == info.value.attempts
    assert sleeps == [0.25] * retries


def test_retry_recovers_after_transient_errors():
    t = MockTransport.from_json(
        [
            {"match": {}, "respond": {"error": "reset"}, "times": 2},
            {"match": {}, "respond": {"body": {"username": "jack", "age": 20}}},
        ]
    )
    cfg = RuntimeConfig(retry_times=2, backoff_ms=0)
    assert invoke(GETUSER, "getUser", {"username": "jack"}, t, config=cfg)["age"] == 20
    assert t.attempts == 3
    # all attempts carried the same request
    assert len({c.summary() for c in t.calls}) == 1


def test_os_errors_are_retried():
    class Flaky:
        n = 0

        def send(self, exchange, timeout_ms):
            self.n += 1
            if self.n == 1:
                raise TimeoutError("slow")
            return Response(200, "OK", {}, '{"username":"jack","age":20}')

    flaky = Flaky()
    invoke(GETUSER, "getUser", {"username": "jack"}, flaky, config=RuntimeConfig(retry_times=1), sleep=NO_SLEEP)
    assert flaky.n == 2


def test_transport_cannot_mutate_callers_exchange():
    class Mutating:
        def send(self, exchange, timeout_ms):
            exchange.request.pathname = "/hacked"
            exchange.request.headers["x"] = "y"
            raise ConnectionError("nope")

    ex = build_request(GETUSER, "getUser", {"username": "jack"})
    before = ex.summary()
    with pytest.raises(TransportError):
        send_with_retry(Mutating(), ex, RuntimeConfig(retry_times=2, backoff_ms=0))
    assert ex.summary() == before


def test_runtime_config_validation():
    for bad in ({"retry_times": -1}, {"backoff_ms": -1}, {"timeout_ms": 0}, {"default_protocol": "ftp"}, {"default_port": 0}):
        with pytest.raises(ValueError):
            RuntimeConfig(**bad)


# --- behaviors ----------------------------------------------------------------


def test_unbound_behavior_is_reported_before_io():
    m = load_module(MODULES / "behaviors.tea")
    t = MockTransport()
    with pytest.raises(UnboundBehavior) as info:
        invoke(m, "upload", {"payload": {"data": "x"}, "secret": "s"}, t)
    assert "@sign" in str(info.value)
    assert t.attempts == 0


def test_bound_behavior_runs():
    m = load_module(MODULES / "behaviors.tea")
    t = MockTransport.from_json([{"respond": {"statusCode": 201, "body": {"id": "u1"}}}])
    reg = BehaviorRegistry.default().bind(sign=lambda text: text.upper())
    out = invoke(m, "upload", {"payload": {"data": "x"}, "secret": "k"}, t, reg)
    assert out == {"status": "201", "id": "u1"}
    assert t.calls[0].request.headers == {"signature": '{"DATA":"X"}K'}


# --- mock transport -----------------------------------------------------------


def _ex(method="GET", path="/a", headers=None, query=None, host=""):
    return HttpExchange(host=host, request=Request(method, path, dict(query or {}), dict(headers or {})))


def test_mock_first_match_wins_and_times():
    t = MockTransport.from_json(
        [
            {"match": {"pathname": "/a"}, "respond": {"statusCode": 201}, "times": 1},
            {"match": {"pathname": "/a"}, "respond": {"statusCode": 202}},
            {"match": {}, "respond": {"statusCode": 203}},
        ]
    )
    assert [t.send(_ex(), 1000).status_code for _ in range(3)] == [201, 202, 202]
    assert t.send(_ex(path="/b"), 1000).status_code == 203


def test_mock_subset_headers_and_query():
    rule = MockRule({"method": "post", "headers": {"a": "1"}, "query": {"q": "x"}}, {"statusCode": 200})
    assert rule.matches(_ex("POST", headers={"a": "1", "b": "2"}, query={"q": "x", "r": "y"}))
    assert not rule.matches(_ex("POST", headers={"a": "2"}, query={"q": "x"}))
    assert not rule.matches(_ex("POST", headers={"a": "1"}))
    assert not rule.matches(_ex("GET", headers={"a": "1"}, query={"q": "x"}))


def test_mock_unmatched_is_404():
    t = MockTransport.from_json([{"match": {"host": "h"}, "respond": {}}])
    r = t.send(_ex(host="other"), 1000)
    assert r.status_code == 404
    assert t.attempts == 1


def test_mock_rejects_bad_fixture():
    with pytest.raises(ValueError):
        MockTransport.from_json([{"match": {}}])
    with pytest.raises(ValueError):
        MockTransport.from_json("nope")


def test_readable_roundtrip():
    r = Readable("héllo")
    assert r.read() == "héllo".encode()
    assert r.copy().read() == "héllo".encode()
    assert Readable(b"x") == Readable("x")


def test_concurrent_invocations_share_a_transport():
    t = MockTransport.from_json([{"respond": {"body": {"username": "jack", "age": 40}}}])
    results, errors = [], []

    def work(i):
        try:
            results.append(invoke(GETUSER, "getUser", {"username": f"u{i}"}, t))
        except Exception as exc:  # pragma: no cover - surfaced below
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(i,)) for i in range(16)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert not errors and len(results) == 16
    assert sorted(c.request.pathname for c in t.calls) == sorted(f"/users/u{i}" for i in range(16))


# --- independent expression oracle -------------------------------------------

VARS = {"a": 3, "b": "xy", "t": True, "f": False, "n": None}
ERR = object()


def _render(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _gen(rng: random.Random, depth: int):
    """Random (source, expected) pair; expected is ERR for a runtime error."""
    if depth == 0 or rng.random() < 0.3:
        kind = rng.randrange(5)
        if kind == 0:
            v = rng.randrange(0, 50)
            return str(v), v
        if kind == 1:
            v = rng.choice(["", "a", "xy", "q z"])
            return repr(v), v
        if kind == 2:
            v = rng.random() < 0.5
            return ("true" if v else "false"), v
        if kind == 3:
            return "null", None
        name = rng.choice(sorted(VARS))
        return name, VARS[name]
    op = rng.choice(["+", "==", "!=", "&&", "||", "tmpl"])
    if op == "tmpl":
        src, val = _gen(rng, depth - 1)
        if val is ERR or val is None:
            return f"`<${{{src}}}>`", ERR
        return f"`<${{{src}}}>`", f"<{_render(val)}>"
    ls, lv = _gen(rng, depth - 1)
    rs, rv = _gen(rng, depth - 1)
    src = f"({ls}) {op} ({rs})"
    if lv is ERR:
        return src, ERR
    if op in ("&&", "||"):
        if not isinstance(lv, bool):
            return src, ERR
        if (op == "&&" and not lv) or (op == "||" and lv):
            return src, lv
        if rv is ERR or not isinstance(rv, bool):
            return src, ERR
        return src, rv
    if rv is ERR:
        return src, ERR
    if op in ("==", "!="):
        same = type(lv) is type(rv) and lv == rv
        return src, same if op == "==" else not same
    if type(lv) is str and type(rv) is str:
        return src, lv + rv
    if type(lv) is int and type(rv) is int:
        return src, lv + rv
    return src, ERR


def _evaluate(src):
    tree = parse_source(f"api e(): void {{ var r = {src}; }} returns {{ }}")
    expr = tree.apis[0].request_block[0].value
    return eval_expr(expr, Environment(variables=VARS))


def test_expression_oracle_200_cases():
    rng = random.Random(20240517)
    seen_err = seen_ok = 0
    for _ in range(200):
        src, expected = _gen(rng, 4)
        if expected is ERR:
            with pytest.raises(EvalError):
                _evaluate(src)
            seen_err += 1
        else:
            got = _evaluate(src)
            assert type(got) is type(expected) and got == expected, src
            seen_ok += 1
    assert seen_err > 10 and seen_ok > 10


@settings(max_examples=200)
@given(st.integers(0, 10**9))
def test_expression_oracle_property(seed):
    src, expected = _gen(random.Random(seed), 3)
    if expected is ERR:
        with pytest.raises(EvalError):
            _evaluate(src)
    else:
        assert _evaluate(src) == expected
