"""One test per acceptance criterion; ``conftest`` prints a PASS/FAIL line each."""

from __future__ import annotations

import json
import random
import statistics
import string
import time
from pathlib import Path

import pytest

from support import (
    LISTINGS,
    fixture_modules,
    load_module,
    load_sdk,
    observe_runtime,
    observe_sdk,
    scenarios_for,
    table1_log,
)
from teaforge.analyzer import classify, diff, flatten, pair_and_aggregate, quadrant
from teaforge.codegen import emit, list_targets
from teaforge.frontend import LexError, parse, tokenize
from teaforge.runtime import FailingTransport, MockTransport, RuntimeConfig, TransportError, ValidationFailed, build_request, invoke
from teaforge.semantics import analyze

GOLDEN = Path(__file__).parent / "golden"


def test_criterion_1_sms_call_diff_exact():
    correct = json.loads((LISTINGS / "correct.json").read_text())
    wrong = json.loads((LISTINGS / "wrong.json").read_text())
    expected = ["-TemplateParam", "-TemplateParam.code", "PhoneNumbers", "SignName", "TemplateCode"]
    got = diff(flatten(correct), flatten(wrong)).as_list()
    assert json.dumps(got) == json.dumps(expected)
    timings = []
    for _ in range(500):
        start = time.perf_counter()
        diff(flatten(correct), flatten(wrong))
        timings.append(time.perf_counter() - start)
    assert statistics.median(timings) < 1e-3


def test_criterion_2_listings_compile_clean():
    for name in ("user_model.tea", "behavior.tea", "getuser.tea"):
        module = analyze(parse(tokenize((LISTINGS / name).read_text())))
        assert module.errors == [], [d.render(name) for d in module.errors]
        golden = GOLDEN / f"listings__{Path(name).stem}.ast"
        assert golden.is_file() and golden.read_text().strip()


def test_criterion_3_get_user_semantics():
    module = load_module(LISTINGS / "getuser.tea")
    ex = build_request(module, "getUser", {"username": "jack"})
    assert ex.request.method == "GET"
    assert ex.request.pathname == "/users/jack"
    assert ex.request.headers["host"] == "hostname"

    def reply(age):
        return MockTransport.from_json([{"match": {}, "respond": {"body": {"username": "jack", "age": age}}}])

    assert invoke(module, "getUser", {"username": "jack"}, reply(30)) == {"username": "jack", "age": 30}
    with pytest.raises(ValidationFailed) as info:
        invoke(module, "getUser", {"username": "jack"}, reply(17))
    assert [(v.path, v.rule) for v in info.value.report.violations] == [("age", "min")]


def test_criterion_4_sdk_matches_interpreter(tmp_path):
    start = time.perf_counter()
    paths = fixture_modules()
    assert len(paths) >= 10
    total = agreed = 0
    for path in paths:
        scenarios = scenarios_for(path)
        assert len(scenarios) >= 3, path.name
        module = load_module(path)
        sdk = load_sdk(module, tmp_path / path.stem)
        for sc in scenarios:
            total += 1
            agreed += observe_sdk(sdk, module, sc).same_as(observe_runtime(module, sc))
    elapsed = time.perf_counter() - start
    print(f"differential: {agreed}/{total} scenarios agree in {elapsed:.2f}s")
    assert agreed == total
    assert elapsed < 60


def test_criterion_5_synthetic_error_rates():
    table = pair_and_aggregate(table1_log())["DescribeInstances"]
    plus_ids = table.row("InvalidParameter", "+InstanceIds").rate
    ids = table.row("InvalidParameter", "InstanceIds").rate
    region = table.row("InvalidParameter", "RegionId").rate
    assert abs(plus_ids - 0.21) <= 0.005
    assert abs(ids - 0.14) <= 0.005
    assert abs(region - 0.11) <= 0.005
    assert abs(plus_ids + ids - 0.35) <= 0.01


def test_criterion_6_quadrant_oracle_and_order():
    rng = random.Random(6)
    points = [(f"api{i:04d}", rng.random(), rng.random()) for i in range(1000)]
    ranked = quadrant(points)

    def oracle(c, s):
        if s >= 0.5:
            return "Q1" if c >= 0.5 else "Q2"
        return "Q4" if c >= 0.5 else "Q3"

    lookup = {a: (c, s) for a, c, s in points}
    assert len(ranked) == 1000
    assert all(p.quadrant == oracle(*lookup[p.api]) for p in ranked)
    assert sorted(p.rank for p in ranked) == list(range(1, 1001))
    q3 = [p.rank for p in ranked if p.quadrant == "Q3"]
    q4 = [p.rank for p in ranked if p.quadrant == "Q4"]
    assert q3 and q4 and max(q3) < min(q4)
    assert classify(0.5, 0.5) == "Q1"


def _random_value(rng, depth):
    roll = rng.random()
    if depth <= 0 or roll < 0.35:
        return rng.choice([None, True, False, rng.randint(-9, 9), rng.random(), "", "x", "a.b", "+k", "[1]", '{"z":1}'])
    if roll < 0.65:
        return [_random_value(rng, depth - 1) for _ in range(rng.randint(0, 3))]
    return {rng.choice(["a", "b", "c.d", "-e", "\\"]): _random_value(rng, depth - 1) for _ in range(rng.randint(0, 3))}


def test_criterion_7_property_suites(tmp_path):
    rng = random.Random(7)
    for _ in range(10_000):
        a = {"p": _random_value(rng, 4), "q": _random_value(rng, 2)}
        b = {"p": _random_value(rng, 4)}
        fa, fb = flatten(a), flatten(b)
        assert not diff(fa, fa)
        fwd, back = diff(fa, fb), diff(fb, fa)
        assert (fwd.missing, fwd.extra, fwd.changed) == (back.extra, back.missing, back.changed)

    alphabet = string.printable + "`${}@'\\é中"
    lexed = rejected = 0
    for _ in range(10_000):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        try:
            tokenize(text)
            lexed += 1
        except LexError:
            rejected += 1
    assert lexed + rejected == 10_000

    for path in fixture_modules() + [LISTINGS / "getuser.tea"]:
        for target in list_targets():
            one, two = emit(load_module(path), target), emit(load_module(path), target)
            assert one == two and [one[p] for p in one] == [two[p] for p in two]

    module = load_module(LISTINGS / "getuser.tea")
    for retries in (0, 1, 2, 5):
        transport = FailingTransport()
        with pytest.raises(TransportError) as info:
            invoke(module, "getUser", {"username": "jack"}, transport,
                   config=RuntimeConfig(retry_times=retries, backoff_ms=1), sleep=lambda _s: None)
        assert transport.attempts == retries + 1 == info.value.attempts
