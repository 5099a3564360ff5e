from __future__ import annotations

import gzip
import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import LISTINGS, table1_log
from teaforge.analyzer import (
    ARRAY_MARK,
    DAY_MS,
    OBJECT_MARK,
    ApiDocSpec,
    CallRecord,
    EmptySpec,
    ErrorTally,
    ParamDoc,
    RangeError,
    build_tables,
    classify,
    coverage_rate,
    diff,
    escape_key,
    flatten,
    pair_and_aggregate,
    pair_failures,
    parse_call_log,
    partition,
    quadrant,
    read_call_log,
    tally_partition,
    tally_records,
    write_error_csv,
    write_quadrant_csv,
)
from teaforge.values import render_scalar

CORRECT = json.loads((LISTINGS / "correct.json").read_text())
WRONG = json.loads((LISTINGS / "wrong.json").read_text())

# --- flatten ------------------------------------------------------------------


def test_flatten_sms_call():
    assert flatten(CORRECT) == {
        "PhoneNumbers": "177xxxx9887",
        "SignName": "Peking University Hospital",
        "TemplateCode": "SMS_180240289",
        "TemplateParam": OBJECT_MARK,
        "TemplateParam.code": "123123",
    }


def test_flatten_examples():
    assert flatten({"a": [1, {"b": True}], "n": None}) == {
        "a": ARRAY_MARK, "a.0": "1", "a.1": OBJECT_MARK, "a.1.b": "true", "n": "null",
    }
    assert flatten({"x.y": 1}) == {"x\\.y": "1"}
    assert flatten({"s": "[1, 2]"}) == {"s": ARRAY_MARK, "s.0": "1", "s.1": "2"}
    assert flatten({"s": "[oops"}) == {"s": "[oops"}
    assert flatten({"s": "7"}) == {"s": "7"}
    assert flatten({"f": 2.0}) == {"f": "2"}
    assert flatten({}) == {}
    assert flatten([1, 2]) == {"": "[1,2]"}
    assert flatten(5) == {"": "5"}


def test_escape_key_is_injective_on_samples():
    keys = ["a.b", "a\\.b", "a\\", "a", "a..b", ".", "\\", "+a", "\\+a", "-a"]
    assert len({escape_key(k) for k in keys}) == len(keys)


def _oracle_flatten(value, prefix=None):
    """Recursive reference: same shape rules, written independently."""
    out = {}
    if isinstance(value, str):
        s = value.strip()
        if s[:1] in ("{", "["):
            try:
                parsed = json.loads(s)
            except ValueError:
                parsed = None
            if isinstance(parsed, (dict, list)):
                value = parsed
    if isinstance(value, dict):
        if prefix is not None:
            out[prefix] = "{}"
        for k, v in value.items():
            k = k.replace("\\", "\\\\").replace(".", "\\.")
            if k.startswith(("+", "-")):
                k = "\\" + k
            out.update(_oracle_flatten(v, k if prefix is None else prefix + "." + k))
    elif isinstance(value, list):
        out[prefix] = "[]"
        for i, v in enumerate(value):
            out.update(_oracle_flatten(v, f"{prefix}.{i}"))
    else:
        out[prefix] = render_scalar(value)
    return out


_keys = st.text(alphabet="ab.\\+-", min_size=1, max_size=3)
_scalars = st.one_of(st.none(), st.booleans(), st.integers(-5, 5), st.text(alphabet="xy[]{}1", max_size=4))


def _values(depth):
    if depth == 0:
        return _scalars
    inner = _values(depth - 1)
    return st.one_of(
        _scalars,
        st.lists(inner, max_size=3),
        st.dictionaries(_keys, inner, max_size=3),
        st.dictionaries(_keys, inner, max_size=2).map(json.dumps),
    )


@settings(max_examples=300)
@given(st.dictionaries(_keys, _values(3), max_size=4))
def test_flatten_matches_recursive_oracle(params):
    assert flatten(params) == _oracle_flatten(params)


# --- diff ---------------------------------------------------------------------


def test_sms_call_diff():
    assert diff(flatten(CORRECT), flatten(WRONG)).as_list() == [
        "-TemplateParam", "-TemplateParam.code", "PhoneNumbers", "SignName", "TemplateCode",
    ]


def test_signed_keys_do_not_look_like_annotations():
    r = diff(flatten({"+y": 1}), flatten({"+y": 2, "y": 1}))
    assert r.as_list() == ["+y", "\\+y"]
    assert (r.extra, r.changed) == (("y",), ("\\+y",))


def test_diff_report_views():
    r = diff({"a": "1", "b": "1", "c": "1"}, {"b": "2", "c": "1", "d": "1"})
    assert r.as_list() == ["-a", "+d", "b"]
    assert (r.missing, r.extra, r.changed) == (("a",), ("d",), ("b",))
    assert not diff({"a": "1"}, {"a": "1"})


_flat = st.dictionaries(st.sampled_from(["a", "b", "c", "d", "e.f", "-x", "+y"]), st.sampled_from(["1", "2", "{}"]), max_size=6)


@given(_flat, _flat)
def test_diff_set_algebra(c, w):
    r = diff(c, w)
    assert set(r.missing) == c.keys() - w.keys()
    assert set(r.extra) == w.keys() - c.keys()
    assert set(r.changed) == {k for k in c.keys() & w.keys() if c[k] != w[k]}
    assert len(r) == len(r.missing) + len(r.extra) + len(r.changed)
    assert list(r.missing) == sorted(r.missing) and list(r.extra) == sorted(r.extra)
    assert list(r.changed) == sorted(r.changed)


@given(_flat, _flat)
def test_diff_reflexive_and_antisymmetric(c, w):
    assert diff(c, c).as_list() == []
    fwd, back = diff(c, w), diff(w, c)
    assert fwd.missing == back.extra and fwd.extra == back.missing and fwd.changed == back.changed


# --- logs ---------------------------------------------------------------------


def rec(t, ok, user="u", api="A", params=None, code="E"):
    return CallRecord(t, user, api, params if params is not None else {}, ok, None if ok else code)


def partner_of(failure, records, window=DAY_MS):
    (partner,) = [p for f, p in pair_failures(records, window) if f is failure]
    return partner


def test_pairing_prefers_forward_then_backward():
    f = rec(1000, False)
    before, after = rec(500, True), rec(2000, True)
    assert partner_of(f, [f, before, after]) is after
    assert partner_of(f, [f, before]) is before
    assert partner_of(f, [f, rec(1000 + DAY_MS, True)]) is not None
    assert partner_of(f, [f, rec(1000 - DAY_MS, True)]) is not None
    assert partner_of(f, [f, rec(1001 + DAY_MS, True)]) is None
    assert partner_of(f, [f, rec(999 - DAY_MS, True)]) is None


def test_pairing_ties():
    f = rec(1000, False)
    same1, same2 = rec(1000, True, params={"n": 1}), rec(1000, True, params={"n": 2})
    assert partner_of(f, [same1, f, same2]) is same1
    back1, back2 = rec(10, True, params={"n": 1}), rec(10, True, params={"n": 2})
    assert partner_of(f, [back1, back2, f]) is back2


def _brute_pairs(records, window):
    """O(n^2) reference with explicit tie rules over log positions."""
    out = []
    indexed = list(enumerate(records))
    for i, f in indexed:
        if f.success:
            continue
        fwd = [(s.timestamp, j) for j, s in indexed if s.success and 0 <= s.timestamp - f.timestamp <= window]
        back = [(s.timestamp, j) for j, s in indexed if s.success and 0 < f.timestamp - s.timestamp <= window]
        if fwd:
            out.append((i, min(fwd)[1]))
        elif back:
            out.append((i, max(back)[1]))
        else:
            out.append((i, None))
    return out


@pytest.mark.parametrize("seed", range(8))
def test_pairing_matches_bruteforce(seed):
    rng = random.Random(seed)
    n = rng.choice([10, 100, 1000])
    window = rng.choice([DAY_MS, 50, 0])
    records = []
    for i in range(n):
        ok = rng.random() < 0.4
        records.append(CallRecord(rng.randint(0, 5 * max(window, 10)), "u", "A", {"i": i}, ok, None if ok else "E"))
    pos = {id(r): i for i, r in enumerate(records)}
    got = {pos[id(f)]: (pos[id(p)] if p is not None else None) for f, p in pair_failures(records, window)}
    assert got == dict(_brute_pairs(records, window))


def test_table1_rates():
    tables = pair_and_aggregate(table1_log())
    t = tables["DescribeInstances"]
    assert (t.paired, t.unpaired) == (100, 0)
    assert t.row("InvalidParameter", "+InstanceIds").rate == pytest.approx(0.21, abs=0.005)
    assert t.row("InvalidParameter", "InstanceIds").rate == pytest.approx(0.14, abs=0.005)
    assert t.row("InvalidParameter", "RegionId").rate == pytest.approx(0.11, abs=0.005)
    rates = [r.rate for r in t.rows]
    assert rates == sorted(rates, reverse=True)
    assert t.success_rate == pytest.approx(200 / 300)


def test_no_failures_gives_empty_table():
    tables = pair_and_aggregate([rec(1, True), rec(2, True)])
    t = tables["A"]
    assert t.rows == () and t.failures == 0 and t.success_rate == 1.0 and t.pairing_coverage == 1.0


def test_unpaired_failures_are_counted_but_excluded():
    tables = pair_and_aggregate([rec(0, False), rec(10 * DAY_MS, False), rec(10 * DAY_MS + 1, True, params={"a": 1})])
    t = tables["A"]
    assert (t.paired, t.unpaired) == (1, 1)
    assert [(r.annotation, r.rate) for r in t.rows] == [("-a", 1.0)]


def _random_log(rng, n):
    return [
        CallRecord(rng.randint(0, 3 * DAY_MS), f"u{rng.randint(0, 3)}", rng.choice("AB"),
                   {"k": rng.randint(0, 2)}, ok, None if ok else rng.choice(["E1", "E2"]))
        for ok in (rng.random() < 0.5 for _ in range(n))
    ]


@pytest.mark.parametrize("seed", range(5))
def test_merge_is_associative_and_commutative(seed):
    rng = random.Random(seed)
    parts = [tally_partition(p) for p in partition(_random_log(rng, 200)).values()]
    assert len(parts) >= 3
    a, b, c = parts[0], parts[1], parts[2]
    assert a.merge(b).merge(c) == a.merge(b.merge(c))
    assert a.merge(b) == b.merge(a)
    assert a.merge(ErrorTally()) == a
    shuffled = parts[:]
    rng.shuffle(shuffled)
    total = ErrorTally()
    for p in shuffled:
        total = total.merge(p)
    assert build_tables(total) == build_tables(tally_records(_random_log(random.Random(seed), 200)))


def test_read_jsonl_and_gzip(tmp_path):
    lines = [
        json.dumps(rec(1, True).to_json()),
        "{not json",
        "",
        json.dumps({"timestamp": 2, "user_id": "u", "api": "A", "params": {}, "success": False}),
        json.dumps(rec(3, False).to_json()),
        json.dumps({"timestamp": True, "user_id": "u", "api": "A", "params": {}, "success": True}),
    ]
    text = "\n".join(lines) + "\n"
    plain = tmp_path / "log.jsonl"
    plain.write_text(text)
    packed = tmp_path / "log.jsonl.gz"
    packed.write_bytes(gzip.compress(text.encode()))
    for path in (plain, packed):
        result = read_call_log(path)
        assert [r.timestamp for r in result.records] == [1, 3]
        assert [m.line for m in result.malformed] == [2, 4, 6]
    assert parse_call_log(io.StringIO(text)).records == read_call_log(plain).records


def test_call_record_roundtrip_and_validation():
    r = rec(5, False, params={"a": [1]})
    assert CallRecord.from_json(r.to_json()) == r
    with pytest.raises(ValueError):
        CallRecord(1, "u", "A", {}, True, "E")
    with pytest.raises(ValueError):
        CallRecord(1, "u", "A", {}, False, None)


# --- coverage and quadrants ---------------------------------------------------


def test_coverage_rate():
    two = ApiDocSpec("A", (ParamDoc("RegionId", "String", True, "Region id.", "cn-hangzhou"),
                           ParamDoc("PageSize", "Integer", False, "Page size.", "10")))
    assert coverage_rate(two) == 1.0
    blank = ApiDocSpec("A", (ParamDoc("x", example="1"), ParamDoc("y", example="2")))
    assert coverage_rate(blank) == 0.0
    mixed = ApiDocSpec("A", tuple(ParamDoc(f"p{i}", description="d", example="e" if i else " ") for i in range(4)))
    assert coverage_rate(mixed) == 0.75
    with pytest.raises(EmptySpec):
        coverage_rate(ApiDocSpec("A"))


def test_doc_spec_from_json(tmp_path):
    path = tmp_path / "a.json"
    path.write_text(json.dumps({"api": "A", "parameters": [{"name": "x", "description": "d", "example": 3}]}))
    spec = ApiDocSpec.load(path)
    assert spec.parameters[0].example == "3" and coverage_rate(spec) == 1.0
    with pytest.raises(ValueError):
        ApiDocSpec.from_json({"parameters": []})


def test_quadrant_examples():
    (p,) = quadrant([("A", 0.2, 0.3)])
    assert (p.quadrant, p.rank) == ("Q3", 1)
    assert classify(0.5, 0.5) == "Q1"
    assert classify(0.4, 0.5) == "Q2"
    assert classify(0.5, 0.4) == "Q4"
    pts = quadrant([("hi", 0.9, 0.9), ("q4", 0.9, 0.1), ("q3b", 0.1, 0.2), ("q3a", 0.1, 0.1)])
    assert [(p.api, p.rank) for p in pts] == [("q3a", 1), ("q3b", 2), ("q4", 3), ("hi", 4)]


@pytest.mark.parametrize("bad", [(-0.1, 0.5), (0.5, 1.1), (float("nan"), 0.5)])
def test_quadrant_range_errors(bad):
    with pytest.raises(RangeError):
        quadrant([("A", *bad)])
    with pytest.raises(RangeError):
        quadrant([], thresholds=bad)


def brute_quadrants(points, x0, y0):
    def label(c, s):
        if c >= x0 and s >= y0:
            return "Q1"
        if c < x0 and s >= y0:
            return "Q2"
        if c < x0 and s < y0:
            return "Q3"
        return "Q4"

    prio = {"Q3": 0, "Q4": 1, "Q1": 2, "Q2": 2}
    keyed = [(prio[label(c, s)], s, a) for a, c, s in points]
    return {a: (label(c, s), 1 + sum(k < key for k in keyed)) for (a, c, s), key in zip(points, keyed)}


@pytest.mark.parametrize("seed", range(3))
def test_quadrant_matches_bruteforce(seed):
    rng = random.Random(seed)
    x0, y0 = rng.random(), rng.random()
    pts = [(f"api{i}", rng.choice([rng.random(), x0, 0.0, 1.0]), rng.choice([rng.random(), y0, 0.0, 1.0])) for i in range(200)]
    got = {p.api: (p.quadrant, p.rank) for p in quadrant(pts, (x0, y0))}
    assert got == brute_quadrants(pts, x0, y0)


# --- csv ----------------------------------------------------------------------


def test_csv_writers():
    out = io.StringIO()
    write_error_csv(pair_and_aggregate(table1_log()).values(), out)
    lines = out.getvalue().splitlines()
    assert lines[0] == "api,error_code,annotation,rate,count"
    assert "DescribeInstances,InvalidParameter,+InstanceIds,0.21,21" in lines
    out = io.StringIO()
    write_quadrant_csv(quadrant([("A", 0.2, 0.3)]), out)
    assert out.getvalue() == "api,coverage,success_rate,quadrant,rank\nA,0.2,0.3,Q3,1\n"
