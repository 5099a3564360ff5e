"""Shared helpers: fixture loading and the generated-SDK vs interpreter harness."""

from __future__ import annotations

import hashlib
import importlib.util
import itertools
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from teaforge.codegen import emit
from teaforge.runtime import (
    BehaviorRegistry,
    EvalError,
    MockTransport,
    RuntimeConfig,
    TransportError,
    ValidationFailed,
    invoke,
)
from teaforge.semantics import SemanticModule, compile_source
from teaforge.values import strict_equal

FIXTURES = Path(__file__).parent / "fixtures"
LISTINGS = FIXTURES / "listings"
MODULES = FIXTURES / "modules"

# native implementations for behavior types used by the fixture modules
BEHAVIOR_IMPLS = {
    "sign": lambda text: "sig-" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:12],
}


def load_module(path: Path) -> SemanticModule:
    module = compile_source(path.read_text(encoding="utf-8"), name=path.stem)
    module.require_ok()
    return module


def fixture_modules() -> list[Path]:
    return sorted(MODULES.glob("*.tea"))


def scenarios_for(path: Path) -> list[dict]:
    return json.loads(path.with_suffix(".scenarios.json").read_text(encoding="utf-8"))


_counter = itertools.count()


def load_sdk(module: SemanticModule, root: Path):
    """Write the python SDK under ``root`` and import it under a unique name."""
    files = emit(module, "python")
    files.write(root)
    alias = f"teasdk_{module.name}_{next(_counter)}"
    pkg_dir = root / "teasdk"
    spec = importlib.util.spec_from_file_location(alias, pkg_dir / "__init__.py", submodule_search_locations=[str(pkg_dir)])
    mod = importlib.util.module_from_spec(spec)
    sys.modules[alias] = mod
    spec.loader.exec_module(mod)
    return mod


@dataclass
class Observation:
    """What one api call looked like from outside."""

    requests: list[tuple]
    outcome: tuple

    def same_as(self, other: Observation) -> bool:
        if self.requests != other.requests or self.outcome[0] != other.outcome[0]:
            return False
        return strict_equal(list(self.outcome[1:]), list(other.outcome[1:]))


def _requests(transport: MockTransport) -> list[tuple]:
    out = []
    for ex in transport.calls:
        r = ex.request
        body = r.body.getvalue() if r.body is not None else None
        out.append((ex.protocol, ex.host, ex.port, r.method, r.pathname, dict(r.query), dict(r.headers), body))
    return out


def _no_sleep(_seconds: float) -> None:
    pass


def observe_runtime(module: SemanticModule, sc: dict) -> Observation:
    transport = MockTransport.from_json(sc["rules"])
    registry = BehaviorRegistry.default().bind(**BEHAVIOR_IMPLS)
    config = RuntimeConfig(retry_times=sc.get("retries", 0), backoff_ms=0)
    try:
        result = invoke(module, sc["api"], sc["args"], transport, registry, config, sleep=_no_sleep)
        outcome = ("ok", result)
    except ValidationFailed as exc:
        outcome = ("validation", sorted(exc.report.rules()))
    except TransportError as exc:
        outcome = ("transport", exc.attempts)
    except EvalError:
        outcome = ("eval",)
    return Observation(_requests(transport), outcome)


def observe_sdk(sdk, module: SemanticModule, sc: dict) -> Observation:
    core = sdk.core
    transport = MockTransport.from_json(sc["rules"])
    behaviors = sdk.Behaviors()
    for name, impl in BEHAVIOR_IMPLS.items():
        if name in sdk.Behaviors.HOOKS:
            setattr(behaviors, sdk.Behaviors.HOOKS[name], impl)
    config = core.Config(retry_times=sc.get("retries", 0), backoff_ms=0)
    client = sdk.Client(transport, behaviors, config, sleep=_no_sleep)
    method = getattr(client, sdk.Client.APIS[sc["api"]])
    decl = module.apis[sc["api"]]
    try:
        result = method(*[sc["args"].get(p.name) for p in decl.params])
        outcome = ("ok", core.plain(result))
    except core.ValidationError as exc:
        outcome = ("validation", sorted((p, r) for p, r, _ in exc.violations))
    except core.TransportError as exc:
        outcome = ("transport", exc.attempts)
    except core.EvalError:
        outcome = ("eval",)
    return Observation(_requests(transport), outcome)


# --- synthetic call logs ------------------------------------------------------

HOUR_MS = 60 * 60 * 1000

# (error_code, how the failed call differs from its partner, count)
TABLE1_MIX = [
    ("InvalidParameter", "extra-instance-ids", 21),
    ("InvalidParameter", "array-vs-scalar", 14),
    ("InvalidParameter", "region", 11),
    ("InvalidParameter", "page-size", 24),
    ("Throttling", "same", 30),
]


def _table1_pair(kind: str, rng) -> tuple[dict, dict]:
    good = {"RegionId": "cn-hangzhou", "PageSize": rng.randint(1, 50)}
    bad = dict(good)
    if kind == "extra-instance-ids":
        bad["InstanceIds"] = f"i-{rng.randint(1, 999)}"
    elif kind == "array-vs-scalar":
        iid = f"i-{rng.randint(1, 999)}"
        good["InstanceIds"] = json.dumps([iid])
        bad["InstanceIds"] = iid
    elif kind == "region":
        bad["RegionId"] = "hangzhou"
    elif kind == "page-size":
        bad["PageSize"] = good["PageSize"] + 100
    return good, bad


def table1_log(seed: int = 7) -> list:
    """100 failed DescribeInstances calls, each with one nearby success by the
    same user, plus unrelated traffic for another api."""
    import random

    from teaforge.analyzer import CallRecord

    rng = random.Random(seed)
    records = []
    n = 0
    base = 1_700_000_000_000
    for code, kind, count in TABLE1_MIX:
        for _ in range(count):
            n += 1
            user = f"user-{n}"
            t = base + rng.randint(0, 30 * 24 * HOUR_MS)
            good, bad = _table1_pair(kind, rng)
            offset = rng.randint(-23 * HOUR_MS, 23 * HOUR_MS)
            records.append(CallRecord(t, user, "DescribeInstances", bad, False, code))
            records.append(CallRecord(t + offset, user, "DescribeInstances", good, True))
            # more successes far outside the window change nothing
            records.append(CallRecord(t + 5 * 24 * HOUR_MS, user, "DescribeInstances", {"RegionId": "x"}, True))
    for i in range(40):
        t = base + rng.randint(0, 30 * 24 * HOUR_MS)
        records.append(CallRecord(t, f"other-{i % 7}", "DescribeRegions", {"AcceptLanguage": "en"}, i % 5 != 0,
                                  None if i % 5 else "Forbidden"))
    rng.shuffle(records)
    return records
