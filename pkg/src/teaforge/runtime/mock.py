"""Rule-driven mock transport.

Fixture format (JSON)::

    [
      {"match": {"method": "GET", "pathname": "/users/jack"},
       "respond": {"statusCode": 200, "headers": {}, "body": {"username": "jack"}}},
      {"match": {}, "respond": {"error": "connection reset"}, "times": 2}
    ]

Rules are tried in order and the first match wins. Omitted match keys are
wildcards; ``match.headers``/``match.query`` match as subsets. A non-string
``body`` is sent as compact JSON. ``respond.error`` simulates a transport
failure. ``times`` limits how often a rule may fire.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .exchange import HttpExchange, Response, TransportError


@dataclass
class MockRule:
    match: dict = field(default_factory=dict)
    respond: dict = field(default_factory=dict)
    times: int | None = None
    hits: int = 0

    def matches(self, exchange: HttpExchange) -> bool:
        if self.times is not None and self.hits >= self.times:
            return False
        req = exchange.request
        m = self.match
        if "method" in m and m["method"].upper() != req.method.upper():
            return False
        if "pathname" in m and m["pathname"] != req.pathname:
            return False
        if "host" in m and m["host"] != exchange.host:
            return False
        for key, actual in (("headers", req.headers), ("query", req.query)):
            for k, v in m.get(key, {}).items():
                if actual.get(k) != v:
                    return False
        return True

    def response(self) -> Response:
        spec = self.respond
        if "error" in spec:
            raise TransportError(str(spec["error"]))
        body = spec.get("body", "")
        if not isinstance(body, str):
            body = json.dumps(body, ensure_ascii=False, separators=(",", ":"))
        status = int(spec.get("statusCode", 200))
        return Response(
            status_code=status,
            status_message=spec.get("statusMessage", "OK" if status < 400 else "Error"),
            headers=dict(spec.get("headers", {})),
            body=body,
        )


def parse_rules(data) -> list[MockRule]:
    if isinstance(data, dict):
        data = data.get("rules", [])
    if not isinstance(data, list):
        raise ValueError("mock fixture must be a list of rules")
    rules = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or not isinstance(item.get("respond"), dict):
            raise ValueError(f"mock rule {i} needs a 'respond' object")
        rules.append(MockRule(dict(item.get("match", {})), dict(item["respond"]), item.get("times")))
    return rules


class MockTransport:
    """In-process transport answering from :class:`MockRule` s.

    Every call is recorded in ``calls``; unmatched requests get a 404.
    Safe to share between threads.
    """

    def __init__(self, rules: list[MockRule] | None = None):
        self.rules = list(rules or [])
        self.calls: list[HttpExchange] = []
        self._lock = threading.Lock()

    @classmethod
    def from_json(cls, data) -> MockTransport:
        return cls(parse_rules(data))

    @classmethod
    def from_file(cls, path: str | Path) -> MockTransport:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    @property
    def attempts(self) -> int:
        return len(self.calls)

    def send(self, exchange: HttpExchange, timeout_ms: int) -> Response:
        with self._lock:
            self.calls.append(exchange.copy())
            for rule in self.rules:
                if rule.matches(exchange):
                    rule.hits += 1
                    return rule.response()
        return Response(404, "Not Found", {}, "no mock rule matched")


class FailingTransport:
    """Fails every send; counts attempts."""

    def __init__(self, message: str = "connection refused"):
        self.message = message
        self.attempts = 0

    def send(self, exchange: HttpExchange, timeout_ms: int) -> Response:
        self.attempts += 1
        raise TransportError(self.message)
