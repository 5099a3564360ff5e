"""Call-log ingestion, failure/success pairing and per-parameter error rates."""

from __future__ import annotations

import bisect
import gzip
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

from .flatten import diff, flatten

DAY_MS = 24 * 60 * 60 * 1000


class MalformedRecord(ValueError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


@dataclass(frozen=True)
class CallRecord:
    timestamp: int
    user_id: str
    api: str
    params: Any
    success: bool
    error_code: str | None = None

    def __post_init__(self):
        if isinstance(self.timestamp, bool) or not isinstance(self.timestamp, int):
            raise ValueError("timestamp must be an integer (ms since epoch)")
        if not isinstance(self.user_id, str) or not isinstance(self.api, str) or not self.api:
            raise ValueError("user_id and api must be strings")
        if not isinstance(self.success, bool):
            raise ValueError("success must be a boolean")
        if self.success and self.error_code is not None:
            raise ValueError("a successful call cannot carry an error_code")
        if not self.success and not isinstance(self.error_code, str):
            raise ValueError("a failed call needs an error_code")

    @classmethod
    def from_json(cls, data: Mapping) -> CallRecord:
        if not isinstance(data, Mapping):
            raise ValueError("record must be a JSON object")
        missing = [k for k in ("timestamp", "user_id", "api", "params", "success") if k not in data]
        if missing:
            raise ValueError("missing field(s): " + ", ".join(missing))
        return cls(
            data["timestamp"], data["user_id"], data["api"], data["params"], data["success"], data.get("error_code")
        )

    def to_json(self) -> dict:
        out = {"timestamp": self.timestamp, "user_id": self.user_id, "api": self.api, "params": self.params, "success": self.success}
        if self.error_code is not None:
            out["error_code"] = self.error_code
        return out


@dataclass
class LogReadResult:
    records: list[CallRecord] = field(default_factory=list)
    malformed: list[MalformedRecord] = field(default_factory=list)


def parse_call_log(lines: Iterable[str]) -> LogReadResult:
    """Parse JSONL; bad lines are skipped and reported with their line number."""
    result = LogReadResult()
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            result.records.append(CallRecord.from_json(json.loads(line)))
        except ValueError as exc:
            result.malformed.append(MalformedRecord(n, str(exc)))
    return result


def read_call_log(path: str | Path) -> LogReadResult:
    """Read a JSONL call log; gzip files are detected by their magic bytes."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return parse_call_log(io.StringIO(raw.decode("utf-8")))


# --- pairing ------------------------------------------------------------------


def pair_failures(records: list[CallRecord], window_ms: int = DAY_MS) -> Iterator[tuple[CallRecord, CallRecord | None]]:
    """Yield ``(failure, partner)`` for records of a single (user, api).

    The partner is the earliest success at or after the failure within the
    window; failing that, the latest success before it within the window.
    Ties go to the earlier log position going forward and to the later one
    going backward.
    """
    ordered = sorted(records, key=lambda r: r.timestamp)
    successes = [r for r in ordered if r.success]
    times = [r.timestamp for r in successes]
    for rec in ordered:
        if rec.success:
            continue
        i = bisect.bisect_left(times, rec.timestamp)
        partner = None
        if i < len(times) and times[i] - rec.timestamp <= window_ms:
            partner = successes[i]
        elif i > 0 and rec.timestamp - times[i - 1] <= window_ms:
            partner = successes[i - 1]
        yield rec, partner


@dataclass
class ErrorTally:
    """Mergeable partial aggregate; ``merge`` is associative and commutative."""

    counts: Counter = field(default_factory=Counter)  # (api, error_code, annotation) -> n
    calls: Counter = field(default_factory=Counter)  # api -> all calls
    successes: Counter = field(default_factory=Counter)
    paired: Counter = field(default_factory=Counter)  # api -> paired failures
    unpaired: Counter = field(default_factory=Counter)

    def merge(self, other: ErrorTally) -> ErrorTally:
        return ErrorTally(
            self.counts + other.counts,
            self.calls + other.calls,
            self.successes + other.successes,
            self.paired + other.paired,
            self.unpaired + other.unpaired,
        )

    def apis(self) -> list[str]:
        return sorted(self.calls)


def tally_partition(records: list[CallRecord], window_ms: int = DAY_MS) -> ErrorTally:
    """Tally one (user, api) partition."""
    tally = ErrorTally()
    for rec in records:
        tally.calls[rec.api] += 1
        tally.successes[rec.api] += rec.success
    for failure, partner in pair_failures(records, window_ms):
        if partner is None:
            tally.unpaired[failure.api] += 1
            continue
        tally.paired[failure.api] += 1
        for annotation in diff(flatten(partner.params), flatten(failure.params)):
            tally.counts[(failure.api, failure.error_code, annotation)] += 1
    return tally


def partition(records: Iterable[CallRecord]) -> dict[tuple[str, str], list[CallRecord]]:
    parts: dict[tuple[str, str], list[CallRecord]] = defaultdict(list)
    for rec in records:
        parts[(rec.user_id, rec.api)].append(rec)
    return parts


def tally_records(records: Iterable[CallRecord], window_ms: int = DAY_MS) -> ErrorTally:
    total = ErrorTally()
    for part in partition(records).values():
        total = total.merge(tally_partition(part, window_ms))
    return total


@dataclass(frozen=True)
class ErrorRow:
    error_code: str
    annotation: str
    rate: float
    count: int


@dataclass(frozen=True)
class ParamErrorTable:
    """Per-api rows ordered by rate (descending), then error code and annotation.

    ``rate`` is count over the api's paired failures. Unpaired failures are
    reported in ``unpaired`` and left out of every rate.
    """

    api: str
    rows: tuple[ErrorRow, ...]
    calls: int
    successes: int
    paired: int
    unpaired: int

    @property
    def failures(self) -> int:
        return self.paired + self.unpaired

    @property
    def success_rate(self) -> float:
        return self.successes / self.calls if self.calls else 0.0

    @property
    def pairing_coverage(self) -> float:
        """Share of failures that found a partner."""
        return self.paired / self.failures if self.failures else 1.0

    def row(self, error_code: str, annotation: str) -> ErrorRow | None:
        for r in self.rows:
            if r.error_code == error_code and r.annotation == annotation:
                return r
        return None

    def to_json(self) -> dict:
        return {
            "api": self.api,
            "calls": self.calls,
            "successes": self.successes,
            "paired_failures": self.paired,
            "unpaired_failures": self.unpaired,
            "rows": [
                {"error_code": r.error_code, "annotation": r.annotation, "rate": r.rate, "count": r.count}
                for r in self.rows
            ],
        }


def build_tables(tally: ErrorTally) -> dict[str, ParamErrorTable]:
    grouped: dict[str, list[ErrorRow]] = defaultdict(list)
    for (api, code, annotation), n in tally.counts.items():
        grouped[api].append(ErrorRow(code, annotation, n / tally.paired[api], n))
    tables = {}
    for api in tally.apis():
        rows = sorted(grouped.get(api, []), key=lambda r: (-r.rate, r.error_code, r.annotation))
        tables[api] = ParamErrorTable(
            api, tuple(rows), tally.calls[api], tally.successes[api], tally.paired[api], tally.unpaired[api]
        )
    return tables


def pair_and_aggregate(records: Iterable[CallRecord], window_ms: int = DAY_MS) -> dict[str, ParamErrorTable]:
    """Pair each failure with a nearby success of the same user and api,
    diff the two, and turn the annotation counts into per-api tables."""
    return build_tables(tally_records(records, window_ms))
