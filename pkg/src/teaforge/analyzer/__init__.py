"""Documentation analytics over call logs and api docs."""

from __future__ import annotations

import csv
from typing import Iterable, TextIO

from .flatten import ARRAY_MARK, OBJECT_MARK, DiffReport, FlatParamMap, diff, escape_key, flatten
from .logs import (
    DAY_MS,
    CallRecord,
    ErrorRow,
    ErrorTally,
    LogReadResult,
    MalformedRecord,
    ParamErrorTable,
    build_tables,
    pair_and_aggregate,
    pair_failures,
    parse_call_log,
    partition,
    read_call_log,
    tally_partition,
    tally_records,
)
from .quadrant import ApiDocSpec, EmptySpec, ParamDoc, QuadrantPoint, RangeError, classify, coverage_rate, quadrant


def _num(x: float) -> str:
    return f"{x:.6g}"


def write_error_csv(tables: Iterable[ParamErrorTable], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["api", "error_code", "annotation", "rate", "count"])
    for table in tables:
        for row in table.rows:
            w.writerow([table.api, row.error_code, row.annotation, _num(row.rate), row.count])


def write_quadrant_csv(points: Iterable[QuadrantPoint], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["api", "coverage", "success_rate", "quadrant", "rank"])
    for p in points:
        w.writerow([p.api, _num(p.coverage), _num(p.success_rate), p.quadrant, p.rank])


__all__ = [
    "ARRAY_MARK",
    "ApiDocSpec",
    "CallRecord",
    "DAY_MS",
    "DiffReport",
    "EmptySpec",
    "ErrorRow",
    "ErrorTally",
    "FlatParamMap",
    "LogReadResult",
    "MalformedRecord",
    "OBJECT_MARK",
    "ParamDoc",
    "ParamErrorTable",
    "QuadrantPoint",
    "RangeError",
    "build_tables",
    "classify",
    "coverage_rate",
    "diff",
    "escape_key",
    "flatten",
    "pair_and_aggregate",
    "pair_failures",
    "parse_call_log",
    "partition",
    "quadrant",
    "read_call_log",
    "tally_partition",
    "tally_records",
    "write_error_csv",
    "write_quadrant_csv",
]
