"""Documentation coverage and four-quadrant prioritisation of apis."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping


class RangeError(ValueError):
    pass


class EmptySpec(ValueError):
    pass


@dataclass(frozen=True)
class ParamDoc:
    name: str
    type: str = ""
    required: bool = False
    description: str = ""
    example: str = ""

    @property
    def documented(self) -> bool:
        return bool(self.description.strip()) and bool(self.example.strip())


@dataclass(frozen=True)
class ApiDocSpec:
    api: str
    parameters: tuple[ParamDoc, ...] = ()

    @classmethod
    def from_json(cls, data: Mapping) -> ApiDocSpec:
        if not isinstance(data, Mapping) or not isinstance(data.get("api"), str):
            raise ValueError("doc spec needs a string 'api'")
        rows = data.get("parameters", [])
        if not isinstance(rows, list):
            raise ValueError("'parameters' must be a list")
        params = []
        for i, row in enumerate(rows):
            if not isinstance(row, Mapping) or not isinstance(row.get("name"), str):
                raise ValueError(f"parameter {i} needs a string 'name'")
            params.append(
                ParamDoc(
                    row["name"],
                    str(row.get("type") or ""),
                    bool(row.get("required", False)),
                    str(row.get("description") or ""),
                    _text(row.get("example")),
                )
            )
        return cls(data["api"], tuple(params))

    @classmethod
    def load(cls, path: str | Path) -> ApiDocSpec:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return json.dumps(value, ensure_ascii=False)


def coverage_rate(doc: ApiDocSpec) -> float:
    """Share of parameters documented with both a description and an example."""
    if not doc.parameters:
        raise EmptySpec(f"{doc.api}: no parameters to measure")
    return sum(p.documented for p in doc.parameters) / len(doc.parameters)


QUADRANT_PRIORITY = {"Q3": 0, "Q4": 1, "Q1": 2, "Q2": 2}


@dataclass(frozen=True)
class QuadrantPoint:
    api: str
    coverage: float
    success_rate: float
    quadrant: str
    rank: int

    def to_json(self) -> dict:
        return {
            "api": self.api,
            "coverage": self.coverage,
            "success_rate": self.success_rate,
            "quadrant": self.quadrant,
            "rank": self.rank,
        }


def _unit(value: float, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value) or not 0 <= value <= 1:
        raise RangeError(f"{what} must be within [0, 1], got {value!r}")
    return float(value)


def classify(coverage: float, success_rate: float, x0: float = 0.5, y0: float = 0.5) -> str:
    """Quadrant label; points on a threshold belong to the upper/right side."""
    if success_rate >= y0:
        return "Q1" if coverage >= x0 else "Q2"
    return "Q4" if coverage >= x0 else "Q3"


def quadrant(points: Iterable[tuple[str, float, float]], thresholds: tuple[float, float] = (0.5, 0.5)) -> list[QuadrantPoint]:
    """Classify and rank apis; rank 1 should be improved first.

    Order: third quadrant, then fourth, then first and second together;
    lower success rate first inside each group, api name last.
    """
    x0 = _unit(thresholds[0], "x0")
    y0 = _unit(thresholds[1], "y0")
    staged = []
    for api, cov, sr in points:
        cov = _unit(cov, f"{api}: coverage")
        sr = _unit(sr, f"{api}: success_rate")
        staged.append((api, cov, sr, classify(cov, sr, x0, y0)))
    staged.sort(key=lambda p: (QUADRANT_PRIORITY[p[3]], p[2], p[0]))
    return [QuadrantPoint(api, cov, sr, q, i) for i, (api, cov, sr, q) in enumerate(staged, 1)]
