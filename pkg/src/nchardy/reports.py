"""Named numeric results with provenance, and CSV/JSON emission."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

PROVENANCES = ("exact", "quadrature", "bound")
CSV_FIELDS = ("name", "value", "lower", "upper", "provenance", "tol", "meta")


@dataclass
class NormReport:
    name: str
    provenance: str
    value: float | None = None
    lower: float | None = None
    upper: float | None = None
    tol: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        if self.provenance == "bound":
            if self.lower is None or self.upper is None:
                raise ValueError("bound reports need lower and upper")
            if self.lower > self.upper * (1 + 1e-12) + 1e-300:
                raise ValueError(f"bound out of order: {self.lower} > {self.upper}")
        elif self.value is None:
            raise ValueError("exact/quadrature reports need a value")

    @classmethod
    def exact(cls, name, value, provenance="exact", tol=None, meta=None):
        return cls(name, provenance, value=float(value), tol=tol, meta=dict(meta or {}))

    @classmethod
    def quad(cls, name, value, tol, meta=None):
        return cls(name, "quadrature", value=float(value), tol=tol, meta=dict(meta or {}))

    @classmethod
    def bound(cls, name, lower, upper, meta=None):
        return cls(name, "bound", lower=float(lower), upper=float(upper), meta=dict(meta or {}))

    def as_dict(self) -> dict:
        return {k: _jsonable(getattr(self, k)) for k in CSV_FIELDS}

    @classmethod
    def from_dict(cls, d: dict) -> "NormReport":
        return cls(name=d["name"], provenance=d["provenance"], value=d.get("value"), lower=d.get("lower"),
                   upper=d.get("upper"), tol=d.get("tol"), meta=d.get("meta") or {})


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and callable(x.item):
        return _jsonable(x.item())
    return x


def to_json(suite: str, config: dict, reports: list[NormReport], passed: bool) -> str:
    doc = {
        "suite": suite,
        "config": _jsonable(config),
        "reports": [r.as_dict() for r in reports],
        "pass": bool(passed),
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def from_json(text: str) -> dict:
    doc = json.loads(text)
    for key in ("suite", "config", "reports", "pass"):
        if key not in doc:
            raise ValueError(f"missing key {key!r}")
    doc["reports"] = [NormReport.from_dict(r) for r in doc["reports"]]
    return doc


def to_csv(reports: list[NormReport]) -> str:
    if not reports:
        raise ValueError("no reports to emit")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        d = r.as_dict()
        row = []
        for k in CSV_FIELDS:
            v = d[k]
            if k == "meta":
                v = json.dumps(v, sort_keys=True)
            row.append("" if v is None else v)
        w.writerow(row)
    return buf.getvalue()


def emit_report(suite: str, config: dict, reports: list[NormReport], passed: bool, fmt: str = "json",
                path=None) -> str:
    """Render reports as JSON or CSV; write to ``path`` when given."""
    if not reports:
        raise ValueError("no reports to emit")
    if fmt == "json":
        text = to_json(suite, config, reports, passed)
    elif fmt == "csv":
        text = to_csv(reports)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
