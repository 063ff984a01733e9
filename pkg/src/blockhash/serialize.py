"""Deterministic text forms for exact values, reports and witnesses."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import fields, is_dataclass
from fractions import Fraction

import numpy as np

from .exactreal import OneMinusExpNeg, Surd


def fmt(v) -> str:
    """Canonical string: fractions as p/q, floats with 17 significant digits."""
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (Surd, OneMinusExpNeg)):
        return str(v)
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(fmt(x) for x in v) + "]"
    return str(v)


def to_jsonable(v):
    if isinstance(v, dict):
        return {str(k): to_jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    if is_dataclass(v) and not isinstance(v, type):
        return {f.name: to_jsonable(getattr(v, f.name)) for f in fields(v)}
    if hasattr(v, "descriptor") and isinstance(getattr(v, "descriptor"), str):
        return v.descriptor
    return fmt(v)


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1) + "\n"


def params_str(params: dict) -> str:
    return ";".join(f"{k}={fmt(v)}" for k, v in sorted(params.items()))


REPORT_HEADER = ["claim_id", "parameters", "measured", "bound", "direction", "satisfied", "ok"]


def report_row(r) -> list[str]:
    return [r.name, params_str(r.parameters), fmt(r.measured), fmt(r.bound), r.direction,
            fmt(r.satisfied), fmt(r.ok)]


def csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
