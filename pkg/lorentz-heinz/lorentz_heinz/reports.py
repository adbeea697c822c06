"""Check and probe reports with deterministic JSON and CSV output"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

THEOREM_VIOLATION = "theorem-violation"
HYPOTHESIS_FAILURE = "hypothesis-failure"
PASSED = "passed"


def clean(value):
    """Plain JSON-safe scalars; non-finite floats become null"""
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    try:
        number = float(value)
    except (TypeError, ValueError):
        return str(value)
    return number if math.isfinite(number) else None


@dataclass(frozen=True)
class CheckReport:
    """Both sides of an identity or inequality check, kept for auditing"""

    check: str
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    quadrature_error: float
    passed: bool
    metadata: dict = field(default_factory=dict)

    @property
    def outcome(self) -> str:
        return PASSED if self.passed else THEOREM_VIOLATION

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "lhs": clean(self.lhs),
            "rhs": clean(self.rhs),
            "residual": clean(self.residual),
            "tolerance": clean(self.tolerance),
            "quadrature_error": clean(self.quadrature_error),
            "passed": bool(self.passed),
            "metadata": clean(self.metadata),
        }


@dataclass(frozen=True)
class ProbeReport:
    """Per-radius table plus a verdict"""

    check: str
    columns: tuple
    rows: list
    verdict: str
    metadata: dict = field(default_factory=dict)

    @property
    def outcome(self) -> str:
        if self.verdict == "hypothesis-fails":
            return HYPOTHESIS_FAILURE
        if self.verdict == "theorem-violation":
            return THEOREM_VIOLATION
        return PASSED

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "verdict": self.verdict,
            "columns": list(self.columns),
            "rows": [clean(list(row)) for row in self.rows],
            "metadata": clean(self.metadata),
        }


def to_json(payload: dict) -> str:
    """Stable-order UTF-8 JSON text terminated by a newline"""
    return json.dumps(payload, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def to_csv(columns, rows) -> str:
    """CSV with a header row, '.' decimals and line-feed terminators"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in row])
    return buffer.getvalue()
