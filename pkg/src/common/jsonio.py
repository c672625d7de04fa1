# src/common/jsonio.py
"""
Report serialization.

Rationals are written as "p/q" strings, floats are rounded to 15 significant
digits, non-finite floats become strings. Key order is insertion order, so the
same report always serializes to the same bytes.
"""
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, List, Optional

import numpy as np
import pandas as pd


def fraction_str(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def round_float(x: float) -> Any:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(format(x, ".15g"))


def to_jsonable(value: Any) -> Any:
    """Convert report values (fractions, numpy, dataclasses with to_dict) into JSON values."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Fraction):
        return fraction_str(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return round_float(float(value))
    if isinstance(value, complex):
        return {"re": round_float(value.real), "im": round_float(value.imag)}
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps_report(report: Any) -> str:
    return json.dumps(to_jsonable(report), indent=2, ensure_ascii=False) + "\n"


def write_text(text: str, out: Optional[Path] = None):
    """Write to the given path, or to stdout when no path is given."""
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)


def records_to_csv(records: Iterable[dict]) -> str:
    """Flat records -> CSV text with a header row (minimal RFC-4180 quoting)."""
    rows: List[dict] = [{k: to_jsonable(v) for k, v in r.items()} for r in records]
    return pd.DataFrame(rows).to_csv(index=False)


def load_json(path) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
