"""Report containers and JSON conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, is_dataclass

import numpy as np

from .params import SoboParams


def jsonable(obj):
    """Recursively convert numpy / dataclass values into JSON-safe objects."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


@dataclass
class InequalityReport:
    params: SoboParams
    left_norm: float
    right_product: float
    ratio: float
    family_sweep: list = field(default_factory=list)  # (family parameter, ratio)
    trace: dict = field(default_factory=dict)
    verdict: str = "pass"  # pass | fail | degenerate
    band: float = 0.05

    @property
    def envelope(self) -> tuple[float, float, float]:
        vals = np.array([r for _, r in self.family_sweep] or [self.ratio], dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            return (math.nan,) * 3
        return float(vals.min()), float(np.median(vals)), float(vals.max())

    def to_dict(self) -> dict:
        out = jsonable(self)
        out["envelope"] = jsonable(self.envelope)
        return out


def stability_verdict(values, band: float) -> str:
    vals = np.asarray(values, dtype=float)
    if vals.size == 0 or not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        return "degenerate" if vals.size == 0 or np.any(vals == 0) else "fail"
    return "pass" if vals.max() / vals.min() - 1 <= band else "fail"
