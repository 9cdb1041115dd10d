"""Exponent bookkeeping for the inequality variants."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

VARIANTS = ("strong_pgt1", "strong_p1", "weak_p1", "poincare")
ALIASES = {"pgt1": "strong_pgt1", "strong1": "strong_p1", "weak1": "weak_p1"}


class ParamError(ValueError):
    """Raised with every violated relation listed in the message."""


@dataclass(frozen=True)
class SoboParams:
    variant: str
    p: float
    q: float
    s: float
    s1: float
    beta: float
    theta: float
    alpha: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThresholdSpec:
    alpha: float
    M: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParamError(f"threshold level alpha must be positive, got {self.alpha}")
        if not self.M > 10:
            raise ParamError(f"saturation ratio M must exceed 10, got {self.M}")


def _num(name, value, required=True):
    if value is None:
        if required:
            raise ParamError(f"missing parameter {name}")
        return None
    v = float(value)
    if math.isnan(v):
        raise ParamError(f"parameter {name} is NaN")
    return v


def validate_params(variant: str, *, p=None, q=None, s=None, s1=None, beta=None, tol: float = 1e-12) -> SoboParams:
    """Fill the derived exponents of a variant and reject inconsistent tuples."""
    variant = ALIASES.get(variant, variant)
    if variant not in VARIANTS:
        raise ParamError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    errors = []
    nan = float("nan")

    if variant == "poincare":
        s = _num("s", 0.0 if s is None else s)
        if not 0 <= s < 1:
            errors.append(f"range constraint 0<=s<1 violated (s={s:g})")
        if errors:
            raise ParamError("; ".join(errors))
        return SoboParams(variant, 1.0, 1.0, s, 1.0, nan, nan, 1.0 - s)

    if variant == "strong_pgt1":
        p, q, s1 = _num("p", p), _num("q", q), _num("s1", s1)
        s, beta = _num("s", s, False), _num("beta", beta, False)
        if not 1 < p < q < math.inf:
            errors.append(f"exponent constraint 1<p<q<inf violated (p={p:g}, q={q:g})")
            raise ParamError("; ".join(errors))
        theta = p / q
        if beta is None and s is None:
            raise ParamError("strong_pgt1 needs beta or s")
        if beta is None:
            beta = (theta * s1 - s) / (1 - theta)
        derived_s = theta * s1 - (1 - theta) * beta
        if s is None:
            s = derived_s
        elif abs(s - derived_s) > tol * max(1.0, abs(s)):
            errors.append(f"relation s=theta*s1-(1-theta)*beta violated (s={s:g}, expected {derived_s:g})")
        if not -beta < s < s1:
            errors.append(f"order constraint -beta<s<s1 violated (s={s:g}, s1={s1:g}, beta={beta:g})")
        if not beta > 0:
            errors.append(f"thermic Besov index needs beta>0 (beta={beta:g})")
        if errors:
            raise ParamError("; ".join(errors))
        return SoboParams(variant, p, q, s, s1, beta, theta, s1 - s)

    q = _num("q", q)
    if not 1 < q < math.inf:
        raise ParamError(f"exponent constraint 1<q<inf violated (q={q:g})")
    theta = 1 / q
    if variant == "strong_p1":
        b = theta / (1 - theta)
        if beta is not None and abs(float(beta) - b) > tol * max(1.0, b):
            errors.append(f"relation beta=theta/(1-theta) violated (beta={beta}, expected {b:g})")
        if s is not None and float(s) != 0:
            errors.append("strong_p1 has s=0")
        if errors:
            raise ParamError("; ".join(errors))
        return SoboParams(variant, 1.0, q, 0.0, 1.0, b, theta, 1.0)

    s = _num("s", s)
    if not 0 < s < 1 / q:
        errors.append(f"range constraint 0<s<1/q violated (s={s:g}, 1/q={1 / q:g})")
    b = (1 - s * q) / (q - 1)
    if beta is not None and abs(float(beta) - b) > tol * max(1.0, abs(b)):
        errors.append(f"relation beta=(1-sq)/(q-1) violated (beta={beta}, expected {b:g})")
    if errors:
        raise ParamError("; ".join(errors))
    return SoboParams(variant, 1.0, q, s, 1.0, b, theta, 1.0 - s)
