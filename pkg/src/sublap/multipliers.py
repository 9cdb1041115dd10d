"""Scalar spectral multipliers, their derivatives and the (k)-seminorm.

Every multiplier carries a vectorized numpy evaluator and, where a closed
form exists, a sympy expression used for exact derivatives.  The smooth
steps are built from B(u) = exp(-1/u) (u > 0), B(u) = 0 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy as sp
from scipy.special import binom, gammainc
from sympy.codegen.cfunctions import expm1 as sp_expm1

LAM = sp.Symbol("lam", positive=True)
MAX_ORDER = 6


class MultiplierError(ValueError):
    pass


def _B(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def _step(lam, lo, hi, upper: bool):
    """Smooth step: 1 on (0, lo], 0 on [hi, inf) (or the complement if upper)."""
    a, b = _B(hi - lam), _B(lam - lo)
    den = a + b
    num = b if upper else a
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    return out


def _sym_step(lam, lo, hi, upper: bool):
    a, b = sp.exp(-1 / (hi - lam)), sp.exp(-1 / (lam - lo))
    inside = (b if upper else a) / (a + b)
    return sp.Piecewise(
        (sp.Integer(0 if upper else 1), lam <= lo),
        (sp.Integer(1 if upper else 0), lam >= hi),
        (inside, True),
    )


def _pow(lam, e):
    lam = np.asarray(lam, dtype=float)
    if e == 0:
        return np.ones_like(lam)
    with np.errstate(divide="ignore"):
        return lam**e


@dataclass(frozen=True, eq=False)
class Multiplier:
    """A named scalar function m on (0, inf).

    ``at_zero`` is the value used on the zero eigenvalue (the limit at 0+);
    ``singular_at_zero`` marks multipliers unbounded near 0 (negative
    powers), for which zero modes must be projected out.
    """

    name: str
    params: tuple = ()
    fn: Callable = field(repr=False, default=None)
    expr: Callable | None = field(repr=False, default=None)
    at_zero: float = 0.0
    singular_at_zero: bool = False
    deriv: Callable | None = field(repr=False, default=None)

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self.fn(lam), dtype=float)
        zero = lam == 0
        if np.any(zero):
            out = np.where(zero, np.inf if self.singular_at_zero else self.at_zero, out)
        return out

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({', '.join(f'{p:g}' for p in self.params)})"

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        expr = None
        if self.expr is not None and other.expr is not None:
            a, b = self.expr, other.expr
            expr = lambda lam: a(lam) * b(lam)  # noqa: E731
        return Multiplier(
            f"{self.label}*{other.label}",
            (),
            lambda lam: self.fn(lam) * other.fn(lam),
            expr,
            self.at_zero * other.at_zero,
            self.singular_at_zero or other.singular_at_zero,
        )

    def symbolic(self):
        if self.expr is None:
            return None
        return self.expr(LAM)


# -- constructors --------------------------------------------------------------


def heat() -> Multiplier:
    return Multiplier("heat", (), lambda l: np.exp(-l), lambda x: sp.exp(-x), 1.0)


def power(s: float) -> Multiplier:
    s = float(s)
    return Multiplier(
        "power", (s,), lambda l: _pow(l, s), lambda x: x ** sp.nsimplify(s),
        1.0 if s == 0 else 0.0, s < 0,
    )


def theta0() -> Multiplier:
    return Multiplier("theta0", (), lambda l: _step(l, 0.5, 1.0, False),
                      lambda x: _sym_step(x, sp.Rational(1, 2), 1, False), 1.0)


def theta1() -> Multiplier:
    return Multiplier("theta1", (), lambda l: _step(l, 0.5, 1.0, True),
                      lambda x: _sym_step(x, sp.Rational(1, 2), 1, True), 0.0)


def _sym_pow(x, e):
    return x ** sp.nsimplify(e)


def _poincare_core_deriv(s: float, r: int, lam):
    """r-th derivative of l^{s/2-1}(1-e^{-l}), stable as l -> 0.

    Uses (1-e^{-l})/l = int_0^1 e^{-lu} du, whose n-th derivative is
    (-1)^n n! P(n+1, l) / l^{n+1} with P the regularized incomplete gamma.
    """
    lam = np.asarray(lam, dtype=float)

    def g(n):
        return (-1) ** n * math.factorial(n) * gammainc(n + 1, lam) / lam ** (n + 1)

    half = s / 2
    out = np.zeros_like(lam)
    for i in range(r + 1):
        # i-th derivative of l^{s/2}
        c = np.prod([half - q for q in range(i)]) if i else 1.0
        if c == 0:
            continue
        out += binom(r, i) * c * _pow(lam, half - i) * g(r - i)
    return out


def _step_deriv(upper: bool):
    def d(r, lam):
        return eval_derivative(theta1() if upper else theta0(), r, lam)
    return d


def _poincare_product(s: float, step):
    def deriv(r, lam):
        if step is None:
            return _poincare_core_deriv(s, r, lam)
        out = np.zeros_like(np.asarray(lam, dtype=float))
        for i in range(r + 1):
            out += binom(r, i) * _poincare_core_deriv(s, i, lam) * step(r - i, lam)
        return out
    return deriv


def poincare_m(s: float = 0.0) -> Multiplier:
    """m(l) = l^{s/2-1} (1 - e^{-l})."""
    e = s / 2 - 1
    return Multiplier(
        "poincare_m", (float(s),), lambda l: _pow(l, e) * -np.expm1(-l),
        lambda x: _sym_pow(x, e) * -sp_expm1(-x), 1.0 if s == 0 else 0.0,
        deriv=_poincare_product(s, None),
    )


def m0(s: float = 0.0) -> Multiplier:
    e = s / 2 - 1
    return Multiplier(
        "m0", (float(s),), lambda l: _pow(l, e) * -np.expm1(-l) * _step(l, 0.5, 1.0, False),
        lambda x: _sym_pow(x, e) * -sp_expm1(-x) * _sym_step(x, sp.Rational(1, 2), 1, False),
        1.0 if s == 0 else 0.0,
        deriv=_poincare_product(s, _step_deriv(False)),
    )


def m1(s: float = 0.0) -> Multiplier:
    e = s / 2 - 1
    return Multiplier(
        "m1", (float(s),), lambda l: _pow(l, e) * -np.expm1(-l) * _step(l, 0.5, 1.0, True),
        lambda x: _sym_pow(x, e) * -sp_expm1(-x) * _sym_step(x, sp.Rational(1, 2), 1, True),
        deriv=_poincare_product(s, _step_deriv(True)),
    )


def m_a(s: float = 0.0) -> Multiplier:
    """l^{s/2-1} theta1(l)."""
    e = s / 2 - 1
    return Multiplier(
        "m_a", (float(s),), lambda l: _pow(l, e) * _step(l, 0.5, 1.0, True),
        lambda x: _sym_pow(x, e) * _sym_step(x, sp.Rational(1, 2), 1, True),
    )


def m_b(s: float = 0.0) -> Multiplier:
    """l^{s/2-1} e^{-l} theta1(l)."""
    e = s / 2 - 1
    return Multiplier(
        "m_b", (float(s),), lambda l: _pow(l, e) * np.exp(-l) * _step(l, 0.5, 1.0, True),
        lambda x: _sym_pow(x, e) * sp.exp(-x) * _sym_step(x, sp.Rational(1, 2), 1, True),
    )


def psi() -> Multiplier:
    """theta0(l/2) - theta0(l), supported in [1/2, 2]."""
    return Multiplier(
        "psi", (), lambda l: _step(l / 2, 0.5, 1.0, False) - _step(l, 0.5, 1.0, False),
        lambda x: _sym_step(x / 2, sp.Rational(1, 2), 1, False) - _sym_step(x, sp.Rational(1, 2), 1, False),
    )


def phi(s: float = 0.0) -> Multiplier:
    """psi(l) l^{s/2-1}; s = 0 gives psi(l)/l."""
    e = s / 2 - 1
    ps = psi()
    return Multiplier("phi", (float(s),), lambda l: ps.fn(l) * _pow(l, e),
                      lambda x: ps.expr(x) * _sym_pow(x, e))


def lowpass_chi() -> Multiplier:
    """Smooth cut-off equal to 1 on (0, 1/4] and 0 on [1, inf)."""
    return Multiplier("lowpass_chi", (), lambda l: _step(l, 0.25, 1.0, False),
                      lambda x: _sym_step(x, sp.Rational(1, 4), 1, False), 1.0)


def bandlimit(j: int) -> Multiplier:
    """chi(4^{-j} l) - chi(4^{j} l)."""
    j = int(j)
    if j < 0:
        raise MultiplierError("bandlimit index must be >= 0")
    lo, hi = 4.0**-j, 4.0**j
    r = sp.Integer(4) ** j
    return Multiplier(
        "bandlimit", (j,),
        lambda l: _step(lo * l, 0.25, 1.0, False) - _step(hi * l, 0.25, 1.0, False),
        lambda x: _sym_step(x / r, sp.Rational(1, 4), 1, False) - _sym_step(x * r, sp.Rational(1, 4), 1, False),
    )


_REGISTRY = {
    "heat": heat, "power": power, "poincare_m": poincare_m, "theta0": theta0, "theta1": theta1,
    "m0": m0, "m1": m1, "m_a": m_a, "m_b": m_b, "psi": psi, "phi": phi,
    "lowpass_chi": lowpass_chi, "bandlimit": bandlimit,
}


def make(name: str, *params) -> Multiplier:
    try:
        return _REGISTRY[name](*params)
    except KeyError:
        raise MultiplierError(f"unknown multiplier {name!r}") from None


# -- evaluation ------------------------------------------------------------------


def evaluate(m: Multiplier, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise MultiplierError("multipliers are evaluated on lam > 0")
    return m(lam)


@lru_cache(maxsize=256)
def _derivative_fn(name: str, params: tuple, r: int):
    expr = make(name, *params).symbolic()
    return sp.lambdify(LAM, sp.diff(expr, LAM, r), modules=[{"expm1": np.expm1}, "numpy"])


def _fd_derivative(fn, r: int, lam):
    # 5-point central differences with a step proportional to lam
    if r == 0:
        return fn(lam)
    d = 1e-3 * lam
    c = np.array([1, -8, 0, 8, -1]) / 12.0
    pts = [_fd_derivative(fn, r - 1, lam + k * d) for k in (-2, -1, 0, 1, 2)]
    return sum(ci * p for ci, p in zip(c, pts)) / d


def eval_derivative(m: Multiplier, r: int, lam) -> np.ndarray:
    """r-th derivative of m at lam > 0 (analytic when a closed form exists)."""
    if r < 0 or r > MAX_ORDER:
        raise MultiplierError(f"derivative order {r} not available (max {MAX_ORDER})")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise MultiplierError("multipliers are evaluated on lam > 0")
    if r == 0:
        return m(lam)
    if m.deriv is not None:
        with np.errstate(all="ignore"):
            return np.nan_to_num(m.deriv(r, lam), nan=0.0, posinf=0.0, neginf=0.0)
    if m.expr is None or m.name not in _REGISTRY:
        if r > 2:
            raise MultiplierError(f"finite-difference derivatives limited to order 2, got {r}")
        return _fd_derivative(m, r, lam)
    fn = _derivative_fn(m.name, m.params, r)
    with np.errstate(all="ignore"):
        out = np.asarray(fn(lam), dtype=float) * np.ones_like(lam)
    # 0 * inf at the flat ends of the smooth steps
    return np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0)


@dataclass
class SeminormResult:
    value: float
    argmax_lambda: float
    order: int
    unbounded: bool
    grid: tuple  # (lam_min, lam_max, n_points)


def seminorm_k(m: Multiplier, k: int, lam_grid=None) -> SeminormResult:
    """Grid sup of (1+l)^k |m^{(r)}(l)| over 1 <= r <= k (a lower bound)."""
    if lam_grid is None:
        lam_grid = np.logspace(-6, 6, 4096)
    lam = np.asarray(lam_grid, dtype=float)
    best, where, order = -1.0, 0, 1
    for r in range(1, k + 1):
        vals = (1 + lam) ** k * np.abs(eval_derivative(m, r, lam))
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, where, order = float(vals[i]), i, r
    unbounded = where == len(lam) - 1 and best > 0
    return SeminormResult(best, float(lam[where]), order, bool(unbounded), (float(lam[0]), float(lam[-1]), len(lam)))


def decomposition_identities_check(s: float = 0.0, J: int = 20, n: int = 10_000) -> dict:
    """Max pointwise defects of the cut-off identities on a log grid."""
    if not 0 <= s < 1:
        raise MultiplierError("s must lie in [0, 1)")
    lam = np.logspace(-4, (J - 1) * math.log10(2), n)
    mm, mm0, mm1 = poincare_m(s)(lam), m0(s)(lam), m1(s)(lam)
    ma, mb = m_a(s)(lam), m_b(s)(lam)
    ph, ps, t1 = phi(s), psi(), theta1()(lam)
    dyadic = sum(2.0 ** (-j * (1 - s / 2)) * ph(2.0**-j * lam) for j in range(J + 1))
    partition = sum(ps(2.0**-j * lam) for j in range(J + 1))
    t0 = theta0()(lam)
    return {
        "s": s,
        "J": J,
        "grid": (float(lam[0]), float(lam[-1]), n),
        "m0+m1-m": float(np.max(np.abs(mm0 + mm1 - mm))),
        "m_a-m_b-m1": float(np.max(np.abs(ma - mb - mm1))),
        "dyadic_sum-m_a": float(np.max(np.abs(dyadic - ma))),
        "psi_partition-theta1": float(np.max(np.abs(partition - t1))),
        "theta0+theta1-1": float(np.max(np.abs(t0 + t1 - 1))),
    }
