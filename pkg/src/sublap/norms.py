"""Lebesgue, Lorentz, Sobolev and thermic Besov norms of grid functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .lattice import LatticeGroup
from .ops import grad_l1_norm
from .spectral import SpectralRep, fractional_power_apply, heat_apply, heat_family


class NormError(ValueError):
    pass


def zero_mean(f) -> np.ndarray:
    """Projection onto the complement of constants (Haar weights are uniform)."""
    f = np.asarray(f, dtype=float)
    return f - f.mean()


def distribution_function(g: LatticeGroup, f) -> tuple[np.ndarray, np.ndarray]:
    """Jump points of sigma -> mu{|f| > sigma}.

    Returns distinct levels v_1 > v_2 > ... and m_i = mu{|f| >= v_i}, so that
    mu{|f| > sigma} = m_i for v_{i+1} <= sigma < v_i.
    """
    a = np.sort(np.abs(np.asarray(f, dtype=float)).ravel())[::-1]
    a = a[a > 0]
    if a.size == 0:
        return np.zeros(0), np.zeros(0)
    levels, first = np.unique(a[::-1], return_index=True)
    # counts of entries >= level, for ascending distinct levels
    n = a.size
    counts = n - first
    return levels[::-1], counts[::-1] * g.haar_weight


def lp_norm(g: LatticeGroup, f, p: float, route: str = "direct") -> float:
    f = np.abs(np.asarray(f, dtype=float))
    if not p >= 1:
        raise NormError(f"p must be >= 1, got {p}")
    if math.isinf(p):
        if route == "distribution":
            raise NormError("distribution route needs finite p")
        return float(f.max())
    top = float(f.max()) if f.size else 0.0
    if top == 0.0 or not math.isfinite(top):
        return top
    f = f / top  # keeps f**p clear of under- and overflow
    if route == "direct":
        return top * float((g.haar_weight * (f**p).sum()) ** (1 / p))
    if route != "distribution":
        raise NormError(f"unknown route {route!r}")
    levels, mass = distribution_function(g, f)
    if levels.size == 0:
        return 0.0
    # int_0^inf p s^{p-1} mu(s) ds, exact on each constant piece
    lower = np.append(levels[1:], 0.0)
    return top * float((mass * (levels**p - lower**p)).sum() ** (1 / p))


def lorentz_weak_norm(g: LatticeGroup, f, p: float) -> float:
    """sup_sigma sigma * mu{|f| > sigma}^{1/p}, attained in the limit at a jump."""
    if not 1 < p < math.inf:
        raise NormError(f"weak norm needs 1 < p < inf, got {p}")
    levels, mass = distribution_function(g, f)
    if levels.size == 0:
        return 0.0
    return float((levels * mass ** (1 / p)).max())


def _check_sobolev_p(p: float) -> None:
    if not 1 < p < math.inf:
        raise NormError(f"Sobolev norms use 1 < p < inf (p=1 goes through the gradient), got {p}")


def sobolev_norm(rep: SpectralRep, f, s: float, p: float) -> float:
    """||J^{s/2} f||_p (homogeneous; negative s needs zero-mean f)."""
    _check_sobolev_p(p)
    return lp_norm(rep.lattice, fractional_power_apply(rep, s / 2, f), p)


def weak_sobolev_norm(rep: SpectralRep, f, s: float, p: float) -> float:
    _check_sobolev_p(p)
    return lorentz_weak_norm(rep.lattice, fractional_power_apply(rep, s / 2, f), p)


def sobolev_11_norm(g: LatticeGroup, f) -> float:
    return grad_l1_norm(g, f)


@dataclass
class BesovResult:
    value: float
    argmax_t: float
    t_grid: np.ndarray
    curve: np.ndarray  # t^{beta/2} ||H_t f||_inf on the grid
    pinned: str | None  # "left"/"right" if the sup sits at a grid end

    def __iter__(self):
        return iter((self.value, self.argmax_t))


def besov_t_grid(g: LatticeGroup, per_decade: int = 32, t_min: float | None = None, t_max: float | None = None) -> np.ndarray:
    t_min = g.h**2 / 4 if t_min is None else t_min
    t_max = 4 * g.diameter**2 if t_max is None else t_max
    n = max(2, int(math.ceil(per_decade * math.log10(t_max / t_min))) + 1)
    return np.geomspace(t_min, t_max, n)


def heat_sup_curve(rep: SpectralRep, f, ts) -> np.ndarray:
    return np.array([np.abs(ht).max() for ht in heat_family(rep, f, ts)])


def besov_thermic_norm(
    rep: SpectralRep, f, beta: float, t_grid=None, refine: bool = True, project: bool = True
) -> BesovResult:
    """sup_t t^{beta/2} ||H_t f||_inf over a geometric t-grid.

    With ``refine`` the top local maxima are polished by a bounded scalar
    search between their grid neighbours, so the result bounds the
    supremum over the grid span from below more tightly.  The homogeneous
    norm is taken on the zero-mean part of f when ``project`` is set.
    """
    if not beta > 0:
        raise NormError(f"beta must be positive, got {beta}")
    g = rep.lattice
    f = g.check_shape(f)
    if project:
        f = zero_mean(f)
    ts = besov_t_grid(g) if t_grid is None else np.asarray(t_grid, dtype=float)
    if ts.size < 2:
        raise NormError("t_grid needs at least two points")
    curve = ts ** (beta / 2) * heat_sup_curve(rep, f, ts)
    i = int(np.argmax(curve))
    best, where = float(curve[i]), float(ts[i])
    if best == 0.0:
        return BesovResult(0.0, where, ts, curve, None)
    if refine:
        inner = [k for k in range(1, len(ts) - 1) if curve[k] >= curve[k - 1] and curve[k] >= curve[k + 1]]
        inner = sorted(inner, key=lambda k: -curve[k])[:3]
        for k in inner:
            obj = lambda u: -math.exp(u) ** (beta / 2) * float(np.abs(heat_apply(rep, math.exp(u), f)).max())  # noqa: E731
            res = minimize_scalar(obj, bounds=(math.log(ts[k - 1]), math.log(ts[k + 1])), method="bounded",
                                  options={"xatol": 1e-4})
            if -res.fun > best:
                best, where = float(-res.fun), float(math.exp(res.x))
    pinned = "left" if i == 0 else "right" if i == len(ts) - 1 else None
    return BesovResult(best, where, ts, curve, pinned)
