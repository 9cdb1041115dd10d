"""Modified Poincare pseudo-inequality: ratio curves and the multiplier split."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import multipliers as mlib
from ..lattice import LatticeGroup
from ..norms import besov_t_grid, lp_norm
from ..ops import grad_l1_norm, sub_laplacian_apply
from ..spectral import SpectralRep, apply_multiplier, fractional_power_apply, heat_family, kernel_of


@dataclass
class PoincareResult:
    s: float
    ts: np.ndarray
    ratios: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray
    grad_l1: float
    sup_ratio: float
    argmax: int
    argmax_t: float
    low_decade_slope: float
    degenerate: bool


def _loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def poincare_ratio(g: LatticeGroup, rep: SpectralRep, f, s: float = 0.0, t_grid=None, per_decade: int = 16) -> PoincareResult:
    """ratio(t) = ||u - H_t u||_1 / (t^{(1-s)/2} ||grad f||_1) with u = J^{s/2} f."""
    if not 0 <= s < 1:
        raise ValueError(f"s must lie in [0, 1), got {s}")
    f = g.check_shape(f)
    ts = besov_t_grid(g, per_decade) if t_grid is None else np.asarray(t_grid, dtype=float)
    u = fractional_power_apply(rep, s / 2, f)
    grad = grad_l1_norm(g, f)
    nums = np.array([lp_norm(g, u - ht, 1) for ht in heat_family(rep, u, ts)])
    dens = ts ** ((1 - s) / 2) * grad
    degenerate = grad == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(dens > 0, nums / np.where(dens > 0, dens, 1), np.nan)
    if degenerate or not np.any(np.isfinite(ratios)):
        return PoincareResult(s, ts, ratios, nums, dens, grad, math.nan, 0, math.nan, math.nan, True)
    i = int(np.nanargmax(ratios))
    low = ts <= ts[0] * 10 * (1 + 1e-12)
    slope = _loglog_slope(ts[low], ratios[low])
    return PoincareResult(s, ts, ratios, nums, dens, grad, float(ratios[i]), i, float(ts[i]), slope, False)


def kernel_gradient_l1(g: LatticeGroup, rep: SpectralRep, m: mlib.Multiplier, t: float) -> float:
    """||grad~ M||_1 for the kernel of m(tJ), right-invariant gradient."""
    return grad_l1_norm(g, kernel_of(rep, m, t), side="right")


def dyadic_kernel_regression(g: LatticeGroup, rep: SpectralRep, t: float, js=range(2, 9), s: float = 0.0) -> dict:
    """log2 ||grad~ K_{j,t}||_1 against j for K_{j,t} the kernel of phi(2^{-j} t J)."""
    js = list(js)
    ph = mlib.phi(s)
    norms = [kernel_gradient_l1(g, rep, ph, 2.0**-j * t) for j in js]
    slope = float(np.polyfit(js, np.log2(norms), 1)[0]) if len(js) > 1 else math.nan
    return {"t": t, "j": js, "grad_l1": norms, "slope": slope, "predicted": 0.5}


def m0_kernel_t_scaling(g: LatticeGroup, rep: SpectralRep, ts, s: float = 0.0) -> dict:
    """||grad~ M_t^{(0)}||_1 against t and its log-log slope."""
    ts = np.asarray(ts, dtype=float)
    mm = mlib.m0(s)
    norms = np.array([kernel_gradient_l1(g, rep, mm, float(t)) for t in ts])
    return {"t": ts, "grad_l1": norms, "slope": _loglog_slope(ts, norms), "predicted": -0.5}


def poincare_proof_trace(g: LatticeGroup, rep: SpectralRep, f, s: float, t: float, J: int = 8, js=None) -> dict:
    """Replay u - H_t u = m(tJ)(t^{1-s/2} J f) through m = m0 + m_a - m_b."""
    if not 0 <= s < 1:
        raise ValueError(f"s must lie in [0, 1), got {s}")
    f = g.check_shape(f)
    u = fractional_power_apply(rep, s / 2, f)
    direct = u - next(heat_family(rep, u, [t]))
    src = t ** (1 - s / 2) * sub_laplacian_apply(g, f)
    p0 = apply_multiplier(rep, mlib.m0(s), t, src)
    pa = apply_multiplier(rep, mlib.m_a(s), t, src)
    pb = apply_multiplier(rep, mlib.m_b(s), t, src)
    pm = apply_multiplier(rep, mlib.poincare_m(s), t, src)
    scale = max(np.linalg.norm(direct), 1e-300)
    grad = grad_l1_norm(g, f)
    norm = t ** ((1 - s) / 2) * grad
    js = list(range(0, J + 1)) if js is None else list(js)
    kern = dyadic_kernel_regression(g, rep, t, js, s) if len(js) > 1 else None
    return {
        "s": s,
        "t": t,
        "sum_of_parts_defect": float(np.linalg.norm(p0 + pa - pb - direct) / scale),
        "single_multiplier_defect": float(np.linalg.norm(pm - direct) / scale),
        "part_l1": {"m0": lp_norm(g, p0, 1), "m_a": lp_norm(g, pa, 1), "m_b": lp_norm(g, pb, 1)},
        "part_ratios": {k: (lp_norm(g, v, 1) / norm if norm > 0 else math.nan) for k, v in
                        (("m0", p0), ("m_a", pa), ("m_b", pb))},
        "direct_ratio": lp_norm(g, direct, 1) / norm if norm > 0 else math.nan,
        "kernels": kern,
    }
