"""The p = 1 inequalities: weak trace, thresholding, layer-cake replay, band limits."""

from __future__ import annotations

import math

import numpy as np

from .. import multipliers as mlib
from ..lattice import LatticeGroup
from ..norms import besov_thermic_norm, lp_norm, zero_mean
from ..ops import gradient, grad_l1_norm
from ..spectral import SpectralRep, apply_multiplier, fractional_power_apply, heat_apply
from .params import ParamError, SoboParams, ThresholdSpec

CERT_RTOL = 1e-9


def alpha_grid(top: float, per_decade: int = 16, decades: float = 2.0) -> np.ndarray:
    """Geometric grid on [10^-decades * top, top]."""
    if not top > 0:
        raise ValueError("alpha grid needs a positive maximum")
    n = int(round(per_decade * decades)) + 1
    return np.geomspace(top * 10.0**-decades, top, n)


def layer_cake_integral(alphas, measures, q: float, rule: str = "trapezoid") -> float:
    """int mu(alpha) d(alpha^q) using exact increments of alpha^q between grid points.

    The cell [0, alpha_0] uses mu(alpha_0).  ``rule="right"`` evaluates each
    cell at its right end (a lower sum for decreasing mu).
    """
    a = np.asarray(alphas, dtype=float)
    m = np.asarray(measures, dtype=float)
    inc = np.diff(a**q)
    if rule == "trapezoid":
        body = 0.5 * (m[1:] + m[:-1])
    elif rule == "right":
        body = m[1:]
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return float(m[0] * a[0] ** q + (body * inc).sum())


# -- weak p = 1 -------------------------------------------------------------------


def weak_p1_trace(g: LatticeGroup, rep: SpectralRep, f, params: SoboParams, alphas=None, per_decade: int = 16) -> dict:
    """Replay the weak p=1 argument on u = J^{s/2} f normalized to unit Besov norm."""
    if params.variant != "weak_p1":
        raise ParamError("weak_p1_trace needs weak_p1 parameters")
    s, q, beta = params.s, params.q, params.beta
    f0 = zero_mean(g.check_shape(f))
    u = fractional_power_apply(rep, s / 2, f0)
    bes = besov_thermic_norm(rep, u, beta + s)
    if not bes.value > 0:
        raise ValueError("normalization failure: Besov norm vanishes")
    u = u / bes.value
    f0 = f0 / bes.value
    grad = grad_l1_norm(g, f0)
    if not grad > 0:
        raise ValueError("normalization failure: gradient vanishes")
    top = float(np.abs(u).max())
    alphas = alpha_grid(top, per_decade) if alphas is None else np.asarray(alphas, dtype=float)
    texp = -2.0 / (beta + s)
    rows = []
    for a in alphas:
        t = a**texp
        hu = heat_apply(rep, t, u)
        sup = float(np.abs(hu).max())
        big = np.abs(u) > 2 * a
        far = np.abs(u - hu) > a
        mu = float(big.sum() * g.haar_weight)
        rows.append({
            "alpha": float(a),
            "t_alpha": float(t),
            "heat_sup": sup,
            "certified": bool(sup <= a * (1 + CERT_RTOL)),
            "violations": int((big & ~far).sum()),
            "measure": mu,
            "chebyshev_side": float(a ** (q - 1) * lp_norm(g, u - hu, 1)),
            "constant": a**q * mu / grad,
        })
    consts = np.array([r["constant"] for r in rows])
    al = np.array([r["alpha"] for r in rows])
    # sup over alpha > 0 of alpha^q mu{|u| > 2 alpha}, exact at the jumps of the distribution
    levels = np.sort(np.abs(u).ravel())[::-1]
    counts = np.arange(1, levels.size + 1) * g.haar_weight
    exact = float(((levels / 2) ** q * counts).max() / grad)
    window = al >= top / 10 * (1 - 1e-12)
    grid_sup = float(consts.max())
    window_sup = float(consts[window].max())
    vals = [grid_sup, window_sup, exact]
    return {
        "t_exponent": texp,
        "besov_scale": bes.value,
        "grad_l1": grad,
        "rows": rows,
        "violations": int(sum(r["violations"] for r in rows)),
        "uncertified": int(sum(not r["certified"] for r in rows)),
        "constant": grid_sup,
        "constant_window": window_sup,
        "constant_exact": exact,
        "stability": max(vals) / min(vals) if min(vals) > 0 else math.inf,
    }


# -- thresholding -------------------------------------------------------------------


def threshold_apply(f, spec: ThresholdSpec) -> np.ndarray:
    """Odd clamp: 0 on [0, a], |f| - a on [a, M a], (M-1) a beyond."""
    f = np.asarray(f, dtype=float)
    a, M = spec.alpha, spec.M
    mag = np.clip(np.abs(f) - a, 0.0, (M - 1) * a)
    return np.sign(f) * mag


def _regions(f, spec: ThresholdSpec) -> np.ndarray:
    a, M = spec.alpha, spec.M
    mag = np.abs(f)
    reg = np.where(mag < a, 0, np.where(mag <= M * a, 1, 2))
    return np.sign(f).astype(int) * reg


def threshold_lemma_check(g: LatticeGroup, f, f_alpha, spec: ThresholdSpec) -> dict:
    """Node scan of the three thresholding properties.

    (1) |f| > 5a  =>  |f_a| > 4a.
    (2) |f| <= M a  =>  |f - f_a| <= a (up to rounding of |f| - a).
    (3) grad f_a = grad f on the linear region, 0 on dead/saturated regions,
        checked where the whole stencil stays in one region.
    """
    f = g.check_shape(f).astype(float)
    fa = g.check_shape(f_alpha).astype(float)
    a, M = spec.alpha, spec.M
    mag = np.abs(f)
    v1 = int(((mag > 5 * a) & ~(np.abs(fa) > 4 * a)).sum())
    slack = 4 * np.finfo(float).eps * np.maximum(mag, a)
    v2 = int(((mag <= M * a) & (np.abs(f - fa) > a + slack)).sum())

    reg = _regions(f, spec)
    same = np.ones(g.shape, dtype=bool)
    for j in range(g.k):
        for sign in (1, -1):
            same &= g.right_shift(reg, j, sign) == reg
    gf, gfa = gradient(g, f), gradient(g, fa)
    linear = np.abs(reg) == 1
    scale = max(float(np.abs(np.stack(gf)).max()), 1e-300)
    v3 = 0
    for d, da in zip(gf, gfa):
        expect = np.where(linear, d, 0.0)
        v3 += int((same & (np.abs(da - expect) > 1e-9 * scale)).sum())
    return {
        "alpha": a,
        "M": M,
        "property1_violations": v1,
        "property2_violations": v2,
        "property3_violations": v3,
        "stencil_interior_nodes": int(same.sum()),
    }


# -- strong p = 1 -----------------------------------------------------------------


def strong_p1_proof_trace(g: LatticeGroup, rep: SpectralRep, f, q: float, M: float = 16.0, alphas=None,
                          per_decade: int = 16) -> dict:
    """Layer-cake replay with the thresholded function f_a and t_a = a^{-2(q-1)}.

    The time rule makes ||H_{t_a} f||_inf <= t_a^{-beta/2} = a for a function of
    unit Besov norm (beta = 1/(q-1)), and t_a^{1/2} = a^{1-q}.
    """
    if not M > 10:
        raise ParamError(f"saturation ratio M must exceed 10, got {M}")
    if not 1 < q < math.inf:
        raise ParamError(f"exponent constraint 1<q<inf violated (q={q})")
    beta = 1.0 / (q - 1)
    f0 = zero_mean(g.check_shape(f))
    bes = besov_thermic_norm(rep, f0, beta)
    if not bes.value > 0:
        raise ValueError("normalization failure: Besov norm vanishes")
    f0 = f0 / bes.value
    grad = grad_l1_norm(g, f0)
    fq = lp_norm(g, f0, q) ** q
    top = float(np.abs(f0).max())
    alphas = alpha_grid(top, per_decade) if alphas is None else np.asarray(alphas, dtype=float)
    rows = []
    for a in alphas:
        t = a ** (-2 * (q - 1))
        spec = ThresholdSpec(float(a), M)
        fa = threshold_apply(f0, spec)
        hf = heat_apply(rep, t, f0)
        hfa = heat_apply(rep, t, fa)
        sup = float(np.abs(hf).max())
        A = np.abs(fa) > 4 * a
        B = np.abs(fa - hfa) > a
        Cs = np.abs(hfa - hf) > 2 * a
        rows.append({
            "alpha": float(a),
            "t_alpha": float(t),
            "heat_sup": sup,
            "certified": bool(sup <= a * (1 + CERT_RTOL)),
            "violations": int((A & ~(B | Cs)).sum()),
            "mu_lhs": float((np.abs(f0) > 5 * a).sum() * g.haar_weight),
            "mu_A": float(A.sum() * g.haar_weight),
            "mu_B": float(B.sum() * g.haar_weight),
            "mu_C": float(Cs.sum() * g.haar_weight),
        })
    al = np.array([r["alpha"] for r in rows])
    col = lambda k: np.array([r[k] for r in rows])  # noqa: E731
    lhs_exact = fq / 5**q
    lhs = layer_cake_integral(al, col("mu_lhs"), q)
    I_all = layer_cake_integral(al, col("mu_A"), q)
    I1 = layer_cake_integral(al, col("mu_B"), q)
    I2 = layer_cake_integral(al, col("mu_C"), q)
    I2_lower = layer_cake_integral(al, col("mu_C"), q, rule="right")
    return {
        "q": q,
        "M": M,
        "beta": beta,
        "besov_scale": bes.value,
        "grad_l1": grad,
        "lq_q": fq,
        "rows": rows,
        "violations": int(col("violations").sum()),
        "uncertified": int(sum(not r["certified"] for r in rows)),
        "lhs_exact": lhs_exact,
        "lhs_quadrature": lhs,
        "quadrature_defect": abs(lhs - lhs_exact) / lhs_exact if lhs_exact > 0 else math.nan,
        "I": I_all,
        "I1": I1,
        "I2": I2,
        "assembly_holds": bool(lhs <= I1 + I2 * (1 + 1e-12)),
        "I1_constant": I1 / (q * math.log(M) * grad) if grad > 0 else math.nan,
        "I2_constant": I2 * M ** (q - 1) * (q - 1) / (q * fq) if fq > 0 else math.nan,
        "I2_constant_lower": I2_lower * M ** (q - 1) * (q - 1) / (q * fq) if fq > 0 else math.nan,
    }


# -- band-limited approximation -----------------------------------------------------


def band_limit_approx(rep: SpectralRep, f, j: int) -> np.ndarray:
    return apply_multiplier(rep, mlib.bandlimit(j), 1.0, f)


def approx_norm_check(g: LatticeGroup, rep: SpectralRep, f, js, q: float) -> dict:
    """||f_j - f||_2 and ||f_j||_q / ||grad f||_1 along j, with the fitted growth exponent."""
    f0 = zero_mean(g.check_shape(f))
    js = [int(j) for j in js]
    grad = grad_l1_norm(g, f0)
    rows = []
    for j in js:
        fj = band_limit_approx(rep, f0, j)
        rows.append({
            "j": j,
            "l2_error": lp_norm(g, fj - f0, 2),
            "lq": lp_norm(g, fj, q),
            "ratio": lp_norm(g, fj, q) / grad if grad > 0 else math.nan,
        })
    r = np.array([row["ratio"] for row in rows])
    slope = float(np.polyfit(js, np.log2(r), 1)[0]) if len(js) > 1 and np.all(r > 0) else math.nan
    return {
        "q": q,
        "rows": rows,
        "fitted_exponent": slope,
        "predicted_exponent": g.local_dim * (1 - 1 / q) - 1,
        "lq_f": lp_norm(g, f0, q),
    }
