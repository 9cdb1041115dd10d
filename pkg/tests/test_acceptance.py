"""Exit criteria, one test per criterion.

Each test records a PASS/FAIL line (printed by the terminal summary hook
and with ``-s``) before asserting at the stated tolerance.
"""

import math
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE
from sublap.config import parse_text
from sublap.harness import (
    FamilySpec,
    ThresholdSpec,
    check_improved_sobolev,
    make_function,
    poincare_ratio,
    random_function,
    strong_p1_proof_trace,
    threshold_apply,
    threshold_lemma_check,
    validate_params,
    weak_p1_trace,
)
from sublap.harness.poincare import dyadic_kernel_regression, m0_kernel_t_scaling
from sublap.lattice import GroupSpec, build_lattice, volume_growth
from sublap.multipliers import decomposition_identities_check
from sublap.norms import lp_norm
from sublap.runner import run
from sublap.spectral import decompose, fractional_power_apply, heat_apply

pytestmark = pytest.mark.acceptance


def record(num, title, ok, detail):
    ACCEPTANCE.append((num, title, bool(ok), detail))
    print(f"\n[{'PASS' if ok else 'FAIL'}] {num:>2}. {title}: {detail}")
    return ok


def _growth_slope(g, radii):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = np.array(volume_growth(g, radii))
    return float(np.polyfit(np.log(s[:, 0]), np.log(s[:, 1]), 1)[0])


def test_semigroup_law(heis16):
    g, rep = heis16
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal(g.shape)
        for t, s in [(0.05, 0.2), (0.5, 1.5), (2.0, 7.0)]:
            d = heat_apply(rep, t + s, f) - heat_apply(rep, t, heat_apply(rep, s, f))
            worst = max(worst, np.linalg.norm(d) / np.linalg.norm(f))
    ok = record(1, "semigroup law (heisenberg1 N=16, dense)", worst <= 1e-10, f"max defect {worst:.2e} <= 1e-10")
    assert ok


def test_lp_contraction(heis16):
    g, rep = heis16
    rng = np.random.default_rng(2)
    ts = np.geomspace(1e-3, 10.0, 8)
    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal(g.shape) * rng.uniform(0.1, 10)
        for t in ts:
            hf = heat_apply(rep, float(t), f)
            for p in (1.0, 2.0, math.inf):
                worst = max(worst, lp_norm(g, hf, p) / lp_norm(g, f, p))
    ok = record(2, "L^p contraction p in {1,2,inf}", worst <= 1 + 1e-12, f"max ||H_t f||_p/||f||_p = {worst:.15f}")
    assert ok


def test_fractional_power_routes(eucl1):
    g, rep = eucl1
    f = np.random.default_rng(3).standard_normal(g.shape)
    f -= f.mean()
    gaps = {}
    for s in (0.25, 0.5, 0.75, 1.5):
        a = fractional_power_apply(rep, s, f)
        b = fractional_power_apply(rep, s, f, route="bochner")
        gaps[s] = float(np.linalg.norm(a - b) / np.linalg.norm(a))
    worst = max(gaps.values())
    ok = record(3, "Bochner vs spectral fractional powers (euclidean(1) N=64)", worst <= 1e-3,
                "gaps " + ", ".join(f"s={s}: {v:.1e}" for s, v in gaps.items()))
    assert ok


def test_volume_growth():
    e2 = build_lattice(GroupSpec("euclidean", 1.0, 256, 2))
    slope_e = _growth_slope(e2, np.geomspace(0.05, 0.5 * 0.9999, 32))
    hz = build_lattice(GroupSpec("heisenberg1", 8.0, 16))
    # one decade ending at half the box; the lower radii fall below the lattice step h = 0.5
    slope_h = _growth_slope(hz, np.geomspace(0.4, 4.0 * 0.9999, 32))
    ok = abs(slope_e - 2) <= 0.05 and abs(slope_h - 4) <= 0.15
    record(4, "volume growth exponents over one decade", ok,
           f"euclidean(2) {slope_e:.4f} (2 +/- 0.05), heisenberg1 N=16 {slope_h:.4f} (4 +/- 0.15)")
    assert abs(slope_e - 2) <= 0.05
    assert abs(slope_h - 4) <= 0.15


def test_dilation_invariance():
    g = build_lattice(GroupSpec("euclidean", 1.0, 512, 2))
    rep = decompose(g, "fourier")
    params = validate_params("pgt1", p=2, q=4, s1=1, beta=1)
    fam = FamilySpec("gaussian", width=1 / 40, dilations=(0.25, 0.5, 1.0, 2.0, 4.0))
    report = check_improved_sobolev(g, rep, None, params, fam)
    r = np.array([v for _, v in report.family_sweep])
    drift = r.max() / r.min() - 1
    ok = record(5, "dilation invariance of the p>1 ratio", drift <= 0.05,
                f"ratios {np.round(r, 4).tolist()}, drift {drift:.2%} <= 5%")
    assert ok


def test_modified_poincare(heis12, heis16):
    sups, slopes = {}, {}
    for n, (g, rep) in ((12, heis12), (16, heis16)):
        f = make_function(g, FamilySpec("bump", width=1.6))
        for s in (0.0, 0.5):
            res = poincare_ratio(g, rep, f, s)
            sups[n, s] = res.sup_ratio
            slopes[n, s] = res.low_decade_slope
    finite = all(math.isfinite(v) for v in sups.values())
    drift = {s: abs(sups[16, s] / sups[12, s] - 1) for s in (0.0, 0.5)}
    ok = finite and max(drift.values()) <= 0.10 and min(slopes.values()) >= -0.05
    record(6, "modified Poincare ratio (heisenberg1 N=12 vs 16)", ok,
           f"sup ratios {({k: round(v, 4) for k, v in sups.items()})}, N-drift "
           f"{({s: f'{d:.1%}' for s, d in drift.items()})}, min low-decade slope {min(slopes.values()):.3f}")
    assert ok


def test_proof_trace_regressions():
    g = build_lattice(GroupSpec("euclidean", 8 * math.pi, 2048, 2))
    rep = decompose(g, "fourier")
    dy = dyadic_kernel_regression(g, rep, 0.1, js=range(2, 9))
    m0 = m0_kernel_t_scaling(g, rep, np.geomspace(g.h**2 * 1.01, 1.0, 16))
    ok = 0.4 <= dy["slope"] <= 0.6 and -0.6 <= m0["slope"] <= -0.4
    record(7, "kernel-gradient scaling fits", ok,
           f"dyadic slope {dy['slope']:.3f} in [0.4, 0.6], m0 t-slope {m0['slope']:.3f} in [-0.6, -0.4]")
    assert ok


def test_weak_p1_trace():
    g = build_lattice(GroupSpec("euclidean", 1.0, 256, 2))
    rep = decompose(g, "fourier")
    f = make_function(g, FamilySpec("bump", width=0.2))
    tr = weak_p1_trace(g, rep, f, validate_params("weak1", q=2, s=0.25))
    stable = tr["stability"] - 1
    ok = tr["violations"] == 0 and tr["uncertified"] == 0 and stable <= 0.15
    record(8, "weak p=1 trace (q=2, s=1/4)", ok,
           f"violations {tr['violations']}, constant {tr['constant']:.4f} (top decade {tr['constant_window']:.4f}, "
           f"exact {tr['constant_exact']:.4f}), spread {stable:.2%} <= 15%")
    assert ok


def test_thresholding_and_strong_p1():
    g = build_lattice(GroupSpec("euclidean", 1.0, 256, 2))
    rep = decompose(g, "fourier")
    rng = np.random.default_rng(9)
    bad12 = 0
    for _ in range(20):
        f = random_function(g, rng, smooth=3) * rng.uniform(0.5, 5)
        spec = ThresholdSpec(float(rng.uniform(0.02, 0.5) * np.abs(f).max()), float(rng.uniform(10.5, 40)))
        res = threshold_lemma_check(g, f, threshold_apply(f, spec), spec)
        bad12 += res["property1_violations"] + res["property2_violations"]
    tr = strong_p1_proof_trace(g, rep, make_function(g, FamilySpec("bump", width=0.2)), 2.0, 16.0)
    ok = bad12 == 0 and tr["I2_constant"] <= 1.05 and tr["violations"] == 0
    record(9, "thresholding properties and strong p=1 assembly", ok,
           f"threshold violations {bad12}, I2 constant {tr['I2_constant']:.4f} <= 1.05, "
           f"set-inclusion violations {tr['violations']}")
    assert ok


def test_multiplier_identities():
    worst = {}
    for s in (0.0, 0.25, 0.5, 0.75):
        res = decomposition_identities_check(s)
        for k, v in res.items():
            if k not in ("s", "J", "grid"):
                worst[k] = max(worst.get(k, 0.0), v)
    ok = max(worst.values()) <= 1e-12
    record(10, "dyadic partition and multiplier identities", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


DETERMINISM_CONFIG = """
[experiment]
name = det
seed = 11
[group]
family = euclidean(2)
box_size = 1.0
nodes_per_axis = 32
[spectral]
mode = fourier
[family]
kind = random_bandlimited
dilations = 0.5, 1, 2
[inequality]
variant = strong_pgt1
p = 2
q = 4
s1 = 1
beta = 1
"""


def test_determinism(tmp_path):
    digests = []
    for sub in ("a", "b"):
        assert run(parse_text(DETERMINISM_CONFIG), "verify", tmp_path / sub) == 0
        assert run(parse_text(DETERMINISM_CONFIG), "trace", tmp_path / sub, proof="threshold") == 0
        digests.append(tuple((tmp_path / sub / f"det_{c}.csv").read_bytes() for c in ("verify", "trace")))
    ok = digests[0] == digests[1]
    record(11, "byte-identical CSV on rerun", ok, f"{sum(len(d) for d in digests[0])} bytes compared")
    assert ok
