"""Config-driven experiment runner and report writer."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np
import scipy
import sympy

from . import __version__
from .config import ConfigError, ExperimentConfig, floats
from .harness import (
    FamilySpec,
    ParamError,
    ThresholdSpec,
    approx_norm_check,
    check_improved_sobolev,
    estimate_best_constant,
    heat_kernel_bound_check,
    make_function,
    pointwise_split_trace,
    poincare_proof_trace,
    poincare_ratio,
    random_function,
    strong_p1_proof_trace,
    threshold_apply,
    threshold_lemma_check,
    weak_p1_trace,
)
from .harness.families import FamilyError
from .harness.report import jsonable
from .lattice import LatticeError, build_lattice, fit_growth_exponents, volume_growth
from .multipliers import MultiplierError, decomposition_identities_check
from .norms import besov_t_grid
from .spectral import SpectralError, decompose

COMMANDS = ("lattice-info", "volume-growth", "heat-check", "poincare", "verify", "trace", "constant")
CSV_COLUMNS = ("experiment", "command", "variant", "family_param", "grid", "grid_value", "ratio", "verdict")
PROOFS = ("split", "poincare", "weak1", "strong1", "threshold", "identities", "bandlimit")
DEFAULT_PROOF = {"strong_pgt1": "split", "strong_p1": "strong1", "weak_p1": "weak1", "poincare": "poincare"}

VALIDATION_ERRORS = (ConfigError, ParamError, LatticeError, FamilyError)


def versions() -> dict:
    return {
        "sublap": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sympy": sympy.__version__,
    }


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


class Context:
    """Lazily built lattice and spectral representation for one experiment."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.lattice = build_lattice(cfg.group_spec(), experimental=cfg.experimental)
        self._rep = None

    @property
    def rep(self):
        if self._rep is None:
            self._rep = decompose(self.lattice, self.cfg.mode, self.cfg.tol)
        return self._rep

    def t_grid(self, per_decade_default: int = 16):
        cfg, g = self.cfg, self.lattice
        if "t" in cfg.grids:
            return np.array(floats(cfg.grids["t"]))
        t_min = cfg.grid("t_min")
        t_max = cfg.grid("t_max")
        return besov_t_grid(g, int(cfg.grid("t_per_decade", per_decade_default)),
                            None if t_min is None else float(t_min), None if t_max is None else float(t_max))

    def family(self) -> FamilySpec:
        return self.cfg.family_spec()

    def member(self, lam: float = 1.0):
        return make_function(self.lattice, self.family(), lam, self.rep)


def _row(cfg, command, variant, family_param, grid, grid_value, ratio, verdict):
    return {"experiment": cfg.name, "command": command, "variant": variant, "family_param": family_param,
            "grid": grid, "grid_value": grid_value, "ratio": ratio, "verdict": verdict}


def _envelope(values):
    v = np.array([x for x in values if x is not None and math.isfinite(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan, math.nan
    return float(v.min()), float(np.median(v)), float(v.max())


# -- commands -------------------------------------------------------------------


def cmd_lattice_info(ctx: Context):
    g = ctx.lattice
    info = {"family": g.spec.label, "box_size": g.spec.box_size, "nodes_per_axis": g.spec.nodes_per_axis,
            "nodes": g.size, "shape": list(g.shape), "h": g.h, "haar_weight": g.haar_weight, "k": g.k,
            "local_dim": g.local_dim, "dim_at_infinity": g.dim_at_infinity, "diameter": g.diameter}
    rows = [_row(ctx.cfg, "lattice-info", "", "", k, v, None, "info") for k, v in info.items() if k != "shape"]
    return info, rows, {"variant": "", "verdict": "info", "headline": float(g.size)}


def cmd_volume_growth(ctx: Context):
    cfg, g = ctx.cfg, ctx.lattice
    if "radii" in cfg.grids:
        radii = np.array(floats(cfg.grids["radii"]))
    else:
        n = int(cfg.grid("radii_count", 32))
        radii = np.geomspace(2 * g.h * 1.0001, g.spec.box_size / 2 * 0.9999, n)
    samples = volume_growth(g, radii)
    split = float(cfg.grid("split_radius", math.sqrt(radii[0] * radii[-1])))
    d_est, D_est = fit_growth_exponents(samples, split)
    r_v = np.array(samples, dtype=float)
    overall = float(np.polyfit(np.log(r_v[:, 0]), np.log(r_v[:, 1]), 1)[0])
    tol = float(cfg.grid("growth_tol", 0.15))
    if g.local_dim == g.dim_at_infinity:
        verdict = "pass" if abs(overall - g.local_dim) <= tol else "fail"
    else:
        verdict = "info"
    rep = {"samples": samples, "split_radius": split, "d_est": d_est, "D_est": D_est, "overall_exponent": overall,
           "expected": [g.local_dim, g.dim_at_infinity], "tolerance": tol, "verdict": verdict}
    rows = [_row(cfg, "volume-growth", "", "", "r", r, v, verdict) for r, v in samples]
    return rep, rows, {"variant": "", "verdict": verdict, "headline": overall,
                       "ratios": [overall]}


def cmd_heat_check(ctx: Context):
    cfg, g = ctx.cfg, ctx.lattice
    if "t" in cfg.grids:
        ts = np.array(floats(cfg.grids["t"]))
    else:
        t_min = float(cfg.grid("t_min", 4 * g.h**2 if g.family == "euclidean" else g.h**2))
        if g.family == "heisenberg1":
            default_max = g.z_period / 2
        else:
            default_max = 0.01 * g.spec.box_size**2
        t_max = float(cfg.grid("t_max", default_max))
        ts = np.geomspace(t_min, t_max, int(cfg.grid("t_count", 12)))
    p = float(cfg.inequality.get("p", 1.0))
    res = heat_kernel_bound_check(g, ctx.rep, ts, p, float(cfg.grid("gauss_c", 5.0)))
    band = float(cfg.grid("heat_band", 2.0))
    verdict = "pass" if res["finite_positive"] and res["lp_variation"] <= band else "fail"
    res["verdict"] = verdict
    rows = [_row(cfg, "heat-check", "", f"X{r['j'] + 1}", "t", r["t"], r["lp"], verdict) for r in res["rows"]]
    return res, rows, {"variant": f"heat(p={p:g})", "verdict": verdict, "headline": res["lp_sup"],
                       "ratios": [r["lp"] for r in res["rows"]]}


def cmd_poincare(ctx: Context):
    cfg, g = ctx.cfg, ctx.lattice
    params = cfg.params("poincare")
    ts = ctx.t_grid()
    members = []
    rows = []
    min_slope = float(cfg.grid("min_low_slope", -0.05))
    for lam in ctx.family().dilations:
        res = poincare_ratio(g, ctx.rep, ctx.member(lam), params.s, ts)
        ok = (not res.degenerate) and math.isfinite(res.sup_ratio) and res.low_decade_slope >= min_slope
        members.append({"lambda": lam, "sup_ratio": res.sup_ratio, "argmax_t": res.argmax_t,
                        "low_decade_slope": res.low_decade_slope, "grad_l1": res.grad_l1,
                        "degenerate": res.degenerate, "ok": ok, "t": res.ts, "ratio": res.ratios})
        rows += [_row(cfg, "poincare", "poincare", lam, "t", t, r, "pass" if ok else "fail")
                 for t, r in zip(res.ts, res.ratios)]
    if any(m["degenerate"] for m in members):
        verdict = "degenerate"
    else:
        verdict = "pass" if all(m["ok"] for m in members) else "fail"
    sups = [m["sup_ratio"] for m in members]
    rep = {"params": params, "members": members, "verdict": verdict}
    return rep, rows, {"variant": "poincare", "params": params.to_dict(), "verdict": verdict,
                       "headline": max(sups), "ratios": sups}


def cmd_verify(ctx: Context, variant: str | None):
    cfg, g = ctx.cfg, ctx.lattice
    params = cfg.params(variant)
    if params.variant == "poincare":
        raise ConfigError("verify needs --variant pgt1|strong1|weak1 (use the poincare command for the Poincare ratio)")
    t_grid = ctx.t_grid(32) if any(k in cfg.grids for k in ("t", "t_min", "t_max", "t_per_decade")) else None
    report = check_improved_sobolev(g, ctx.rep, None, params, ctx.family(), float(cfg.grid("band", 0.05)), t_grid)
    rows = [_row(cfg, "verify", params.variant, lam, "lambda", lam, r, report.verdict) for lam, r in report.family_sweep]
    lo, med, hi = report.envelope
    return report.to_dict(), rows, {"variant": params.variant, "params": params.to_dict(), "verdict": report.verdict,
                                    "headline": hi, "ratios": [r for _, r in report.family_sweep]}


def _threshold_cases(ctx: Context):
    g = ctx.lattice
    rng = np.random.default_rng(ctx.cfg.seed)
    cases = []
    for i in range(int(ctx.cfg.grid("cases", 20))):
        f = random_function(g, rng, smooth=2) * rng.uniform(0.5, 5.0)
        top = float(np.abs(f).max())
        spec = ThresholdSpec(float(rng.uniform(0.02, 0.5) * top), float(rng.uniform(10.5, 40.0)))
        res = threshold_lemma_check(g, f, threshold_apply(f, spec), spec)
        res["case"] = i
        cases.append(res)
    return cases


def cmd_trace(ctx: Context, variant: str | None, proof: str | None):
    cfg, g = ctx.cfg, ctx.lattice
    v = variant or cfg.variant
    params = cfg.params(v)
    proof = proof or DEFAULT_PROOF[params.variant]
    if proof not in PROOFS:
        raise ConfigError(f"unknown proof trace {proof!r}; expected one of {PROOFS}")
    rows = []
    if proof == "split":
        params = cfg.params("strong_pgt1")
        members = []
        for lam in ctx.family().dilations:
            tr = pointwise_split_trace(g, ctx.rep, ctx.member(lam), params, float(cfg.inequality.get("c_T", 1.0)))
            tr["lambda"] = lam
            ok = tr["maximal_constant"] <= tr["analytic_bound"] and tr["split_defect"] <= 1e-10
            tr["ok"] = ok
            members.append(tr)
            rows.append(_row(cfg, "trace", "split", lam, "lambda", lam, tr["measured_constant"], "pass" if ok else "fail"))
        consts = [m["measured_constant"] for m in members]
        verdict = "pass" if all(m["ok"] for m in members) else "fail"
        rep = {"proof": proof, "params": params, "members": members, "verdict": verdict}
        return rep, rows, {"variant": "strong_pgt1", "params": params.to_dict(), "verdict": verdict,
                           "headline": max(consts), "ratios": consts}
    if proof == "poincare":
        params = cfg.params("poincare")
        t = float(cfg.grid("trace_t", 0.1))
        js = [int(j) for j in floats(cfg.grid("j_values", "0,1,2,3,4,5,6"))]
        tr = poincare_proof_trace(g, ctx.rep, ctx.member(1.0), params.s, t, js=js)
        ok = tr["sum_of_parts_defect"] <= 1e-8
        verdict = "pass" if ok else "fail"
        tr["verdict"] = verdict
        if tr["kernels"]:
            rows = [_row(cfg, "trace", "poincare", t, "j", j, n, verdict)
                    for j, n in zip(tr["kernels"]["j"], tr["kernels"]["grad_l1"])]
        return tr, rows, {"variant": "poincare", "params": params.to_dict(), "verdict": verdict,
                          "headline": tr["direct_ratio"], "ratios": [tr["direct_ratio"]]}
    if proof == "weak1":
        params = cfg.params("weak_p1")
        tr = weak_p1_trace(g, ctx.rep, ctx.member(1.0), params, per_decade=int(cfg.grid("alpha_per_decade", 16)))
        band = float(cfg.grid("band", 0.15))
        verdict = "pass" if tr["violations"] == 0 and tr["uncertified"] == 0 and tr["stability"] - 1 <= band else "fail"
        tr["verdict"] = verdict
        rows = [_row(cfg, "trace", "weak_p1", "", "alpha", r["alpha"], r["constant"], verdict) for r in tr["rows"]]
        return tr, rows, {"variant": "weak_p1", "params": params.to_dict(), "verdict": verdict,
                          "headline": tr["constant"], "ratios": [tr["constant"], tr["constant_window"], tr["constant_exact"]]}
    if proof == "strong1":
        params = cfg.params("strong_p1")
        M = float(cfg.inequality.get("M", 16.0))
        tr = strong_p1_proof_trace(g, ctx.rep, ctx.member(1.0), params.q, M,
                                   per_decade=int(cfg.grid("alpha_per_decade", 16)))
        ok = tr["violations"] == 0 and tr["uncertified"] == 0 and tr["I2_constant"] <= 1.05 and tr["assembly_holds"]
        verdict = "pass" if ok else "fail"
        tr["verdict"] = verdict
        rows = [_row(cfg, "trace", "strong_p1", M, "alpha", r["alpha"], r["heat_sup"] / r["alpha"], verdict)
                for r in tr["rows"]]
        return tr, rows, {"variant": "strong_p1", "params": params.to_dict(), "verdict": verdict,
                          "headline": tr["I2_constant"], "ratios": [tr["I1_constant"], tr["I2_constant"]]}
    if proof == "threshold":
        cases = _threshold_cases(ctx)
        bad = sum(c["property1_violations"] + c["property2_violations"] + c["property3_violations"] for c in cases)
        verdict = "pass" if bad == 0 else "fail"
        rows = [_row(cfg, "trace", "threshold", c["M"], "alpha", c["alpha"],
                     c["property1_violations"] + c["property2_violations"] + c["property3_violations"], verdict)
                for c in cases]
        return {"cases": cases, "violations": bad, "verdict": verdict}, rows, {
            "variant": "threshold", "verdict": verdict, "headline": float(bad), "ratios": [float(bad)]}
    if proof == "identities":
        s = float(cfg.inequality.get("s", 0.0))
        res = decomposition_identities_check(s)
        defects = {k: v for k, v in res.items() if k not in ("s", "J", "grid")}
        verdict = "pass" if max(defects.values()) <= 1e-12 else "fail"
        res["verdict"] = verdict
        rows = [_row(cfg, "trace", "identities", s, name, None, d, verdict) for name, d in defects.items()]
        return res, rows, {"variant": "identities", "verdict": verdict, "headline": max(defects.values()),
                           "ratios": list(defects.values())}
    # bandlimit
    q = float(cfg.inequality.get("q", 2.0))
    js = [int(j) for j in floats(cfg.grid("j_values", "1,2,3,4,5"))]
    res = approx_norm_check(g, ctx.rep, ctx.member(1.0), js, q)
    err = [r["l2_error"] for r in res["rows"]]
    verdict = "pass" if all(b <= a * (1 + 1e-9) + 1e-14 for a, b in zip(err, err[1:])) else "fail"
    res["verdict"] = verdict
    rows = [_row(cfg, "trace", "bandlimit", q, "j", r["j"], r["ratio"], verdict) for r in res["rows"]]
    return res, rows, {"variant": "bandlimit", "verdict": verdict, "headline": res["fitted_exponent"],
                       "ratios": [r["ratio"] for r in res["rows"]]}


def cmd_constant(ctx: Context, variant: str | None):
    cfg, g = ctx.cfg, ctx.lattice
    params = cfg.params(variant)
    res = estimate_best_constant(g, ctx.rep, ctx.family(), params)
    verdict = "pass" if math.isfinite(res["C_est"]) else "degenerate"
    res["verdict"] = verdict
    rows = [_row(cfg, "constant", params.variant, "sweep", "lambda", lam, r, verdict) for lam, r in res["sweep"]]
    rows += [_row(cfg, "constant", params.variant, "refine", "lambda", lam, r, verdict)
             for lam, r in res.get("refined_points", [])]
    return res, rows, {"variant": params.variant, "params": params.to_dict(), "verdict": verdict,
                       "headline": res["C_est"], "ratios": [r for _, r in res["sweep"]]}


# -- driver ------------------------------------------------------------------------


def execute(cfg: ExperimentConfig, command: str, variant: str | None = None, proof: str | None = None):
    """Run one command; returns (report, rows, summary)."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg.validate()
    if variant is not None:
        cfg.params(variant)
    ctx = Context(cfg)
    if command == "lattice-info":
        return cmd_lattice_info(ctx)
    if command == "volume-growth":
        return cmd_volume_growth(ctx)
    if command == "heat-check":
        return cmd_heat_check(ctx)
    if command == "poincare":
        return cmd_poincare(ctx)
    if command == "verify":
        return cmd_verify(ctx, variant)
    if command == "trace":
        return cmd_trace(ctx, variant, proof)
    return cmd_constant(ctx, variant)


def run(cfg: ExperimentConfig, command: str, out_dir=None, variant: str | None = None, proof: str | None = None) -> int:
    """Execute and write ``<name>_<command>.json`` / ``.csv``; returns the exit status."""
    out = Path(out_dir or cfg.output.get("dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.name}_{command}"
    try:
        report, rows, summary = execute(cfg, command, variant, proof)
    except VALIDATION_ERRORS as e:
        return _fail(out, stem, cfg, command, e, 2)
    except (SpectralError, MultiplierError, ValueError, ArithmeticError, MemoryError) as e:
        return _fail(out, stem, cfg, command, e, 1)
    lo, med, hi = _envelope(summary.pop("ratios", [summary.get("headline")]))
    summary.update({"experiment": cfg.name, "command": command, "group": cfg.group_spec().label,
                    "resolution": cfg.group_spec().nodes_per_axis, "mode": cfg.mode,
                    "ratio_min": lo, "ratio_median": med, "ratio_max": hi})
    doc = {"status": "ok", "experiment": cfg.name, "command": command, "config": cfg.to_dict(),
           "versions": versions(), "summary": summary, "report": report}
    (out / f"{stem}.json").write_text(json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(out / f"{stem}.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))
    return 0


def _fail(out: Path, stem: str, cfg: ExperimentConfig, command: str, err: Exception, code: int) -> int:
    record = {"status": "error", "exit_code": code, "experiment": cfg.name, "command": command,
              "error_type": type(err).__name__, "message": str(err)}
    (out / f"{stem}.error.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code
