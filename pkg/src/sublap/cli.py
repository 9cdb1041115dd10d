"""Command-line entry point: ``sublap <command> --config FILE``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .harness.params import ALIASES
from .runner import COMMANDS, PROOFS, run

VARIANT_FLAGS = ("pgt1", "strong1", "weak1")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sublap", description="Sub-Laplacian Sobolev experiments on lattice groups.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI or JSON experiment file")
        p.add_argument("--out", default=None, help="output directory (default: [output] dir or ./out)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--resolution", type=int, default=None, help="override nodes per axis")
        p.add_argument("--mode", choices=("dense", "fourier", "chebyshev"), default=None)
        if name in ("verify", "trace", "constant"):
            p.add_argument("--variant", choices=VARIANT_FLAGS + ("poincare",), default=None)
        if name == "trace":
            p.add_argument("--proof", choices=PROOFS, default=None)
    s = sub.add_parser("summarize", help="tabulate existing JSON reports")
    s.add_argument("paths", nargs="+")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "summarize":
        return summarize(args.paths)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.experiment["seed"] = args.seed
    if args.resolution is not None:
        cfg.group["nodes_per_axis"] = args.resolution
    if args.mode is not None:
        cfg.spectral["mode"] = args.mode
    variant = getattr(args, "variant", None)
    variant = ALIASES.get(variant, variant) if variant else None
    code = run(cfg, args.command, args.out, variant, getattr(args, "proof", None))
    if code == 0:
        stem = Path(args.out or cfg.output.get("dir", "out")) / f"{cfg.name}_{args.command}"
        print(f"wrote {stem}.json and {stem}.csv")
    return code


def _load_report(path: Path):
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        lines = text.splitlines()
        ctx = lines[e.lineno - 1] if 0 < e.lineno <= len(lines) else ""
        raise ValueError(f"{path}: malformed JSON at line {e.lineno}: {e.msg}: {ctx.strip()!r}") from None


def _num(v) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def summarize(paths) -> int:
    """Print one row per report; adds a stability column across resolutions."""
    files = []
    for p in map(Path, paths):
        files += sorted(p.glob("*.json")) if p.is_dir() else [p]
    files = [f for f in files if not f.name.endswith(".error.json")]
    rows, bad = [], 0
    for f in files:
        try:
            doc = _load_report(f)
        except (OSError, ValueError) as e:
            print(str(e), file=sys.stderr)
            bad += 1
            continue
        if doc.get("status") != "ok" or "summary" not in doc:
            continue
        s = doc["summary"]
        rows.append((s.get("experiment", ""), s.get("command", ""), s.get("variant", ""), s.get("group", ""),
                     s.get("resolution", ""), _num(s.get("ratio_min")), _num(s.get("ratio_median")),
                     _num(s.get("ratio_max")), s.get("verdict", "")))
    if not rows:
        print("no reports")
        return 1 if bad else 0
    head = ["experiment", "command", "variant", "group", "N", "ratio_min", "ratio_median", "ratio_max", "verdict"]
    resolutions = {}
    for r in rows:
        resolutions.setdefault(r[:4], []).append(r[7])
    multi = any(len(v) > 1 for v in resolutions.values())
    if multi:
        head.append("stability")
    print("\t".join(head))
    for r in rows:
        cells = [str(c) if not isinstance(c, float) else f"{c:.6g}" for c in r]
        if multi:
            v = np.array([x for x in resolutions[r[:4]] if math.isfinite(x) and x > 0])
            cells.append(f"{v.max() / v.min():.4g}" if v.size > 1 else "")
        print("\t".join(cells))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
