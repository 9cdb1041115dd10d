"""Experiment configuration: INI-style sections or JSON."""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .harness.families import FamilySpec
from .harness.params import ALIASES, ParamError, validate_params
from .lattice import GroupSpec, LatticeError
from .spectral import MODES

SECTIONS = ("experiment", "group", "spectral", "family", "inequality", "grids", "output")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: dict = field(default_factory=dict)
    group: dict = field(default_factory=dict)
    spectral: dict = field(default_factory=dict)
    family: dict = field(default_factory=dict)
    inequality: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    # -- typed accessors ------------------------------------------------------

    @property
    def name(self) -> str:
        return str(self.experiment.get("name", "experiment"))

    @property
    def seed(self) -> int:
        return int(self.experiment.get("seed", 0))

    @property
    def mode(self) -> str:
        return str(self.spectral.get("mode", "dense"))

    @property
    def tol(self) -> float:
        return float(self.spectral.get("tol", 1e-8))

    @property
    def experimental(self) -> bool:
        return _bool(self.group.get("experimental", False))

    def group_spec(self) -> GroupSpec:
        g = self.group
        try:
            return GroupSpec.from_label(str(g["family"]), float(g["box_size"]), int(g["nodes_per_axis"]))
        except KeyError as e:
            raise ConfigError(f"[group] is missing {e.args[0]}") from None

    def family_spec(self) -> FamilySpec:
        f = self.family
        return FamilySpec(
            kind=str(f.get("kind", "gaussian")),
            width=_opt_float(f.get("width")),
            amplitude=float(f.get("amplitude", 1.0)),
            cutoff=_opt_float(f.get("cutoff")),
            seed=self.seed,
            dilations=tuple(_floats(f.get("dilations", "1"))),
        )

    @property
    def variant(self) -> str:
        v = str(self.inequality.get("variant", "poincare"))
        return ALIASES.get(v, v)

    def params(self, variant: str | None = None):
        v = variant or self.variant
        keys = ("p", "q", "s", "s1", "beta")
        free = {k: _opt_float(self.inequality.get(k)) for k in keys}
        if v in ("strong_p1", "strong1"):
            free = {"q": free["q"]}
        elif v in ("weak_p1", "weak1"):
            free = {"q": free["q"], "s": free["s"]}
        elif v == "poincare":
            free = {"s": free["s"]}
        return validate_params(v, **free)

    def grid(self, key: str, default=None):
        return self.grids.get(key, default)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        try:
            self.group_spec().validate()
        except LatticeError as e:
            raise ConfigError(str(e)) from None
        if self.mode not in MODES:
            raise ConfigError(f"unknown spectral mode {self.mode!r}")
        self.family_spec()
        if self.inequality:
            self.params()


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def _opt_float(v):
    if v is None or (isinstance(v, str) and v.strip() == ""):
        return None
    return float(v)


def _floats(v) -> list[float]:
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(x) for x in str(v).replace(";", ",").split(",") if x.strip()]


def floats(v) -> list[float]:
    return _floats(v)


def _coerce(value: str):
    """INI values: numbers become numbers, comma lists stay strings."""
    s = value.strip()
    try:
        if s.lower() in ("true", "false"):
            return s.lower() == "true"
        if "," in s:
            return s
        f = float(s)
        if f.is_integer() and not any(c in s for c in ".eE") and not math.isinf(f):
            return int(s)
        return f
    except ValueError:
        return s


def from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for k, v in data.items():
        if not isinstance(v, dict):
            raise ConfigError(f"section [{k}] must be a mapping")
    return ExperimentConfig(**{k: dict(v) for k, v in data.items()})


def parse_text(text: str) -> ExperimentConfig:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON config at line {e.lineno}: {e.msg}") from None
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"invalid config: {e}") from None
    return from_dict({s: {k: _coerce(v) for k, v in parser.items(s)} for s in parser.sections()})


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} not found")
    return parse_text(p.read_text(encoding="utf-8"))


__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_text", "from_dict", "floats", "ParamError"]
