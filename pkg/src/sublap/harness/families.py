"""Parametric test-function families on a lattice."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import multipliers as mlib
from ..lattice import LatticeGroup
from ..spectral import SpectralRep, apply_multiplier

KINDS = ("gaussian", "bump", "random_bandlimited")


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    kind: str = "gaussian"
    width: float | None = None  # default: box_size / 16
    amplitude: float = 1.0
    cutoff: float | None = None  # spectral cut-off for random_bandlimited
    seed: int = 0
    dilations: tuple = (1.0,)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FamilyError(f"unknown family kind {self.kind!r}; expected one of {KINDS}")
        if not self.dilations:
            raise FamilyError("family has no members (empty dilation grid)")
        if any(not d > 0 for d in self.dilations):
            raise FamilyError("dilation factors must be positive")


def dilated_coords(g: LatticeGroup, lam: float) -> tuple[np.ndarray, ...]:
    """Coordinates of delta_lam(x): homogeneous dilation of the group."""
    c = g.coords
    if g.family == "heisenberg1":
        return lam * c[0], lam * c[1], lam**2 * c[2]
    if g.family == "rototranslation":
        return lam * c[0], lam * c[1], c[2]
    return tuple(lam * v for v in c)


def gauge(g: LatticeGroup, coords) -> np.ndarray:
    """Homogeneous norm used to shape radial test functions."""
    if g.family == "heisenberg1":
        x, y, z = coords
        return ((x * x + y * y) ** 2 + 16 * z * z) ** 0.25
    return np.sqrt(sum(v * v for v in coords))


def make_function(g: LatticeGroup, spec: FamilySpec, lam: float = 1.0, rep: SpectralRep | None = None) -> np.ndarray:
    """Member f(delta_lam x) of the family, centred at the identity."""
    width = spec.width if spec.width is not None else g.spec.box_size / 16
    if spec.kind == "random_bandlimited":
        if rep is None:
            raise FamilyError("random_bandlimited needs a spectral representation")
        cutoff = spec.cutoff if spec.cutoff is not None else 16.0 / width**2
        noise = np.random.default_rng(spec.seed).standard_normal(g.shape)
        f = apply_multiplier(rep, mlib.lowpass_chi(), 1.0 / (cutoff * lam * lam), noise)
        return spec.amplitude * f / np.abs(f).max()
    rho = gauge(g, dilated_coords(g, lam)) / width
    if spec.kind == "gaussian":
        return spec.amplitude * np.exp(-0.5 * rho * rho)
    out = np.zeros(g.shape)
    inside = rho < 1
    out[inside] = np.exp(1 - 1 / (1 - rho[inside] ** 2))
    return spec.amplitude * out


def random_function(g: LatticeGroup, rng: np.random.Generator, smooth: int = 0) -> np.ndarray:
    """White noise, optionally averaged over ``smooth`` rounds of generator shifts."""
    f = rng.standard_normal(g.shape)
    for _ in range(smooth):
        acc = f.copy()
        for j in range(g.k):
            acc += g.right_shift(f, j, 1) + g.right_shift(f, j, -1)
        f = acc / (1 + 2 * g.k)
    return f


def support_fraction_outside_middle(g: LatticeGroup, f, rtol: float = 1e-8) -> float:
    """Share of |f| mass lying outside the middle half of the box."""
    a = np.abs(np.asarray(f))
    total = a.sum()
    if total == 0:
        return 0.0
    return float(a[~g.middle_half_mask()].sum() / total)


