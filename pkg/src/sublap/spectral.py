"""Spectral calculus of the sub-Laplacian: m(tJ), heat semigroup, J^s.

Three representations are available:

* ``dense``     -- full symmetric eigendecomposition (<= 4096 nodes);
* ``fourier``   -- diagonal DFT symbol (euclidean lattices only);
* ``chebyshev`` -- polynomial approximation of m(t.) on [0, lam_max]
  applied by a Clenshaw recurrence with the sparse operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import linalg
from scipy.sparse.linalg import eigsh
from scipy.special import gamma

from . import multipliers as mlib
from .lattice import LatticeGroup
from .ops import sub_laplacian

MODES = ("dense", "fourier", "chebyshev")
DENSE_LIMIT = 4096
ZERO_MODE_RTOL = 1e-9


class SpectralError(ValueError):
    pass


class ZeroModeError(SpectralError):
    """A multiplier singular at 0 met a function with a constant component."""


@dataclass(eq=False)
class SpectralRep:
    lattice: LatticeGroup
    mode: str
    eigenvalues: np.ndarray | None  # dense: sorted vector; fourier: symbol on the frequency grid
    vectors: np.ndarray | None = field(default=None, repr=False)  # dense, euclidean-orthonormal columns
    lam_max: float = 0.0
    tol: float = 1e-8

    @property
    def basis(self) -> np.ndarray:
        """Eigenvectors orthonormal for the Haar-weighted inner product."""
        if self.vectors is None:
            raise SpectralError(f"{self.mode} representation carries no basis")
        return self.vectors / math.sqrt(self.lattice.haar_weight)

    def orthonormality_defect(self) -> float:
        b = self.basis
        gram = self.lattice.haar_weight * (b.T @ b)
        return float(np.abs(gram - np.eye(gram.shape[0])).max())

    @property
    def zero_threshold(self) -> float:
        return ZERO_MODE_RTOL * max(self.lam_max, 1.0)


_CACHE: dict = {}


def fourier_symbol(g: LatticeGroup) -> np.ndarray:
    """sum_j 4 sin^2(pi m_j / N) / h^2 on the DFT frequency grid."""
    n = g.spec.nodes_per_axis
    s1 = 4 * np.sin(np.pi * np.arange(n) / n) ** 2 / g.h**2
    out = np.zeros(g.shape)
    for axis in range(g.ndim):
        shape = [1] * g.ndim
        shape[axis] = n
        out = out + s1.reshape(shape)
    return out


def spectral_radius_bound(g: LatticeGroup) -> float:
    """Upper bound on the spectrum: Lanczos estimate x1.01, capped by Gershgorin."""
    lap = sub_laplacian(g)
    gersh = float(np.abs(lap).sum(axis=1).max())
    try:
        top = float(eigsh(lap, k=1, which="LA", tol=1e-8, return_eigenvectors=False, v0=np.ones(g.size) + np.arange(g.size) % 7)[0])
    except Exception:  # pragma: no cover - ARPACK failures fall back to the bound
        return gersh
    return min(1.01 * top, gersh)


def decompose(g: LatticeGroup, mode: str = "dense", tol: float = 1e-8) -> SpectralRep:
    """Build (and cache) a spectral representation of the sub-Laplacian."""
    if mode not in MODES:
        raise SpectralError(f"unknown spectral mode {mode!r}; expected one of {MODES}")
    key = (g.spec, mode, tol)
    if key in _CACHE:
        return _CACHE[key]
    if mode == "dense":
        if g.size > DENSE_LIMIT:
            raise SpectralError(f"dense mode limited to {DENSE_LIMIT} nodes, lattice has {g.size}")
        a = sub_laplacian(g).toarray()
        if np.abs(a - a.T).max() > 1e-12 * np.abs(a).max():
            raise SpectralError("dense mode needs a symmetric sub-Laplacian")
        lam, vec = linalg.eigh(a)
        if lam[0] < -1e-9 * max(lam[-1], 1.0):
            raise SpectralError(f"negative eigenvalue {lam[0]:g}")
        lam = np.clip(lam, 0.0, None)
        rep = SpectralRep(g, mode, lam, vec, float(lam[-1]), tol)
    elif mode == "fourier":
        if not g.is_abelian:
            raise SpectralError(f"fourier mode needs an abelian lattice, got {g.family}")
        sym = fourier_symbol(g)
        rep = SpectralRep(g, mode, sym, None, float(sym.max()), tol)
    else:
        rep = SpectralRep(g, mode, None, None, spectral_radius_bound(g), tol)
    _CACHE[key] = rep
    return rep


def clear_cache() -> None:
    _CACHE.clear()


# -- multiplier application ------------------------------------------------------


def _symbol_values(rep: SpectralRep, m: mlib.Multiplier, t: float, lam: np.ndarray, coef: np.ndarray) -> np.ndarray:
    zero = lam <= rep.zero_threshold
    vals = np.empty(lam.shape)
    vals[~zero] = m(t * lam[~zero])
    if m.singular_at_zero:
        if np.any(zero):
            scale = np.linalg.norm(coef)
            if np.abs(coef[zero]).max() > ZERO_MODE_RTOL * max(scale, 1e-300):
                raise ZeroModeError(
                    f"{m.label} is singular at lambda=0 and f has a nonzero component on the "
                    "zero eigenspace (constants); project f to zero mean first"
                )
        vals[zero] = 0.0
    else:
        vals[zero] = m.at_zero
    if not np.all(np.isfinite(vals)):
        raise mlib.MultiplierError(f"{m.label} is not bounded on [0, t*lam_max]")
    return vals


def chebyshev_fit(m: mlib.Multiplier, t: float, lam_max: float, tol: float = 1e-8, max_degree: int = 8192):
    """Chebyshev interpolant of lam -> m(t lam) on [0, lam_max] and its sampled sup error."""
    if m.singular_at_zero:
        raise ZeroModeError(f"{m.label} is singular at 0 and cannot be applied in chebyshev mode")
    fn = lambda x: m(t * np.clip(x, 0.0, None))  # noqa: E731
    probe = np.linspace(0, lam_max, 4001)
    ref = fn(probe)
    scale = max(1.0, float(np.abs(ref).max()))
    deg = 16
    while True:
        series = C.Chebyshev.interpolate(fn, deg, domain=[0.0, lam_max])
        xs = np.concatenate([probe, np.linspace(0, lam_max, 8 * deg + 1)])
        err = float(np.abs(series(xs) - fn(xs)).max()) / scale
        if err <= tol:
            return series.coef, err
        if deg >= max_degree:
            raise SpectralError(f"chebyshev degree {deg} does not reach tolerance {tol:g} (error {err:.2e})")
        deg *= 2


def _clenshaw(rep: SpectralRep, coef: np.ndarray, f: np.ndarray) -> np.ndarray:
    lap = sub_laplacian(rep.lattice)
    lm = rep.lam_max

    def a(v):  # operator mapped from [0, lam_max] to [-1, 1]
        return (2.0 * (lap @ v) - lm * v) / lm

    b1 = np.zeros_like(f)
    b2 = np.zeros_like(f)
    for ck in coef[:0:-1]:
        b1, b2 = ck * f + 2 * a(b1) - b2, b1
    return coef[0] * f + a(b1) - b2


def apply_multiplier(rep: SpectralRep, m: mlib.Multiplier, t: float, f) -> np.ndarray:
    """m(tJ) f."""
    g = rep.lattice
    f = g.check_shape(f)
    if not t > 0:
        raise SpectralError(f"t must be positive, got {t}")
    if rep.mode == "dense":
        flat = f.reshape(g.size)
        coef = rep.vectors.T @ flat
        vals = _symbol_values(rep, m, t, rep.eigenvalues, coef)
        return (rep.vectors @ (vals * coef)).reshape(g.shape)
    if rep.mode == "fourier":
        spec = np.fft.fftn(f)
        vals = _symbol_values(rep, m, t, rep.eigenvalues.ravel(), spec.ravel() / math.sqrt(g.size))
        out = np.fft.ifftn(spec * vals.reshape(g.shape))
        return out.real if np.isrealobj(f) else out
    coef, _ = chebyshev_fit(m, t, rep.lam_max, rep.tol)
    return _clenshaw(rep, coef, f.reshape(g.size)).reshape(g.shape)


def kernel_of(rep: SpectralRep, m: mlib.Multiplier, t: float) -> np.ndarray:
    """Convolution kernel M with m(tJ) f = f * M."""
    return apply_multiplier(rep, m, t, rep.lattice.delta())


_HEAT = mlib.heat()


def heat_apply(rep: SpectralRep, t: float, f) -> np.ndarray:
    if t < 0:
        raise SpectralError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return np.array(rep.lattice.check_shape(f), copy=True)
    return apply_multiplier(rep, _HEAT, t, f)


def heat_kernel(rep: SpectralRep, t: float) -> np.ndarray:
    return heat_apply(rep, t, rep.lattice.delta())


def heat_family(rep: SpectralRep, f, ts):
    """Yield H_t f for each t in ``ts`` (batched in dense mode)."""
    g = rep.lattice
    f = g.check_shape(f)
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise SpectralError("heat semigroup needs t >= 0")
    if rep.mode == "fourier" and np.isrealobj(f):
        half = g.shape[-1] // 2 + 1
        spec = np.fft.rfftn(f)
        lam = rep.eigenvalues[..., :half]
        for t in ts:
            yield np.fft.irfftn(spec * np.exp(-t * lam), s=g.shape, axes=tuple(range(g.ndim))) if t > 0 else np.array(f, copy=True)
        return
    if rep.mode != "dense":
        for t in ts:
            yield heat_apply(rep, float(t), f)
        return
    coef = rep.vectors.T @ f.reshape(g.size)
    lam = rep.eigenvalues
    for start in range(0, len(ts), 32):
        chunk = ts[start : start + 32]
        block = rep.vectors @ (np.exp(-np.outer(lam, chunk)) * coef[:, None])
        for i in range(len(chunk)):
            yield block[:, i].reshape(g.shape)


# -- fractional powers -------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    n_points: int = 64
    t_min: float | None = None
    t_max: float | None = None
    small_t_series: bool = True

    def bounds(self, g: LatticeGroup) -> tuple[float, float]:
        t_min = self.t_min if self.t_min is not None else g.h**2 / 4
        t_max = self.t_max if self.t_max is not None else 16 * (g.diameter / 2) ** 2
        return t_min, t_max


def _laplacian_power(g: LatticeGroup, k: int, f: np.ndarray) -> np.ndarray:
    lap = sub_laplacian(g)
    v = f.reshape(g.size)
    for _ in range(k):
        v = lap @ v
    return v.reshape(g.shape)


def _small_t_series(g: LatticeGroup, a: float, c: float, u: np.ndarray) -> np.ndarray:
    """int_0^a t^{c-1} e^{-tJ} u dt as a^c sum_n (-aJ)^n u / (n! (n+c))."""
    lap = sub_laplacian(g)
    v = u.reshape(g.size).astype(float)
    total = v / c
    ref = np.abs(v).max() or 1.0
    for n in range(1, 400):
        v = -a * (lap @ v) / n
        total = total + v / (n + c)
        if np.abs(v).max() < 1e-18 * ref and n > 4:
            break
    return (a**c * total).reshape(g.shape)


def bochner_integral(rep: SpectralRep, c: float, u: np.ndarray, quad: QuadratureSpec) -> np.ndarray:
    """(1/Gamma(c)) int_0^inf t^{c-1} H_t u dt on a geometric t-grid."""
    g = rep.lattice
    t_min, t_max = quad.bounds(g)
    ts = np.geomspace(t_min, t_max, quad.n_points)
    du = math.log(ts[1] / ts[0])
    w = np.full(len(ts), du)
    w[0] = w[-1] = du / 2
    acc = np.zeros(g.shape)
    for wi, ti, ht in zip(w, ts, heat_family(rep, u, ts)):
        acc += wi * ti**c * ht
    if quad.small_t_series:
        acc += _small_t_series(g, t_min, c, u)
    return acc / gamma(c)


def fractional_power_apply(rep: SpectralRep, s: float, f, route: str = "spectral", quad: QuadratureSpec | None = None) -> np.ndarray:
    """J^s f by the spectral route or by Bochner subordination.

    Positive s: J^s = (1/Gamma(k-s)) int t^{k-s-1} J^k H_t dt with k the
    smallest integer greater than s.  Negative s = -sigma:
    J^{-sigma} = (1/Gamma(sigma)) int t^{sigma-1} H_t dt, zero-mean f only.
    """
    g = rep.lattice
    f = g.check_shape(f)
    if s == 0:
        return np.array(f, dtype=float, copy=True)
    if route == "spectral":
        return apply_multiplier(rep, mlib.power(s), 1.0, f)
    if route != "bochner":
        raise SpectralError(f"unknown route {route!r}")
    quad = quad or QuadratureSpec()
    if s > 0:
        k = math.floor(s) + 1
        return bochner_integral(rep, k - s, _laplacian_power(g, k, f), quad)
    mean = float(f.mean())
    if abs(mean) > ZERO_MODE_RTOL * max(float(np.abs(f).max()), 1e-300):
        raise ZeroModeError(f"negative power J^{s:g} needs a zero-mean function (constant component {mean:.3g})")
    return bochner_integral(rep, -s, f, quad)
