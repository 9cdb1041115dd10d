"""Finite lattice models of polynomial-growth Lie groups.

Three families are supported:

* ``euclidean(n)`` -- the torus (Z_N)^n with spacing h, generators the
  coordinate fields.
* ``heisenberg1`` -- the finite Heisenberg group H(Z_N) scaled so that the
  horizontal spacing is h and the central spacing is h**2.  Nodes are stored
  in polarized coordinates (a, b, c) with product
  ``(a, b, c)(a', b', c') = (a+a', b+b', c+c'+a*b') mod N``; the symmetric
  chart used for reporting is ``x = a*h, y = b*h, z = c*h**2 - x*y/2``.
  Because the lattice is an honest finite group, translations, the
  sub-Laplacian and convolutions are exactly left-invariant.
* ``rototranslation`` -- SE(2) with snapped coordinates (experimental,
  needs ``experimental=True``).

Node arrays are indexed by group coordinates modulo N, so the identity sits
at index 0 on every axis; coordinates are reported on the centred box
[-L/2, L/2).
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

FAMILIES = ("euclidean", "heisenberg1", "rototranslation")

# (local dimension d, dimension at infinity D)
_DIMS = {"heisenberg1": (4, 4), "rototranslation": (3, 2)}


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class GroupSpec:
    family: str
    box_size: float
    nodes_per_axis: int
    dim: int = 1

    @property
    def h(self) -> float:
        return self.box_size / self.nodes_per_axis

    @property
    def label(self) -> str:
        if self.family == "euclidean":
            return f"euclidean({self.dim})"
        return self.family

    @classmethod
    def from_label(cls, family: str, box_size: float, nodes_per_axis: int) -> "GroupSpec":
        """Parse ``euclidean(2)``-style family labels."""
        m = re.fullmatch(r"\s*euclidean\s*\(\s*(\d+)\s*\)\s*", family)
        if m:
            return cls("euclidean", float(box_size), int(nodes_per_axis), int(m.group(1)))
        return cls(family.strip(), float(box_size), int(nodes_per_axis))

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise LatticeError(f"unknown group family {self.family!r}")
        if self.nodes_per_axis < 8:
            raise LatticeError(f"nodes_per_axis must be >= 8, got {self.nodes_per_axis}")
        if not self.box_size > 0:
            raise LatticeError(f"box_size must be positive, got {self.box_size}")
        if self.family == "euclidean" and self.dim < 1:
            raise LatticeError("euclidean dimension must be >= 1")


def _centered(a: np.ndarray, n: int) -> np.ndarray:
    return (np.asarray(a) + n // 2) % n - n // 2


class LatticeGroup:
    """An immutable finite discretization of a Lie group.

    Grid functions are plain ndarrays of shape ``self.shape``.
    """

    def __init__(self, spec: GroupSpec):
        spec.validate()
        self.spec = spec
        n = spec.nodes_per_axis
        h = spec.h
        if spec.family == "euclidean":
            self.shape = (n,) * spec.dim
            self.spacing = (h,) * spec.dim
            self.k = spec.dim
            self.local_dim = self.dim_at_infinity = spec.dim
            # step lengths of the generators exp(h X_j)
            self.steps = (h,) * spec.dim
        elif spec.family == "heisenberg1":
            self.shape = (n, n, n)
            self.spacing = (h, h, h * h)
            self.k = 2
            self.local_dim, self.dim_at_infinity = _DIMS["heisenberg1"]
            self.steps = (h, h)
        else:
            dtheta = 2 * math.pi / n
            self.shape = (n, n, n)
            self.spacing = (h, h, dtheta)
            self.k = 2
            self.local_dim, self.dim_at_infinity = _DIMS["rototranslation"]
            self.steps = (h, dtheta)
        self.haar_weight = float(np.prod(self.spacing))
        self.size = int(np.prod(self.shape))
        self.ndim = len(self.shape)

    def __repr__(self) -> str:
        s = self.spec
        return f"LatticeGroup({s.label}, L={s.box_size:g}, N={s.nodes_per_axis})"

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def h(self) -> float:
        return self.spec.h

    @property
    def is_abelian(self) -> bool:
        return self.family == "euclidean"

    @property
    def identity(self) -> tuple[int, ...]:
        return (0,) * self.ndim

    @property
    def z_period(self) -> float:
        """Length of the central (z) circle for heisenberg1."""
        return self.shape[2] * self.spacing[2]

    @cached_property
    def indices(self) -> tuple[np.ndarray, ...]:
        return tuple(np.indices(self.shape))

    def check_shape(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != self.shape:
            raise LatticeError(f"grid function shape {f.shape} does not match lattice {self.shape}")
        return f

    # -- coordinates -------------------------------------------------------

    def coords_of(self, idx) -> tuple[np.ndarray, ...]:
        """Symmetric-chart coordinates of nodes given by index tuples."""
        n = self.spec.nodes_per_axis
        h = self.h
        if self.family == "euclidean":
            return tuple(_centered(a, n) * h for a in idx)
        a, b, c = (_centered(v, n) for v in idx)
        x, y = a * h, b * h
        if self.family == "heisenberg1":
            period = self.z_period
            z = c * self.spacing[2] - x * y / 2
            z = (z + period / 2) % period - period / 2
            return x, y, z
        return x, y, c * self.spacing[2]

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.asarray(c, dtype=float) for c in self.coords_of(self.indices))

    def middle_half_mask(self) -> np.ndarray:
        """Nodes in the middle half of the coordinate box around the identity."""
        half = [self.spec.box_size / 4] * self.ndim
        if self.family == "heisenberg1":
            half[2] = self.z_period / 4
        elif self.family == "rototranslation":
            half[2] = math.pi
        mask = np.ones(self.shape, dtype=bool)
        for c, w in zip(self.coords, half):
            mask &= np.abs(c) < w
        return mask

    # -- group structure ---------------------------------------------------

    def mul(self, a, b) -> tuple[np.ndarray, ...]:
        """Group product of node index tuples (broadcasting)."""
        n = self.spec.nodes_per_axis
        a = tuple(np.asarray(v) for v in a)
        b = tuple(np.asarray(v) for v in b)
        if self.family == "euclidean":
            return tuple((u + v) % n for u, v in zip(a, b))
        if self.family == "heisenberg1":
            return ((a[0] + b[0]) % n, (a[1] + b[1]) % n, (a[2] + b[2] + a[0] * b[1]) % n)
        xa, ya, ta = self.coords_of(a)
        xb, yb, tb = self.coords_of(b)
        x = xa + np.cos(ta) * xb - np.sin(ta) * yb
        y = ya + np.sin(ta) * xb + np.cos(ta) * yb
        return self._snap(x, y, ta + tb)

    def inv(self, a) -> tuple[np.ndarray, ...]:
        n = self.spec.nodes_per_axis
        a = tuple(np.asarray(v) for v in a)
        if self.family == "euclidean":
            return tuple((-v) % n for v in a)
        if self.family == "heisenberg1":
            return ((-a[0]) % n, (-a[1]) % n, (-a[2] + a[0] * a[1]) % n)
        x, y, t = self.coords_of(a)
        return self._snap(-np.cos(t) * x - np.sin(t) * y, np.sin(t) * x - np.cos(t) * y, -t)

    def _snap(self, x, y, theta):
        n = self.spec.nodes_per_axis
        return (
            np.rint(x / self.h).astype(int) % n,
            np.rint(y / self.h).astype(int) % n,
            np.rint(theta / self.spacing[2]).astype(int) % n,
        )

    def generator_step(self, j: int, sign: int = 1) -> tuple[int, ...]:
        """Node index of exp(sign * step_j * X_j)."""
        if not 0 <= j < self.k:
            raise LatticeError(f"generator index {j} out of range for k={self.k}")
        if self.family == "rototranslation":
            e = [0, 0, 0]
            e[0 if j == 0 else 2] = sign % self.spec.nodes_per_axis
            return tuple(e)
        e = [0] * self.ndim
        e[j] = sign % self.spec.nodes_per_axis
        return tuple(e)

    def right_shift(self, f: np.ndarray, j: int, sign: int = 1) -> np.ndarray:
        """(R f)(v) = f(v . exp(sign*step*X_j))."""
        return f[self.mul(self.indices, self.generator_step(j, sign))]

    def left_shift(self, f: np.ndarray, j: int, sign: int = 1) -> np.ndarray:
        """(L f)(v) = f(exp(sign*step*X_j) . v)."""
        return f[self.mul(self.generator_step(j, sign), self.indices)]

    def translate(self, f: np.ndarray, a) -> np.ndarray:
        """Left translation: (tau_a f)(x) = f(a^{-1} x)."""
        return np.asarray(f)[self.mul(self.inv(a), self.indices)]

    def flat(self, idx) -> np.ndarray:
        return np.ravel_multi_index(tuple(np.asarray(v) for v in idx), self.shape)

    def unflat(self, i) -> tuple[np.ndarray, ...]:
        return np.unravel_index(i, self.shape)

    def delta(self, node=None) -> np.ndarray:
        """Discrete Dirac mass delta_node / haar_weight (unit mass)."""
        node = self.identity if node is None else tuple(node)
        d = np.zeros(self.shape)
        d[node] = 1.0 / self.haar_weight
        return d

    # -- geometry ----------------------------------------------------------

    @cached_property
    def step_graph(self) -> sparse.csr_matrix:
        """Directed admissible-step graph: v -> v.exp(+-step X_j), weight = step."""
        src = np.arange(self.size)
        rows, cols, vals = [], [], []
        for j in range(self.k):
            for sign in (1, -1):
                dst = self.flat(self.mul(self.indices, self.generator_step(j, sign))).ravel()
                keep = dst != src
                rows.append(src[keep])
                cols.append(dst[keep])
                vals.append(np.full(keep.sum(), self.steps[j]))
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.size, self.size),
        )

    @cached_property
    def diameter(self) -> float:
        return float(cc_distance_field(self).max())


def build_lattice(spec: GroupSpec, *, experimental: bool = False) -> LatticeGroup:
    spec.validate()
    if spec.family == "rototranslation" and not experimental:
        raise LatticeError("rototranslation backend is experimental; pass experimental=True")
    return LatticeGroup(spec)


# -- Carnot-Caratheodory distance ----------------------------------------------


def heisenberg_cc_norm(x, y, z) -> np.ndarray:
    """Exact CC distance from the identity for X = dx - y/2 dz, Y = dy + x/2 dz.

    Geodesics project to circular arcs; for turning angle phi the endpoint
    satisfies |z|/r^2 = (phi - sin phi)/(8 sin^2(phi/2)) and the length is
    r*phi/(2 sin(phi/2)).  The angle is found by vectorized bisection.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    shape = x.shape
    x, y, z = (np.ravel(v) for v in (x, y, z))
    r = np.hypot(x, y)
    az = np.abs(z)
    out = r.copy()
    vertical = (r == 0) & (az > 0)
    out[vertical] = np.sqrt(4 * math.pi * az[vertical])
    gen = (r > 0) & (az > 0)
    if gen.any():
        mu = az[gen] / r[gen] ** 2
        lo = np.zeros_like(mu)
        hi = np.full_like(mu, 2 * math.pi)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            val = (mid - np.sin(mid)) / (8 * np.sin(mid / 2) ** 2)
            up = val < mu
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
        phi = 0.5 * (lo + hi)
        out[gen] = r[gen] * (phi / 2) / np.sin(phi / 2)
    return out.reshape(shape)


def cc_distance_field(g: LatticeGroup, origin=None, method: str = "exact") -> np.ndarray:
    """Distance ||origin^{-1} . x|| for every node x.

    ``method="exact"`` uses the closed-form CC metric (euclidean and
    heisenberg1; the heisenberg central circle is handled by taking the
    nearest z-image).  ``method="graph"`` runs Dijkstra on the admissible
    step graph.  rototranslation always uses the graph.
    """
    origin = g.identity if origin is None else tuple(int(v) for v in origin)
    if any(not 0 <= o < s for o, s in zip(origin, g.shape)) or len(origin) != g.ndim:
        raise LatticeError(f"origin {origin} is not a lattice node")
    if method not in ("exact", "graph"):
        raise LatticeError(f"unknown distance method {method!r}")
    if method == "graph" or g.family == "rototranslation":
        d = csgraph.dijkstra(g.step_graph, directed=True, indices=int(g.flat(origin)))
        return d.reshape(g.shape)
    rel = g.mul(g.inv(origin), g.indices)
    c = g.coords_of(rel)
    if g.family == "euclidean":
        return np.sqrt(sum(np.asarray(v, dtype=float) ** 2 for v in c))
    x, y, z = c
    period = g.z_period
    return np.minimum.reduce([heisenberg_cc_norm(x, y, z + k * period) for k in (-1, 0, 1)])


def volume_growth(g: LatticeGroup, radii, origin=None, method: str = "exact") -> list[tuple[float, float]]:
    """Haar measure V(r) of the open CC ball of radius r, for each r."""
    radii = np.asarray(radii, dtype=float)
    lo, hi = 2 * g.h, g.spec.box_size / 2
    if np.any(radii <= lo) or np.any(radii >= hi):
        warnings.warn(f"radii outside ({lo:g}, {hi:g}); balls may be unresolved or exceed the box", stacklevel=2)
    if g.family == "heisenberg1" and radii.max() ** 2 / (4 * math.pi) > g.z_period / 2:
        warnings.warn("largest ball exceeds the central circle of the lattice", stacklevel=2)
    d = np.sort(cc_distance_field(g, origin, method).ravel())
    counts = np.searchsorted(d, radii, side="left")
    return [(float(r), float(c * g.haar_weight)) for r, c in zip(radii, counts)]


def _slope(samples) -> float:
    if len(samples) < 2:
        return float("nan")
    r, v = np.asarray(samples, dtype=float).T
    return float(np.polyfit(np.log(r), np.log(v), 1)[0])


def fit_growth_exponents(samples, split_radius: float) -> tuple[float, float]:
    """Least-squares log-log slopes below and above ``split_radius``."""
    samples = [(r, v) for r, v in samples if v > 0]
    local = [s for s in samples if s[0] < split_radius]
    far = [s for s in samples if s[0] >= split_radius]
    for name, side in (("local", local), ("large-scale", far)):
        if len(side) < 5:
            warnings.warn(f"only {len(side)} radii on the {name} side; regression unreliable", stacklevel=2)
    return _slope(local), _slope(far)
