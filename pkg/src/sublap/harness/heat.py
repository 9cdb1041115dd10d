"""Gaussian and L^p bounds for gradients of the heat kernel."""

from __future__ import annotations

import math

import numpy as np

from ..lattice import LatticeGroup, cc_distance_field
from ..norms import lp_norm
from ..ops import apply_field
from ..spectral import SpectralRep, heat_kernel


def heat_kernel_bound_check(g: LatticeGroup, rep: SpectralRep, t_grid, p: float = 1.0, c: float = 5.0,
                            noise_floor: float = 1e-10) -> dict:
    """Normalized sup and L^p sizes of X_j h_t along a t-grid.

    gaussian: sup_x |X_j h_t(x)| t^{1/2} V(sqrt t) exp(|x|^2/(c t)), over nodes
    where |X_j h_t| exceeds ``noise_floor`` times its maximum (below that the
    values are rounding noise amplified by the exponential weight).
    lp: ||X_j h_t||_p t^{1/2} V(sqrt t)^{1/p'}.
    """
    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts < g.h**2 * (1 - 1e-12)):
        raise ValueError(f"t below h^2 = {g.h**2:g} does not resolve the kernel")
    if not p >= 1:
        raise ValueError("p must be >= 1")
    inv_pprime = 1 - 1 / p if math.isfinite(p) else 1.0
    dist = cc_distance_field(g)
    sorted_d = np.sort(dist.ravel())
    rows = []
    for t in ts:
        ht = heat_kernel(rep, float(t))
        vol = np.searchsorted(sorted_d, math.sqrt(t), side="left") * g.haar_weight
        for j in range(g.k):
            d = np.abs(apply_field(g, ht, j))
            keep = d > noise_floor * d.max()
            gauss = float((d[keep] * np.exp(dist[keep] ** 2 / (c * t))).max() * math.sqrt(t) * vol)
            lp = lp_norm(g, d, p) * math.sqrt(t) * vol**inv_pprime
            rows.append({"t": float(t), "j": j, "volume": float(vol), "gaussian": gauss, "lp": float(lp),
                         "kernel_min": float(ht.min()), "kernel_mass": float(ht.sum() * g.haar_weight)})
    lp_t = np.array([max(r["lp"] for r in rows if r["t"] == t) for t in ts])
    ga_t = np.array([max(r["gaussian"] for r in rows if r["t"] == t) for t in ts])
    return {
        "p": p,
        "c": c,
        "rows": rows,
        "gaussian_sup": float(ga_t.max()),
        "lp_sup": float(lp_t.max()),
        "lp_variation": float(lp_t.max() / lp_t.min()),
        "gaussian_variation": float(ga_t.max() / ga_t.min()),
        "finite_positive": bool(np.all(np.isfinite(lp_t)) and np.all(lp_t > 0) and np.all(np.isfinite(ga_t))),
    }
