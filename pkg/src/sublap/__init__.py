"""Discrete sub-Laplacians on polynomial-growth Lie groups.

Lattice models, heat-semigroup spectral calculus, Sobolev/Besov norms and
numerical harnesses for Sobolev-type inequalities.
"""

from .lattice import GroupSpec, LatticeGroup, build_lattice, cc_distance_field, volume_growth, fit_growth_exponents

__version__ = "0.1.0"

__all__ = [
    "GroupSpec",
    "LatticeGroup",
    "build_lattice",
    "cc_distance_field",
    "volume_growth",
    "fit_growth_exponents",
]
