"""Invariant vector fields, gradient, sub-Laplacian and group convolution."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .lattice import LatticeError, LatticeGroup


def _check_j(g: LatticeGroup, j: int) -> None:
    if not 0 <= j < g.k:
        raise LatticeError(f"field index {j} out of range (k={g.k})")


def _coord_diff(g: LatticeGroup, f: np.ndarray, axis: int) -> np.ndarray:
    step = g.spacing[axis]
    return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * step)


def apply_field(g: LatticeGroup, f, j: int, side: str = "left") -> np.ndarray:
    """Apply X_j (``side="left"``, left-invariant) or its right-invariant twin.

    On euclidean and heisenberg1 lattices this is the central difference
    along the group exponential, (f(v e^{hX}) - f(v e^{-hX}))/2h, which is
    second-order accurate for the coordinate expressions
    X = dx - (y/2) dz, Y = dy + (x/2) dz and exact on polynomials of degree
    <= 2 in the group coordinates.
    """
    _check_j(g, j)
    f = g.check_shape(f)
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if g.family != "rototranslation":
        shift = g.right_shift if side == "left" else g.left_shift
        return (shift(f, j, 1) - shift(f, j, -1)) / (2 * g.steps[j])
    x, y, th = g.coords
    dx, dy, dth = (_coord_diff(g, f, a) for a in range(3))
    if side == "left":
        return np.cos(th) * dx + np.sin(th) * dy if j == 0 else dth
    return dx if j == 0 else -y * dx + x * dy + dth


def gradient(g: LatticeGroup, f, side: str = "left") -> list[np.ndarray]:
    return [apply_field(g, f, j, side) for j in range(g.k)]


def grad_l1_norm(g: LatticeGroup, f, side: str = "left") -> float:
    """sum_nodes w * |grad f| with the euclidean length of the k-tuple."""
    grads = gradient(g, f, side)
    return float(g.haar_weight * np.sqrt(sum(d * d for d in grads)).sum())


def _shift_matrix(g: LatticeGroup, j: int) -> sparse.csr_matrix:
    # (P f)(v) = f(v e^{hX_j})
    rows = np.arange(g.size)
    cols = g.flat(g.mul(g.indices, g.generator_step(j, 1))).ravel()
    return sparse.csr_matrix((np.ones(g.size), (rows, cols)), shape=(g.size, g.size))


def _diff_1d(n: int, step: float, second: bool) -> sparse.csr_matrix:
    e = np.ones(n)
    if second:
        m = sparse.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], format="lil")
        m[0, n - 1] = m[n - 1, 0] = 1
        return (m / step**2).tocsr()
    m = sparse.diags([-e[:-1], e[:-1]], [-1, 1], format="lil")
    m[0, n - 1], m[n - 1, 0] = -1, 1
    return (m / (2 * step)).tocsr()


def _axis_op(g: LatticeGroup, op: sparse.spmatrix, axis: int) -> sparse.csr_matrix:
    mats = [sparse.identity(n, format="csr") for n in g.shape]
    mats[axis] = op
    out = mats[0]
    for m in mats[1:]:
        out = sparse.kron(out, m, format="csr")
    return out


_LAPLACIANS: dict = {}


def sub_laplacian(g: LatticeGroup) -> sparse.csr_matrix:
    """Sparse matrix of the sub-Laplacian acting on raveled grid functions.

    euclidean/heisenberg1: the compact graph Laplacian
    sum_j (2 - P_j - P_j^T)/h_j^2 built from the generator shifts.  It is
    symmetric, annihilates constants and its heat semigroup is Markov.
    rototranslation: -(c^2 Dxx + s^2 Dyy + 2cs DxDy + Dtt) with compact
    second differences.
    """
    key = g.spec
    if key in _LAPLACIANS:
        return _LAPLACIANS[key]
    eye = sparse.identity(g.size, format="csr")
    if g.family != "rototranslation":
        lap = sparse.csr_matrix((g.size, g.size))
        for j in range(g.k):
            p = _shift_matrix(g, j)
            lap = lap + (2 * eye - p - p.T) / g.steps[j] ** 2
    else:
        n = g.spec.nodes_per_axis
        th = g.coords[2].ravel()
        c, s = sparse.diags(np.cos(th)), sparse.diags(np.sin(th))
        dxx = _axis_op(g, _diff_1d(n, g.h, True), 0)
        dyy = _axis_op(g, _diff_1d(n, g.h, True), 1)
        dx = _axis_op(g, _diff_1d(n, g.h, False), 0)
        dy = _axis_op(g, _diff_1d(n, g.h, False), 1)
        dtt = _axis_op(g, _diff_1d(n, g.spacing[2], True), 2)
        lap = -(c @ c @ dxx + s @ s @ dyy + 2 * (c @ s) @ (dx @ dy) + dtt)
    lap = sparse.csr_matrix(lap)
    lap.sum_duplicates()
    lap.eliminate_zeros()
    _LAPLACIANS[key] = lap
    return lap


def sub_laplacian_apply(g: LatticeGroup, f) -> np.ndarray:
    f = g.check_shape(f)
    return (sub_laplacian(g) @ f.ravel()).reshape(g.shape)


def inner(g: LatticeGroup, f, u) -> float:
    """Haar-weighted inner product."""
    return float(g.haar_weight * np.vdot(np.asarray(f).ravel(), np.asarray(u).ravel()).real)


def left_translate(g: LatticeGroup, f, a) -> np.ndarray:
    return g.translate(g.check_shape(f), a)


def group_convolution(g: LatticeGroup, f, kernel) -> np.ndarray:
    """(f * K)(x) = sum_y w f(y) K(y^{-1} x).

    Abelian lattices use the DFT; otherwise the O(M^2) sum is done in node
    blocks.
    """
    f = g.check_shape(f)
    kernel = g.check_shape(kernel)
    if g.is_abelian:
        out = np.fft.ifftn(np.fft.fftn(f) * np.fft.fftn(kernel)) * g.haar_weight
        if np.isrealobj(f) and np.isrealobj(kernel):
            out = out.real
        return out
    fy = f.ravel()
    kflat = kernel.ravel()
    xs = g.indices
    out = np.zeros(g.size, dtype=np.result_type(f, kernel, float))
    ys = np.nonzero(fy)[0]
    block = max(1, 2**22 // g.size)
    for start in range(0, len(ys), block):
        yb = ys[start : start + block]
        yi = g.unflat(yb)
        yinv = tuple(v[:, None] for v in g.inv(yi))
        prod = g.mul(yinv, tuple(v.ravel()[None, :] for v in xs))
        out += fy[yb] @ kflat[g.flat(prod)]
    return (out * g.haar_weight).reshape(g.shape)
