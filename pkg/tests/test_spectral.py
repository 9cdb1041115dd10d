import math

import numpy as np
import pytest
from scipy.special import ive

from sublap import multipliers as mlib
from sublap.lattice import GroupSpec, build_lattice
from sublap.norms import lp_norm
from sublap.ops import sub_laplacian_apply
from sublap.spectral import (
    QuadratureSpec,
    SpectralError,
    ZeroModeError,
    apply_multiplier,
    chebyshev_fit,
    decompose,
    fourier_symbol,
    fractional_power_apply,
    heat_apply,
    heat_family,
    heat_kernel,
    kernel_of,
    spectral_radius_bound,
)


def bessel_heat_kernel(g, t):
    """Periodized kernel of the lattice heat equation: e^{-2tau} I_n(2tau) / h per axis."""
    n = g.spec.nodes_per_axis
    tau = t / g.h**2
    idx = np.arange(n)
    offsets = np.where(idx <= n // 2, idx, idx - n)
    k1 = sum(ive(offsets + m * n, 2 * tau) for m in range(-6, 7)) / g.h
    out = k1
    for _ in range(1, g.ndim):
        out = np.multiply.outer(out, k1)
    return out


@pytest.mark.parametrize("t", [0.01, 0.1, 0.5, 2.0])
def test_heat_kernel_matches_bessel_oracle(eucl1, t):
    g, rep = eucl1
    np.testing.assert_allclose(heat_kernel(rep, t), bessel_heat_kernel(g, t), atol=1e-10)


def test_heat_kernel_near_continuum_gaussian(eucl1):
    g, rep = eucl1
    t = 0.5
    x = g.coords[0]
    gauss = sum(np.exp(-((x + m * g.spec.box_size) ** 2) / (4 * t)) for m in range(-3, 4)) / math.sqrt(4 * math.pi * t)
    err = np.abs(heat_kernel(rep, t) - gauss).max()
    # second-order lattice error
    assert err < 2 * g.h**2


def test_modes_agree():
    g = build_lattice(GroupSpec("euclidean", 2 * np.pi, 64, 1))
    f = np.random.default_rng(0).standard_normal(g.shape)
    dense, four, cheb = (decompose(g, m) for m in ("dense", "fourier", "chebyshev"))
    for m, t in [(mlib.heat(), 0.3), (mlib.theta0(), 0.05), (mlib.m_b(0.0), 0.2)]:
        ref = apply_multiplier(dense, m, t, f)
        np.testing.assert_allclose(apply_multiplier(four, m, t, f), ref, atol=1e-10)
        np.testing.assert_allclose(apply_multiplier(cheb, m, t, f), ref, atol=1e-6)


def test_fourier_symbol_is_spectrum():
    g = build_lattice(GroupSpec("euclidean", 1.0, 12, 2))
    rep = decompose(g, "dense")
    np.testing.assert_allclose(np.sort(fourier_symbol(g).ravel()), rep.eigenvalues, atol=1e-9)


def test_heisenberg_dense_basis(heis16):
    g, rep = heis16
    assert rep.orthonormality_defect() < 1e-10
    assert rep.eigenvalues[0] <= rep.zero_threshold
    assert abs(rep.eigenvalues[1]) > rep.zero_threshold


def test_heisenberg_heat_kernel_markov_symmetric(heis16):
    g, rep = heis16
    k = heat_kernel(rep, 0.5)
    assert k.sum() * g.haar_weight == pytest.approx(1.0, abs=1e-12)
    assert k.min() > 0
    # h_t(x^{-1}) = h_t(x)
    np.testing.assert_allclose(k[g.inv(g.indices)], k, atol=1e-12)


def test_heat_family_matches_single_calls(eucl2, rng):
    g, rep = eucl2
    f = rng.standard_normal(g.shape)
    ts = [0.0, 1e-3, 0.01, 0.2]
    for t, ht in zip(ts, heat_family(rep, f, ts)):
        np.testing.assert_allclose(ht, heat_apply(rep, t, f), atol=1e-12)
    four = decompose(g, "fourier")
    for t, ht in zip(ts, heat_family(four, f, ts)):
        np.testing.assert_allclose(ht, heat_apply(rep, t, f), atol=1e-12)


def test_heat_time_checks(eucl1):
    g, rep = eucl1
    f = np.ones(g.shape)
    out = heat_apply(rep, 0.0, f)
    assert out is not f and np.array_equal(out, f)
    with pytest.raises(SpectralError):
        heat_apply(rep, -1.0, f)
    with pytest.raises(SpectralError):
        apply_multiplier(rep, mlib.heat(), 0.0, f)


def test_kernel_is_convolution_kernel(heis16):
    g, rep = heis16
    from sublap.ops import group_convolution

    f = np.zeros(g.shape)
    f[3, 4, 5] = 1.0
    f[10, 1, 0] = -2.0
    k = kernel_of(rep, mlib.heat(), 0.3)
    np.testing.assert_allclose(group_convolution(g, f, k), heat_apply(rep, 0.3, f), atol=1e-12)


def test_power_one_is_laplacian(eucl1, rng):
    g, rep = eucl1
    f = rng.standard_normal(g.shape)
    np.testing.assert_allclose(fractional_power_apply(rep, 1.0, f), sub_laplacian_apply(g, f), atol=1e-9)


def test_negative_power_inverts(eucl1, rng):
    g, rep = eucl1
    f = rng.standard_normal(g.shape)
    f -= f.mean()
    back = sub_laplacian_apply(g, fractional_power_apply(rep, -1.0, f))
    np.testing.assert_allclose(back, f, atol=1e-9)
    with pytest.raises(ZeroModeError):
        fractional_power_apply(rep, -0.5, f + 1.0)
    with pytest.raises(ZeroModeError):
        fractional_power_apply(rep, -0.5, f + 1.0, route="bochner")


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75, 1.5, -0.5])
def test_bochner_route_agrees(eucl1, s):
    g, rep = eucl1
    x = g.coords[0]
    f = np.exp(-4 * x**2) * np.cos(3 * x)
    f -= f.mean()
    a = fractional_power_apply(rep, s, f)
    b = fractional_power_apply(rep, s, f, route="bochner")
    assert np.linalg.norm(a - b) / np.linalg.norm(a) <= 1e-3


def test_bochner_needs_small_t_piece(eucl1):
    g, rep = eucl1
    f = np.cos(5 * g.coords[0])
    a = fractional_power_apply(rep, 0.5, f)
    b = fractional_power_apply(rep, 0.5, f, route="bochner", quad=QuadratureSpec(small_t_series=False))
    assert np.linalg.norm(a - b) / np.linalg.norm(a) > 1e-3


def test_semigroup_power_additivity(eucl1, rng):
    g, rep = eucl1
    f = rng.standard_normal(g.shape)
    f -= f.mean()
    two = fractional_power_apply(rep, 0.3, fractional_power_apply(rep, 0.45, f))
    np.testing.assert_allclose(two, fractional_power_apply(rep, 0.75, f), atol=1e-9)


def test_chebyshev_fit_tolerance():
    coef, err = chebyshev_fit(mlib.heat(), 0.1, 400.0, 1e-10)
    assert err <= 1e-10
    with pytest.raises(ZeroModeError):
        chebyshev_fit(mlib.power(-0.5), 1.0, 10.0)


def test_spectral_radius_bound(eucl2):
    g, rep = eucl2
    bound = spectral_radius_bound(g)
    top = rep.eigenvalues[-1]
    assert top * (1 - 1e-12) <= bound <= 1.01 * top


def test_dense_limit_and_mode_checks():
    with pytest.raises(SpectralError, match="unknown spectral mode"):
        decompose(build_lattice(GroupSpec("euclidean", 1.0, 16, 1)), "lanczos")
    with pytest.raises(SpectralError, match="abelian"):
        decompose(build_lattice(GroupSpec("heisenberg1", 4.0, 8)), "fourier")
    with pytest.raises(SpectralError, match="dense mode limited"):
        decompose(build_lattice(GroupSpec("euclidean", 1.0, 128, 2)), "dense")


def test_identity_multiplier_returns_f(heis16, rng):
    g, rep = heis16
    f = rng.standard_normal(g.shape)
    np.testing.assert_allclose(apply_multiplier(rep, mlib.power(0.0), 1.0, f), f, atol=1e-12)


def test_composed_multiplier(heis16, rng):
    g, rep = heis16
    f = rng.standard_normal(g.shape)
    lam_heat = mlib.power(1.0) * mlib.heat()
    want = sub_laplacian_apply(g, heat_apply(rep, 0.4, f))
    # (t lam) e^{-t lam} at t = 0.4
    np.testing.assert_allclose(apply_multiplier(rep, lam_heat, 0.4, f), 0.4 * want, atol=1e-8)


def test_heat_flow_converges_monotonically(eucl2, rng):
    g, rep = eucl2
    f = rng.standard_normal(g.shape)
    for p in (1.0, 2.0):
        d = [lp_norm(g, heat_apply(rep, 2.0**-k, f) - f, p) for k in range(2, 30)]
        assert all(b <= a for a, b in zip(d, d[1:]))
        assert d[-1] < 1e-4 * d[0]


def test_chebyshev_heisenberg_matches_dense(heis16, rng):
    g, rep = heis16
    cheb = decompose(g, "chebyshev")
    f = rng.standard_normal(g.shape)
    for t in (0.1 / rep.lam_max, 0.05, 1.0):
        np.testing.assert_allclose(heat_apply(cheb, t, f), heat_apply(rep, t, f), atol=1e-6)
