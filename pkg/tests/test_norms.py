import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sublap.lattice import GroupSpec, build_lattice
from sublap.norms import (
    NormError,
    besov_t_grid,
    besov_thermic_norm,
    distribution_function,
    lorentz_weak_norm,
    lp_norm,
    sobolev_11_norm,
    sobolev_norm,
    weak_sobolev_norm,
    zero_mean,
)
from sublap.ops import grad_l1_norm, sub_laplacian_apply
from sublap.spectral import decompose

G1 = build_lattice(GroupSpec("euclidean", 2 * np.pi, 64, 1))
vals = arrays(np.float64, (64,), elements=st.floats(-10, 10, allow_nan=False))


@given(vals, st.sampled_from([1.0, 1.5, 2.0, 3.0, 7.5]))
@settings(max_examples=60, deadline=None)
def test_lp_routes_agree(f, p):
    a = lp_norm(G1, f, p)
    b = lp_norm(G1, f, p, route="distribution")
    assert b == pytest.approx(a, rel=1e-10, abs=1e-300)


@given(vals, st.sampled_from([1.5, 2.0, 4.0]))
@settings(max_examples=60, deadline=None)
def test_weak_norm_bruteforce(f, p):
    # sup over sigma just below each |f| value
    mags = np.abs(f)
    brute = max([s * (G1.haar_weight * (mags >= s).sum()) ** (1 / p) for s in mags if s > 0], default=0.0)
    assert lorentz_weak_norm(G1, f, p) == pytest.approx(brute, rel=1e-12)
    assert lorentz_weak_norm(G1, f, p) <= lp_norm(G1, f, p) * (1 + 1e-12)


def test_distribution_function_steps():
    f = np.zeros(64)
    f[:3] = [3.0, -2.0, 2.0]
    levels, mass = distribution_function(G1, f)
    assert levels.tolist() == [3.0, 2.0]
    np.testing.assert_allclose(mass, [1 * G1.haar_weight, 3 * G1.haar_weight])


def test_indicator_weak_equals_strong():
    f = np.zeros(64)
    f[10:20] = 1.0
    for p in (1.5, 2.0, 3.0):
        assert lorentz_weak_norm(G1, f, p) == pytest.approx(lp_norm(G1, f, p))


def test_norm_errors():
    with pytest.raises(NormError):
        lp_norm(G1, np.ones(64), 0.5)
    with pytest.raises(NormError):
        lorentz_weak_norm(G1, np.ones(64), 1.0)
    with pytest.raises(NormError):
        lp_norm(G1, np.ones(64), math.inf, route="distribution")


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("k", [1, 3, 7])
def test_besov_of_eigenfunction_closed_form(beta, k):
    rep = decompose(G1, "dense")
    x = G1.coords[0]
    f = np.cos(k * x)
    lam = 4 * math.sin(k * G1.h / 2) ** 2 / G1.h**2
    # sup_t t^{b/2} e^{-t lam} at t = b / (2 lam)
    want = (beta / (2 * lam)) ** (beta / 2) * math.exp(-beta / 2)
    res = besov_thermic_norm(rep, f, beta)
    assert res.value == pytest.approx(want, rel=1e-6)
    assert res.argmax_t == pytest.approx(beta / (2 * lam), rel=1e-2)
    assert res.pinned is None


def test_besov_ignores_constants_and_checks_beta():
    rep = decompose(G1, "dense")
    assert besov_thermic_norm(rep, np.full(64, 3.0), 1.0).value == 0.0
    with pytest.raises(NormError):
        besov_thermic_norm(rep, np.ones(64), 0.0)
    value, t = besov_thermic_norm(rep, np.cos(G1.coords[0]), 1.0)
    assert value > 0 and t > 0


def test_besov_grid_density():
    ts = besov_t_grid(G1, per_decade=32, t_min=1e-3, t_max=1e1)
    assert len(ts) == 129
    assert ts[0] == pytest.approx(1e-3) and ts[-1] == pytest.approx(10.0)


def test_sobolev_norms():
    rep = decompose(G1, "dense")
    x = G1.coords[0]
    f = zero_mean(np.exp(np.sin(x)))
    assert sobolev_norm(rep, f, 2.0, 2.0) == pytest.approx(lp_norm(G1, sub_laplacian_apply(G1, f), 2), rel=1e-9)
    assert weak_sobolev_norm(rep, f, 0.0, 2.0) == pytest.approx(lorentz_weak_norm(G1, f, 2.0))
    assert sobolev_11_norm(G1, f) == grad_l1_norm(G1, f)
    with pytest.raises(NormError):
        sobolev_norm(rep, f, 1.0, 1.0)


def test_sobolev_negative_order_equals_dual_pairing():
    rep = decompose(G1, "dense")
    f = zero_mean(np.cos(2 * G1.coords[0]))
    lam = 4 * math.sin(G1.h) ** 2 / G1.h**2
    assert sobolev_norm(rep, f, -1.0, 2.0) == pytest.approx(lam**-0.5 * lp_norm(G1, f, 2), rel=1e-10)
