import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from lamegap.geometry import (
    GapGeometry, OuterCircle, SquareProfile, curvilinear_square_preset, envelope_constants,
    h2_constant, neck_region, power_profile_preset, profile_eval, quasi_constancy_radius,
)


@pytest.mark.parametrize("make", [
    lambda: curvilinear_square_preset(1, 1, 0.5, 0.02, 0.25),
    lambda: curvilinear_square_preset(1, 2, 0.7, 0.01, 0.3),
    lambda: power_profile_preset(1.0, 0.5, 1.0, 0.03, 0.25),
])
def test_delta_at_origin_is_eps(make):
    g = make()
    assert profile_eval(g, 0.0)[2] == pytest.approx(g.epsilon, abs=1e-15)


def test_power_preset_substitution():
    g = power_profile_preset(1.0, 0.5, 1.0, 0.01, 0.25)
    assert profile_eval(g, 0.1)[2] == pytest.approx(0.01 + 0.1**1.5, rel=1e-12)
    assert profile_eval(g, 0.1)[2] == pytest.approx(0.041623, abs=1e-6)
    assert float(g.h1(0.04)) == pytest.approx(0.004, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.5))
def test_power_profile_even(x):
    g = power_profile_preset(1.3, 0.5, 1.0, 0.01, 0.25)
    assert float(g.h1(x)) == float(g.h1(-x))
    assert float(g.h2(x)) == float(g.h2(-x))


def test_power_profile_derivative_audit():
    tau, gam = 1.0, 0.5
    g = power_profile_preset(tau, gam, 1.0, 0.01, 0.25)
    x = np.linspace(-0.25, 0.25, 1001)
    x = x[x != 0]
    ratio = np.abs(g.dh1(x)) / np.abs(x) ** gam
    assert ratio.max() <= tau * (1 + gam) / 2 * (1 + 1e-12)
    assert h2_constant(g) <= tau * (1 + gam) / 2 * (1 + 1e-12)


def test_square_tau0():
    assert curvilinear_square_preset(1, 1, 1.0, 0.01, 0.25).tau == pytest.approx(1.0)
    assert curvilinear_square_preset(1, 2, 0.5, 0.01, 0.25).tau == pytest.approx((1 + 2**-0.5) / 1.5)
    assert curvilinear_square_preset(1, 2, 0.5, 0.01, 0.25).tau == pytest.approx(1.1381, abs=1e-4)


def test_square_gamma1_quadratic_limit():
    prof = SquareProfile(1.0, 1.0, 1.0)
    for x in (1e-2, 1e-3, 1e-4):
        q = (prof.h1(x) - prof.h2(x)) / x**2
        assert q == pytest.approx(1.0, abs=2 * x**2)


def test_square_taylor_residual_order():
    gam = 0.5
    g = curvilinear_square_preset(1.0, 1.0, gam, 0.01, 0.25)
    x = np.geomspace(1e-3, 1e-1, 12)
    res = np.abs(g.h1(x) - g.h2(x) - g.tau * x ** (1 + gam))
    slope = np.polyfit(np.log(x), np.log(res), 1)[0]
    assert slope == pytest.approx(2 + 2 * gam, rel=0.02)


def test_square_derivative_matches_finite_difference():
    g = curvilinear_square_preset(1.0, 2.0, 0.5, 0.01, 0.25)
    x = np.linspace(-0.4, 0.4, 17)
    x = x[x != 0]
    h = 1e-7
    fd = (g.profile.h1(x + h) - g.profile.h1(x - h)) / (2 * h)
    np.testing.assert_allclose(g.profile.dh1(x), fd, rtol=1e-6, atol=1e-9)


def test_band_check_and_validation():
    g = curvilinear_square_preset(1, 1, 0.5, 0.01, 0.25)
    with pytest.raises(ValueError):
        g.h1(0.6)
    with pytest.raises(ValueError):
        curvilinear_square_preset(1, 1, 0.5, 0.01, 0.6)  # r0 must stay below min(r)/2
    with pytest.raises(ValueError):
        curvilinear_square_preset(1, 1, 1.5, 0.01, 0.25)
    with pytest.raises(ValueError):
        curvilinear_square_preset(1, 1, 0.5, -0.01, 0.25)


def test_with_epsilon_recentres_outer_circle():
    g = curvilinear_square_preset(1, 1, 0.5, 0.04, 0.25)
    h = g.with_epsilon(0.01)
    assert h.epsilon == 0.01
    assert isinstance(h.outer, OuterCircle)
    assert h.outer.center[1] == pytest.approx(0.005)


def test_neck_region_membership():
    g = curvilinear_square_preset(1, 1, 0.5, 0.01, 0.25)
    inside = neck_region(g, 0.25)
    assert inside(np.array([[0.0, 0.005]]))[0]
    assert not inside(np.array([[0.0, -0.001]]))[0]
    assert not inside(np.array([[0.3, 0.005]]))[0]


def test_neck_region_area_matches_quadrature():
    g = power_profile_preset(1.0, 0.5, 1.0, 0.05, 0.25)
    r = 0.2
    inside = neck_region(g, r)
    exact = integrate.quad(lambda x: float(g.delta(x)), -r, r)[0]
    rng = np.random.default_rng(3)
    top = g.epsilon + float(g.h1(r))
    bot = float(g.h2(r))
    n = 400_000
    pts = np.column_stack([rng.uniform(-r, r, n), rng.uniform(bot, top, n)])
    mc = inside(pts).mean() * (2 * r) * (top - bot)
    assert mc == pytest.approx(exact, rel=5e-3)


def test_envelope_and_quasi_constancy():
    g = power_profile_preset(2.0, 0.5, 1.0, 0.01, 0.25)
    t1, t2 = envelope_constants(g)
    assert t1 == pytest.approx(2.0) and t2 == pytest.approx(2.0)
    assert quasi_constancy_radius(g) > 0
