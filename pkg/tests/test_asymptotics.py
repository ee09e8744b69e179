import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lamegap import asymptotics as asy
from lamegap.decomposition import BlowupFactorSet
from lamegap.elasticity import LameParameters, gap_constant
from lamegap.geometry import curvilinear_square_preset, power_profile_preset


class FixedRatios(asy.StarredMatrices):
    """Starred data with prescribed determinant ratios (formula-level tests)."""

    def __init__(self, dim, ratios):
        n = len(ratios)
        super().__init__(dim, np.eye(2 * n), np.zeros(2 * n))
        self._r = np.asarray(ratios, dtype=float)

    def det_ratios_d2(self):
        return self._r.copy()

    def det_ratios_full(self):
        return self._r.copy()


# --- auxiliary fields -------------------------------------------------------


def test_aux_scalar_centre_and_top():
    g = curvilinear_square_preset(1, 2, 0.5, 0.02, 0.25)
    v, grad = asy.aux_scalar(g, (0.0, 0.01))
    assert v == pytest.approx(0.5)
    assert grad[1] == pytest.approx(1 / 0.02)
    x1 = 0.13
    v, _ = asy.aux_scalar(g, (x1, g.epsilon + float(g.h1(x1))))
    assert v == pytest.approx(1.0, abs=1e-14)


def test_aux_scalar_finite_differences(rng):
    g = curvilinear_square_preset(1, 2, 0.5, 0.02, 0.25)
    h = 1e-7
    for _ in range(20):
        x1 = rng.uniform(-0.25, 0.25)
        x2 = float(g.h2(x1)) + rng.uniform(0.1, 0.9) * float(g.delta(x1))
        _, grad = asy.aux_scalar(g, (x1, x2))
        fd = np.array([
            (asy.aux_scalar(g, (x1 + h, x2))[0] - asy.aux_scalar(g, (x1 - h, x2))[0]) / (2 * h),
            (asy.aux_scalar(g, (x1, x2 + h))[0] - asy.aux_scalar(g, (x1, x2 - h))[0]) / (2 * h),
        ])
        np.testing.assert_allclose(grad, fd, rtol=1e-6)


def test_aux_field_translation_column():
    g = curvilinear_square_preset(1, 1, 0.5, 0.01, 0.25)
    G = asy.aux_field_gradient(g, 1, (0.0, 0.005))
    np.testing.assert_allclose(G[:, 1], [1 / 0.01, 0.0])


def test_aux_field_rotation_product_rule():
    g = curvilinear_square_preset(1, 1, 0.5, 0.01, 0.25)
    xd = 0.003
    G = asy.aux_field_gradient(g, 3, (0.0, xd))
    v, gv = asy.aux_scalar(g, (0.0, xd))
    expect = np.outer([xd, 0.0], gv) + v * np.array([[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_allclose(G, expect)


def test_rotation_field_rate_on_cylinder():
    gam = 0.5
    mags = []
    es = (1e-4, 1e-5)
    for e in es:
        g = power_profile_preset(1.0, gam, 1.0, e, 0.25)
        x1 = e ** (1 / (1 + gam))
        x2 = float(g.h2(x1)) + 0.5 * float(g.delta(x1))
        mags.append(np.linalg.norm(asy.aux_field_gradient(g, 3, (x1, x2))))
    slope = math.log(mags[1] / mags[0]) / math.log(es[1] / es[0])
    assert slope == pytest.approx(-gam / (1 + gam), rel=0.02)


def test_aux_outside_band_rejected():
    g = curvilinear_square_preset(1, 1, 0.5, 0.01, 0.25)
    with pytest.raises(ValueError):
        asy.aux_scalar(g, (0.9, 0.0))
    with pytest.raises(ValueError):
        asy.aux_field_gradient(g, 4, (0.0, 0.005))


# --- neck integral and remainders --------------------------------------------


def test_neck_integral_arctan_oracle():
    eps = 1e-4
    val = asy.neck_integral(1.0, 1.0, 1.0, eps)
    exact = 2 * math.atan(1 / math.sqrt(eps)) / math.sqrt(eps)
    assert val == pytest.approx(exact, rel=1e-9)
    assert val == pytest.approx(312.16, abs=0.01)
    assert val / (math.pi * eps**-0.5) == pytest.approx(0.9936, abs=1e-3)


def test_neck_integral_ratio_tends_to_one():
    gam = 0.5
    ratios = [asy.neck_integral(gam, 1.0, 1.0, e) / (gap_constant(gam, 1.0) * e ** (-gam / (1 + gam)))
              for e in (1e-4, 1e-6, 1e-8)]
    assert ratios[0] < ratios[1] < ratios[2] < 1
    assert 1 - ratios[-1] < 0.01


def test_neck_deficit_decays_at_least_at_remainder_rate():
    gam, sigma = 0.5, 0.25  # gamma > sigma branch
    es = np.array([1e-5, 1e-6, 1e-7, 1e-8])
    deficit = np.array([1 - asy.neck_integral(gam, 1.0, 1.0, e) / (gap_constant(gam, 1.0) * e ** (-gam / (1 + gam)))
                        for e in es])
    assert np.all(deficit > 0)
    slope = np.polyfit(np.log(es), np.log(deficit), 1)[0]
    assert slope >= sigma / (1 + gam)


def test_remainder_examples():
    q, lg = asy.remainder_exponent("eps_gamma_sigma", 0.5, 1.0)
    assert q == pytest.approx(1 / 36) and not lg
    q, _ = asy.remainder_exponent("bar_eps_gamma_d", 1.0, None, 5)
    assert q == pytest.approx(1 / 12)
    q, lg = asy.remainder_exponent("tilde_eps_gamma_sigma", 0.5, 0.5)
    assert lg and q == pytest.approx(1 / 3)
    e = 1e-3
    assert asy.remainder_scale("tilde_eps_gamma_sigma", 0.5, 0.5, 2, e) == pytest.approx(e ** (1 / 3) * abs(math.log(e)))


def test_remainder_rejects_bad_input():
    with pytest.raises(ValueError):
        asy.remainder_scale("eps_gamma_sigma", 0.5, 1.0, 2, 1.5)
    with pytest.raises(ValueError):
        asy.remainder_exponent("bar_eps_gamma_d", 0.5, None, 2)
    with pytest.raises(ValueError):
        asy.remainder_exponent("nope", 0.5, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(asy.REMAINDER_KINDS), st.floats(0.05, 1.0), st.floats(0.05, 2.0),
       st.integers(3, 7), st.floats(0.01, 0.99))
def test_remainder_scale_monotone_in_eps(kind, gam, sigma, d, frac):
    # |ln eps| eps^q is increasing only for eps < e^(-1/q); stay inside that range
    top = min(math.exp(-2), math.exp(-(1 + gam) / gam))
    e1 = frac * top
    e0 = 0.5 * e1
    dd = d if kind == "bar_eps_gamma_d" else 2
    assert asy.remainder_scale(kind, gam, sigma, dd, e0) <= asy.remainder_scale(kind, gam, sigma, dd, e1)


# --- extrapolation ---------------------------------------------------------


def test_fit_limit_synthetic():
    es = np.array([1e-2, 5e-3, 2.5e-3, 1.25e-3])
    f = asy.fit_limit(es, 5 + 2 * es**0.25)
    assert f.value == pytest.approx(5.0, abs=1e-6)
    assert f.exponent == pytest.approx(0.25, abs=1e-4)
    assert f.reliable


def test_fit_divergent_synthetic():
    es = np.array([4e-2, 2e-2, 1e-2, 5e-3])
    f = asy.fit_divergent(es, 3.0 * es ** (-1 / 3), 3.0, 1 / 3)
    assert f.exponent == pytest.approx(-1 / 3, abs=1e-3)
    assert f.kind == "divergent"


def _synthetic_limits():
    rng = np.random.default_rng(0)
    Q = rng.standard_normal((6, 6))
    return Q @ Q.T + 6 * np.eye(6), rng.standard_normal(6)


def _synthetic_factor_set(e, p, gam, tau):
    """Factor data whose translational self-energies diverge like L M e^-s."""
    s = gam / (1 + gam)
    M = gap_constant(gam, tau)
    F_lim, Y_lim = _synthetic_limits()
    F = F_lim + e**0.5 * np.eye(6)
    F[0, 0] += p.mu * M * e ** (-s)
    F[1, 1] += (p.lam + 2 * p.mu) * M * e ** (-s)
    Y = Y_lim * (1 + e)
    # invert the F/Y layout into a/b entries
    A, B, D = F[:3, :3], F[:3, 3:], F[3:, 3:]
    a = np.empty((2, 2, 3, 3))
    a[0, 0] = A.T
    a[1, 0] = (B - A).T
    a[0, 1] = (B.T - A).T
    a[1, 1] = D.T - a[0, 0] - a[1, 0] - a[0, 1]
    b = np.vstack([Y[:3], Y[3:] - Y[:3]])
    fs = BlowupFactorSet(a, b, e)
    np.testing.assert_allclose(fs.F, F, atol=1e-9)
    return fs, F, Y


def test_limit_matrices_extrapolate_recovers_limits(unit_lame):
    gam, tau = 0.5, 1.0
    es = [4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3]
    samples = [(e, _synthetic_factor_set(e, unit_lame, gam, tau)[0]) for e in es]
    star = asy.limit_matrices_extrapolate(samples, gam, tau, unit_lame)
    F_lim, Y_lim = _synthetic_limits()
    mask = np.ones((6, 6), dtype=bool)
    mask[:2, :2] = False
    np.testing.assert_allclose(star.F[mask], F_lim[mask], rtol=1e-5, atol=1e-5)
    np.testing.assert_allclose(star.Y, Y_lim, rtol=1e-5, atol=1e-5)
    assert np.all(np.isnan(star.F[:2, :2]))
    assert star.fits["F[1][1]"].kind == "divergent"
    assert not star.unreliable
    star.det_ratios_d2()


def test_extrapolation_preconditions(unit_lame):
    fs = [(e, _synthetic_factor_set(e, unit_lame, 0.5, 1.0)[0]) for e in (4e-2, 2e-2, 1e-2)]
    with pytest.raises(ValueError):
        asy.limit_matrices_extrapolate(fs, 0.5, 1.0, unit_lame)
    fs4 = fs + [(5e-2, fs[0][1])]
    with pytest.raises(ValueError):
        asy.limit_matrices_extrapolate(fs4, 0.5, 1.0, unit_lame)


def test_starred_json_roundtrip(unit_lame):
    es = [4e-2, 2e-2, 1e-2, 5e-3]
    star = asy.limit_matrices_extrapolate(
        [(e, _synthetic_factor_set(e, unit_lame, 0.5, 1.0)[0]) for e in es], 0.5, 1.0, unit_lame)
    back = asy.StarredMatrices.loads(star.dumps())
    np.testing.assert_array_equal(np.isnan(back.F), np.isnan(star.F))
    np.testing.assert_allclose(back.F[~np.isnan(star.F)], star.F[~np.isnan(star.F)])
    assert set(back.fits) == set(star.fits)


# --- expansions ------------------------------------------------------------


def test_expansion_d2_unit_ratios():
    g = power_profile_preset(1.0, 1.0, 1.0, 0.01, 0.25)
    p = LameParameters(1.0, 1.0)
    for e in (1e-2, 1e-4):
        ex = asy.expansion_d2(FixedRatios(2, [1, 1, 1]), g, p, e)
        assert ex.c_diff[0] == pytest.approx(e**0.5 / math.pi, rel=1e-12)
        assert ex.c_diff[2] == 1.0  # rotation: eps independent at leading order


def test_expansion_dge3_unit_ratios_and_branch():
    for d in (3, 4, 5, 6):
        n = d * (d + 1) // 2
        ex = asy.expansion_dge3(FixedRatios(d, np.ones(n)), 0.5, d, 1e-3)
        np.testing.assert_array_equal(ex.c_diff, np.ones(n))
        q, _ = asy.remainder_exponent("bar_eps_gamma_d", 0.5, None, min(d, 5))
        assert ex.remainder == pytest.approx(1e-3**q)


def test_expansion_dge3_gradient_rate():
    d = 3
    n = 6
    star = FixedRatios(d, np.ones(n))
    es = (1e-3, 1e-4)
    mags = [np.linalg.norm(asy.expansion_dge3(star, 0.5, d, e, x=np.array([0, 0, 0.0])).grad) for e in es]
    assert math.log(mags[1] / mags[0]) / math.log(es[1] / es[0]) == pytest.approx(-1.0, rel=1e-3)


def test_expansion_dge3_rejects_d2():
    with pytest.raises(ValueError):
        asy.expansion_dge3(FixedRatios(2, [1, 1, 1]), 0.5, 2, 1e-3)


def test_refined_with_zero_k_is_leading():
    g = curvilinear_square_preset(1, 1, 0.5, 0.01, 0.25)
    p = LameParameters(1, 1)
    star = FixedRatios(2, [0.3, 2.0, 0.1])
    rp = asy.example_refined(g, p, star, 0.25, 0.01, k_star=[0.0, 0.0])
    np.testing.assert_allclose(rp.c_diff_refined, rp.c_diff_leading)


def test_refined_gamma1_uses_pi():
    g = curvilinear_square_preset(1, 1, 1.0, 0.01, 0.25)
    p = LameParameters(1, 1)
    rp = asy.example_refined(g, p, None, 0.25, 0.01)
    assert g.tau == pytest.approx(1.0)
    np.testing.assert_allclose(rp.g_star, rp.k_star / (np.array([1.0, 3.0]) * math.pi))


def test_c_star_cutoff_independent():
    g = curvilinear_square_preset(1, 1, 0.5, 0.01, 0.25)
    a = asy.square_gap_constant(g, 0.25, 1e-3)
    b = asy.square_gap_constant(g, 0.25, 1e-4)
    assert abs(a - b) <= 1e-6


def test_c_star_against_plain_quadrature():
    from scipy import integrate

    g = curvilinear_square_preset(1, 2, 0.5, 0.01, 0.25)
    prof = g.profile
    f = lambda x: 1 / (prof.h1(x) - prof.h2(x)) - 1 / (prof.tau * x**1.5)  # noqa: E731
    ref = 2 * integrate.quad(f, 0, 0.25, limit=400)[0]
    assert asy.square_gap_constant(g, 0.25) == pytest.approx(ref, rel=1e-6)


def test_pointwise_bounds_exponent_and_linearity():
    g = power_profile_preset(1.0, 0.5, 1.0, 0.01, 0.25)
    p = LameParameters(1, 1)
    lo1, up1 = asy.pointwise_bounds(FixedRatios(2, [0, 2.0, 0]), g, p, 1e-2)
    lo2, up2 = asy.pointwise_bounds(FixedRatios(2, [0, 2.0, 0]), g, p, 1e-4)
    slope = -1 / 1.5
    assert math.log(lo2 / lo1) / math.log(1e-2) == pytest.approx(slope, rel=1e-12)
    assert math.log(up2 / up1) / math.log(1e-2) == pytest.approx(slope, rel=1e-12)
    lo3, up3 = asy.pointwise_bounds(FixedRatios(2, [0, 6.0, 0]), g, p, 1e-2)
    assert lo3 == pytest.approx(3 * lo1) and up3 == pytest.approx(3 * up1)
    with pytest.raises(ValueError):
        asy.pointwise_bounds(FixedRatios(2, [0, 0, 1.0]), g, p, 1e-2)


def test_calibration_constant():
    assert asy.calibrate_bound_constant(1.0, 2.0, 1.5) == 1.0
    assert asy.calibrate_bound_constant(1.0, 2.0, 4.0) == pytest.approx(2.0)
    assert asy.calibrate_bound_constant(1.0, 2.0, 0.25) == pytest.approx(4.0)
