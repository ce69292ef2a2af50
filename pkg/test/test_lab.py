import math

import numpy as np
import pytest

from logmodcert.errors import DomainError, HypothesisError, ParameterError
from logmodcert.gridfield import GridField
from logmodcert.lab import (
    bump_kernel,
    campanato_distance_check,
    clipped_log,
    curvature_defect,
    fit_log_modulus,
    inverse_log_power,
    jensen_exponent,
    jensen_gap,
    lelong_profile,
    lelong_ratio,
    log_abs,
    mean_ball,
    modulus_of_continuity,
    mollify,
    planted_jump_field,
    radial_log_power,
    sup_ball,
)

JENSEN_SCALES = [0.015, 0.03, 0.06, 0.12]


def squared_radius(p):
    return np.sum(p ** 2, axis=-1)


def constant_field(lo, hi, n, value=0.0):
    return GridField(lo, hi, np.full((n, n), value))


# ==========================================
# BALLS
# ==========================================
def test_ball_statistics_of_constant_field():
    u = constant_field([-1.0, -1.0], [1.0, 1.0], 129, 0.7)
    assert sup_ball(u, [0.1, 0.2], 0.3) == pytest.approx(0.7)
    assert mean_ball(u, [0.1, 0.2], 0.3) == pytest.approx(0.7)


def test_ball_mean_of_squared_radius():
    u = GridField.from_function(squared_radius, [-1.0, -1.0], [1.0, 1.0], 129)
    assert mean_ball(u, [0.0, 0.0], 0.5) == pytest.approx(0.125, abs=5e-3)
    assert sup_ball(u, [0.0, 0.0], 0.5) == pytest.approx(0.25, abs=1e-12)
    assert sup_ball(u, [0.3, 0.0], 0.2) >= mean_ball(u, [0.3, 0.0], 0.2)


def test_ball_errors():
    u = constant_field([-1.0, -1.0], [1.0, 1.0], 65)
    with pytest.raises(ParameterError):
        sup_ball(u, [0.0, 0.0], u.h / 2)
    with pytest.raises(DomainError):
        mean_ball(u, [0.9, 0.0], 0.5)


def test_modulus_of_linear_field():
    u = GridField.from_function(lambda p: p[..., 0], [-1.0, -1.0], [1.0, 1.0], 65)
    assert modulus_of_continuity(u, 4 * u.h) == pytest.approx(4 * u.h)
    assert modulus_of_continuity(constant_field([0.0, 0.0], [1.0, 1.0], 33), 0.1) == 0.0


# ==========================================
# JENSEN GAP
# ==========================================
def test_jensen_exponent_of_linear_field():
    u = GridField.from_function(lambda p: p[..., 0], [-3.0, -3.0], [3.0, 3.0], 513)
    fit = jensen_exponent(u, [-1.0, -1.0], [1.0, 1.0], scales=JENSEN_SCALES)
    assert fit["monotone"]
    assert 0.8 <= fit["exponent"] <= 1.3
    assert fit["ci"][0] <= fit["exponent"] <= fit["ci"][1]


def test_jensen_exponent_of_clipped_log():
    u = GridField.from_function(clipped_log, [-3.0, -3.0], [3.0, 3.0], 512)
    fit = jensen_exponent(u, [-1.0, -1.0], [1.0, 1.0])
    assert fit["exponent"] >= 2.0 / 3.0 - 0.1


def test_planted_jumps_have_flat_gap():
    u = planted_jump_field([-3.0, -3.0], [3.0, 3.0], 513, seed=0)
    fit = jensen_exponent(u, [-1.0, -1.0], [1.0, 1.0], scales=JENSEN_SCALES)
    assert fit["exponent"] < 0.2


def test_jensen_errors():
    u = constant_field([-3.0, -3.0], [3.0, 3.0], 257)
    with pytest.raises(DomainError):
        jensen_gap(u, [-3.0, -1.0], [1.0, 1.0], 0.05)
    with pytest.raises(ParameterError):
        jensen_gap(u, [-1.0, -1.0], [1.0, 1.0], 0.2)
    with pytest.raises(ParameterError):
        jensen_gap(u, [-1.0, -1.0], [1.0, 1.0], u.h / 2)
    with pytest.raises(ParameterError):
        jensen_exponent(u, [-1.0, -1.0], [1.0, 1.0], scales=[0.05, 0.1])


# ==========================================
# LELONG MASS
# ==========================================
EPS_LADDER = [0.1 * 10.0 ** (-k / 4) for k in range(9)]


def test_log_point_mass_is_positive():
    n = 1025
    h = 0.5 / (n - 1)
    u = GridField.from_function(lambda p: log_abs(p, 0.5 * h), [-0.25, -0.25], [0.25, 0.25], n)
    profile = lelong_profile(u, [0.0, 0.0], EPS_LADDER)
    assert not profile["bounded"]
    assert profile["positive_mass"]
    assert profile["lambda"][-1] == pytest.approx(2 * math.pi, rel=0.2)


def test_flat_field_has_bounded_profile():
    u = GridField.from_function(clipped_log, [-0.25, -0.25], [0.25, 0.25], 1025)
    profile = lelong_profile(u, [0.0, 0.0], EPS_LADDER)
    assert profile["bounded"] and not profile["positive_mass"]
    assert profile["lambda"][0] == pytest.approx(math.pi * 0.01, rel=0.05)


def test_lelong_ratio_is_linear_in_the_field():
    u = GridField.from_function(lambda p: log_abs(p, 0.01), [-0.25, -0.25], [0.25, 0.25], 257)
    for c in (0.5, 3.0):
        scaled = u.with_values(c * u.values)
        for eps in (0.02, 0.05, 0.1):
            assert lelong_ratio(scaled, [0.0, 0.0], eps, omega_weight=0.0) == pytest.approx(
                c * lelong_ratio(u, [0.0, 0.0], eps, omega_weight=0.0), rel=1e-12)
            assert lelong_ratio(scaled, [0.0, 0.0], eps, omega_weight=c) == pytest.approx(
                c * lelong_ratio(u, [0.0, 0.0], eps), rel=1e-12)


def test_lelong_errors():
    u = constant_field([-0.25, -0.25], [0.25, 0.25], 129)
    with pytest.raises(ParameterError):
        lelong_ratio(u, [0.0, 0.0], u.h)
    line = GridField([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], np.zeros((5, 5, 5)))
    with pytest.raises(ParameterError):
        lelong_ratio(line, [0.5, 0.5, 0.5], 0.5)


# ==========================================
# MOLLIFICATION
# ==========================================
def test_bump_kernel_normalized():
    k = bump_kernel(0.1, 0.01, 2)
    assert k.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(k, k[::-1, ::-1])
    assert k[k.shape[0] // 2, 0] == 0.0


def test_mollified_quadratic_stays_plurisubharmonic():
    u = GridField.from_function(squared_radius, [-1.0, -1.0], [1.0, 1.0], 129)
    assert curvature_defect(u) == pytest.approx(-1.0, abs=1e-9)
    smooth, report = mollify(u, 0.1)
    assert report["curvature_defect"] == pytest.approx(-1.0, abs=1e-6)
    assert report["sup_diff"] <= report["modulus"] + 1e-12
    assert np.isnan(smooth.values[0, 0]) and not smooth.mask[0, 0]


def test_mollified_clipped_log_defect_bounded():
    u = GridField.from_function(clipped_log, [-0.5, -0.5], [0.5, 0.5], 256)
    _, report = mollify(u, 0.1)
    assert report["defect_log"] <= 1.0
    assert report["sup_diff"] <= report["modulus"] + 1e-12
    with pytest.raises(ParameterError):
        mollify(u, u.h)


def test_mollify_sweep_shrinks_with_eps():
    u = GridField.from_function(clipped_log, [-0.5, -0.5], [0.5, 0.5], 256)
    eps_list = [0.1 * 2.0 ** -k for k in range(6) if 0.1 * 2.0 ** -k >= 2.0 * u.h]
    assert len(eps_list) >= 4
    reports = [mollify(u, eps)[1] for eps in eps_list]
    for coarse, fine in zip(reports, reports[1:]):
        assert fine["sup_diff"] <= 0.75 * coarse["sup_diff"]
        assert fine["modulus"] <= coarse["modulus"] + 1e-12
    for report in reports:
        assert report["sup_diff"] <= report["modulus"] + 1e-12
        assert report["defect_log"] <= 1.0


# ==========================================
# CONFORMAL DISTANCE
# ==========================================
def test_zero_field_gives_scaled_euclidean_distance():
    u = constant_field([-0.125, -0.125], [0.125, 0.125], 257)
    report = campanato_distance_check(u, theta_const=1.0, delta=0.0, M=2.0, C0=1.0, t_range=(2.0 ** -6, 2.0 ** -3))
    assert report["passed"]
    for t, d in zip(report["scales"], report["sup_distance"]):
        assert t <= d <= 1.05 * t
    assert report["min_rho"] == pytest.approx(1.0)


def test_campanato_checks_hypotheses():
    jumps = planted_jump_field([-0.125, -0.125], [0.125, 0.125], 129)
    with pytest.raises(HypothesisError):
        campanato_distance_check(jumps, 1.0, 0.0, M=2.0, C0=1e-3)
    flat = constant_field([-0.125, -0.125], [0.125, 0.125], 129)
    with pytest.raises(HypothesisError):
        campanato_distance_check(flat, 0.0, 0.0, M=2.0, C0=1.0)


def log_power_profile(nodes):
    return GridField.from_function(lambda p: radial_log_power(p, 1e-3, 4.0), [-0.125, -0.125], [0.125, 0.125], nodes)


def test_log_power_profile_distance_exponent():
    report = campanato_distance_check(log_power_profile(513), theta_const=0.0, delta=1.0, M=2.0, C0=1e-3)
    assert report["passed"] and report["dyadic_ok"]
    assert report["exponent"] >= 0.9
    assert report["scales"][0] == pytest.approx(2.0 ** -8)
    assert report["scales"][-1] == pytest.approx(2.0 ** -4)
    assert max(report["dyadic_ratios"]) <= 1.1


@pytest.mark.slow
def test_log_power_profile_exponent_stable_under_refinement():
    coarse = campanato_distance_check(log_power_profile(513), 0.0, 1.0, M=2.0, C0=1e-3)
    fine = campanato_distance_check(log_power_profile(1025), 0.0, 1.0, M=2.0, C0=1e-3)
    assert fine["passed"]
    assert fine["exponent"] == pytest.approx(coarse["exponent"], abs=0.05)


def test_concentrated_metric_breaks_dyadic_bound():
    r0 = 2.0 ** -8
    u = GridField.from_function(lambda p: np.log(squared_radius(p) + r0 ** 2), [-0.125, -0.125], [0.125, 0.125], 513)
    report = campanato_distance_check(u, theta_const=0.0, delta=1.0, M=2.0, C0=1e4)
    assert not report["dyadic_ok"]
    assert max(report["dyadic_ratios"]) > 1.1
    assert not report["passed"]


# ==========================================
# LOG-MODULUS FIT
# ==========================================
def test_fit_recovers_log_power():
    u = GridField.from_function(lambda p: inverse_log_power(p, 3.0), [-1e-3, -1e-3], [1e-3, 1e-3], 257)
    fit = fit_log_modulus(u)
    assert fit["M"] == pytest.approx(3.0, abs=0.1)
    assert not fit["saturated"]


def test_fit_of_constant_field_is_infinite():
    fit = fit_log_modulus(constant_field([-1.0, -1.0], [1.0, 1.0], 129))
    assert fit["M"] == math.inf and fit["M_report"] == "inf"


def test_fit_needs_enough_scales():
    with pytest.raises(ParameterError):
        fit_log_modulus(constant_field([-1.0, -1.0], [1.0, 1.0], 9))
