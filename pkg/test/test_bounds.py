import itertools
import math

import pytest

from logmodcert.bounds import (
    SWEEP_HEADER,
    ApproxSchedule,
    bootstrap_exponents,
    certify_weak_logmod,
    choose_m,
    choose_m_improved,
    gradient_envelope,
    log_t_grid,
    lower_envelope,
    lp_approx_bound,
    rule_onset,
    stability_exponent,
    upper_envelope,
    weak_logmod_terms,
)
from logmodcert.errors import ParameterError


def test_schedule_defaults():
    sched = ApproxSchedule(n=2, B=1.0, D=2.0)
    assert sched.m0 == 7
    assert sched.gamma == pytest.approx(1.0 / 7.0)
    assert sched.gamma0 == pytest.approx(1.0 / 6.0)
    assert sched.delta(2.0) == pytest.approx(2.0 ** -4)
    assert sched.admissible(8) and not sched.admissible(7)


@pytest.mark.parametrize("kwargs", [
    {"n": 0, "B": 1.0, "D": 2.0},
    {"n": 2, "B": 1.0, "D": 0.5},
    {"n": 2, "B": 1.0, "D": 2.0, "a0": 0.6},
    {"n": 2, "B": 1.0, "D": 2.0, "p": 0.0},
])
def test_schedule_rejects_bad_parameters(kwargs):
    with pytest.raises(ParameterError):
        ApproxSchedule(**kwargs)


# ==========================================
# ENVELOPES
# ==========================================
def test_envelope_values():
    sched = ApproxSchedule(n=2, B=1.0, D=2.0)
    assert lower_envelope(10.0, 1.0, 1.0) == pytest.approx(-0.05)
    assert upper_envelope(10.0, 0.01, math.exp(-1.0), 0.0, sched) == pytest.approx(math.exp(-1.0) + 0.1)
    assert gradient_envelope(7.0, 0.01, 1.0, 0.5, sched) == pytest.approx(1.0 + 1.0 / 0.7)
    assert lp_approx_bound(math.e, 1.0) == pytest.approx(1.0 / math.e + 1.0)


def test_envelopes_follow_schedule():
    sched = ApproxSchedule(n=3, B=1.0, D=2.0, C=2.0)
    assert sched.m0 == 9
    assert upper_envelope(10.0, 0.01, math.exp(-1.0), 1.0, sched) == pytest.approx(0.1 + 2.0 * math.exp(-1.0) + 0.2)
    assert gradient_envelope(9.0, 0.01, 1.0, 0.5, sched) == pytest.approx(2.0 + 2.0 / 0.9)
    # r^{n+1} picks up n from the schedule
    assert gradient_envelope(9.0, 0.01, 0.5, 0.5, sched) == pytest.approx(2.0 + 2.0 * 16.0 / 0.9)


def test_weak_terms_arithmetic():
    sched = ApproxSchedule(n=2, B=1.0, D=1.0)
    _, term2, _ = weak_logmod_terms(1e-6, 10.0, sched)
    assert term2 == pytest.approx(1e-2 * 6.0 * math.log(10.0))


def test_third_term_blows_up_with_small_m_fixed():
    sched = ApproxSchedule(n=2, B=1.0, D=1.0)
    term3 = [weak_logmod_terms(t, 0.5, sched)[2] for t in (1e-2, 1e-6, 1e-12)]
    assert term3[0] < term3[1] < term3[2]


def test_weak_terms_reject_large_separation():
    sched = ApproxSchedule(n=2, B=1.0, D=2.0)
    for t in (0.0, 0.5, 2.0):
        with pytest.raises(ParameterError):
            weak_logmod_terms(t, 10.0, sched)


# ==========================================
# M SELECTION
# ==========================================
def test_choose_m_floors_at_m0():
    assert choose_m(1e-2, 0.9, 2.0, 7) == 8
    assert choose_m_improved(1e-2, 0.9, 1.0, 7) == 8


def test_rule_onset_marks_where_m_grows():
    sched = ApproxSchedule(n=2, B=2.0, D=2.0)
    onset = rule_onset(sched, 0.9)
    assert onset == pytest.approx(80.0)
    assert choose_m(math.exp(-0.9 * onset), 0.9, 2.0, sched.m0) == sched.m0 + 1
    assert choose_m(math.exp(-2.55 * onset), 0.9, 2.0, sched.m0) == 20


def test_log_grid_density():
    grid = log_t_grid((1e-12, 1e-2), 40)
    assert len(grid) == 401
    assert grid[0] == pytest.approx(1e-12) and grid[-1] == pytest.approx(1e-2)


# ==========================================
# CERTIFICATE
# ==========================================
@pytest.mark.parametrize("gamma,D,B,n", list(itertools.product((0.5, 0.9), (1.0, 2.0), (1.0, 2.0), (1, 2))))
def test_weak_certificate_decays(gamma, D, B, n):
    cert = certify_weak_logmod(ApproxSchedule(n=n, B=B, D=D), gamma=gamma)
    assert math.isfinite(cert.c)
    assert cert.slope <= -gamma + 0.05
    assert cert.passed
    assert cert.all_admissible
    assert cert.flooring_factor >= 1.0


def test_improved_route_admits_unit_D():
    cert = certify_weak_logmod(ApproxSchedule(n=2, B=2.0, D=1.0), gamma=0.5, improved=True)
    assert cert.improved and cert.passed
    assert cert.slope <= -0.5 + 0.05


def test_larger_gamma_weights_more():
    sched = ApproxSchedule(n=2, B=2.0, D=2.0)
    assert certify_weak_logmod(sched, gamma=0.9).c > certify_weak_logmod(sched, gamma=0.5).c


def test_certificate_rows_match_header():
    cert = certify_weak_logmod(ApproxSchedule(n=1, B=1.0, D=2.0), gamma=0.5, points_per_decade=10)
    assert len(cert.rows) == 101
    assert all(len(row) == len(SWEEP_HEADER) for row in cert.rows)
    t, m, term1, term2, term3, env, weighted = cert.rows[0]
    assert env == pytest.approx(term1 + term2 + term3)
    assert weighted == pytest.approx(env * abs(math.log(t)) ** 0.5)
    assert set(cert.to_dict()) >= {"c", "slope", "slope_sweep", "window_log_t", "flooring_factor", "passed"}


def test_certificate_rejects_bad_gamma():
    with pytest.raises(ParameterError):
        certify_weak_logmod(ApproxSchedule(n=2, B=1.0, D=2.0), gamma=1.0)


# ==========================================
# EXPONENTS
# ==========================================
def test_bootstrap_sequence():
    assert bootstrap_exponents(0.5, 1.0) == [0.5, 0.75, 1.3125]
    seq = bootstrap_exponents(0.1, 1.0)
    assert all(b > a for a, b in zip(seq, seq[1:]))
    assert seq[-1] > 1.0 and seq[-2] <= 1.0


def test_bootstrap_errors():
    with pytest.raises(ParameterError):
        bootstrap_exponents(0.0, 1.0)
    with pytest.raises(ParameterError):
        bootstrap_exponents(1e-300, 1.0, max_iter=5)


def test_stability_exponent():
    assert stability_exponent(2.0, 1.0, 2.0) == pytest.approx(1.0 / 3.0)
    with pytest.raises(ParameterError):
        stability_exponent(2.0, 0.0, 1.0)
