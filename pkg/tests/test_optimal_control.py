import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aerocap.aero import LINEAR_FIT, QUADRATIC_FIT, AeroModel
from aerocap.optimal_control import (BangBangProfile, Costate, SingularityError, analyze_switching,
                                     calligraphic_A, h_alpha2_down, h_alpha2_up, h_alpha_down,
                                     h_alpha_up, optimal_alpha_linear, optimal_alpha_quadratic,
                                     optimal_sigma, phase_levels, profile_control,
                                     sigma_switch_indicator)

# -CLa / (2 CLa2) of the quadratic fit, exact rational (scripts/derive_oracles.py).
A_LAMBDA_V0 = -41.107871720116618

costates = st.builds(Costate, st.floats(-1.0, 1.0), st.floats(-10.0, 10.0), st.floats(-1e5, 1e5))
speeds = st.floats(1e3, 3e4)


def test_linear_switching_values():
    cs = Costate(0.0, 2.0, 3000.0)
    V = 20000.0
    assert h_alpha_up(cs, V, LINEAR_FIT) == pytest.approx(-2.0 * 1.87e-2 + 0.15 * -1.62e-2,
                                                          rel=1e-15)
    assert h_alpha_down(cs, V, LINEAR_FIT) == pytest.approx(-2.0 * 1.87e-2 - 0.15 * -1.62e-2,
                                                            rel=1e-15)


@given(costates, speeds)
def test_up_down_sum_and_difference(cs, V):
    up, down = h_alpha_up(cs, V, LINEAR_FIT), h_alpha_down(cs, V, LINEAR_FIT)
    assert up + down == pytest.approx(-2 * cs.lambda_V * LINEAR_FIT.CDa, rel=1e-12, abs=1e-15)
    assert up - down == pytest.approx(2 * cs.lambda_gamma * LINEAR_FIT.CLa / V, rel=1e-12,
                                      abs=1e-15)
    up2, down2 = h_alpha2_up(cs, V, QUADRATIC_FIT), h_alpha2_down(cs, V, QUADRATIC_FIT)
    assert up2 + down2 == pytest.approx(-2 * cs.lambda_V * QUADRATIC_FIT.CDa2, rel=1e-12,
                                        abs=1e-15)


@given(st.floats(-1e5, 1e5).filter(lambda x: abs(x) > 1e-3), speeds)
def test_A_without_velocity_costate(lambda_gamma, V):
    cs = Costate(0.0, 0.0, lambda_gamma)
    for branch in ("up", "down"):
        assert calligraphic_A(cs, V, QUADRATIC_FIT, branch) == pytest.approx(A_LAMBDA_V0,
                                                                             rel=1e-13)


def test_A_singular_and_bad_branch():
    with pytest.raises(SingularityError):
        calligraphic_A(Costate(0.0, 0.0, 0.0), 2e4, QUADRATIC_FIT)
    with pytest.raises(ValueError):
        calligraphic_A(Costate(0.0, 1.0, 1.0), 2e4, QUADRATIC_FIT, "sideways")
    with pytest.raises(ValueError):
        h_alpha_up(Costate(0.0, 1.0, 1.0), 2e4, AeroModel(kind="table",
                                                          table=((-25, 0, 1), (-10, 0, 1))))


@given(st.floats(-1e3, 1e3))
def test_quadratic_alpha_is_clamped(A):
    a = optimal_alpha_quadratic(A, (-25.0, -10.0))
    assert -25.0 <= a <= -10.0
    if -25.0 <= A <= -10.0:
        assert a == A
    assert optimal_alpha_quadratic(A_LAMBDA_V0, (-25.0, -10.0)) == -25.0


def test_bang_bang_selectors():
    lim = (-25.0, -10.0)
    assert optimal_alpha_linear(1.0, lim) == -25.0
    assert optimal_alpha_linear(-1.0, lim) == -10.0
    assert optimal_alpha_linear(0.0, lim, previous=-10.0) == -10.0
    assert optimal_sigma(2.0, (15.0, 165.0)) == 15.0
    assert optimal_sigma(-2.0, (15.0, 165.0)) == 165.0
    assert optimal_sigma(0.0, (15.0, 165.0), previous=165.0) == 165.0
    assert sigma_switch_indicator(Costate(0.0, 1.0, -4.0)) == -4.0


def test_profile_phases_and_levels():
    p = BangBangProfile(10.0, 20.0, 30.0)
    assert [p.phase_at(t) for t in (0.0, 10.0, 19.9, 20.0, 30.0, 99.0)] == [1, 2, 2, 3, 4, 4]
    assert p.levels == ((-25.0, 15.0), (-10.0, 15.0), (-10.0, 165.0), (-25.0, 165.0))
    assert profile_control(p, 25.0) == (-10.0, 165.0)
    assert profile_control(BangBangProfile(10.0, 20.0, 30.0, phase4="casm"), 31.0) is None
    assert phase_levels((-25.0, -10.0), (15.0, 165.0), "min")[2] == (-25.0, 165.0)


@given(st.floats(0, 100), st.floats(0, 100), st.floats(0, 100), st.floats(0, 200))
def test_profile_phase_non_decreasing_in_time(a, b, c, t):
    ts = sorted((a, b, c))
    p = BangBangProfile(*ts)
    assert p.phase_at(t) <= p.phase_at(t + 1.0)


def test_profile_rejects_unordered_times():
    with pytest.raises(ValueError):
        BangBangProfile(20.0, 10.0, 30.0)


def test_switching_analysis_on_synthetic_costates():
    t = np.linspace(0.0, 100.0, 201)
    V = np.full_like(t, 2e4)
    lambda_V = np.full_like(t, 0.5)
    lambda_gamma = 1000.0 * (50.0 - t)
    an = analyze_switching(t, V, lambda_V, lambda_gamma, LINEAR_FIT, QUADRATIC_FIT)
    assert an.sigma_switch_times == pytest.approx([50.0])
    assert np.all(an.sigma[t < 50] == 15.0) and np.all(an.sigma[t > 50] == 165.0)
    # With lambda_gamma = 0 at the switch, both branches share one stationary point.
    assert an.A_gap_at_sigma_switch == pytest.approx([0.0], abs=1e-12)
    assert np.all((an.alpha_quadratic >= -25.0) & (an.alpha_quadratic <= -10.0))
    assert len(an.rows()) == t.size and len(an.rows()[0]) == len(an.COLUMNS)
    for row in an.rows():
        assert all(math.isfinite(v) for v in row[:4])
