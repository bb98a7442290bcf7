import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aerocap.aero import (LINEAR_FIT, QUADRATIC_FIT, AeroEnvelopeError, AeroModel, VehicleModel,
                          coefficients, lift_drag, load_table_csv, table_from_model)

# Exact rational evaluations from scripts/derive_oracles.py.
CD_QUAD_M17P5 = 1.39281875
L_REF = 27.64189367462466
D_REF = 109.73582820575929

alphas = st.floats(-25.0, -10.0)


def test_linear_fit_at_zero_alpha():
    assert coefficients(LINEAR_FIT, 0.0) == pytest.approx((7.07e-2, 1.72), rel=1e-15)


def test_quadratic_fit_at_zero_alpha():
    assert coefficients(QUADRATIC_FIT, 0.0) == pytest.approx((-2.71e-2, 1.59), rel=1e-15)


def test_quadratic_drag_hand_value():
    assert coefficients(QUADRATIC_FIT, -17.5)[1] == pytest.approx(CD_QUAD_M17P5, rel=1e-15)


def test_lift_drag_reference_values():
    L, D = lift_drag(QUADRATIC_FIT, VehicleModel(), 1e-4, 20_000.0, -17.0)
    assert L == pytest.approx(L_REF, rel=1e-14)
    assert D == pytest.approx(D_REF, rel=1e-14)


def test_vacuum_gives_no_force():
    assert lift_drag(QUADRATIC_FIT, VehicleModel(), 0.0, 20_000.0, -17.0) == (0.0, 0.0)


@given(st.floats(1e-8, 1e-2), st.floats(1e3, 3e4), alphas)
def test_forces_linear_in_density(rho, V, alpha):
    L1, D1 = lift_drag(QUADRATIC_FIT, VehicleModel(), rho, V, alpha)
    L2, D2 = lift_drag(QUADRATIC_FIT, VehicleModel(), 2 * rho, V, alpha)
    assert L2 == pytest.approx(2 * L1, rel=1e-14)
    assert D2 == pytest.approx(2 * D1, rel=1e-14)


@given(alphas)
def test_drag_positive_over_envelope(alpha):
    for model in (LINEAR_FIT, QUADRATIC_FIT):
        assert coefficients(model, alpha)[1] > 0


def test_table_round_trip_with_quadratic():
    table = table_from_model(QUADRATIC_FIT, np.linspace(-25.0, -10.0, 31))
    for a in np.linspace(-25.0, -10.0, 301):
        cd_q = coefficients(QUADRATIC_FIT, a)[1]
        cd_t = coefficients(table, a)[1]
        assert abs(cd_q - cd_t) / cd_t < 0.01


def test_linear_lift_to_drag_near_quarter():
    cl, cd = coefficients(LINEAR_FIT, -17.0)
    assert 0.2 <= cl / cd <= 0.3


@given(alphas, alphas)
def test_linear_model_monotone(a1, a2):
    lo, hi = sorted((a1, a2))
    cl_lo, cd_lo = coefficients(LINEAR_FIT, lo)
    cl_hi, cd_hi = coefficients(LINEAR_FIT, hi)
    # Lift falls and drag rises as alpha moves toward zero.
    assert cl_lo >= cl_hi
    assert cd_lo <= cd_hi


@given(st.floats(0.5, 1.5), st.floats(0.5, 1.5), alphas)
def test_dispersion_factors_multiply(k_cl, k_cd, alpha):
    cl0, cd0 = coefficients(QUADRATIC_FIT, alpha)
    cl, cd = coefficients(QUADRATIC_FIT.dispersed(k_cl, k_cd), alpha)
    assert cl == pytest.approx(k_cl * cl0, rel=1e-14)
    assert cd == pytest.approx(k_cd * cd0, rel=1e-14)
    assert QUADRATIC_FIT.dispersed(k_cl, k_cd).nominal == QUADRATIC_FIT


def test_table_rejects_extrapolation():
    table = table_from_model(QUADRATIC_FIT, [-25.0, -10.0])
    with pytest.raises(AeroEnvelopeError):
        coefficients(table, -26.0)


def test_table_csv_one_and_two_files(tmp_path):
    one = tmp_path / "aero.csv"
    one.write_text("alpha_deg,C_L,C_D\n-25,0.4,1.3\n-10,0.2,1.5\n")
    cl_file = tmp_path / "cl.csv"
    cd_file = tmp_path / "cd.csv"
    cl_file.write_text("-25,0.4\n-10,0.2\n")
    cd_file.write_text("-25,1.3\n-10,1.5\n")
    a = load_table_csv(one)
    b = load_table_csv(cl_file, cd_file)
    assert a.table == b.table
    assert coefficients(a, -17.5) == pytest.approx((0.3, 1.4))


@pytest.mark.parametrize("kw", [
    dict(alpha_limits=(-10.0, -25.0)),
    dict(alpha_limits=(-25.0, 5.0)),
    dict(sigma_limits=(0.0, 165.0)),
    dict(sigma_limits=(15.0, 190.0)),
    dict(alpha_rate_limit=0.0),
    dict(mass=-1.0),
])
def test_vehicle_invariants(kw):
    with pytest.raises(ValueError):
        VehicleModel(**kw)


def test_aero_model_invariants():
    with pytest.raises(ValueError):
        AeroModel(kind="cubic")
    with pytest.raises(ValueError):
        AeroModel(kind="table", table=((-10.0, 0.1, 1.0),))
    with pytest.raises(ValueError):
        QUADRATIC_FIT.dispersed(0.0, 1.0)
