import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sarestart.hexsim import (
    MOTOR_SPIN,
    PITCH_MIX,
    ROLL_MIX,
    Sensor,
    SimulationDiverged,
    VehicleParams,
    VehicleState,
    WindModel,
    _wrap_deg,
    hover_pwm,
    reset_state,
    step,
    wind_at,
)
from sarestart.pid import mix

CALM = (0.0, 0.0)
BASE = hover_pwm()


def flying(**kw):
    kw.setdefault("h", 10.0)
    return VehicleState(on_ground=False, **kw)


def run(state, cmds, n, wind=CALM):
    for _ in range(n):
        state = step(state, cmds, wind)
    return state


def test_mixer_geometry_is_balanced():
    assert ROLL_MIX.sum() == pytest.approx(0.0, abs=1e-12)
    assert PITCH_MIX.sum() == pytest.approx(0.0, abs=1e-12)
    assert MOTOR_SPIN.sum() == 0.0


def test_hover_command_holds_altitude():
    s = run(flying(), np.full(6, BASE), 800)
    assert s.h == pytest.approx(10.0, abs=1e-9)
    assert abs(s.phi) < 1e-9 and abs(s.theta) < 1e-9 and not s.on_ground


def test_stays_on_floor_below_liftoff():
    s = run(reset_state(), np.full(6, 1200.0), 400)
    assert s.h == 0.0 and s.on_ground
    s = run(reset_state(), np.full(6, 1700.0), 400)
    assert s.h > 1.0 and not s.on_ground


@pytest.mark.parametrize("axis, rate", [(0, "omega_p"), (1, "omega_q"), (2, "omega_r")])
def test_positive_delta_gives_positive_rate(axis, rate):
    deltas = [0.0, 0.0, 0.0]
    deltas[axis] = 20.0
    s = step(flying(), mix(*deltas, 0.0), CALM)
    assert getattr(s, rate) > 0
    others = {"omega_p", "omega_q", "omega_r"} - {rate}
    assert all(abs(getattr(s, o)) < 1e-9 for o in others)


def _tilted_drift(d_phi, d_theta, psi):
    s = flying(psi=psi)
    s = run(s, mix(d_phi, d_theta, 0.0, 0.0), 40)
    return run(s, mix(0.0, 0.0, 0.0, 30.0), 200)


def test_nose_down_moves_forward_and_right_roll_moves_right():
    s = _tilted_drift(0.0, -20.0, 0.0)
    assert s.theta < 0 and s.v_n > 0 and abs(s.v_e) < 1e-6 * abs(s.v_n)
    s = _tilted_drift(20.0, 0.0, 0.0)
    assert s.phi > 0 and s.v_e > 0
    # facing east, forward is east
    s = _tilted_drift(0.0, -20.0, 90.0)
    assert s.v_e > 0 and abs(s.v_n) < 1e-3 * s.v_e


def test_tether_limits_tilt():
    s = run(flying(), mix(200.0, 0.0, 0.0, 0.0), 2000)
    assert abs(s.phi) <= VehicleParams().tilt_limit + 1e-9


def test_wind_pushes_downwind():
    s = run(flying(), np.full(6, BASE), 400, wind=(0.0, 5.0))
    assert s.p_e > 0 and s.v_e > 0


def test_non_finite_commands_diverge():
    with pytest.raises(SimulationDiverged):
        step(flying(), [math.nan] * 6, CALM)
    with pytest.raises(ValueError):
        step(flying(), [BASE] * 5, CALM)


@given(st.floats(0.0, 1e4))
def test_wind_speed_and_sweep(t):
    w = wind_at(t)
    assert np.hypot(*w) == pytest.approx(5.0)
    bearing = math.degrees(math.atan2(w[1], w[0])) % 360
    assert 75.0 - 1e-9 <= bearing <= 195.0 + 1e-9


def test_wind_negative_time_rejected():
    with pytest.raises(ValueError):
        wind_at(-1.0)
    np.testing.assert_allclose(wind_at(3.0), wind_at(13.0), atol=1e-12)
    assert np.allclose(wind_at(2.5, WindModel(traversal=0.0)),
                       5 * np.array([math.cos(math.radians(135)), math.sin(math.radians(135))]))


@given(st.floats(-1e5, 1e5))
def test_wrap_range(a):
    w = _wrap_deg(a)
    assert -180.0 < w <= 180.0
    assert math.isclose(math.remainder(w - a, 360.0), 0.0, abs_tol=1e-7)


def test_wrap_edges():
    assert _wrap_deg(-180.0) == 180.0
    assert _wrap_deg(180.0) == 180.0
    assert _wrap_deg(540.0) == 180.0
    assert _wrap_deg(-190.0) == 170.0


def test_noise_free_sensor_tracks_attitude_and_holds_height():
    sensor = Sensor(noise=False)
    s = flying(phi=3.0, theta=-2.0, psi=45.0, h=7.0)
    e0 = sensor.sense(s)
    assert (e0.phi, e0.theta, e0.psi, e0.h) == (3.0, -2.0, 45.0, 7.0)
    assert e0.omega_p == 0.0
    s.h = 8.0
    s.phi = 4.0
    e1 = sensor.sense(s)
    assert e1.h == 7.0  # held until the next 20 Hz sample
    assert e1.omega_p == pytest.approx(400.0)  # 1 deg in one 400 Hz step
    for _ in range(18):
        sensor.sense(s)
    assert sensor.sense(s).h == 8.0


def test_regression_velocity_from_positions():
    sensor = Sensor(noise=False)
    dt = 1.0 / 400
    est = None
    for k in range(400):
        s = flying(p_n=20.0 * k * dt, p_e=-5.0 * k * dt, t=k * dt)
        est = sensor.sense(s)
    assert est.v_n == pytest.approx(20.0, rel=1e-6)
    assert est.v_e == pytest.approx(-5.0, rel=1e-6)


def test_grounded_flag_from_height_estimate():
    sensor = Sensor(noise=False)
    assert sensor.sense(reset_state()).on_ground
    sensor = Sensor(noise=False)
    assert not sensor.sense(flying(h=5.0)).on_ground
