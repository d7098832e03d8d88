"""Simplified hexacopter rigid-body simulator with fan wind, tether limits,
floor contact and a multirate noisy state estimator.

State arrays use the vehicle-state layout below, in centimetres, degrees
and seconds. The njit kernels (``_step``, ``_sense``) are shared by the
object API in this module and by the compiled flight loop.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import NamedTuple

import numpy as np
from numba import njit

__all__ = [
    "VehicleParams",
    "WindModel",
    "SensorParams",
    "VehicleState",
    "SensorEstimate",
    "Sensor",
    "SimulationDiverged",
    "hover_pwm",
    "thrust_coefficient",
    "reset_state",
    "step",
    "wind_at",
    "MOTOR_AZIMUTH_DEG",
    "MOTOR_SPIN",
]

DT = 1.0 / 400.0

# state layout
PHI, THETA, PSI, WP, WQ, WR, PN, PE, H, VN, VE, VH, GROUND, TIME = range(14)
STATE_SIZE = 14

# hex-X, motor k at 30 + 60k degrees from the nose, alternating spin
MOTOR_AZIMUTH_DEG = 30.0 + 60.0 * np.arange(6)
_AZ = np.radians(MOTOR_AZIMUTH_DEG)
ROLL_MIX = -np.sin(_AZ)
PITCH_MIX = np.cos(_AZ)
MOTOR_SPIN = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])


class VehicleParams(NamedTuple):
    mass: float = 1.5  # kg
    arm: float = 0.25  # m
    ixx: float = 0.03  # kg m^2
    iyy: float = 0.03
    izz: float = 0.05
    hover_pwm: float = 1500.0  # fixes the thrust coefficient
    yaw_moment: float = 0.02  # reaction torque per newton of thrust, m
    drag_h: float = 0.2  # N / (m/s), relative to the air
    drag_v: float = 0.3  # N / (m/s)
    rot_damping: float = 0.01  # N m / (rad/s)
    gravity: float = 9.81
    tilt_limit: float = 60.0  # deg
    yaw_limit: float = 160.0  # deg either side of yaw_anchor
    yaw_anchor: float = 40.0
    half_width: float = 30.0  # cm, flight volume is +-half_width in n and e
    ceiling: float = 20.0  # cm
    wall_stiffness: float = 50.0  # N/m beyond the flight volume
    pwm_min: float = 1000.0
    pwm_max: float = 2000.0


class WindModel(NamedTuple):
    speed: float = 5.0  # m/s
    period: float = 10.0  # s
    traversal: float = 120.0  # deg, peak to peak
    base_bearing: float = 135.0  # deg, direction the air moves toward


class SensorParams(NamedTuple):
    """Estimator noise model.

    Attitude errors are first-order Gauss-Markov (filtered-estimate
    behaviour); position and height samples carry white noise.
    """

    attitude_std: float = 0.1  # deg, roll and pitch
    attitude_tau: float = 0.1  # s
    heading_std: float = 1.0  # deg
    heading_tau: float = 2.0  # s
    height_std: float = 0.1  # cm
    position_std: float = 0.1  # cm
    height_every: int = 20  # 20 Hz at 400 Hz
    position_every: int = 7  # ~57 Hz
    velocity_window: int = 5
    ground_height: float = 1.0  # cm, estimate at or below reads as grounded


def thrust_coefficient(vp: VehicleParams) -> float:
    """Newtons per PWM microsecond above ``pwm_min``, per motor."""
    return vp.mass * vp.gravity / (6.0 * (vp.hover_pwm - vp.pwm_min))


def hover_pwm(vp: VehicleParams = VehicleParams()) -> float:
    """Per-motor command whose total thrust equals the vehicle weight."""
    return vp.pwm_min + vp.mass * vp.gravity / (6.0 * thrust_coefficient(vp))


class SimulationDiverged(ArithmeticError):
    pass


@dataclass
class VehicleState:
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 40.0
    omega_p: float = 0.0
    omega_q: float = 0.0
    omega_r: float = 0.0
    p_n: float = 0.0
    p_e: float = 0.0
    h: float = 0.0
    v_n: float = 0.0
    v_e: float = 0.0
    v_h: float = 0.0
    on_ground: bool = True
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, arr) -> "VehicleState":
        vals = [float(v) for v in arr]
        vals[GROUND] = bool(vals[GROUND] > 0.5)
        return cls(*vals)


@dataclass
class SensorEstimate(VehicleState):
    """Estimated state; same channels as :class:`VehicleState`."""


_FIELD_NAMES = [f.name for f in fields(VehicleState)]


def reset_state(vp: VehicleParams = VehicleParams()) -> VehicleState:
    """On the floor at the centre, heading ``yaw_anchor``."""
    return VehicleState(psi=vp.yaw_anchor, on_ground=True)


@njit(cache=True)
def _wind(t, speed, period, traversal, base_bearing):
    bearing = math.radians(base_bearing + 0.5 * traversal * math.sin(2.0 * math.pi * t / period))
    return speed * math.cos(bearing), speed * math.sin(bearing)


def wind_at(t: float, model: WindModel = WindModel()) -> np.ndarray:
    """Horizontal wind (north, east) in m/s."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return np.array(_wind(t, model.speed, model.period, model.traversal, model.base_bearing))


@njit(cache=True)
def _step(s, cmds, wind_n, wind_e, dt, vp, out):
    """One semi-implicit Euler step from ``s`` into ``out``; False if non-finite."""
    kt = vp.mass * vp.gravity / (6.0 * (vp.hover_pwm - vp.pwm_min))
    thrust = 0.0
    tx = 0.0
    ty = 0.0
    tz = 0.0
    for m in range(6):
        u = cmds[m]
        if not math.isfinite(u):
            return False
        u = min(max(u, vp.pwm_min), vp.pwm_max)
        tm = kt * (u - vp.pwm_min)
        thrust += tm
        tx += vp.arm * ROLL_MIX[m] * tm
        ty += vp.arm * PITCH_MIX[m] * tm
        tz += vp.yaw_moment * MOTOR_SPIN[m] * tm

    for i in range(STATE_SIZE):
        out[i] = s[i]
    out[TIME] = s[TIME] + dt

    phi = math.radians(s[PHI])
    theta = math.radians(s[THETA])
    psi = math.radians(s[PSI])
    cphi, sphi = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    m_inv = 1.0 / vp.mass
    lift = thrust * cphi * cth * m_inv - vp.gravity

    if s[GROUND] > 0.5 and lift <= 0.0:
        for i in (WP, WQ, WR, VN, VE, VH):
            out[i] = 0.0
        out[H] = 0.0
        return True
    out[GROUND] = 0.0

    # rotational dynamics, body rates in rad/s
    p = math.radians(s[WP])
    q = math.radians(s[WQ])
    r = math.radians(s[WR])
    c = vp.rot_damping
    pd = (tx - (vp.izz - vp.iyy) * q * r - c * p) / vp.ixx
    qd = (ty - (vp.ixx - vp.izz) * p * r - c * q) / vp.iyy
    rd = (tz - (vp.iyy - vp.ixx) * p * q - c * r) / vp.izz
    p += pd * dt
    q += qd * dt
    r += rd * dt

    tth = sth / cth
    phi_dot = p + tth * (sphi * q + cphi * r)
    theta_dot = cphi * q - sphi * r
    psi_dot = (sphi * q + cphi * r) / cth
    new_phi = math.degrees(phi + phi_dot * dt)
    new_theta = math.degrees(theta + theta_dot * dt)
    new_psi = math.degrees(psi + psi_dot * dt)

    # tether: hard limits on tilt and on rotation away from the anchor heading
    if abs(new_phi) > vp.tilt_limit:
        new_phi = math.copysign(vp.tilt_limit, new_phi)
        p = 0.0
    if abs(new_theta) > vp.tilt_limit:
        new_theta = math.copysign(vp.tilt_limit, new_theta)
        q = 0.0
    yaw_off = new_psi - vp.yaw_anchor
    if abs(yaw_off) > vp.yaw_limit:
        new_psi = vp.yaw_anchor + math.copysign(vp.yaw_limit, yaw_off)
        r = 0.0

    # translational dynamics in SI
    vn = s[VN] * 0.01
    ve = s[VE] * 0.01
    vh = s[VH] * 0.01
    pn = s[PN] * 0.01
    pe = s[PE] * 0.01
    h = s[H] * 0.01
    tm_ = thrust * m_inv
    an = -tm_ * (cphi * sth * cpsi + sphi * spsi) - vp.drag_h * m_inv * (vn - wind_n)
    ae = -tm_ * (cphi * sth * spsi - sphi * cpsi) - vp.drag_h * m_inv * (ve - wind_e)
    ah = lift - vp.drag_v * m_inv * vh
    k_wall = vp.wall_stiffness * m_inv
    hw = vp.half_width * 0.01
    if pn > hw:
        an -= k_wall * (pn - hw)
    elif pn < -hw:
        an -= k_wall * (pn + hw)
    if pe > hw:
        ae -= k_wall * (pe - hw)
    elif pe < -hw:
        ae -= k_wall * (pe + hw)
    if h > vp.ceiling * 0.01:
        ah -= k_wall * (h - vp.ceiling * 0.01)

    vn += an * dt
    ve += ae * dt
    vh += ah * dt
    pn += vn * dt
    pe += ve * dt
    h += vh * dt

    out[PHI] = new_phi
    out[THETA] = new_theta
    out[PSI] = new_psi
    out[WP] = math.degrees(p)
    out[WQ] = math.degrees(q)
    out[WR] = math.degrees(r)
    out[PN] = pn * 100.0
    out[PE] = pe * 100.0
    out[H] = h * 100.0
    out[VN] = vn * 100.0
    out[VE] = ve * 100.0
    out[VH] = vh * 100.0

    if out[H] <= 0.0:
        out[H] = 0.0
        if out[VH] <= 0.0:
            out[GROUND] = 1.0
            out[PHI] = 0.0
            out[THETA] = 0.0
            for i in (WP, WQ, WR, VN, VE, VH):
                out[i] = 0.0

    for i in range(STATE_SIZE):
        if not math.isfinite(out[i]):
            return False
    return True


def step(state, cmds, wind, dt: float = DT, params: VehicleParams = VehicleParams()) -> VehicleState:
    """Advance the vehicle by ``dt`` under motor ``cmds`` and ``wind`` (m/s, n/e).

    Raises :class:`SimulationDiverged` on non-finite input or output.
    """
    s = state.as_array() if hasattr(state, "as_array") else np.asarray(state, dtype=float)
    cmds = np.asarray(cmds, dtype=float)
    if cmds.shape != (6,):
        raise ValueError("expected six motor commands")
    if not np.all(np.isfinite(s)):
        raise SimulationDiverged("non-finite vehicle state")
    out = np.empty(STATE_SIZE)
    if not _step(s, cmds, float(wind[0]), float(wind[1]), dt, params, out):
        raise SimulationDiverged("integration produced a non-finite state")
    return VehicleState.from_array(out)


# sensor scratch layout
S_ATT_ERR = 0  # 3 slots, Gauss-Markov attitude errors
S_PREV_ATT = 3  # 3 slots, previous attitude estimate
S_H = 6
S_VN, S_VE, S_VH = 7, 8, 9
S_PN, S_PE = 10, 11
S_NSAMP = 12
S_HEAD = 13
SENSOR_SCRATCH = 14
NOISE_CHANNELS = 7


@njit(cache=True)
def _wrap_deg(a):
    return a - 360.0 * math.ceil((a - 180.0) / 360.0)


@njit(cache=True)
def _regress_slope(buf, n, head, col):
    # least-squares slope of buf[:, col] against buf[:, 0] over the n newest rows
    size = buf.shape[0]
    tm = 0.0
    ym = 0.0
    for j in range(n):
        row = (head - j) % size
        tm += buf[row, 0]
        ym += buf[row, col]
    tm /= n
    ym /= n
    num = 0.0
    den = 0.0
    for j in range(n):
        row = (head - j) % size
        dt_ = buf[row, 0] - tm
        num += dt_ * (buf[row, col] - ym)
        den += dt_ * dt_
    if den <= 0.0:
        return 0.0
    return num / den


@njit(cache=True)
def _sense(s, k, z, scratch, buf, sp, dt, est):
    """Write the estimate for step index ``k`` of true state ``s`` into ``est``."""
    t = s[TIME]
    rho_a = math.exp(-dt / sp.attitude_tau)
    rho_h = math.exp(-dt / sp.heading_tau)
    for i in range(3):
        std = sp.heading_std if i == 2 else sp.attitude_std
        rho = rho_h if i == 2 else rho_a
        if k == 0:
            scratch[S_ATT_ERR + i] = std * z[i]
        else:
            scratch[S_ATT_ERR + i] = rho * scratch[S_ATT_ERR + i] + std * math.sqrt(1.0 - rho * rho) * z[i]
        att = s[PHI + i] + scratch[S_ATT_ERR + i]
        if k == 0:
            rate = 0.0
        elif i == 2:
            rate = _wrap_deg(att - scratch[S_PREV_ATT + i]) / dt
        else:
            rate = (att - scratch[S_PREV_ATT + i]) / dt
        scratch[S_PREV_ATT + i] = att
        est[PHI + i] = att
        est[WP + i] = rate

    if k % sp.height_every == 0:
        scratch[S_H] = s[H] + sp.height_std * z[3]

    if k % sp.position_every == 0:
        size = buf.shape[0]
        head = (int(scratch[S_HEAD]) + 1) % size if k > 0 else 0
        buf[head, 0] = t
        buf[head, 1] = s[PN] + sp.position_std * z[4]
        buf[head, 2] = s[PE] + sp.position_std * z[5]
        buf[head, 3] = s[H] + sp.position_std * z[6]
        n = min(int(scratch[S_NSAMP]) + 1, size) if k > 0 else 1
        scratch[S_HEAD] = head
        scratch[S_NSAMP] = n
        scratch[S_PN] = buf[head, 1]
        scratch[S_PE] = buf[head, 2]
        if n >= 2:
            scratch[S_VN] = _regress_slope(buf, n, head, 1)
            scratch[S_VE] = _regress_slope(buf, n, head, 2)
            scratch[S_VH] = _regress_slope(buf, n, head, 3)
        else:
            scratch[S_VN] = 0.0
            scratch[S_VE] = 0.0
            scratch[S_VH] = 0.0

    est[PN] = scratch[S_PN]
    est[PE] = scratch[S_PE]
    est[H] = scratch[S_H]
    est[VN] = scratch[S_VN]
    est[VE] = scratch[S_VE]
    est[VH] = scratch[S_VH]
    est[GROUND] = 1.0 if scratch[S_H] <= sp.ground_height else 0.0
    est[TIME] = t


def draw_noise(rng, n_steps: int) -> np.ndarray:
    """Standard normals for ``n_steps`` sensor updates."""
    return rng.standard_normal((n_steps, NOISE_CHANNELS))


class Sensor:
    """Stateful multirate estimator; call :meth:`sense` once per control step."""

    def __init__(self, params: SensorParams = SensorParams(), rng=None, noise: bool = True, dt: float = DT):
        if not noise:
            params = params._replace(
                attitude_std=0.0, heading_std=0.0, height_std=0.0, position_std=0.0
            )
        self.params = params
        self.rng = rng if rng is not None else np.random.default_rng()
        self.dt = dt
        self.k = 0
        self.scratch = np.zeros(SENSOR_SCRATCH)
        self.buf = np.zeros((params.velocity_window, 4))

    def sense(self, state) -> SensorEstimate:
        s = state.as_array() if hasattr(state, "as_array") else np.asarray(state, dtype=float)
        z = self.rng.standard_normal(NOISE_CHANNELS)
        est = np.empty(STATE_SIZE)
        _sense(s, self.k, z, self.scratch, self.buf, self.params, self.dt, est)
        self.k += 1
        return SensorEstimate.from_array(est)
