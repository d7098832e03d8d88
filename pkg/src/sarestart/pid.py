"""Two-loop cascaded PID control and the hex-X mixer.

The outer loop turns horizontal position error into roll/pitch setpoints;
the inner loop drives roll, pitch, yaw and height, and the mixer maps the
four command deltas to six PWM outputs.

Genome layout: six (kp, ki, kd) triples for the channels
roll, pitch, yaw, height, north, east.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .hexsim import (
    DT,
    H,
    MOTOR_SPIN,
    PE,
    PHI,
    PITCH_MIX,
    PN,
    PSI,
    ROLL_MIX,
    THETA,
    VE,
    VH,
    VN,
    WP,
    WQ,
    WR,
    VehicleParams,
    _wrap_deg,
    hover_pwm,
)

__all__ = [
    "CHANNELS",
    "N_GAINS",
    "PidGains",
    "PidState",
    "ControllerLimits",
    "limit_error",
    "pid_step",
    "mix",
    "cascade_step",
    "fresh_states",
    "gains_of",
]

CHANNELS = ("phi", "theta", "psi", "h", "p_n", "p_e")
C_PHI, C_THETA, C_PSI, C_H, C_PN, C_PE = range(6)
N_GAINS = 18

# waypoint array layout
W_PHI, W_THETA, W_PSI, W_PN, W_PE, W_H = range(6)

# pid scratch columns
P_INTEGRAL, P_PREV, P_INIT = range(3)


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    initialized: bool = False


class ControllerLimits(NamedTuple):
    err_height: float = 10.0  # cm
    err_attitude: float = 15.0  # deg, roll, pitch and yaw
    err_position: float = 15.0  # cm
    pwm_min: float = 1000.0
    pwm_max: float = 2000.0
    windup_seconds: float = 2.0  # integral cap = error limit * windup_seconds
    tilt_setpoint: float = 15.0  # deg, clamp on position-loop output


def gains_of(genome, channel: int) -> PidGains:
    g = np.asarray(genome, dtype=float)
    return PidGains(*g[3 * channel : 3 * channel + 3])


def fresh_states() -> np.ndarray:
    return np.zeros((6, 3))


def limit_error(raw_error: float, l_er: float) -> float:
    """Saturate ``raw_error`` to ``[-l_er, l_er]``."""
    if l_er <= 0:
        raise ValueError("error limit must be positive")
    return min(max(raw_error, -l_er), l_er)


@njit(cache=True)
def _clamp(x, lim):
    return min(max(x, -lim), lim)


@njit(cache=True)
def _pid_rate(row, error, error_rate, dt, kp, ki, kd, cap):
    # derivative supplied by the caller (negated measured rate)
    row[P_INTEGRAL] = _clamp(row[P_INTEGRAL] + error * dt, cap)
    row[P_INIT] = 1.0
    row[P_PREV] = error
    return kp * error + ki * row[P_INTEGRAL] + kd * error_rate


@njit(cache=True)
def _pid(row, error, dt, kp, ki, kd, cap):
    row[P_INTEGRAL] = _clamp(row[P_INTEGRAL] + error * dt, cap)
    if row[P_INIT] > 0.5:
        deriv = (error - row[P_PREV]) / dt
    else:
        deriv = 0.0
        row[P_INIT] = 1.0
    row[P_PREV] = error
    return kp * error + ki * row[P_INTEGRAL] + kd * deriv


def pid_step(state: PidState, error: float, dt: float, gains: PidGains,
             windup_cap: float = math.inf, error_rate=None):
    """One PID update; returns ``(new_state, output)``.

    Rectangle-rule integral capped at ``windup_cap``. The derivative is the
    backward difference of the error (zero on the first call) unless
    ``error_rate`` is given, in which case that rate is used directly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    row = np.array([state.integral, state.prev_error, 1.0 if state.initialized else 0.0])
    if error_rate is None:
        out = _pid(row, float(error), float(dt), gains.kp, gains.ki, gains.kd, float(windup_cap))
    else:
        out = _pid_rate(row, float(error), float(error_rate), float(dt), gains.kp, gains.ki,
                        gains.kd, float(windup_cap))
    return PidState(row[0], row[1], bool(row[2] > 0.5)), float(out)


@njit(cache=True)
def _mix(d_phi, d_theta, d_psi, d_t, base, pwm_min, pwm_max, out):
    for m in range(6):
        raw = base + d_t + ROLL_MIX[m] * d_phi + PITCH_MIX[m] * d_theta + MOTOR_SPIN[m] * d_psi
        out[m] = min(max(raw, pwm_min), pwm_max)


def mix(d_phi, d_theta, d_psi, d_t, hover_base=None, limits: ControllerLimits = ControllerLimits()):
    """Hex-X linear mixer; six PWM commands clamped into the PWM range."""
    if hover_base is None:
        hover_base = hover_pwm(VehicleParams())
    out = np.empty(6)
    _mix(float(d_phi), float(d_theta), float(d_psi), float(d_t), float(hover_base),
         limits.pwm_min, limits.pwm_max, out)
    return out


@njit(cache=True)
def _cascade(est, wp, genome, pid, lim, base, dt, out):
    # Derivative terms use the estimator's rate channels (angular rates,
    # regressed velocities): the error itself is held between 20/57 Hz
    # refreshes, so differencing it at 400 Hz only produces spikes.
    # outer loop, errors rotated into the heading frame
    psi = math.radians(est[PSI])
    c, s = math.cos(psi), math.sin(psi)
    en = wp[W_PN] - est[PN]
    ee = wp[W_PE] - est[PE]
    e_fwd = _clamp(c * en + s * ee, lim.err_position)
    e_right = _clamp(-s * en + c * ee, lim.err_position)
    w = lim.windup_seconds
    r_fwd = -(c * est[VN] + s * est[VE])
    r_right = -(-s * est[VN] + c * est[VE])
    o_fwd = _pid_rate(pid[C_PN], e_fwd, r_fwd, dt, genome[12], genome[13], genome[14], lim.err_position * w)
    o_right = _pid_rate(pid[C_PE], e_right, r_right, dt, genome[15], genome[16], genome[17], lim.err_position * w)
    # nose-down pitch moves forward, right roll moves right
    theta_sp = _clamp(wp[W_THETA] - o_fwd, lim.tilt_setpoint)
    phi_sp = _clamp(wp[W_PHI] + o_right, lim.tilt_setpoint)

    la = lim.err_attitude
    e_phi = _clamp(phi_sp - est[PHI], la)
    e_theta = _clamp(theta_sp - est[THETA], la)
    e_psi = _clamp(_wrap_deg(wp[W_PSI] - est[PSI]), la)
    e_h = _clamp(wp[W_H] - est[H], lim.err_height)
    d_phi = _pid_rate(pid[C_PHI], e_phi, -est[WP], dt, genome[0], genome[1], genome[2], la * w)
    d_theta = _pid_rate(pid[C_THETA], e_theta, -est[WQ], dt, genome[3], genome[4], genome[5], la * w)
    d_psi = _pid_rate(pid[C_PSI], e_psi, -est[WR], dt, genome[6], genome[7], genome[8], la * w)
    d_t = _pid_rate(pid[C_H], e_h, -est[VH], dt, genome[9], genome[10], genome[11], lim.err_height * w)
    _mix(d_phi, d_theta, d_psi, d_t, base, lim.pwm_min, lim.pwm_max, out)


def _as_array(x):
    return x.as_array() if hasattr(x, "as_array") else np.asarray(x, dtype=float)


def cascade_step(est, wp, genome, states=None, dt: float = DT, hover_base=None,
                 limits: ControllerLimits = ControllerLimits()):
    """Run both loops once; returns ``(states', motor_commands)``.

    ``states`` is a (6, 3) array of per-channel PID scratch (integral,
    previous error, initialised flag), as from :func:`fresh_states`; it is
    copied, not modified.
    """
    if hover_base is None:
        hover_base = hover_pwm(VehicleParams())
    states = fresh_states() if states is None else np.array(states, dtype=float)
    genome = np.asarray(genome, dtype=float)
    if genome.shape != (N_GAINS,):
        raise ValueError(f"genome must have {N_GAINS} gains")
    out = np.empty(6)
    _cascade(_as_array(est), _as_array(wp), genome, states, limits, float(hover_base), dt, out)
    return states, out
