"""Wind-disturbed hover benchmark: waypoint schedule, per-cycle fitness,
health monitoring, evaluation with re-evaluation, and population seeding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from numba import njit

from . import de
from .hexsim import (
    DT,
    GROUND,
    H,
    NOISE_CHANNELS,
    PE,
    PHI,
    PN,
    PSI,
    SENSOR_SCRATCH,
    STATE_SIZE,
    THETA,
    TIME,
    VE,
    VH,
    VN,
    WP,
    WQ,
    SensorParams,
    VehicleParams,
    WindModel,
    _sense,
    _step,
    _wind,
    _wrap_deg,
    hover_pwm,
    reset_state,
)
from .pid import N_GAINS, ControllerLimits, W_H, W_PE, W_PHI, W_PN, W_PSI, W_THETA, _cascade

__all__ = [
    "Waypoint",
    "StateLimits",
    "HealthParams",
    "Termination",
    "EvalResult",
    "SimConfig",
    "HealthMonitor",
    "SeedingError",
    "WAYPOINT_PERIOD",
    "GAIN_UPPER",
    "GAIN_CAP",
    "waypoint_at",
    "deadband",
    "wrap_angle",
    "fitness_components",
    "fitness_cycle",
    "health_check",
    "run_flight",
    "evaluate",
    "make_evaluator",
    "init_genome",
    "probe_airborne",
    "seed_population",
]

WAYPOINT_PERIOD = 8.0
FLIGHT_DURATION = 40.0
MAX_CYCLE_FITNESS = 10.0

# (phi_sp, theta_sp, psi_sp, p_nsp, p_esp, h_sp); cm and degrees
WAYPOINTS = np.array([
    [0.0, 0.0, 40.0, 0.0, 0.0, 10.0],   # hover at the centre
    [0.0, 0.0, 0.0, 8.0, -8.0, 10.0],   # 8 N, 8 W
    [0.0, 0.0, 0.0, -8.0, 8.0, 14.0],   # up to 14, then 16 S, 16 E of that
    [0.0, 0.0, 80.0, 0.0, 0.0, 10.0],   # back to the centre
    [0.0, 0.0, 40.0, 0.0, 0.0, 10.0],   # yaw back to 40
])

# Initial gain ranges are (0, l_cmd / l_er] per channel: 500 PWM over 15 deg
# for attitude, 500 PWM over 10 cm for height, 15 cm over 15 cm for position.
GAIN_UPPER = np.repeat([500.0 / 15.0] * 3 + [500.0 / 10.0] + [15.0 / 15.0] * 2, 3)
GAIN_CAP = 10.0 * GAIN_UPPER


@dataclass(frozen=True)
class Waypoint:
    phi_sp: float = 0.0
    theta_sp: float = 0.0
    psi_sp: float = 0.0
    p_nsp: float = 0.0
    p_esp: float = 0.0
    h_sp: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_sp, self.theta_sp, self.psi_sp, self.p_nsp, self.p_esp, self.h_sp])


class StateLimits(NamedTuple):
    l_omega: float = 115.0  # deg/s
    l_omega_n: float = 30.0
    l_vhn: float = 5.0  # cm/s
    l_vh: float = 15.0
    l_vvn: float = 2.0
    l_vv: float = 20.0
    l_a: float = 15.0  # deg
    l_h: float = 10.0  # cm
    l_hc: float = 5.0
    l_yc: float = 15.0  # deg
    l_y: float = 160.0
    l_pc: float = 8.0  # cm
    l_p: float = 20.0


class HealthParams(NamedTuple):
    max_height: float = 18.0  # cm
    max_hvel: float = 50.0  # cm/s, per axis
    max_vvel: float = 25.0
    max_tilt: float = 15.0  # deg
    max_yaw_dev: float = 45.0  # deg from yaw_home
    yaw_home: float = 40.0
    pwm_rate: float = 75.0  # upper-limit hits per second
    window: float = 1.0  # s
    current_proxy: bool = True
    current_pwm: float = 1900.0  # mean command treated as over-current
    current_time: float = 1.0  # s
    no_move_time: float = 5.0
    no_move_disp: float = 1.0  # cm
    landed_time: float = 1.0
    airborne_height: float = 2.0  # cm
    ground_height: float = 1.0


class Termination(enum.IntEnum):
    COMPLETED = 0
    HEALTH_HEIGHT = 1
    HEALTH_HVEL = 2
    HEALTH_VVEL = 3
    HEALTH_ATTITUDE = 4
    HEALTH_YAW = 5
    HEALTH_PWM = 6
    HEALTH_CURRENT = 7
    NO_MOVEMENT = 8
    LANDED = 9
    DIVERGED = 10


@dataclass(frozen=True)
class FlightRecord:
    fitness: float
    duration: float
    termination: Termination
    airborne: float


@dataclass(frozen=True)
class EvalResult:
    fitness: float
    duration: float
    termination: Termination
    success: bool
    evaluations: int = 1
    runs: tuple = ()


@dataclass(frozen=True)
class SimConfig:
    vehicle: VehicleParams = VehicleParams()
    wind: WindModel = WindModel()
    sensor: SensorParams = SensorParams()
    controller: ControllerLimits = ControllerLimits()
    state_limits: StateLimits = StateLimits()
    health: HealthParams = HealthParams()
    noise: bool = True
    duration: float = FLIGHT_DURATION
    dt: float = DT
    probe_duration: float = 5.0
    probe_airborne: float = 0.2
    reevaluate: bool = True
    # "pid" flies the genome; "ideal" pins the vehicle to each waypoint and
    # feeds the true state to the fitness, bypassing control and sensing.
    mode: str = "pid"

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def sensor_params(self) -> SensorParams:
        if self.noise:
            return self.sensor
        return self.sensor._replace(attitude_std=0.0, heading_std=0.0, height_std=0.0, position_std=0.0)


def waypoint_at(t: float) -> Waypoint:
    """Setpoint tuple active at time ``t`` of the 40 s schedule."""
    if not 0.0 <= t < FLIGHT_DURATION:
        raise ValueError(f"t={t} outside [0, {FLIGHT_DURATION})")
    return Waypoint(*WAYPOINTS[int(t // WAYPOINT_PERIOD)].tolist())


def deadband(x: float, l: float) -> float:
    return x if x > l else 0.0


def wrap_angle(alpha: float) -> float:
    """Wrap degrees into (-180, 180]."""
    return float(_wrap_deg(float(alpha)))


@njit(cache=True)
def _db(x, l):
    return x if x > l else 0.0


@njit(cache=True)
def _band(err, core, rng_):
    # 1 at zero error, 1/4 at the core limit, 0 at the range limit
    if err > core:
        return max((rng_ - err) / (4.0 * (rng_ - core)), 0.0)
    return 1.0 - 3.0 * err / (4.0 * core)


@njit(cache=True)
def _fitness(est, wp, at_limit, sl, comp):
    comp[0] = max(1.0 - abs(wp[W_PHI] - est[PHI]) / sl.l_a, 0.0) + max(
        1.0 - abs(wp[W_THETA] - est[THETA]) / sl.l_a, 0.0)
    vh = math.sqrt(est[VN] * est[VN] + est[VE] * est[VE])
    comp[1] = max(1.0 - _db(vh, sl.l_vhn) / sl.l_vh, 0.0)
    comp[2] = max(1.0 - _db(abs(est[VH]), sl.l_vvn) / sl.l_vv, 0.0)
    comp[3] = _band(abs(wp[W_H] - est[H]), sl.l_hc, sl.l_h)
    comp[4] = _band(abs(_wrap_deg(wp[W_PSI] - est[PSI])), sl.l_yc, sl.l_y)
    dn = wp[W_PN] - est[PN]
    dee = wp[W_PE] - est[PE]
    comp[5] = _band(math.sqrt(dn * dn + dee * dee), sl.l_pc, sl.l_p)
    comp[6] = 0.0 if at_limit else 1.0
    comp[7] = max(1.0 - _db(abs(est[WP]), sl.l_omega_n) / sl.l_omega, 0.0) + max(
        1.0 - _db(abs(est[WQ]), sl.l_omega_n) / sl.l_omega, 0.0)
    total = 0.0
    for i in range(8):
        total += comp[i]
    return total


FITNESS_COMPONENTS = ("attitude", "h_velocity", "v_velocity", "height", "yaw", "position", "pwm", "rates")


def _arr(x):
    return x.as_array() if hasattr(x, "as_array") else np.asarray(x, dtype=float)


def fitness_components(est, wp, pwm_at_limit: bool, limits: StateLimits = StateLimits()) -> dict:
    comp = np.zeros(8)
    _fitness(_arr(est), _arr(wp), bool(pwm_at_limit), limits, comp)
    return dict(zip(FITNESS_COMPONENTS, comp.tolist()))


def fitness_cycle(est, wp, pwm_at_limit: bool, limits: StateLimits = StateLimits()) -> float:
    """Per-control-step reward in [0, 10]."""
    comp = np.zeros(8)
    return float(_fitness(_arr(est), _arr(wp), bool(pwm_at_limit), limits, comp))


# health scratch layout
HS_START = 0  # 3 slots: n, e, h
HS_MAXDISP = 3
HS_FLOWN = 4
HS_GROUND = 5
HS_RING_COUNT = 6
HS_RING_POS = 7
HS_HIGH = 8
HS_AIRBORNE = 9
HEALTH_SCRATCH = 10


@njit(cache=True)
def _health_init(hs, ring, pn, pe, h):
    for i in range(HEALTH_SCRATCH):
        hs[i] = 0.0
    ring[:] = 0.0
    hs[HS_START] = pn
    hs[HS_START + 1] = pe
    hs[HS_START + 2] = h


@njit(cache=True)
def _health(est, cmds, k, dt, hp, pwm_max, hs, ring):
    dn = est[PN] - hs[HS_START]
    de_ = est[PE] - hs[HS_START + 1]
    dh = est[H] - hs[HS_START + 2]
    disp = math.sqrt(dn * dn + de_ * de_ + dh * dh)
    if disp > hs[HS_MAXDISP]:
        hs[HS_MAXDISP] = disp
    if est[H] > hp.airborne_height:
        hs[HS_FLOWN] = 1.0
        hs[HS_AIRBORNE] += 1.0
    if hs[HS_FLOWN] > 0.5 and est[H] <= hp.ground_height:
        hs[HS_GROUND] += 1.0
    else:
        hs[HS_GROUND] = 0.0

    at_top = 0.0
    total = 0.0
    for m in range(6):
        total += cmds[m]
        if cmds[m] >= pwm_max:
            at_top = 1.0
    pos = int(hs[HS_RING_POS])
    hs[HS_RING_COUNT] += at_top - ring[pos]
    ring[pos] = at_top
    hs[HS_RING_POS] = (pos + 1) % ring.shape[0]
    if total / 6.0 > hp.current_pwm:
        hs[HS_HIGH] += 1.0
    else:
        hs[HS_HIGH] = 0.0

    if est[H] > hp.max_height:
        return 1
    if abs(est[VN]) > hp.max_hvel or abs(est[VE]) > hp.max_hvel:
        return 2
    if abs(est[VH]) > hp.max_vvel:
        return 3
    if abs(est[PHI]) > hp.max_tilt or abs(est[THETA]) > hp.max_tilt:
        return 4
    if abs(_wrap_deg(est[PSI] - hp.yaw_home)) > hp.max_yaw_dev:
        return 5
    if hs[HS_RING_COUNT] > hp.pwm_rate * hp.window:
        return 6
    if hp.current_proxy and hs[HS_HIGH] >= round(hp.current_time / dt):
        return 7
    if k == round(hp.no_move_time / dt) and hs[HS_MAXDISP] < hp.no_move_disp:
        return 8
    if hs[HS_GROUND] > round(hp.landed_time / dt):
        return 9
    return 0


class HealthMonitor:
    """Evaluation history for the termination rules.

    The start position is taken from ``start`` or, if omitted, from the
    first estimate checked.
    """

    def __init__(self, params: HealthParams = HealthParams(), dt: float = DT,
                 pwm_max: float = 2000.0, start=None):
        self.params = params
        self.dt = dt
        self.pwm_max = pwm_max
        self.k = 0
        self.scratch = np.zeros(HEALTH_SCRATCH)
        self.ring = np.zeros(max(int(round(params.window / dt)), 1))
        self._started = start is not None
        if start is not None:
            s = _arr(start)
            _health_init(self.scratch, self.ring, s[PN], s[PE], s[H])

    @property
    def airborne_time(self) -> float:
        return self.scratch[HS_AIRBORNE] * self.dt

    def check(self, est, cmds=None) -> Optional[Termination]:
        e = _arr(est)
        if not self._started:
            _health_init(self.scratch, self.ring, e[PN], e[PE], e[H])
            self._started = True
        if cmds is None:
            cmds = np.full(6, 1500.0)
        code = _health(e, np.asarray(cmds, dtype=float), self.k, self.dt, self.params,
                       self.pwm_max, self.scratch, self.ring)
        self.k += 1
        return None if code == 0 else Termination(code)


def health_check(est, history: HealthMonitor, cmds=None) -> Optional[Termination]:
    """Advance ``history`` by one control step; the firing rule, if any."""
    return history.check(est, cmds)


@njit(cache=True)
def _waypoint_into(t, wp):
    i = min(int(t // WAYPOINT_PERIOD), WAYPOINTS.shape[0] - 1)
    for j in range(6):
        wp[j] = WAYPOINTS[i, j]


@njit(cache=True, nogil=True)
def _flight(genome, x0, noise, n_steps, ideal, vp, wm, sp, lim, sl, hp, base, dt):
    s = x0.copy()
    nxt = np.empty(STATE_SIZE)
    est = np.empty(STATE_SIZE)
    wp = np.empty(6)
    cmds = np.empty(6)
    comp = np.empty(8)
    pid = np.zeros((6, 3))
    scratch = np.zeros(SENSOR_SCRATCH)
    buf = np.zeros((sp.velocity_window, 4))
    hs = np.zeros(HEALTH_SCRATCH)
    ring = np.zeros(max(int(round(hp.window / dt)), 1))
    _health_init(hs, ring, x0[PN], x0[PE], x0[H])
    fitness = 0.0
    code = 0
    k = 0
    while k < n_steps:
        t = k * dt
        s[TIME] = t
        _waypoint_into(t, wp)
        if ideal:
            for i in range(STATE_SIZE):
                s[i] = 0.0
            s[PSI] = wp[W_PSI]
            s[PN] = wp[W_PN]
            s[PE] = wp[W_PE]
            s[H] = wp[W_H]
            s[TIME] = t
            for i in range(STATE_SIZE):
                est[i] = s[i]
            for m in range(6):
                cmds[m] = base
        else:
            _sense(s, k, noise[k], scratch, buf, sp, dt, est)
            _cascade(est, wp, genome, pid, lim, base, dt, cmds)
        code = _health(est, cmds, k, dt, hp, lim.pwm_max, hs, ring)
        if code != 0:
            break
        at_limit = False
        for m in range(6):
            if cmds[m] <= lim.pwm_min or cmds[m] >= lim.pwm_max:
                at_limit = True
        fitness += _fitness(est, wp, at_limit, sl, comp)
        wn, we = _wind(t, wm.speed, wm.period, wm.traversal, wm.base_bearing)
        if not _step(s, cmds, wn, we, dt, vp, nxt):
            code = 10
            k += 1
            break
        s, nxt = nxt, s
        k += 1
    return fitness, k, code, hs[HS_AIRBORNE] * dt


def run_flight(genome, cfg: SimConfig = SimConfig(), rng=None, duration=None) -> FlightRecord:
    """Fly one evaluation from the reset state; no re-evaluation."""
    duration = cfg.duration if duration is None else duration
    n_steps = int(round(duration / cfg.dt))
    genome = np.asarray(genome, dtype=float)
    if genome.shape != (N_GAINS,):
        raise ValueError(f"genome must have {N_GAINS} gains")
    if cfg.noise and cfg.mode == "pid":
        rng = np.random.default_rng(rng)
        noise = rng.standard_normal((n_steps, NOISE_CHANNELS))
    else:
        noise = np.zeros((n_steps, NOISE_CHANNELS))
    x0 = reset_state(cfg.vehicle).as_array()
    fit, steps, code, airborne = _flight(
        genome, x0, noise, n_steps, cfg.mode == "ideal", cfg.vehicle, cfg.wind,
        cfg.sensor_params(), cfg.controller, cfg.state_limits, cfg.health,
        hover_pwm(cfg.vehicle), cfg.dt,
    )
    return FlightRecord(float(fit), steps * cfg.dt, Termination(code), float(airborne))


def _attempt_streams(seed):
    """Two independent noise streams, one per evaluation attempt."""
    if isinstance(seed, np.random.Generator):
        return seed, seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return tuple(
        np.random.default_rng(np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (a,)))
        for a in (0, 1)
    )


def evaluate(genome, cfg: SimConfig = SimConfig(), seed=None) -> EvalResult:
    """Fly ``genome``; a completed flight is flown again and the mean kept.

    ``success`` is true only when both flights complete.
    """
    streams = _attempt_streams(seed)
    first = run_flight(genome, cfg, streams[0])
    if first.termination is not Termination.COMPLETED or not cfg.reevaluate:
        done = first.termination is Termination.COMPLETED and not cfg.reevaluate
        return EvalResult(first.fitness, first.duration, first.termination, done, 1, (first,))
    second = run_flight(genome, cfg, streams[1])
    return EvalResult(
        fitness=0.5 * (first.fitness + second.fitness),
        duration=0.5 * (first.duration + second.duration),
        termination=second.termination,
        success=second.termination is Termination.COMPLETED,
        evaluations=2,
        runs=(first, second),
    )


def make_evaluator(cfg: SimConfig = SimConfig()) -> Callable:
    """``evaluator(genome, seed)`` for :func:`sarestart.de.generation_step`."""

    def evaluator(genome, seed):
        return evaluate(genome, cfg, seed)

    return evaluator


def init_genome(rng) -> np.ndarray:
    """Gains uniform on (0, upper] for each channel's range."""
    return GAIN_UPPER * (1.0 - rng.random(N_GAINS))


def probe_airborne(genome, cfg: SimConfig, rng) -> float:
    """Seconds airborne during a short probe flight."""
    return run_flight(genome, cfg, rng, duration=cfg.probe_duration).airborne


class SeedingError(RuntimeError):
    pass


def seed_population(
    cfg: SimConfig,
    rng,
    policy,
    size: int = 20,
    max_attempts: int = 10000,
    entropy: int = 0,
    probe: Optional[Callable] = None,
    evaluator: Optional[Callable] = None,
    executor=None,
) -> "de.Population":
    """Draw random genomes until ``size`` pass the airborne gate, then
    evaluate them in full to form generation 0.
    """
    probe = probe or (lambda g, r: probe_airborne(g, cfg, r))
    admitted = []
    attempts = 0
    while len(admitted) < size:
        if attempts >= max_attempts:
            raise SeedingError(
                f"only {len(admitted)}/{size} genomes stayed airborne in {max_attempts} probes"
            )
        attempts += 1
        genome = init_genome(rng)
        if probe(genome, rng) > cfg.probe_airborne:
            admitted.append(genome)
    evaluator = evaluator or make_evaluator(cfg)
    return de.init_population(admitted, evaluator, policy, rng, entropy=entropy, executor=executor)
