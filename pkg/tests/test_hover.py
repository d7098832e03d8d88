import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarestart.hexsim import VehicleState
from sarestart.hover import (
    GAIN_UPPER,
    HealthMonitor,
    SeedingError,
    SimConfig,
    StateLimits,
    Termination,
    Waypoint,
    deadband,
    evaluate,
    fitness_components,
    fitness_cycle,
    init_genome,
    run_flight,
    seed_population,
    waypoint_at,
    wrap_angle,
)
from sarestart.restart import RestartPolicy

SL = StateLimits()
WP = Waypoint(psi_sp=40.0, h_sp=10.0)


def at(**kw):
    base = dict(h=10.0, psi=40.0, on_ground=False)
    base.update(kw)
    return VehicleState(**base)


def test_waypoint_schedule():
    assert waypoint_at(0.0) == Waypoint(psi_sp=40.0, h_sp=10.0)
    assert waypoint_at(8.0).p_nsp == 8.0 and waypoint_at(8.0).p_esp == -8.0
    assert waypoint_at(16.5).h_sp == 14.0
    assert waypoint_at(24.0).psi_sp == 80.0
    assert waypoint_at(39.999).psi_sp == 40.0
    for bad in (-0.1, 40.0):
        with pytest.raises(ValueError):
            waypoint_at(bad)


def test_deadband_and_wrap():
    assert deadband(0.5, 1.0) == 0.0 and deadband(1.5, 1.0) == 1.5
    assert wrap_angle(350.0) == -10.0 and wrap_angle(-180.0) == 180.0


def test_perfect_state_scores_ten():
    assert fitness_cycle(at(), WP, False) == 10.0
    assert fitness_cycle(at(), WP, True) == 9.0


def test_component_values():
    c = fitness_components(at(h=5.0), WP, False)
    assert c["height"] == pytest.approx(0.25)
    c = fitness_components(at(h=0.0), WP, False)
    assert c["height"] == 0.0
    c = fitness_components(at(h=7.5), WP, False)
    assert c["height"] == pytest.approx(1 - 0.75 * 2.5 / 5)
    # yaw error wraps: 170 vs -170 is 20 degrees
    c = fitness_components(at(psi=-170.0), Waypoint(psi_sp=170.0, h_sp=10.0), False)
    assert c["yaw"] == pytest.approx((160 - 20) / (4 * (160 - 15)))
    # speeds inside the deadband cost nothing
    c = fitness_components(at(v_n=3.0, v_e=3.0, v_h=-1.9), WP, False)
    assert c["h_velocity"] == 1.0 and c["v_velocity"] == 1.0
    c = fitness_components(at(v_n=12.0, v_h=30.0), WP, False)
    assert c["h_velocity"] == pytest.approx(0.2) and c["v_velocity"] == 0.0
    c = fitness_components(at(omega_p=60.0, omega_q=-200.0, phi=7.5), WP, False)
    assert c["rates"] == pytest.approx(1 - 60 / 115)
    assert c["attitude"] == pytest.approx(1.5)


state_floats = st.floats(-400, 400, allow_nan=False)


@settings(max_examples=300)
@given(st.lists(state_floats, min_size=12, max_size=12), st.booleans(),
       st.lists(state_floats, min_size=6, max_size=6))
def test_cycle_bounded(vals, at_limit, wp):
    est = np.array(vals + [0.0, 0.0])
    c = fitness_components(est, np.array(wp), at_limit)
    total = fitness_cycle(est, np.array(wp), at_limit)
    assert 0.0 <= total <= 10.0
    assert 0 <= c["attitude"] <= 2 and 0 <= c["rates"] <= 2
    for k in ("h_velocity", "v_velocity", "height", "yaw", "position", "pwm"):
        assert 0.0 <= c[k] <= 1.0


def test_ideal_controller_scores_maximum():
    for noise in (False, True):
        res = evaluate(np.zeros(18), SimConfig(mode="ideal", noise=noise), seed=1)
        assert res.fitness == 160000.0
        assert res.success and res.evaluations == 2
        assert res.termination is Termination.COMPLETED


def test_single_evaluation_when_reevaluation_off():
    res = evaluate(np.zeros(18), SimConfig(mode="ideal", reevaluate=False), seed=1)
    assert res.evaluations == 1 and res.success


def test_zero_gains_never_leave_the_floor():
    rec = run_flight(np.zeros(18), SimConfig(), np.random.default_rng(0))
    assert rec.termination is Termination.NO_MOVEMENT
    assert rec.duration == pytest.approx(5.0)
    assert rec.airborne == 0.0 and rec.fitness < 20000
    # failed first flight is not re-flown
    res = evaluate(np.zeros(18), SimConfig(), seed=3)
    assert res.evaluations == 1 and not res.success


def test_evaluation_reproducible_per_seed():
    g = init_genome(np.random.default_rng(11))
    cfg = SimConfig(duration=4.0)
    a, b = evaluate(g, cfg, seed=np.random.SeedSequence(5)), evaluate(g, cfg, seed=np.random.SeedSequence(5))
    assert a == b


def test_init_genome_ranges():
    g = init_genome(np.random.default_rng(0))
    assert g.shape == (18,) and np.all(g > 0) and np.all(g <= GAIN_UPPER)


def test_seeding_gives_up():
    with pytest.raises(SeedingError):
        seed_population(SimConfig(), np.random.default_rng(0), RestartPolicy("indiv"), size=4,
                        max_attempts=30, probe=lambda g, r: 0.0)


def test_seeding_keeps_only_airborne_genomes():
    calls = []

    def probe(g, rng):
        calls.append(g)
        return 1.0 if len(calls) % 3 == 0 else 0.0

    pop = seed_population(SimConfig(), np.random.default_rng(0), RestartPolicy("adapt"), size=4,
                          probe=probe, evaluator=lambda g, s: float(g.sum()))
    assert len(calls) == 12
    assert [m.genome.tolist() for m in pop.members] == [calls[i].tolist() for i in (2, 5, 8, 11)]


def test_health_monitor_airborne_time():
    mon = HealthMonitor()
    for _ in range(200):
        assert mon.check(at(h=5.0)) is None
    assert mon.airborne_time == pytest.approx(0.5)
